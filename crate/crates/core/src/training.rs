//! Training second-order cells as string classifiers with backpropagation
//! through time and plain mini-batch SGD.
//!
//! The loss is binary cross-entropy on the readout after the last symbol.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{sample_dataset, tomita, AutomataError, Dataset, LabeledString};
use crate::network::{
    Activation, ActivationKind, HiddenState, NetworkError, Readout, TensorWeights, TrnnCell,
    TrnnModel,
};
use crate::seed::derive_seed;

/// Largest hidden layer accepted by [`TrainConfig::validate`].
pub const MAX_HIDDEN: usize = 32;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("symbol {symbol} in dataset {dataset:?} is outside the model's {m}-symbol alphabet")]
    Alphabet {
        dataset: String,
        symbol: usize,
        m: usize,
    },
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
}

/// How per-string losses in a batch combine into the minimised objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Mean,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EarlyStop {
    pub patience_epochs: usize,
    pub require_val_acc: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            patience_epochs: 5,
            require_val_acc: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(alias = "n_h")]
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub init_std: f64,
    pub optimizer: Optimizer,
    /// Heavy-ball coefficient; 0 gives plain SGD.
    pub momentum: f64,
    pub reduction: Reduction,
    /// `None` trains for the full epoch budget.
    pub early_stop: Option<EarlyStop>,
    pub gain_h: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            lr: 1e-3,
            epochs: 50,
            batch: 1,
            seed: 0,
            init_std: 0.7,
            optimizer: Optimizer::Sgd,
            momentum: 0.95,
            reduction: Reduction::Sum,
            early_stop: None,
            gain_h: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config(msg));
        if self.hidden == 0 || self.hidden > MAX_HIDDEN {
            return bad(format!("hidden = {} must lie in 1..={MAX_HIDDEN}", self.hidden));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr = {} must be positive", self.lr));
        }
        if self.batch == 0 {
            return bad("batch must be at least 1".into());
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return bad(format!("initStd = {} must be non-negative", self.init_std));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum = {} must lie in [0, 1)", self.momentum));
        }
        if !(self.gain_h > 0.0 && self.gain_h.is_finite()) {
            return bad(format!("gainH = {} must be positive", self.gain_h));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub per_epoch: Vec<EpochRecord>,
    pub epochs_to_perfect_val: Option<usize>,
    pub test_acc: BTreeMap<String, f64>,
}

impl Metrics {
    /// `epoch,trainLoss,valAcc` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,trainLoss,valAcc\n");
        for r in &self.per_epoch {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_acc));
        }
        out
    }
}

/// Gaussian-initialised model with the first basis vector as start state.
pub fn init_model(cfg: &TrainConfig, m: usize) -> Result<TrnnModel, TrainError> {
    cfg.validate()?;
    let n_h = cfg.hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "init"));
    let normal = Normal::new(0.0, cfg.init_std).map_err(|e| TrainError::Config(e.to_string()))?;
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| normal.sample(&mut rng)).collect() };
    let mut weights = TensorWeights::zeros(n_h, m);
    weights.w = draw(n_h * n_h * m);
    weights.b = draw(n_h);
    let readout = Readout {
        weights: draw(n_h),
        bias: draw(1)[0],
    };
    let cell = TrnnCell::new(weights, Activation::sharp_sigmoid(cfg.gain_h))?;
    Ok(TrnnModel::new(cell, readout, HiddenState::one_hot(n_h, 0))?)
}

/// Gradients with the shapes of a model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub readout_w: Vec<f64>,
    pub readout_b: f64,
    pub init: Vec<f64>,
}

impl Grads {
    fn zeros(n_h: usize, m: usize) -> Self {
        Self {
            w: vec![0.0; n_h * n_h * m],
            b: vec![0.0; n_h],
            readout_w: vec![0.0; n_h],
            readout_b: 0.0,
            init: vec![0.0; n_h],
        }
    }

    /// Parameter order of [`flatten_params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w.len() + 3 * self.b.len() + 1);
        out.extend(&self.w);
        out.extend(&self.b);
        out.extend(&self.readout_w);
        out.push(self.readout_b);
        out.extend(&self.init);
        out
    }

    fn scale(&mut self, s: f64) {
        for v in self
            .w
            .iter_mut()
            .chain(&mut self.b)
            .chain(&mut self.readout_w)
            .chain(&mut self.init)
        {
            *v *= s;
        }
        self.readout_b *= s;
    }
}

/// All trainable parameters: `W`, `b`, readout weights, readout bias and
/// the initial state.
pub fn flatten_params(model: &TrnnModel) -> Vec<f64> {
    let mut out = Vec::new();
    out.extend(&model.cell.weights.w);
    out.extend(&model.cell.weights.b);
    out.extend(&model.readout.weights);
    out.push(model.readout.bias);
    out.extend(&model.init.0);
    out
}

/// Inverse of [`flatten_params`].
pub fn set_params(model: &mut TrnnModel, flat: &[f64]) {
    let mut it = flat.iter().copied();
    for v in model
        .cell
        .weights
        .w
        .iter_mut()
        .chain(&mut model.cell.weights.b)
        .chain(&mut model.readout.weights)
    {
        *v = it.next().expect("parameter count");
    }
    model.readout.bias = it.next().expect("parameter count");
    for v in model.init.0.iter_mut() {
        *v = it.next().expect("parameter count");
    }
}

/// Numerically stable `-[y ln p + (1-y) ln(1-p)]` for `p = sigmoid(logit)`.
fn bce_from_logit(logit: f64, label: bool) -> f64 {
    let softplus = logit.max(0.0) + (-logit.abs()).exp().ln_1p();
    softplus - if label { logit } else { 0.0 }
}

fn activation_slope(act: &Activation, pre: f64, out: f64) -> f64 {
    match act.kind {
        ActivationKind::SharpSigmoid => act.gain * out * (1.0 - out),
        ActivationKind::SaturatedLinear => {
            let v = pre + act.shift;
            if v > 0.0 && v < 1.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Loss of one string; accumulates its gradient into `g`.
fn backprop_one(model: &TrnnModel, item: &LabeledString, g: &mut Grads) -> f64 {
    let cell = &model.cell;
    let w = &cell.weights;
    let (n_h, m) = (w.n_h, w.m);
    let mut states = Vec::with_capacity(item.symbols.len() + 1);
    let mut pres = Vec::with_capacity(item.symbols.len());
    states.push(model.init.0.clone());
    for &k in &item.symbols {
        let z = HiddenState(states.last().expect("non-empty").clone());
        let pre = cell.pre_activation(&z, k);
        states.push(pre.iter().map(|&v| cell.activation.apply(v)).collect());
        pres.push(pre);
    }
    let last = states.last().expect("non-empty");
    let logit = model.readout.logit(&HiddenState(last.clone()));
    let loss = bce_from_logit(logit, item.label);
    let dlogit = crate::network::sharp_sigmoid(logit, 1.0) - if item.label { 1.0 } else { 0.0 };

    g.readout_b += dlogit;
    for i in 0..n_h {
        g.readout_w[i] += dlogit * last[i];
    }
    let mut dz: Vec<f64> = model.readout.weights.iter().map(|u| u * dlogit).collect();
    let mut da = vec![0.0; n_h];
    for t in (0..item.symbols.len()).rev() {
        let k = item.symbols[t];
        let (z_prev, z_out) = (&states[t], &states[t + 1]);
        for i in 0..n_h {
            da[i] = dz[i] * activation_slope(&cell.activation, pres[t][i], z_out[i]);
        }
        let mut dprev = vec![0.0; n_h];
        for i in 0..n_h {
            let di = da[i];
            if di == 0.0 {
                continue;
            }
            g.b[i] += di;
            let row = i * n_h * m;
            for j in 0..n_h {
                let idx = row + j * m + k;
                g.w[idx] += di * z_prev[j];
                dprev[j] += w.w[idx] * di;
            }
        }
        dz = dprev;
    }
    for i in 0..n_h {
        g.init[i] += dz[i];
    }
    loss
}

/// Exact gradients of the mean loss over `batch`, and that mean loss.
pub fn bptt_grads(model: &TrnnModel, batch: &[LabeledString]) -> Result<(Grads, f64), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    check_symbols(model, batch, "batch")?;
    let mut g = Grads::zeros(model.n_h(), model.m());
    let mut total = 0.0;
    for item in batch {
        total += backprop_one(model, item, &mut g);
    }
    let inv = 1.0 / batch.len() as f64;
    g.scale(inv);
    Ok((g, total * inv))
}

/// Mean loss without gradients.
pub fn batch_loss(model: &TrnnModel, batch: &[LabeledString]) -> Result<f64, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let mut total = 0.0;
    for item in batch {
        let z = model.cell.final_state(&model.init, &item.symbols)?;
        total += bce_from_logit(model.readout.logit(&z), item.label);
    }
    Ok(total / batch.len() as f64)
}

fn check_symbols(model: &TrnnModel, items: &[LabeledString], name: &str) -> Result<(), TrainError> {
    let m = model.m();
    for item in items {
        if let Some(&symbol) = item.symbols.iter().find(|&&s| s >= m) {
            return Err(TrainError::Alphabet {
                dataset: name.to_string(),
                symbol,
                m,
            });
        }
    }
    Ok(())
}

/// `v <- momentum * v + g; p <- p - lr * v`.
fn sgd_step(model: &mut TrnnModel, velocity: &mut [f64], g: &Grads, lr: f64, momentum: f64) {
    let mut params = flatten_params(model);
    for ((p, v), d) in params.iter_mut().zip(velocity.iter_mut()).zip(g.flat()) {
        *v = momentum * *v + d;
        *p -= lr * *v;
    }
    set_params(model, &params);
}

/// Percentage of strings whose thresholded readout matches the label.
/// An empty dataset scores 100.
pub fn evaluate(model: &TrnnModel, ds: &Dataset) -> Result<f64, TrainError> {
    check_symbols(model, &ds.items, &ds.name)?;
    if ds.is_empty() {
        return Ok(100.0);
    }
    let mut correct = 0usize;
    for item in &ds.items {
        if model.classify(&item.symbols)? == item.label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / ds.len() as f64)
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: TrnnModel,
    pub metrics: Metrics,
}

/// Mini-batch SGD with seeded per-epoch shuffling. Returns the model with
/// the best validation accuracy (latest epoch on ties).
pub fn train(
    model: TrnnModel,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<Trained, TrainError> {
    cfg.validate()?;
    check_symbols(&model, &train_set.items, &train_set.name)?;
    check_symbols(&model, &val_set.items, &val_set.name)?;
    let mut metrics = Metrics::default();
    if cfg.epochs == 0 || train_set.is_empty() {
        return Ok(Trained { model, metrics });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "shuffle"));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut model = model;
    let mut best: Option<(f64, TrnnModel)> = None;
    let mut streak = 0usize;
    let mut batch = Vec::with_capacity(cfg.batch);
    let mut velocity = vec![0.0; flatten_params(&model).len()];

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set.items[i].clone()));
            let (mut g, loss) = bptt_grads(&model, &batch)?;
            if !loss.is_finite() || g.flat().iter().any(|v| !v.is_finite()) {
                return Err(TrainError::Diverged { epoch, batch: bi, loss });
            }
            if cfg.reduction == Reduction::Sum {
                g.scale(chunk.len() as f64);
            }
            loss_sum += loss * chunk.len() as f64;
            sgd_step(&mut model, &mut velocity, &g, cfg.lr, cfg.momentum);
        }
        let val_acc = evaluate(&model, val_set)?;
        metrics.per_epoch.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_acc,
        });
        if val_acc >= 100.0 && metrics.epochs_to_perfect_val.is_none() {
            metrics.epochs_to_perfect_val = Some(epoch);
        }
        if best.as_ref().is_none_or(|(b, _)| val_acc >= *b) {
            best = Some((val_acc, model.clone()));
        }
        if let Some(rule) = cfg.early_stop {
            streak = if val_acc >= rule.require_val_acc { streak + 1 } else { 0 };
            if streak >= rule.patience_epochs.max(1) {
                break;
            }
        }
    }
    let model = best.map(|(_, m)| m).unwrap_or(model);
    Ok(Trained { model, metrics })
}

/// Split sizes and maximum lengths: two 2000-string splits up to length 50
/// for training and validation, then 1000-string test splits up to lengths
/// 60, 120, 200 and 400. All splits are pairwise disjoint.
pub const SPLITS: [(&str, usize, usize); 6] = [
    ("train", 2000, 50),
    ("val", 2000, 50),
    ("test1", 1000, 60),
    ("test2", 1000, 120),
    ("ext200", 1000, 200),
    ("ext400", 1000, 400),
];

#[derive(Debug, Clone)]
pub struct Splits {
    /// In [`SPLITS`] order.
    pub sets: Vec<Dataset>,
    /// Missing strings per split when the language was too small.
    pub shortfall: Vec<usize>,
}

impl Splits {
    pub fn get(&self, name: &str) -> Option<&Dataset> {
        self.sets.iter().find(|d| d.name == name)
    }
}

/// Generate every split of the protocol for `dfa`, disjoint by
/// construction. `sizes` overrides the split sizes in [`SPLITS`] order.
pub fn build_splits(dfa: &crate::Dfa, seed: u64, sizes: Option<&[usize]>) -> Splits {
    let mut used: HashSet<Vec<usize>> = HashSet::new();
    let mut sets = Vec::new();
    let mut shortfall = Vec::new();
    for (i, &(name, size, max_len)) in SPLITS.iter().enumerate() {
        let count = sizes.and_then(|s| s.get(i).copied()).unwrap_or(size);
        let sampled = sample_dataset(dfa, count, max_len, derive_seed(seed, name), &used);
        let mut ds = sampled.dataset;
        ds.name = name.to_string();
        used.extend(ds.word_set());
        sets.push(ds);
        shortfall.push(sampled.shortfall);
    }
    Splits { sets, shortfall }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialResult {
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub grammar: usize,
    pub config: TrainConfig,
    pub trials: Vec<TrialResult>,
    pub mean_acc: BTreeMap<String, f64>,
    pub std_acc: BTreeMap<String, f64>,
    /// Mean over trials; `None` if some trial never reached 100%.
    pub mean_epochs_to_perfect_val: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub models: Vec<TrnnModel>,
}

fn run_trial(splits: &Splits, m: usize, cfg: &TrainConfig) -> Result<(TrnnModel, Metrics), TrainError> {
    let model = init_model(cfg, m)?;
    let train_set = splits.get("train").expect("train split");
    let val_set = splits.get("val").expect("val split");
    let Trained { model, mut metrics } = train(model, train_set, val_set, cfg)?;
    for ds in &splits.sets[2..] {
        metrics.test_acc.insert(ds.name.clone(), evaluate(&model, ds)?);
    }
    Ok((model, metrics))
}

/// Train `trials` models on one Tomita grammar with seeds `cfg.seed + t`
/// and aggregate test accuracies. Data is drawn once from `cfg.seed`.
/// `parallel` bounds the number of trials run at once.
pub fn run_experiment(
    grammar: usize,
    trials: usize,
    cfg: &TrainConfig,
    parallel: usize,
) -> Result<Experiment, TrainError> {
    if trials == 0 {
        return Err(TrainError::Config("at least one trial is required".into()));
    }
    cfg.validate()?;
    let dfa = tomita(grammar)?;
    let splits = build_splits(&dfa, derive_seed(cfg.seed, &format!("data/tomita{grammar}")), None);
    let m = dfa.num_symbols();
    let configs: Vec<TrainConfig> = (0..trials as u64)
        .map(|t| TrainConfig {
            seed: cfg.seed + t,
            ..cfg.clone()
        })
        .collect();

    let mut results: Vec<Option<Result<(TrnnModel, Metrics), TrainError>>> = Vec::new();
    for chunk in configs.chunks(parallel.max(1)) {
        let outcomes: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|c| s.spawn(|| run_trial(&splits, m, c)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("trial thread panicked"))
                .collect()
        });
        results.extend(outcomes.into_iter().map(Some));
    }

    let mut trial_results = Vec::with_capacity(trials);
    let mut models = Vec::with_capacity(trials);
    for (c, r) in configs.iter().zip(results) {
        let (model, metrics) = r.expect("every trial ran")?;
        models.push(model);
        trial_results.push(TrialResult {
            seed: c.seed,
            metrics,
        });
    }

    let mut mean_acc = BTreeMap::new();
    let mut std_acc = BTreeMap::new();
    for ds in &splits.sets[2..] {
        let xs: Vec<f64> = trial_results
            .iter()
            .map(|t| t.metrics.test_acc[&ds.name])
            .collect();
        let (mean, std) = mean_std(&xs);
        mean_acc.insert(ds.name.clone(), mean);
        std_acc.insert(ds.name.clone(), std);
    }
    let epochs: Option<Vec<f64>> = trial_results
        .iter()
        .map(|t| t.metrics.epochs_to_perfect_val.map(|e| e as f64))
        .collect();
    let report = ExperimentReport {
        grammar,
        config: cfg.clone(),
        trials: trial_results,
        mean_acc,
        std_acc,
        mean_epochs_to_perfect_val: epochs.map(|e| mean_std(&e).0),
    };
    Ok(Experiment { report, models })
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
