//! The second-order recurrent cell.
//!
//! With a one-hot input for symbol `k` the update is
//! `z'_i = act(sum_j W[i][j][k] * z_j + b_i)`, i.e. symbol `k` selects an
//! `n_h x n_h` slice of the weight tensor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("input symbol {symbol} out of range for m = {m}")]
    SymbolOutOfRange { symbol: usize, m: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
}

/// Clamp to `[0, 1]`.
pub fn saturated_linear(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// `1 / (1 + exp(-H v))`.
pub fn sharp_sigmoid(v: f64, gain: f64) -> f64 {
    let x = gain * v;
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Smallest gain with `sharp_sigmoid(-(1/2 - eps0), H) <= eps`, which makes
/// every component within `eps0` of a 0/1 target land within `eps` of it
/// after `sharp_sigmoid(. - 1/2, H)`.
pub fn min_gain(eps0: f64, eps: f64) -> Result<f64, NetworkError> {
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(NetworkError::Domain(format!("eps0 = {eps0} must lie in (0, 1/2)")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(NetworkError::Domain(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    // the bound is tight at the edge; rounding up by a relative 1e-9 keeps
    // it true in floating point as well
    Ok((1.0 / eps - 1.0).ln() / (0.5 - eps0) * (1.0 + 1e-9))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    SaturatedLinear,
    SharpSigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    #[serde(rename = "H")]
    pub gain: f64,
    #[serde(default)]
    pub shift: f64,
}

impl Activation {
    pub fn saturated_linear() -> Self {
        Self {
            kind: ActivationKind::SaturatedLinear,
            gain: 1.0,
            shift: 0.0,
        }
    }

    pub fn sharp_sigmoid(gain: f64) -> Self {
        Self {
            kind: ActivationKind::SharpSigmoid,
            gain,
            shift: 0.0,
        }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn apply(&self, v: f64) -> f64 {
        match self.kind {
            ActivationKind::SaturatedLinear => saturated_linear(v + self.shift),
            ActivationKind::SharpSigmoid => sharp_sigmoid(v + self.shift, self.gain),
        }
    }

    fn check(&self) -> Result<(), NetworkError> {
        if self.kind == ActivationKind::SharpSigmoid && !(self.gain > 0.0) {
            return Err(NetworkError::Domain(format!("gain H = {} must be positive", self.gain)));
        }
        Ok(())
    }
}

/// Third-order weight tensor `W[i][j][k]` (next neuron, previous neuron,
/// input symbol) stored flat in `i, j, k` row-major order, plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorWeights {
    pub n_h: usize,
    pub m: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl TensorWeights {
    pub fn zeros(n_h: usize, m: usize) -> Self {
        Self {
            n_h,
            m,
            w: vec![0.0; n_h * n_h * m],
            b: vec![0.0; n_h],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_h + j) * self.m + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.w[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(i, j, k);
        self.w[idx] = v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenState(pub Vec<f64>);

impl HiddenState {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0
    }

    pub fn max_abs_diff(&self, other: &HiddenState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrnnCell {
    pub weights: TensorWeights,
    pub activation: Activation,
}

impl TrnnCell {
    pub fn new(weights: TensorWeights, activation: Activation) -> Result<Self, NetworkError> {
        if weights.n_h == 0 || weights.m == 0 {
            return Err(NetworkError::Shape("n_h and m must be at least 1".into()));
        }
        if weights.w.len() != weights.n_h * weights.n_h * weights.m || weights.b.len() != weights.n_h {
            return Err(NetworkError::Shape(format!(
                "expected {} weights and {} biases, got {} and {}",
                weights.n_h * weights.n_h * weights.m,
                weights.n_h,
                weights.w.len(),
                weights.b.len()
            )));
        }
        if weights.w.iter().chain(&weights.b).any(|v| !v.is_finite()) {
            return Err(NetworkError::Domain("weights must be finite".into()));
        }
        activation.check()?;
        Ok(Self { weights, activation })
    }

    pub fn n_h(&self) -> usize {
        self.weights.n_h
    }

    pub fn m(&self) -> usize {
        self.weights.m
    }

    /// Pre-activations for symbol `k`.
    pub fn pre_activation(&self, z: &HiddenState, k: usize) -> Vec<f64> {
        let w = &self.weights;
        (0..w.n_h)
            .map(|i| {
                let row = i * w.n_h * w.m;
                let mut acc = w.b[i];
                for (j, zj) in z.0.iter().enumerate() {
                    acc += w.w[row + j * w.m + k] * zj;
                }
                acc
            })
            .collect()
    }

    pub fn step(&self, z: &HiddenState, k: usize) -> Result<HiddenState, NetworkError> {
        if k >= self.m() {
            return Err(NetworkError::SymbolOutOfRange { symbol: k, m: self.m() });
        }
        if z.len() != self.n_h() {
            return Err(NetworkError::Shape(format!(
                "state has {} components, cell has {}",
                z.len(),
                self.n_h()
            )));
        }
        Ok(HiddenState(
            self.pre_activation(z, k)
                .into_iter()
                .map(|v| self.activation.apply(v))
                .collect(),
        ))
    }

    /// Trajectory over `word`; the result has `word.len() + 1` states.
    pub fn run(&self, init: &HiddenState, word: &[usize]) -> Result<Vec<HiddenState>, NetworkError> {
        let mut states = Vec::with_capacity(word.len() + 1);
        states.push(init.clone());
        for &k in word {
            let next = self.step(states.last().expect("non-empty"), k)?;
            states.push(next);
        }
        Ok(states)
    }

    pub fn final_state(&self, init: &HiddenState, word: &[usize]) -> Result<HiddenState, NetworkError> {
        let mut z = init.clone();
        for &k in word {
            z = self.step(&z, k)?;
        }
        Ok(z)
    }
}

/// Logistic output layer on the hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Readout {
    pub fn zeros(n_h: usize) -> Self {
        Self {
            weights: vec![0.0; n_h],
            bias: 0.0,
        }
    }

    pub fn logit(&self, z: &HiddenState) -> f64 {
        self.bias + self.weights.iter().zip(&z.0).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Acceptance probability.
    pub fn probability(&self, z: &HiddenState) -> f64 {
        sharp_sigmoid(self.logit(z), 1.0)
    }

    /// Ties go to accept.
    pub fn accepts(&self, z: &HiddenState) -> bool {
        self.probability(z) >= 0.5
    }
}

/// Optional provenance block for models produced by rule insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingAnnotation {
    pub source: String,
    pub mode: String,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    /// `state_of[neuron]` = DFA state, `None` for the response neuron.
    #[serde(rename = "stateOf")]
    pub state_of: Vec<Option<usize>>,
}

/// Cell, readout and initial state: a complete string classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct TrnnModel {
    pub cell: TrnnCell,
    pub readout: Readout,
    pub init: HiddenState,
    pub encoding: Option<EncodingAnnotation>,
}

impl TrnnModel {
    pub fn new(cell: TrnnCell, readout: Readout, init: HiddenState) -> Result<Self, NetworkError> {
        if readout.weights.len() != cell.n_h() || init.len() != cell.n_h() {
            return Err(NetworkError::Shape(format!(
                "readout has {} weights and init {} components, cell has {} neurons",
                readout.weights.len(),
                init.len(),
                cell.n_h()
            )));
        }
        Ok(Self {
            cell,
            readout,
            init,
            encoding: None,
        })
    }

    pub fn n_h(&self) -> usize {
        self.cell.n_h()
    }

    pub fn m(&self) -> usize {
        self.cell.m()
    }

    pub fn probability(&self, word: &[usize]) -> Result<f64, NetworkError> {
        Ok(self.readout.probability(&self.cell.final_state(&self.init, word)?))
    }

    pub fn classify(&self, word: &[usize]) -> Result<bool, NetworkError> {
        Ok(self.probability(word)? >= 0.5)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n_h: usize,
    m: usize,
    activation: Activation,
    /// flattened `W[i][j][k]`, row-major in `i, j, k`
    #[serde(rename = "W")]
    w: Vec<f64>,
    b: Vec<f64>,
    #[serde(rename = "readoutWeights")]
    readout_weights: Vec<f64>,
    #[serde(rename = "readoutBias")]
    readout_bias: f64,
    #[serde(rename = "initState")]
    init_state: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoding: Option<EncodingAnnotation>,
}

impl TryFrom<ModelFile> for TrnnModel {
    type Error = NetworkError;

    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        let weights = TensorWeights {
            n_h: f.n_h,
            m: f.m,
            w: f.w,
            b: f.b,
        };
        let cell = TrnnCell::new(weights, f.activation)?;
        let mut model = TrnnModel::new(
            cell,
            Readout {
                weights: f.readout_weights,
                bias: f.readout_bias,
            },
            HiddenState(f.init_state),
        )?;
        model.encoding = f.encoding;
        Ok(model)
    }
}

impl From<TrnnModel> for ModelFile {
    fn from(model: TrnnModel) -> Self {
        ModelFile {
            n_h: model.cell.weights.n_h,
            m: model.cell.weights.m,
            activation: model.cell.activation,
            w: model.cell.weights.w,
            b: model.cell.weights.b,
            readout_weights: model.readout.weights,
            readout_bias: model.readout.bias,
            init_state: model.init.0,
            encoding: model.encoding,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    pub worst_deviation: f64,
}

/// Iterations applied to every perturbed start in [`check_stability`].
pub const STABILITY_ITERATIONS: usize = 50;

/// Perturb `z_star` uniformly inside an infinity-ball (clamped to the unit
/// cube), iterate the cell on a fixed symbol and report whether every
/// trajectory ends within `tol` of `z_star`.
pub fn check_stability(
    cell: &TrnnCell,
    z_star: &HiddenState,
    radius: f64,
    trials: usize,
    seed: u64,
    tol: f64,
    symbol: usize,
) -> Result<Stability, NetworkError> {
    if !(0.0..0.5).contains(&radius) {
        return Err(NetworkError::Domain(format!("radius {radius} must lie in [0, 1/2)")));
    }
    if trials == 0 {
        return Err(NetworkError::Domain("at least one trial is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut z = HiddenState(
            z_star
                .0
                .iter()
                .map(|&v| {
                    let d = if radius > 0.0 { rng.random_range(-radius..=radius) } else { 0.0 };
                    (v + d).clamp(0.0, 1.0)
                })
                .collect(),
        );
        for _ in 0..STABILITY_ITERATIONS {
            z = cell.step(&z, symbol)?;
        }
        worst = worst.max(z.max_abs_diff(z_star));
    }
    Ok(Stability {
        stable: worst <= tol,
        worst_deviation: worst,
    })
}
