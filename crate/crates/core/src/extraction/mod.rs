//! Recovering a DFA from a network by clustering its hidden states.
//!
//! Hidden states are collected over a deterministic prefix set, grouped with
//! k-means, and turned into an automaton by stepping the network from each
//! centroid and snapping the result to the nearest centroid. The sweep over
//! `k` stops at the first automaton equivalent to the oracle.

mod kmeans;

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{equivalent, isomorphic, minimize, words_up_to, Alphabet, AutomataError, Dfa};
use crate::network::{HiddenState, NetworkError, TrnnModel};
use crate::seed::derive_seed;

pub use kmeans::{cluster_states, nearest, Clustering};

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("k = {k} exceeds the {distinct} distinct hidden states")]
    TooFewStates { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("automaton grew past {limit} states")]
    Unstable { limit: usize },
    #[error("model reads {model} symbols but the alphabet has {alphabet}")]
    AlphabetSize { model: usize, alphabet: usize },
    #[error("invalid extraction config: {0}")]
    Config(String),
    #[error("deadline passed")]
    Timeout,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    pub prefix: Vec<usize>,
    pub hidden: HiddenState,
    pub cluster_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Every prefix up to this length is included.
    pub exhaustive_len: usize,
    /// Random prefixes drawn for each longer length.
    pub samples_per_length: usize,
    pub max_prefix_len: usize,
    pub timeout_seconds: f64,
    pub seed: u64,
    pub max_states_before_abort: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 24,
            exhaustive_len: 6,
            samples_per_length: 10,
            max_prefix_len: 30,
            timeout_seconds: 1500.0,
            seed: 0,
            max_states_before_abort: 64,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), ExtractionError> {
        if self.k_min < 2 || self.k_max < self.k_min {
            return Err(ExtractionError::Config(format!(
                "need 2 <= kMin <= kMax, got {}..{}",
                self.k_min, self.k_max
            )));
        }
        if !(self.timeout_seconds > 0.0) {
            return Err(ExtractionError::Config("timeoutSeconds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStatus {
    Ok,
    Timeout,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub isomorphic: bool,
    pub equivalent: bool,
    /// Shortest string the two automata disagree on.
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractionReport {
    /// Minimized automaton; present iff `status` is `ok`.
    pub dfa: Option<Dfa>,
    /// States of the raw automaton before minimization.
    pub raw_state_count: usize,
    /// Cluster count of the reported candidate (0 if none was built).
    pub k: usize,
    pub status: ExtractionStatus,
    pub comparison: Option<Comparison>,
    pub elapsed_seconds: f64,
}

impl ExtractionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_alphabet(model: &TrnnModel, alphabet: &Alphabet) -> Result<(), ExtractionError> {
    if model.m() != alphabet.len() {
        return Err(ExtractionError::AlphabetSize {
            model: model.m(),
            alphabet: alphabet.len(),
        });
    }
    Ok(())
}

/// Hidden states along every prefix up to `exhaustive_len`, plus the
/// trajectories of `samples_per_length` seeded random strings of each
/// length up to `max_prefix_len`.
pub fn collect_states(
    model: &TrnnModel,
    alphabet: &Alphabet,
    cfg: &ExtractionConfig,
) -> Result<Vec<StateSample>, ExtractionError> {
    check_alphabet(model, alphabet)?;
    let m = alphabet.len();
    let mut out = Vec::new();
    let mut memo: HashMap<Vec<usize>, HiddenState> = HashMap::new();
    memo.insert(Vec::new(), model.init.clone());
    for word in words_up_to(m, cfg.exhaustive_len) {
        let hidden = match word.split_last() {
            None => model.init.clone(),
            Some((&last, rest)) => model.cell.step(&memo[rest], last)?,
        };
        memo.insert(word.clone(), hidden.clone());
        out.push(StateSample {
            prefix: word,
            hidden,
            cluster_id: None,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "prefixes"));
    for len in cfg.exhaustive_len + 1..=cfg.max_prefix_len {
        for _ in 0..cfg.samples_per_length {
            let word: Vec<usize> = (0..len).map(|_| rng.random_range(0..m)).collect();
            let traj = model.cell.run(&model.init, &word)?;
            // shorter prefixes are already covered exhaustively
            for (t, hidden) in traj.into_iter().enumerate().skip(cfg.exhaustive_len + 1) {
                out.push(StateSample {
                    prefix: word[..t].to_vec(),
                    hidden,
                    cluster_id: None,
                });
            }
        }
    }
    Ok(out)
}

/// Breadth-first closure over clusters from the one holding the initial
/// state. Each edge steps the network from the source centroid and snaps to
/// the nearest centroid (lowest index on ties); a cluster accepts iff the
/// readout at its centroid does.
pub fn build_automaton(
    model: &TrnnModel,
    centroids: &[HiddenState],
    alphabet: &Alphabet,
    max_states: usize,
) -> Result<Dfa, ExtractionError> {
    check_alphabet(model, alphabet)?;
    if centroids.is_empty() {
        return Err(ExtractionError::ZeroK);
    }
    let m = alphabet.len();
    let mut id_of: HashMap<usize, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    let start = nearest(centroids, &model.init);
    id_of.insert(start, 0);
    order.push(start);
    queue.push_back(start);
    let mut delta: Vec<Vec<usize>> = Vec::new();
    while let Some(c) = queue.pop_front() {
        let mut row = Vec::with_capacity(m);
        for k in 0..m {
            let next = nearest(centroids, &model.cell.step(&centroids[c], k)?);
            let id = match id_of.get(&next) {
                Some(&id) => id,
                None => {
                    let id = order.len();
                    if id >= max_states {
                        return Err(ExtractionError::Unstable { limit: max_states });
                    }
                    id_of.insert(next, id);
                    order.push(next);
                    queue.push_back(next);
                    id
                }
            };
            row.push(id);
        }
        delta.push(row);
    }
    let accepting = order
        .iter()
        .enumerate()
        .filter(|(_, &c)| model.readout.accepts(&centroids[c]))
        .map(|(id, _)| id);
    Ok(Dfa::new(alphabet.clone(), delta, 0, accepting)?)
}

/// Language equivalence by product search and isomorphism of the minimal
/// forms.
pub fn compare_to_oracle(extracted: &Dfa, oracle: &Dfa) -> Result<Comparison, AutomataError> {
    let (a, b) = (minimize(extracted), minimize(oracle));
    let eq = equivalent(&a, &b)?;
    Ok(Comparison {
        isomorphic: isomorphic(&a, &b)?,
        equivalent: eq.equal,
        counterexample: eq.counterexample.map(|w| oracle.alphabet().decode(&w)),
    })
}

/// Sweep `k` over `kMin..=kMax` and return the first candidate equivalent
/// to `oracle`. Running out of time yields `timeout`; exhausting the sweep
/// yields `unstable` with the comparison of the smallest candidate.
pub fn extract(
    model: &TrnnModel,
    oracle: &Dfa,
    cfg: &ExtractionConfig,
) -> Result<ExtractionReport, ExtractionError> {
    cfg.validate()?;
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(cfg.timeout_seconds.min(1e9));
    let alphabet = oracle.alphabet();
    let samples = collect_states(model, alphabet, cfg)?;
    let points: Vec<HiddenState> = samples.into_iter().map(|s| s.hidden).collect();

    let mut best: Option<(usize, usize, Dfa, Comparison)> = None;
    let mut timed_out = false;
    for k in cfg.k_min..=cfg.k_max {
        if Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        let clustering =
            match kmeans::run(&points, k, derive_seed(cfg.seed, &format!("k{k}")), Some(deadline)) {
                Ok(c) => c,
                Err(ExtractionError::TooFewStates { .. }) => break,
                Err(ExtractionError::Timeout) => {
                    timed_out = true;
                    break;
                }
                Err(e) => return Err(e),
            };
        let raw = match build_automaton(model, &clustering.centroids, alphabet, cfg.max_states_before_abort) {
            Ok(d) => d,
            Err(ExtractionError::Unstable { .. }) => continue,
            Err(e) => return Err(e),
        };
        let dfa = minimize(&raw);
        let comparison = compare_to_oracle(&dfa, oracle)?;
        if comparison.equivalent {
            return Ok(ExtractionReport {
                dfa: Some(dfa),
                raw_state_count: raw.num_states(),
                k,
                status: ExtractionStatus::Ok,
                comparison: Some(comparison),
                elapsed_seconds: started.elapsed().as_secs_f64(),
            });
        }
        if best.as_ref().is_none_or(|(_, _, d, _)| dfa.num_states() < d.num_states()) {
            best = Some((k, raw.num_states(), dfa, comparison));
        }
    }
    let status = if timed_out {
        ExtractionStatus::Timeout
    } else {
        ExtractionStatus::Unstable
    };
    let (k, raw_state_count, comparison) = match best {
        Some((k, raw, _, c)) => (k, raw, Some(c)),
        None => (0, 0, None),
    };
    Ok(ExtractionReport {
        dfa: None,
        raw_state_count,
        k,
        status,
        comparison,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{tomita, TOMITA_GRAMMARS};
    use crate::encoding::{encode_dfa, EncodeMode};
    use crate::network::{Activation, Readout, TensorWeights, TrnnCell};

    fn small_cfg() -> ExtractionConfig {
        ExtractionConfig {
            exhaustive_len: 4,
            samples_per_length: 0,
            max_prefix_len: 4,
            ..Default::default()
        }
    }

    #[test]
    fn exhaustive_prefixes_counted() {
        let d = tomita(3).unwrap();
        let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
        let s = collect_states(&enc.model, d.alphabet(), &small_cfg()).unwrap();
        assert_eq!(s.len(), 31);
        let mut distinct: Vec<Vec<u64>> =
            s.iter().map(|x| x.hidden.0.iter().map(|v| v.to_bits()).collect()).collect();
        distinct.sort();
        distinct.dedup();
        assert!(distinct.len() <= d.num_states() + 1);
    }

    #[test]
    fn samples_match_model_runs() {
        let d = tomita(5).unwrap();
        let enc = encode_dfa(&d, EncodeMode::sigmoid_default()).unwrap();
        let cfg = ExtractionConfig::default();
        let a = collect_states(&enc.model, d.alphabet(), &cfg).unwrap();
        assert_eq!(a, collect_states(&enc.model, d.alphabet(), &cfg).unwrap());
        for s in a.iter().step_by(37) {
            let z = enc.model.cell.final_state(&enc.model.init, &s.prefix).unwrap();
            assert!(z.max_abs_diff(&s.hidden) < 1e-12);
        }
    }

    #[test]
    fn encoded_tomita1_builds_equivalent_raw_dfa() {
        let d = tomita(1).unwrap();
        let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
        let centroids: Vec<HiddenState> = (0..d.num_states())
            .map(|q| enc.ideal_state(&d, q))
            .collect();
        let raw = build_automaton(&enc.model, &centroids, d.alphabet(), 10).unwrap();
        assert!(equivalent(&raw, &d).unwrap().equal);
    }

    #[test]
    fn constant_model_gives_one_state() {
        let cell = TrnnCell::new(TensorWeights::zeros(2, 2), Activation::saturated_linear()).unwrap();
        let model = TrnnModel::new(cell, Readout::zeros(2), HiddenState::zeros(2)).unwrap();
        let centroids = vec![HiddenState::zeros(2), HiddenState(vec![1.0, 1.0])];
        let raw = build_automaton(&model, &centroids, &Alphabet::ab(), 10).unwrap();
        assert_eq!(raw.num_states(), 1);
        assert!(raw.is_accepting(0));
    }

    #[test]
    fn encoded_models_extract_isomorphic() {
        for g in TOMITA_GRAMMARS {
            let d = tomita(g).unwrap();
            for mode in [EncodeMode::Exact, EncodeMode::sigmoid_default()] {
                let enc = encode_dfa(&d, mode).unwrap();
                let r = extract(&enc.model, &d, &ExtractionConfig::default()).unwrap();
                assert_eq!(r.status, ExtractionStatus::Ok, "tomita {g}");
                let c = r.comparison.unwrap();
                assert!(c.isomorphic && c.equivalent);
                assert_eq!(r.dfa.unwrap().num_states(), d.num_states());
            }
        }
    }

    #[test]
    fn forced_timeout() {
        let d = tomita(4).unwrap();
        let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
        let cfg = ExtractionConfig {
            timeout_seconds: 1e-6,
            ..Default::default()
        };
        let r = extract(&enc.model, &d, &cfg).unwrap();
        assert_eq!(r.status, ExtractionStatus::Timeout);
        assert!(r.dfa.is_none());
    }

    #[test]
    fn wrong_oracle_is_unstable_with_counterexample() {
        let enc = encode_dfa(&tomita(1).unwrap(), EncodeMode::Exact).unwrap();
        let cfg = ExtractionConfig { k_max: 4, ..Default::default() };
        let r = extract(&enc.model, &tomita(2).unwrap(), &cfg).unwrap();
        assert_eq!(r.status, ExtractionStatus::Unstable);
        assert!(r.dfa.is_none());
        let c = r.comparison.unwrap();
        assert!(!c.equivalent);
        assert!(c.counterexample.is_some());
    }

    #[test]
    fn comparison_flags() {
        let d = tomita(4).unwrap();
        let same = compare_to_oracle(&d, &d).unwrap();
        assert!(same.isomorphic && same.equivalent && same.counterexample.is_none());
        // renumbered copy: swap states 1 and 2
        let swapped = Dfa::new(
            Alphabet::ab(),
            vec![vec![2, 0], vec![3, 0], vec![1, 0], vec![3, 3]],
            0,
            [0, 1, 2],
        )
        .unwrap();
        assert!(compare_to_oracle(&swapped, &d).unwrap().isomorphic);
        let flipped = Dfa::new(Alphabet::ab(), d.delta().to_vec(), 0, [0, 1]).unwrap();
        let c = compare_to_oracle(&flipped, &d).unwrap();
        assert!(!c.equivalent && !c.isomorphic);
        assert_eq!(c.counterexample.as_deref(), Some("aa"));
    }

    #[test]
    fn report_json_shape() {
        let d = tomita(2).unwrap();
        let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
        let r = extract(&enc.model, &d, &ExtractionConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["status"], "ok");
        assert!(v["rawStateCount"].as_u64().unwrap() >= 3);
        assert!(v["dfa"]["delta"].is_array());
    }
}
