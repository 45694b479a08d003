//! Programming a DFA into an `(n + 1)`-neuron second-order cell.
//!
//! Neuron 0 is the response neuron (1 iff the current state accepts);
//! neuron `q + 1` stands for DFA state `q`.

use crate::automata::Dfa;
use crate::network::{
    min_gain, Activation, EncodingAnnotation, HiddenState, NetworkError, Readout, TensorWeights,
    TrnnCell, TrnnModel,
};

/// Default infinity-norm tolerance on the pre-activation sums.
pub const DEFAULT_EPS0: f64 = 0.25;
/// Default tolerance on encoded hidden values.
pub const DEFAULT_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncodeMode {
    /// 0/1 transition tensor with the saturated-linear activation.
    Exact,
    /// Tensor scaled by `H = min_gain(eps0, eps)` with bias `-H/2` and a
    /// logistic activation; every hidden value stays within `eps` of the
    /// exact trajectory.
    Sigmoid { eps0: f64, eps: f64 },
}

impl EncodeMode {
    pub fn sigmoid_default() -> Self {
        EncodeMode::Sigmoid {
            eps0: DEFAULT_EPS0,
            eps: DEFAULT_EPS,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            EncodeMode::Exact => "exact",
            EncodeMode::Sigmoid { .. } => "sigmoid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfaEncoding {
    pub model: TrnnModel,
    pub mode: EncodeMode,
    /// Gain of the sigmoid-mode weights, `None` in exact mode.
    pub gain: Option<f64>,
    /// `state_of[neuron]`; the response neuron maps to `None`.
    pub state_of: Vec<Option<usize>>,
}

impl DfaEncoding {
    pub fn neuron_of(&self, state: usize) -> usize {
        state + 1
    }

    /// The ideal 0/1 hidden vector for a DFA state.
    pub fn ideal_state(&self, dfa: &Dfa, state: usize) -> HiddenState {
        ideal(dfa, state)
    }
}

fn ideal(dfa: &Dfa, state: usize) -> HiddenState {
    let mut z = HiddenState::one_hot(dfa.num_states() + 1, state + 1);
    z.0[0] = if dfa.is_accepting(state) { 1.0 } else { 0.0 };
    z
}

pub fn encode_dfa(dfa: &Dfa, mode: EncodeMode) -> Result<DfaEncoding, NetworkError> {
    let n = dfa.num_states();
    let m = dfa.num_symbols();
    let n_h = n + 1;
    let (scale, bias, activation, gain) = match mode {
        EncodeMode::Exact => (1.0, 0.0, Activation::saturated_linear(), None),
        EncodeMode::Sigmoid { eps0, eps } => {
            let h = min_gain(eps0, eps)?;
            (h, -h / 2.0, Activation::sharp_sigmoid(1.0), Some(h))
        }
    };

    let mut weights = TensorWeights::zeros(n_h, m);
    for q in 0..n {
        for k in 0..m {
            let target = dfa.next(q, k);
            weights.set(target + 1, q + 1, k, scale);
            if dfa.is_accepting(target) {
                weights.set(0, q + 1, k, scale);
            }
        }
    }
    weights.b = vec![bias; n_h];

    // acceptance read straight off the state block: +2 from accepting
    // states, -2 from the rest, so the logit sign decides
    let mut readout = Readout::zeros(n_h);
    for q in 0..n {
        readout.weights[q + 1] = if dfa.is_accepting(q) { 2.0 } else { -2.0 };
    }

    let cell = TrnnCell::new(weights, activation)?;
    let mut model = TrnnModel::new(cell, readout, ideal(dfa, dfa.start()))?;
    let state_of: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
    model.encoding = Some(EncodingAnnotation {
        source: "dfa".into(),
        mode: mode.name().into(),
        gain,
        state_of: state_of.clone(),
    });
    Ok(DfaEncoding {
        model,
        mode,
        gain,
        state_of,
    })
}

/// Neurons a first-order network needs for an `n`-state DFA over `m`
/// symbols: `2mn - m + 3`. The variant `2mn - m + 3n + 1` is also in
/// circulation. The figure 14111, often given for m = 70 and n = 100 (or
/// the reverse), matches neither formula. This function returns the first.
pub fn first_order_neuron_bound(m: u64, n: u64) -> u64 {
    2 * m * n - m + 3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{tomita, words_up_to, Alphabet, TOMITA_GRAMMARS};
    use crate::network::check_stability;

    #[test]
    fn exact_encoding_follows_the_walk() {
        let d = tomita(2).unwrap();
        let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
        let word = Alphabet::ab().encode("abab").unwrap();
        let traj = enc.model.cell.run(&enc.model.init, &word).unwrap();
        let walk = d.trajectory(&word).unwrap();
        for (z, q) in traj.iter().zip(walk) {
            assert_eq!(z, &ideal(&d, q));
        }
    }

    #[test]
    fn neuron_count_is_n_plus_one() {
        for k in TOMITA_GRAMMARS {
            let d = tomita(k).unwrap();
            let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
            assert_eq!(enc.model.n_h(), d.num_states() + 1);
        }
    }

    #[test]
    fn readout_reads_the_state_block() {
        let d = tomita(4).unwrap();
        let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
        let acc = enc.model.readout.probability(&ideal(&d, 0));
        let rej = enc.model.readout.probability(&ideal(&d, 3));
        assert!(acc > 0.85 && rej < 0.15, "{acc} {rej}");
        assert_eq!(enc.model.readout.bias, 0.0);
    }

    #[test]
    fn sigmoid_mode_tracks_exact_mode() {
        for k in TOMITA_GRAMMARS {
            let d = tomita(k).unwrap();
            let exact = encode_dfa(&d, EncodeMode::Exact).unwrap();
            let smooth = encode_dfa(&d, EncodeMode::sigmoid_default()).unwrap();
            for w in words_up_to(2, 8) {
                let a = exact.model.cell.run(&exact.model.init, &w).unwrap();
                let b = smooth.model.cell.run(&smooth.model.init, &w).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!(x.max_abs_diff(y) <= DEFAULT_EPS);
                    assert_eq!(x.argmax(), y.argmax());
                }
            }
        }
    }

    #[test]
    fn sigmoid_fixed_point_is_stable() {
        // dead state of tomita 4 loops on both symbols
        let d = tomita(4).unwrap();
        let enc = encode_dfa(&d, EncodeMode::sigmoid_default()).unwrap();
        let z = ideal(&d, 3);
        let s = check_stability(&enc.model.cell, &z, 0.2, 200, 9, DEFAULT_EPS, 0).unwrap();
        assert!(s.stable, "{s:?}");
    }

    #[test]
    fn exact_mode_is_neutral_not_contracting() {
        // Saturated-linear with 0/1 weights is linear inside the cube, so a
        // perturbation that stays in the cube is carried along, not removed.
        let d = tomita(4).unwrap();
        let enc = encode_dfa(&d, EncodeMode::Exact).unwrap();
        let s = check_stability(&enc.model.cell, &ideal(&d, 3), 0.2, 50, 1, 1e-9, 0).unwrap();
        assert!(!s.stable);
        assert!(s.worst_deviation <= 0.2 * (d.num_states() + 1) as f64);
    }

    #[test]
    fn first_order_bound_values() {
        assert_eq!(first_order_neuron_bound(2, 4), 17);
        assert_eq!(first_order_neuron_bound(70, 100), 13_933);
        assert_eq!(2 * 70 * 100 - 70 + 3 * 100 + 1, 14_231);
        assert!(first_order_neuron_bound(3, 4) > first_order_neuron_bound(2, 4));
        assert!(first_order_neuron_bound(2, 5) > first_order_neuron_bound(2, 4));
    }
}
