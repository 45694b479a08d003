//! Turing machines as one-dimensional lattices of identical second-order
//! cells. Every column holds a one-hot code over `K` slots and is updated
//! from products of neighbouring activities with weights shared by all
//! columns.
//!
//! Two layouts are provided:
//!
//! * [`LatticeVariant::TwoStep`], `K = m + 2n + 1`: slots `0..m` are tape
//!   symbols, slot `m` is reserved, and for each state `s` slot
//!   `m + 2s + 1` is a pending head and `m + 2s + 2` a committed head. The
//!   head occupies its own column immediately left of the scanned cell.
//!   Even steps apply the transition, odd steps commit a pending (left
//!   moving) head, so one machine step takes two lattice steps.
//! * [`LatticeVariant::RealTime`], `K = m + n + 1`: slots `0..m` are the
//!   cell's symbol and slots `m..=m+n` a head field (`m` means no head,
//!   `m + 1 + s` the head in state `s`). One lattice step is one machine
//!   step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::sharp_sigmoid;
use crate::turing::{tm_step, TmConfig, TuringError, TuringMachine, BLANK};

/// Weight carried by every active product term.
const ON: f64 = 2.0;
/// Pre-activation threshold between the active (2) and silent (<= 1) cases.
const THRESHOLD: f64 = 1.5;
/// Activities below this are skipped when summing products in sigmoid mode.
const ACTIVE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("simulation fault at lattice step {step}, column {column}: {reason}")]
    Fault {
        step: usize,
        column: usize,
        reason: String,
    },
    #[error("machine has no rule for state {state} reading {read}")]
    Undefined { state: usize, read: usize },
    #[error(transparent)]
    Machine(#[from] TuringError),
    #[error("malformed lattice file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeVariant {
    TwoStep,
    RealTime,
}

impl LatticeVariant {
    pub fn slots(&self, m: usize, n: usize) -> usize {
        match self {
            LatticeVariant::TwoStep => m + 2 * n + 1,
            LatticeVariant::RealTime => m + n + 1,
        }
    }

    /// Lattice steps per machine step.
    pub fn cycles(&self) -> usize {
        match self {
            LatticeVariant::TwoStep => 2,
            LatticeVariant::RealTime => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeActivation {
    /// Hard threshold at 1.5: exact 0/1 columns.
    Threshold,
    /// `sharp_sigmoid(v - 1.5, gain)`.
    Sigmoid { gain: f64 },
}

impl LatticeActivation {
    fn apply(&self, v: f64) -> f64 {
        match *self {
            LatticeActivation::Threshold => {
                if v >= THRESHOLD {
                    1.0
                } else {
                    0.0
                }
            }
            LatticeActivation::Sigmoid { gain } => sharp_sigmoid(v - THRESHOLD, gain),
        }
    }
}

/// Shared weights of a compiled lattice.
///
/// Two-step layout: `left[p][(a * K + b) * K + j]` weighs the product of
/// slot `a` in the left neighbour and slot `b` in the column itself;
/// `right[p][(b * K + c) * K + j]` the product of the column's slot `b` and
/// the right neighbour's slot `c`. `p` is the step parity.
///
/// Real-time layout: `left[0][(a * K + q) * K + j]` weighs the in-column
/// product of symbol slot `a` and head slot `q`. `right[d]` for `d` in
/// `0..3` does the same for the left neighbour, the column itself and the
/// right neighbour, feeding only head slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeWeights {
    pub k: usize,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

impl LatticeWeights {
    fn new(k: usize, left: usize, right: usize) -> Self {
        Self {
            k,
            left: vec![vec![0.0; k * k * k]; left],
            right: vec![vec![0.0; k * k * k]; right],
            theta: vec![0.0; k],
        }
    }

    fn at(&self, a: usize, b: usize, j: usize) -> usize {
        (a * self.k + b) * self.k + j
    }

    /// Number of non-zero shared weights.
    pub fn nonzero(&self) -> usize {
        self.left
            .iter()
            .chain(&self.right)
            .flatten()
            .chain(&self.theta)
            .filter(|w| **w != 0.0)
            .count()
    }
}

/// A machine compiled into shared lattice weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeProgram {
    pub variant: LatticeVariant,
    pub tm: TuringMachine,
    pub activation: LatticeActivation,
    pub weights: LatticeWeights,
}

impl LatticeProgram {
    pub fn slots(&self) -> usize {
        self.weights.k
    }

    fn m(&self) -> usize {
        self.tm.m
    }

    fn committed(&self, s: usize) -> usize {
        self.m() + 2 * s + 2
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lattice serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LatticeError> {
        let p: LatticeProgram =
            serde_json::from_str(text).map_err(|e| LatticeError::Format(e.to_string()))?;
        let k = p.variant.slots(p.tm.m, p.tm.n);
        let (nl, nr) = match p.variant {
            LatticeVariant::TwoStep => (2, 2),
            LatticeVariant::RealTime => (1, 3),
        };
        let shape_ok = p.weights.k == k
            && p.weights.theta.len() == k
            && p.weights.left.len() == nl
            && p.weights.right.len() == nr
            && p.weights.left.iter().chain(&p.weights.right).all(|t| t.len() == k * k * k);
        if !shape_ok {
            return Err(LatticeError::Format(format!("weight shapes do not match K = {k}")));
        }
        Ok(p)
    }
}

/// Compile `tm` into lattice weights. Every `(state, symbol)` pair outside
/// the halt state needs a rule.
pub fn encode_tm(
    tm: &TuringMachine,
    variant: LatticeVariant,
    activation: LatticeActivation,
) -> Result<LatticeProgram, LatticeError> {
    tm.ensure_valid()?;
    let (m, n) = (tm.m, tm.n);
    let k = variant.slots(m, n);
    let weights = match variant {
        LatticeVariant::TwoStep => {
            let mut w = LatticeWeights::new(k, 2, 2);
            let pending = |s: usize| m + 2 * s + 1;
            let committed = |s: usize| m + 2 * s + 2;
            let is_committed = |x: usize| x > m && (x - m) % 2 == 0;
            let is_pending = |x: usize| x > m && (x - m) % 2 == 1;

            // even step: apply the rule at each committed head
            for q in 0..n {
                for a in 0..m {
                    let r = tm.rule(q, a).ok_or(LatticeError::Undefined { state: q, read: a })?;
                    let (head_out, cell_out) = match r.movement {
                        1 => (r.write, committed(r.next)),
                        0 => (committed(r.next), r.write),
                        _ => (pending(r.next), r.write),
                    };
                    let i = w.at(committed(q), a, head_out);
                    w.right[0][i] = ON;
                    let i = w.at(committed(q), a, cell_out);
                    w.left[0][i] = ON;
                }
            }
            for x in (0..k).filter(|&x| !is_committed(x)) {
                for c in 0..m {
                    let i = w.at(x, c, c);
                    w.left[0][i] = ON;
                }
            }

            // odd step: a pending head swaps with the symbol on its left
            for s in 0..n {
                for c in 0..m {
                    let i = w.at(c, pending(s), c);
                    w.left[1][i] = ON;
                    let i = w.at(c, pending(s), committed(s));
                    w.right[1][i] = ON;
                }
            }
            for c in 0..m {
                for x in (0..k).filter(|&x| !is_pending(x)) {
                    let i = w.at(c, x, c);
                    w.right[1][i] = ON;
                }
            }
            for s in 0..n {
                for x in 0..k {
                    let i = w.at(committed(s), x, committed(s));
                    w.right[1][i] = ON;
                }
            }
            w
        }
        LatticeVariant::RealTime => {
            let mut w = LatticeWeights::new(k, 1, 3);
            let no_head = m;
            let head = |s: usize| m + 1 + s;
            for a in 0..m {
                let i = w.at(a, no_head, a);
                w.left[0][i] = ON;
            }
            w.theta[no_head] = ON;
            for s in 0..n {
                for a in 0..m {
                    let r = tm.rule(s, a).ok_or(LatticeError::Undefined { state: s, read: a })?;
                    let i = w.at(a, head(s), r.write);
                    w.left[0][i] = ON;
                    // a head at offset d - 1 lands here iff it moves by 1 - d
                    let d = (1 - r.movement as i32) as usize;
                    let i = w.at(a, head(s), head(r.next));
                    w.right[d][i] = ON;
                    let i = w.at(a, head(s), no_head);
                    w.right[d][i] = -ON;
                }
            }
            w
        }
    };
    Ok(LatticeProgram {
        variant,
        tm: tm.clone(),
        activation,
        weights,
    })
}

/// What a lattice currently represents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Config(TmConfig),
    /// Between the two halves of a left move.
    InTransition,
}

/// Lattice columns evolving under a [`LatticeProgram`].
#[derive(Debug, Clone)]
pub struct TmLattice {
    pub program: LatticeProgram,
    pub columns: Vec<Vec<f64>>,
    /// Lattice steps taken.
    pub t: usize,
}

impl TmLattice {
    pub fn new(program: LatticeProgram, config: &TmConfig) -> Result<Self, LatticeError> {
        let k = program.slots();
        let m = program.m();
        let one_hot = |i: usize| {
            let mut c = vec![0.0; k];
            c[i] = 1.0;
            c
        };
        if let Some(&bad) = config.tape.iter().find(|&&s| s >= m) {
            return Err(TuringError::InputSymbol(bad).into());
        }
        let columns = match program.variant {
            LatticeVariant::TwoStep => {
                let mut cols: Vec<Vec<f64>> = config.tape.iter().map(|&s| one_hot(s)).collect();
                cols.insert(config.head, one_hot(program.committed(config.state)));
                cols
            }
            LatticeVariant::RealTime => config
                .tape
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let mut c = one_hot(s);
                    let h = if i == config.head { m + 1 + config.state } else { m };
                    c[h] = 1.0;
                    c
                })
                .collect(),
        };
        Ok(Self {
            program,
            columns,
            t: 0,
        })
    }

    /// A lattice of `width` blank cells and no head.
    pub fn blank(program: LatticeProgram, width: usize) -> Self {
        let k = program.slots();
        let m = program.m();
        let mut col = vec![0.0; k];
        col[BLANK] = 1.0;
        if program.variant == LatticeVariant::RealTime {
            col[m] = 1.0;
        }
        Self {
            program,
            columns: vec![col; width],
            t: 0,
        }
    }

    pub fn parity(&self) -> usize {
        match self.program.variant {
            LatticeVariant::TwoStep => self.t % 2,
            LatticeVariant::RealTime => 0,
        }
    }

    fn blank_column(&self) -> Vec<f64> {
        let mut col = vec![0.0; self.program.slots()];
        col[BLANK] = 1.0;
        if self.program.variant == LatticeVariant::RealTime {
            col[self.program.m()] = 1.0;
        }
        col
    }

    fn head_column(&self) -> Option<usize> {
        let m = self.program.m();
        self.columns
            .iter()
            .position(|c| c[m + 1..].iter().any(|&v| v > 0.5))
    }

    /// Keep two blank-padded columns on either side of the head so every
    /// active rule sees real neighbours.
    fn pad(&mut self) {
        let Some(h) = self.head_column() else { return };
        let need_left = 2usize.saturating_sub(h);
        let need_right = (h + 3).saturating_sub(self.columns.len());
        let blank = self.blank_column();
        for _ in 0..need_left {
            self.columns.insert(0, blank.clone());
        }
        for _ in 0..need_right {
            self.columns.push(blank.clone());
        }
    }

    fn active(&self, col: &[f64]) -> Vec<(usize, f64)> {
        let eps = match self.program.activation {
            LatticeActivation::Threshold => 0.0,
            LatticeActivation::Sigmoid { .. } => ACTIVE_EPS,
        };
        col.iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > eps)
            .map(|(i, v)| (i, *v))
            .collect()
    }

    /// One synchronous update of every column.
    pub fn step(&mut self) -> Result<(), LatticeError> {
        self.pad();
        let w = &self.program.weights;
        let k = w.k;
        let blank = self.blank_column();
        let acts: Vec<Vec<(usize, f64)>> = self.columns.iter().map(|c| self.active(c)).collect();
        let blank_act = self.active(&blank);
        let get = |i: isize| -> &Vec<(usize, f64)> {
            if i < 0 || i as usize >= acts.len() {
                &blank_act
            } else {
                &acts[i as usize]
            }
        };
        let mut next = Vec::with_capacity(self.columns.len());
        for i in 0..self.columns.len() as isize {
            let mut pre = w.theta.clone();
            let mut add = |table: &[f64], xs: &[(usize, f64)], ys: &[(usize, f64)]| {
                for &(a, va) in xs {
                    for &(b, vb) in ys {
                        let base = (a * k + b) * k;
                        let p = va * vb;
                        for (j, slot) in pre.iter_mut().enumerate() {
                            *slot += table[base + j] * p;
                        }
                    }
                }
            };
            match self.program.variant {
                LatticeVariant::TwoStep => {
                    let p = self.t % 2;
                    add(&w.left[p], get(i - 1), get(i));
                    add(&w.right[p], get(i), get(i + 1));
                }
                LatticeVariant::RealTime => {
                    add(&w.left[0], get(i), get(i));
                    for d in 0..3 {
                        let c = get(i + d as isize - 1);
                        add(&w.right[d], c, c);
                    }
                }
            }
            next.push(pre.iter().map(|&v| self.program.activation.apply(v)).collect());
        }
        self.columns = next;
        self.t += 1;
        self.check()
    }

    /// Every column must be a valid one-hot code and at most one head may
    /// exist.
    fn check(&self) -> Result<(), LatticeError> {
        let m = self.program.m();
        let fault = |column: usize, reason: String| LatticeError::Fault {
            step: self.t,
            column,
            reason,
        };
        let mut heads = 0;
        for (i, c) in self.columns.iter().enumerate() {
            let on: Vec<usize> = (0..c.len()).filter(|&j| c[j] > 0.5).collect();
            match self.program.variant {
                LatticeVariant::TwoStep => {
                    if on.len() != 1 {
                        return Err(fault(i, format!("{} active slots", on.len())));
                    }
                    if on[0] == m {
                        return Err(fault(i, "reserved slot active".into()));
                    }
                    if on[0] > m {
                        heads += 1;
                    }
                }
                LatticeVariant::RealTime => {
                    let sym = on.iter().filter(|&&j| j < m).count();
                    let hd = on.iter().filter(|&&j| j >= m).count();
                    if sym != 1 || hd != 1 {
                        return Err(fault(i, format!("{sym} symbol and {hd} head slots active")));
                    }
                    if on[1] > m {
                        heads += 1;
                    }
                }
            }
        }
        if heads > 1 {
            return Err(fault(0, format!("{heads} head columns")));
        }
        Ok(())
    }

    fn slot(c: &[f64], range: std::ops::Range<usize>) -> Option<usize> {
        range.into_iter().find(|&j| c[j] > 0.5)
    }

    pub fn decode(&self) -> Result<Decoded, LatticeError> {
        let m = self.program.m();
        let fault = |column: usize, reason: &str| LatticeError::Fault {
            step: self.t,
            column,
            reason: reason.to_string(),
        };
        let h = self.head_column().ok_or_else(|| fault(0, "no head column"))?;
        match self.program.variant {
            LatticeVariant::TwoStep => {
                let slot = Self::slot(&self.columns[h], m + 1..self.program.slots())
                    .ok_or_else(|| fault(h, "head slot vanished"))?;
                if (slot - m) % 2 == 1 {
                    return Ok(Decoded::InTransition);
                }
                let state = (slot - m - 2) / 2;
                let mut tape = Vec::with_capacity(self.columns.len() - 1);
                for (i, c) in self.columns.iter().enumerate() {
                    if i != h {
                        tape.push(Self::slot(c, 0..m).ok_or_else(|| fault(i, "no symbol"))?);
                    }
                }
                if h == tape.len() {
                    tape.push(BLANK);
                }
                Ok(Decoded::Config(TmConfig {
                    tape,
                    head: h,
                    state,
                    steps: self.t / 2,
                }))
            }
            LatticeVariant::RealTime => {
                let slot = Self::slot(&self.columns[h], m + 1..self.program.slots())
                    .ok_or_else(|| fault(h, "head slot vanished"))?;
                let tape = self
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(i, c)| Self::slot(c, 0..m).ok_or_else(|| fault(i, "no symbol")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Decoded::Config(TmConfig {
                    tape,
                    head: h,
                    state: slot - m - 1,
                    steps: self.t,
                }))
            }
        }
    }

    /// `t=<k> parity=<0|1> decoded=<state,head,tape|IN-TRANSITION>`
    pub fn trace_line(&self) -> String {
        let decoded = match self.decode() {
            Ok(Decoded::Config(c)) => {
                let c = c.normalized();
                format!("{},{},{}", c.state, c.head, c.tape_digits())
            }
            Ok(Decoded::InTransition) => "IN-TRANSITION".to_string(),
            Err(_) => "FAULT".to_string(),
        };
        format!("t={} parity={} decoded={}", self.t, self.parity(), decoded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationReport {
    pub ok: bool,
    /// First machine step whose configuration the lattice failed to match.
    pub first_divergence: Option<usize>,
    pub cycles_per_tm_step: usize,
    pub tm_steps_checked: usize,
    /// Fault or mismatch description when `ok` is false.
    pub detail: Option<String>,
}

/// Run the interpreter and the lattice side by side for `steps` machine
/// steps, comparing decoded configurations after every machine step.
/// Stops early (still `ok`) if the machine hits an undefined transition.
pub fn verify_simulation(
    program: &LatticeProgram,
    input: &[usize],
    steps: usize,
) -> Result<SimulationReport, LatticeError> {
    let tm = &program.tm;
    let cycles = program.variant.cycles();
    let mut config = TmConfig::initial(tm, input)?;
    let mut lattice = TmLattice::new(program.clone(), &config)?;
    let report = |first: Option<usize>, checked: usize, detail: Option<String>| SimulationReport {
        ok: first.is_none(),
        first_divergence: first,
        cycles_per_tm_step: cycles,
        tm_steps_checked: checked,
        detail,
    };
    for t in 1..=steps {
        config = match tm_step(tm, &config) {
            Ok(c) => c,
            Err(_) => return Ok(report(None, t - 1, None)),
        };
        for _ in 0..cycles {
            if let Err(e) = lattice.step() {
                return Ok(report(Some(t), t - 1, Some(e.to_string())));
            }
        }
        match lattice.decode() {
            Ok(Decoded::Config(c)) if c.same_as(&config) => {}
            Ok(Decoded::Config(c)) => {
                let detail = format!(
                    "expected {} got {}",
                    config.normalized().trace_line(),
                    c.normalized().trace_line()
                );
                return Ok(report(Some(t), t - 1, Some(detail)));
            }
            Ok(Decoded::InTransition) => {
                return Ok(report(Some(t), t - 1, Some("left mid-transition".into())));
            }
            Err(e) => return Ok(report(Some(t), t - 1, Some(e.to_string()))),
        }
    }
    Ok(report(None, steps, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turing::{append_one_machine, binary_increment_machine, random_tm, Rule};

    fn threshold(tm: &TuringMachine, v: LatticeVariant) -> LatticeProgram {
        encode_tm(tm, v, LatticeActivation::Threshold).unwrap()
    }

    #[test]
    fn slot_counts() {
        assert_eq!(LatticeVariant::TwoStep.slots(4, 6), 17);
        assert_eq!(LatticeVariant::RealTime.slots(4, 6), 11);
    }

    #[test]
    fn increment_carries() {
        let tm = binary_increment_machine();
        for v in [LatticeVariant::TwoStep, LatticeVariant::RealTime] {
            let p = threshold(&tm, v);
            // 1,1 (bit1 bit1) -> carry into a new leading cell
            let r = verify_simulation(&p, &[2, 2], 20).unwrap();
            assert!(r.ok, "{v:?} {r:?}");
        }
    }

    #[test]
    fn left_move_off_the_edge() {
        let rules = vec![
            Rule { state: 0, read: 0, write: 1, next: 1, movement: -1 },
            Rule { state: 0, read: 1, write: 1, next: 1, movement: -1 },
            Rule { state: 1, read: 0, write: 1, next: 2, movement: 0 },
            Rule { state: 1, read: 1, write: 0, next: 2, movement: 1 },
        ];
        let tm = TuringMachine::new(3, 2, 0, 2, vec![2], rules);
        for v in [LatticeVariant::TwoStep, LatticeVariant::RealTime] {
            let r = verify_simulation(&threshold(&tm, v), &[], 5).unwrap();
            assert!(r.ok, "{v:?} {r:?}");
        }
    }

    #[test]
    fn random_machines_agree() {
        for seed in 0..20 {
            let tm = random_tm(4, 3, seed);
            for v in [LatticeVariant::TwoStep, LatticeVariant::RealTime] {
                let r = verify_simulation(&threshold(&tm, v), &[1, 2, 1], 60).unwrap();
                assert!(r.ok, "seed {seed} {v:?} {r:?}");
            }
        }
    }

    #[test]
    fn halted_lattice_is_a_fixed_point() {
        let tm = append_one_machine();
        let p = threshold(&tm, LatticeVariant::TwoStep);
        let r = verify_simulation(&p, &[1, 1], 30).unwrap();
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn in_transition_shows_between_halves() {
        let rules = vec![
            Rule { state: 0, read: 0, write: 0, next: 1, movement: -1 },
            Rule { state: 0, read: 1, write: 1, next: 1, movement: -1 },
        ];
        let tm = TuringMachine::new(2, 2, 0, 1, vec![], rules);
        let p = threshold(&tm, LatticeVariant::TwoStep);
        let c = TmConfig::initial(&tm, &[1]).unwrap();
        let mut l = TmLattice::new(p, &c).unwrap();
        l.step().unwrap();
        assert_eq!(l.decode().unwrap(), Decoded::InTransition);
        assert!(l.trace_line().contains("IN-TRANSITION"));
        assert!(l.trace_line().starts_with("t=1 parity=1"));
        l.step().unwrap();
        assert!(matches!(l.decode().unwrap(), Decoded::Config(_)));
    }

    #[test]
    fn blank_lattice_without_head_is_unchanged() {
        for v in [LatticeVariant::TwoStep, LatticeVariant::RealTime] {
            let p = threshold(&binary_increment_machine(), v);
            let mut l = TmLattice::blank(p, 6);
            let before = l.columns.clone();
            for _ in 0..4 {
                l.step().unwrap();
            }
            assert_eq!(l.columns, before);
        }
    }

    #[test]
    fn corrupted_weight_is_caught() {
        let tm = binary_increment_machine();
        let mut p = threshold(&tm, LatticeVariant::RealTime);
        // drop the "symbol stays put without a head" rule for blank
        let k = p.weights.k;
        p.weights.left[0][(BLANK * k + tm.m) * k + BLANK] = 0.0;
        let r = verify_simulation(&p, &[2, 1], 10).unwrap();
        assert!(!r.ok);
        assert_eq!(r.first_divergence, Some(1));
    }

    #[test]
    fn sigmoid_lattice_tracks_threshold() {
        let tm = binary_increment_machine();
        for v in [LatticeVariant::TwoStep, LatticeVariant::RealTime] {
            let p = encode_tm(&tm, v, LatticeActivation::Sigmoid { gain: 20.0 }).unwrap();
            let r = verify_simulation(&p, &[2, 1, 2], 12).unwrap();
            assert!(r.ok, "{v:?} {r:?}");
        }
    }

    #[test]
    fn json_round_trip() {
        let p = threshold(&binary_increment_machine(), LatticeVariant::TwoStep);
        let back = LatticeProgram::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        let mut broken: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        broken["weights"]["k"] = serde_json::json!(3);
        assert!(LatticeProgram::from_json(&broken.to_string()).is_err());
    }
}
