//! Single-tape deterministic Turing machines and a reference interpreter.
//!
//! Symbol 0 is the blank. A configuration keeps a finite window of the tape;
//! cells outside the window are blank and the window grows by one cell
//! whenever the head steps past an edge.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const BLANK: usize = 0;

/// Default step budget standing in for "eventually halts".
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// One entry `<read, state | write, next, move>` of the transition table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub state: usize,
    pub read: usize,
    pub write: usize,
    pub next: usize,
    #[serde(rename = "move")]
    pub movement: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TmFile", into = "TmFile")]
pub struct TuringMachine {
    pub n: usize,
    pub m: usize,
    pub start: usize,
    pub halt: usize,
    pub accepting: Vec<usize>,
    rules: Vec<Rule>,
    /// (state * m + read) -> index into `rules`
    table: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct TmFile {
    n: usize,
    m: usize,
    start: usize,
    halt: usize,
    accepting: Vec<usize>,
    rules: Vec<Rule>,
}

impl From<TmFile> for TuringMachine {
    fn from(f: TmFile) -> Self {
        TuringMachine::new(f.n, f.m, f.start, f.halt, f.accepting, f.rules)
    }
}

impl From<TuringMachine> for TmFile {
    fn from(tm: TuringMachine) -> Self {
        TmFile {
            n: tm.n,
            m: tm.m,
            start: tm.start,
            halt: tm.halt,
            accepting: tm.accepting,
            rules: tm.rules,
        }
    }
}

/// A broken invariant reported by [`TuringMachine::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoStates,
    NoSymbols,
    StartOutOfRange(usize),
    HaltOutOfRange(usize),
    AcceptingOutOfRange(usize),
    RuleOutOfRange { index: usize, rule: Rule },
    BadMove { index: usize, rule: Rule },
    DuplicateRule { index: usize, rule: Rule },
    MissingRule { state: usize, read: usize },
    HaltNotAbsorbing { index: usize, rule: Rule },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "machine has no states"),
            Violation::NoSymbols => write!(f, "machine has no tape symbols"),
            Violation::StartOutOfRange(s) => write!(f, "start state {s} out of range"),
            Violation::HaltOutOfRange(s) => write!(f, "halt state {s} out of range"),
            Violation::AcceptingOutOfRange(s) => write!(f, "accepting state {s} out of range"),
            Violation::RuleOutOfRange { index, rule } => {
                write!(f, "rule #{index} {rule:?} references a state or symbol out of range")
            }
            Violation::BadMove { index, rule } => {
                write!(f, "rule #{index} has move {} (must be -1, 0 or 1)", rule.movement)
            }
            Violation::DuplicateRule { index, rule } => write!(
                f,
                "rule #{index} redefines (state {}, read {})",
                rule.state, rule.read
            ),
            Violation::MissingRule { state, read } => {
                write!(f, "no rule for (state {state}, read {read})")
            }
            Violation::HaltNotAbsorbing { index, rule } => {
                write!(f, "halt not absorbing: rule #{index} {rule:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TuringError {
    #[error("undefined transition for state {state} reading {read}")]
    UndefinedTransition { state: usize, read: usize },
    #[error("invalid machine: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("input symbol {0} is not a tape symbol")]
    InputSymbol(usize),
}

impl TuringMachine {
    pub fn new(
        n: usize,
        m: usize,
        start: usize,
        halt: usize,
        accepting: Vec<usize>,
        rules: Vec<Rule>,
    ) -> Self {
        let mut table = vec![None; n * m];
        for (i, r) in rules.iter().enumerate() {
            if r.state < n && r.read < m && table[r.state * m + r.read].is_none() {
                table[r.state * m + r.read] = Some(i);
            }
        }
        Self {
            n,
            m,
            start,
            halt,
            accepting,
            rules,
            table,
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Effective rule for `(state, read)`, including the implicit halt loop.
    pub fn rule(&self, state: usize, read: usize) -> Option<Rule> {
        if state == self.halt {
            return Some(Rule {
                state,
                read,
                write: read,
                next: state,
                movement: 0,
            });
        }
        self.table
            .get(state * self.m + read)
            .copied()
            .flatten()
            .map(|i| self.rules[i])
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting.contains(&state)
    }

    /// Empty iff every structural invariant holds.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::NoStates);
        }
        if self.m == 0 {
            out.push(Violation::NoSymbols);
        }
        if self.start >= self.n {
            out.push(Violation::StartOutOfRange(self.start));
        }
        if self.halt >= self.n {
            out.push(Violation::HaltOutOfRange(self.halt));
        }
        for &a in &self.accepting {
            if a >= self.n {
                out.push(Violation::AcceptingOutOfRange(a));
            }
        }
        let mut seen = vec![false; self.n * self.m];
        for (index, &rule) in self.rules.iter().enumerate() {
            if rule.state >= self.n || rule.next >= self.n || rule.read >= self.m || rule.write >= self.m {
                out.push(Violation::RuleOutOfRange { index, rule });
                continue;
            }
            if !(-1..=1).contains(&rule.movement) {
                out.push(Violation::BadMove { index, rule });
            }
            let slot = rule.state * self.m + rule.read;
            if seen[slot] {
                out.push(Violation::DuplicateRule { index, rule });
            }
            seen[slot] = true;
            if rule.state == self.halt
                && (rule.next != self.halt || rule.write != rule.read || rule.movement != 0)
            {
                out.push(Violation::HaltNotAbsorbing { index, rule });
            }
        }
        for state in 0..self.n {
            if state == self.halt {
                continue;
            }
            for read in 0..self.m {
                if !seen[state * self.m + read] {
                    out.push(Violation::MissingRule { state, read });
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), TuringError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(TuringError::Invalid(v))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Tape window, head and control state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TmConfig {
    pub tape: Vec<usize>,
    pub head: usize,
    pub state: usize,
    pub steps: usize,
}

impl TmConfig {
    /// Head on the first input cell; an empty input is a single blank cell.
    pub fn initial(tm: &TuringMachine, input: &[usize]) -> Result<Self, TuringError> {
        if let Some(&bad) = input.iter().find(|&&s| s >= tm.m) {
            return Err(TuringError::InputSymbol(bad));
        }
        let tape = if input.is_empty() { vec![BLANK] } else { input.to_vec() };
        Ok(Self {
            tape,
            head: 0,
            state: tm.start,
            steps: 0,
        })
    }

    pub fn read(&self) -> usize {
        self.tape[self.head]
    }

    /// Smallest window covering every non-blank cell and the head.
    /// Two configurations describe the same machine state iff their
    /// normalized forms agree (step counters aside).
    pub fn normalized(&self) -> TmConfig {
        let first = self.tape.iter().position(|&s| s != BLANK).unwrap_or(self.head);
        let last = self.tape.iter().rposition(|&s| s != BLANK).unwrap_or(self.head);
        let lo = first.min(self.head);
        let hi = last.max(self.head);
        TmConfig {
            tape: self.tape[lo..=hi].to_vec(),
            head: self.head - lo,
            state: self.state,
            steps: self.steps,
        }
    }

    /// Same machine state, ignoring step counters and blank padding.
    pub fn same_as(&self, other: &TmConfig) -> bool {
        let (a, b) = (self.normalized(), other.normalized());
        a.tape == b.tape && a.head == b.head && a.state == b.state
    }

    pub fn tape_digits(&self) -> String {
        self.tape
            .iter()
            .map(|&s| char::from_digit(s as u32, 36).unwrap_or('?'))
            .collect()
    }

    /// `t=<k> state=<z> head=<h> tape=<digits>`
    pub fn trace_line(&self) -> String {
        format!(
            "t={} state={} head={} tape={}",
            self.steps,
            self.state,
            self.head,
            self.tape_digits()
        )
    }
}

pub fn tm_step(tm: &TuringMachine, c: &TmConfig) -> Result<TmConfig, TuringError> {
    let read = c.read();
    let rule = tm
        .rule(c.state, read)
        .ok_or(TuringError::UndefinedTransition { state: c.state, read })?;
    let mut next = c.clone();
    next.tape[next.head] = rule.write;
    next.state = rule.next;
    next.steps += 1;
    match rule.movement {
        -1 if next.head == 0 => next.tape.insert(0, BLANK),
        -1 => next.head -= 1,
        1 => {
            next.head += 1;
            if next.head == next.tape.len() {
                next.tape.push(BLANK);
            }
        }
        _ => {}
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub halted: bool,
    pub accepted: bool,
    pub config: TmConfig,
    pub trace: Option<Vec<TmConfig>>,
}

/// Run from the initial configuration until a halting or accepting state is
/// entered, or `max_steps` steps have been taken.
pub fn tm_run(
    tm: &TuringMachine,
    input: &[usize],
    max_steps: usize,
    record_trace: bool,
) -> Result<RunResult, TuringError> {
    let mut config = TmConfig::initial(tm, input)?;
    let mut trace = record_trace.then(|| vec![config.clone()]);
    let stopped = |s: usize| s == tm.halt || tm.is_accepting(s);
    for _ in 0..max_steps {
        if stopped(config.state) {
            break;
        }
        config = tm_step(tm, &config)?;
        if let Some(t) = trace.as_mut() {
            t.push(config.clone());
        }
    }
    Ok(RunResult {
        halted: stopped(config.state),
        accepted: tm.is_accepting(config.state),
        config,
        trace,
    })
}

/// Seeded random machine: state `n - 1` is the halting (and accepting)
/// state, every other `(state, symbol)` pair gets a uniform rule.
pub fn random_tm(n: usize, m: usize, seed: u64) -> TuringMachine {
    assert!(n >= 2 && m >= 1, "random machines need a halt state and a symbol");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let halt = n - 1;
    let mut rules = Vec::new();
    for state in 0..halt {
        for read in 0..m {
            rules.push(Rule {
                state,
                read,
                write: rng.random_range(0..m),
                next: rng.random_range(0..n),
                movement: rng.random_range(-1..=1),
            });
        }
    }
    TuringMachine::new(n, m, 0, halt, vec![halt], rules)
}

/// Scans right over 1s, writes a 1 on the first blank and halts.
pub fn append_one_machine() -> TuringMachine {
    TuringMachine::new(
        2,
        2,
        0,
        1,
        vec![1],
        vec![
            Rule { state: 0, read: 1, write: 1, next: 0, movement: 1 },
            Rule { state: 0, read: 0, write: 1, next: 1, movement: 0 },
            Rule { state: 1, read: 1, write: 1, next: 1, movement: 0 },
        ],
    )
}

/// Binary increment, least significant bit on the right. Symbols: 0 blank,
/// 1 = bit 0, 2 = bit 1. Walks right to the end, then carries leftwards.
pub fn binary_increment_machine() -> TuringMachine {
    let r = |state, read, write, next, movement| Rule { state, read, write, next, movement };
    TuringMachine::new(
        3,
        3,
        0,
        2,
        vec![2],
        vec![
            // 0: seek the right end
            r(0, 1, 1, 0, 1),
            r(0, 2, 2, 0, 1),
            r(0, 0, 0, 1, -1),
            // 1: carry
            r(1, 2, 1, 1, -1),
            r(1, 1, 2, 2, 0),
            r(1, 0, 2, 2, 0),
        ],
    )
}
