//! Deterministic finite automata over small ordered alphabets.
//!
//! A [`Dfa`] is always total: every `(state, symbol)` pair has a successor.
//! Symbols are referred to by their index in the [`Alphabet`], so strings are
//! plain `&[usize]` slices throughout the crate.

mod dot;
mod minimize;
mod sample;
mod tomita;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dot::to_dot;
pub use minimize::{canonicalize, equivalent, isomorphic, minimize, Equivalence};
pub use sample::{sample_dataset, Dataset, DatasetHeader, LabeledString, Sampled};
pub use tomita::{tomita, tomita_predicate, TOMITA_GRAMMARS};

/// Errors produced while building or querying automata.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomataError {
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("alphabet contains duplicate symbol '{0}'")]
    DuplicateSymbol(char),
    #[error("symbol '{0}' is not part of the alphabet")]
    UnknownSymbol(char),
    #[error("symbol index {index} is out of range for an alphabet of size {size}")]
    InvalidSymbol { index: usize, size: usize },
    #[error("state {state} is outside 0..{n}")]
    InvalidState { state: usize, n: usize },
    #[error("transition table has {rows} rows, expected {n}")]
    RowCount { rows: usize, n: usize },
    #[error("row {row} of the transition table has {len} entries, expected {m}")]
    RowWidth { row: usize, len: usize, m: usize },
    #[error("a DFA needs at least one state")]
    NoStates,
    #[error("alphabets differ: {0:?} vs {1:?}")]
    AlphabetMismatch(String, String),
    #[error("input automaton is not minimal ({n} states, minimal form has {min})")]
    NotMinimal { n: usize, min: usize },
    #[error("tomita grammar index must be in 1..=7, got {0}")]
    GrammarIndex(usize),
    #[error("malformed dataset: {0}")]
    Dataset(String),
}

/// Ordered set of distinct input characters. The index of a character is its
/// position in the sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(symbols: I) -> Result<Self, AutomataError> {
        let mut seen = Vec::new();
        for c in symbols {
            if seen.contains(&c) {
                return Err(AutomataError::DuplicateSymbol(c));
            }
            seen.push(c);
        }
        if seen.is_empty() {
            return Err(AutomataError::EmptyAlphabet);
        }
        Ok(Self { symbols: seen })
    }

    /// The binary alphabet `{a, b}` used by the Tomita grammars.
    pub fn ab() -> Self {
        Self {
            symbols: vec!['a', 'b'],
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> Option<char> {
        self.symbols.get(index).copied()
    }

    pub fn index_of(&self, c: char) -> Result<usize, AutomataError> {
        self.symbols
            .iter()
            .position(|&s| s == c)
            .ok_or(AutomataError::UnknownSymbol(c))
    }

    /// Convert text into symbol indices.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>, AutomataError> {
        text.chars().map(|c| self.index_of(c)).collect()
    }

    /// Convert symbol indices back into text. Panics on an out-of-range index.
    pub fn decode(&self, word: &[usize]) -> String {
        word.iter().map(|&i| self.symbols[i]).collect()
    }

    pub fn check(&self, word: &[usize]) -> Result<(), AutomataError> {
        match word.iter().find(|&&s| s >= self.len()) {
            Some(&index) => Err(AutomataError::InvalidSymbol {
                index,
                size: self.len(),
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.symbols {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A total deterministic finite automaton.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DfaFile", into = "DfaFile")]
pub struct Dfa {
    alphabet: Alphabet,
    delta: Vec<Vec<usize>>,
    start: usize,
    accepting: Vec<bool>,
}

impl Dfa {
    pub fn new(
        alphabet: Alphabet,
        delta: Vec<Vec<usize>>,
        start: usize,
        accepting: impl IntoIterator<Item = usize>,
    ) -> Result<Self, AutomataError> {
        let n = delta.len();
        if n == 0 {
            return Err(AutomataError::NoStates);
        }
        let m = alphabet.len();
        for (row, targets) in delta.iter().enumerate() {
            if targets.len() != m {
                return Err(AutomataError::RowWidth {
                    row,
                    len: targets.len(),
                    m,
                });
            }
            if let Some(&state) = targets.iter().find(|&&t| t >= n) {
                return Err(AutomataError::InvalidState { state, n });
            }
        }
        if start >= n {
            return Err(AutomataError::InvalidState { state: start, n });
        }
        let mut acc = vec![false; n];
        for s in accepting {
            if s >= n {
                return Err(AutomataError::InvalidState { state: s, n });
            }
            acc[s] = true;
        }
        Ok(Self {
            alphabet,
            delta,
            start,
            accepting: acc,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn next(&self, state: usize, symbol: usize) -> usize {
        self.delta[state][symbol]
    }

    pub fn delta(&self) -> &[Vec<usize>] {
        &self.delta
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.num_states()).filter(|&s| self.accepting[s]).collect()
    }

    /// State reached after reading `word` from the start state.
    pub fn walk(&self, word: &[usize]) -> Result<usize, AutomataError> {
        self.alphabet.check(word)?;
        Ok(word.iter().fold(self.start, |q, &a| self.delta[q][a]))
    }

    /// Every state visited while reading `word`, including the start state.
    pub fn trajectory(&self, word: &[usize]) -> Result<Vec<usize>, AutomataError> {
        self.alphabet.check(word)?;
        let mut states = Vec::with_capacity(word.len() + 1);
        let mut q = self.start;
        states.push(q);
        for &a in word {
            q = self.delta[q][a];
            states.push(q);
        }
        Ok(states)
    }

    pub fn accepts(&self, word: &[usize]) -> Result<bool, AutomataError> {
        self.walk(word).map(|q| self.accepting[q])
    }

    pub fn accepts_str(&self, text: &str) -> Result<bool, AutomataError> {
        self.accepts(&self.alphabet.encode(text)?)
    }

    /// Transition tensor: `W[i][j][k] = 1` iff `delta(j, k) = i`.
    pub fn transition_tensor(&self) -> Vec<Vec<Vec<u8>>> {
        let n = self.num_states();
        let m = self.num_symbols();
        let mut w = vec![vec![vec![0u8; m]; n]; n];
        for j in 0..n {
            for k in 0..m {
                w[self.delta[j][k]][j][k] = 1;
            }
        }
        w
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("DFA serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// `dfa_accepts` as a free function.
pub fn dfa_accepts(dfa: &Dfa, word: &[usize]) -> Result<bool, AutomataError> {
    dfa.accepts(word)
}

/// `transition_tensor` as a free function.
pub fn transition_tensor(dfa: &Dfa) -> Vec<Vec<Vec<u8>>> {
    dfa.transition_tensor()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DfaFile {
    alphabet: String,
    n: usize,
    start: usize,
    accepting: Vec<usize>,
    delta: Vec<Vec<usize>>,
}

impl TryFrom<DfaFile> for Dfa {
    type Error = AutomataError;

    fn try_from(file: DfaFile) -> Result<Self, Self::Error> {
        if file.delta.len() != file.n {
            return Err(AutomataError::RowCount {
                rows: file.delta.len(),
                n: file.n,
            });
        }
        Dfa::new(
            Alphabet::new(file.alphabet.chars())?,
            file.delta,
            file.start,
            file.accepting,
        )
    }
}

impl From<Dfa> for DfaFile {
    fn from(dfa: Dfa) -> Self {
        DfaFile {
            alphabet: dfa.alphabet.to_string(),
            n: dfa.num_states(),
            start: dfa.start,
            accepting: dfa.accepting_states(),
            delta: dfa.delta,
        }
    }
}

/// Uniformly random total DFA with `n` states over the first `m` letters
/// of the alphabet; each state accepts with probability one half.
pub fn random_dfa(n: usize, m: usize, seed: u64) -> Dfa {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let alphabet = Alphabet::new(('a'..='z').take(m)).expect("1..=26 symbols");
    let delta = (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(0..n)).collect())
        .collect();
    let start = rng.random_range(0..n);
    let accepting: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
    Dfa::new(alphabet, delta, start, accepting).expect("well-formed by construction")
}

/// All words over `m` symbols of length exactly `len`, in lexicographic order.
pub fn words_of_length(m: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = m.checked_pow(len as u32).expect("word enumeration overflow");
    (0..total).map(move |mut code| {
        let mut w = vec![0; len];
        for slot in w.iter_mut().rev() {
            *slot = code % m;
            code /= m;
        }
        w
    })
}

/// All words of length `0..=max_len`, shortest first.
pub fn words_up_to(m: usize, max_len: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..=max_len).flat_map(move |len| words_of_length(m, len))
}
