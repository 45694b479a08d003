//! The seven Tomita benchmark languages over `{a, b}`.
//!
//! [`tomita`] returns hand-built minimal DFAs already in canonical numbering.
//! [`tomita_predicate`] evaluates each definition literally (runs, counts,
//! substrings) and serves as an independent check on the automata.

use super::{Alphabet, AutomataError, Dfa};

/// Grammar ids accepted by [`tomita`].
pub const TOMITA_GRAMMARS: [usize; 7] = [1, 2, 3, 4, 5, 6, 7];

const A: usize = 0;
const B: usize = 1;

pub fn tomita(k: usize) -> Result<Dfa, AutomataError> {
    let (delta, accepting): (Vec<Vec<usize>>, Vec<usize>) = match k {
        // a*
        1 => (vec![vec![0, 1], vec![1, 1]], vec![0]),
        // (ab)*
        2 => (vec![vec![1, 2], vec![2, 0], vec![2, 2]], vec![0]),
        // 0: no pending odd a-run, 1: inside an odd a-run,
        // 2: odd a-run then odd b-run, 3: dead, 4: odd a-run then even b-run
        3 => (
            vec![vec![1, 0], vec![0, 2], vec![3, 4], vec![3, 3], vec![1, 2]],
            vec![0, 1, 4],
        ),
        // trailing-a counter, 3 is the trigram sink
        4 => (
            vec![vec![1, 0], vec![2, 0], vec![3, 0], vec![3, 3]],
            vec![0, 1, 2],
        ),
        // (parity of a, parity of b): 0=(e,e) 1=(o,e) 2=(e,o) 3=(o,o)
        5 => (
            vec![vec![1, 2], vec![0, 3], vec![3, 0], vec![2, 1]],
            vec![0],
        ),
        // (#a - #b) mod 3
        6 => (vec![vec![1, 2], vec![2, 0], vec![0, 1]], vec![0]),
        // phase of b*a*b*a*, 4 is the sink
        7 => (
            vec![vec![1, 0], vec![1, 2], vec![3, 2], vec![3, 4], vec![4, 4]],
            vec![0, 1, 2, 3],
        ),
        other => return Err(AutomataError::GrammarIndex(other)),
    };
    Dfa::new(Alphabet::ab(), delta, 0, accepting)
}

/// Maximal runs of equal symbols as `(symbol, length)`.
fn runs(word: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &s in word {
        match out.last_mut() {
            Some((sym, len)) if *sym == s => *len += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

fn count(word: &[usize], sym: usize) -> usize {
    word.iter().filter(|&&s| s == sym).count()
}

pub fn tomita_predicate(k: usize, word: &[usize]) -> Result<bool, AutomataError> {
    Alphabet::ab().check(word)?;
    let verdict = match k {
        1 => word.iter().all(|&s| s == A),
        2 => {
            word.len() % 2 == 0
                && word
                    .chunks(2)
                    .all(|pair| pair[0] == A && pair[1] == B)
        }
        3 => !runs(word)
            .windows(2)
            .any(|w| w[0].0 == A && w[0].1 % 2 == 1 && w[1].0 == B && w[1].1 % 2 == 1),
        4 => !word.windows(3).any(|w| w.iter().all(|&s| s == A)),
        5 => count(word, A) % 2 == 0 && count(word, B) % 2 == 0,
        6 => count(word, A) % 3 == count(word, B) % 3,
        7 => {
            // consume b* a* b* a* greedily and require the whole word used
            let mut pos = 0;
            for sym in [B, A, B, A] {
                while pos < word.len() && word[pos] == sym {
                    pos += 1;
                }
            }
            pos == word.len()
        }
        other => return Err(AutomataError::GrammarIndex(other)),
    };
    Ok(verdict)
}
