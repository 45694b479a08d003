//! Minimization (Hopcroft partition refinement), canonical numbering,
//! language equivalence and isomorphism.

use std::collections::VecDeque;

use super::{AutomataError, Dfa};

/// Renumber reachable states in breadth-first order from the start state,
/// visiting symbols in alphabet order. Unreachable states are dropped.
pub fn canonicalize(dfa: &Dfa) -> Dfa {
    let n = dfa.num_states();
    let m = dfa.num_symbols();
    let mut new_id = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    new_id[dfa.start()] = 0;
    order.push(dfa.start());
    queue.push_back(dfa.start());
    while let Some(q) = queue.pop_front() {
        for a in 0..m {
            let t = dfa.next(q, a);
            if new_id[t] == usize::MAX {
                new_id[t] = order.len();
                order.push(t);
                queue.push_back(t);
            }
        }
    }
    let delta = order
        .iter()
        .map(|&q| (0..m).map(|a| new_id[dfa.next(q, a)]).collect())
        .collect();
    let accepting = order
        .iter()
        .enumerate()
        .filter(|(_, &q)| dfa.is_accepting(q))
        .map(|(i, _)| i);
    Dfa::new(dfa.alphabet().clone(), delta, 0, accepting).expect("renumbering preserves validity")
}

/// Canonical minimal DFA of the same language.
pub fn minimize(dfa: &Dfa) -> Dfa {
    let reachable = canonicalize(dfa);
    let n = reachable.num_states();
    let m = reachable.num_symbols();

    // inverse[a][t] = states q with delta(q, a) = t
    let mut inverse = vec![vec![Vec::new(); n]; m];
    for q in 0..n {
        for (a, inv) in inverse.iter_mut().enumerate() {
            inv[reachable.next(q, a)].push(q);
        }
    }

    let (acc, rej): (Vec<usize>, Vec<usize>) = (0..n).partition(|&q| reachable.is_accepting(q));
    let mut blocks: Vec<Vec<usize>> = [acc, rej].into_iter().filter(|b| !b.is_empty()).collect();
    let mut block_of = vec![0; n];
    for (b, members) in blocks.iter().enumerate() {
        for &q in members {
            block_of[q] = b;
        }
    }

    let mut in_work = vec![vec![false; m]; blocks.len()];
    let mut work: Vec<(usize, usize)> = Vec::new();
    // Seeding with the smaller initial block is enough.
    if let Some(smallest) = (0..blocks.len()).min_by_key(|&b| blocks[b].len()) {
        for a in 0..m {
            work.push((smallest, a));
            in_work[smallest][a] = true;
        }
    }

    let mut marked = vec![false; n];
    while let Some((splitter, a)) = work.pop() {
        in_work[splitter][a] = false;
        let preimage: Vec<usize> = blocks[splitter]
            .iter()
            .flat_map(|&t| inverse[a][t].iter().copied())
            .collect();
        let mut touched: Vec<usize> = Vec::new();
        for &q in &preimage {
            if !marked[q] {
                marked[q] = true;
                let b = block_of[q];
                if !touched.contains(&b) {
                    touched.push(b);
                }
            }
        }
        for b in touched {
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                blocks[b].iter().partition(|&&q| marked[q]);
            if outside.is_empty() {
                continue;
            }
            let new_block = blocks.len();
            for &q in &outside {
                block_of[q] = new_block;
            }
            let smaller_is_new = outside.len() <= inside.len();
            blocks[b] = inside;
            blocks.push(outside);
            in_work.push(vec![false; m]);
            for c in 0..m {
                let target = if in_work[b][c] || smaller_is_new { new_block } else { b };
                if !in_work[target][c] {
                    in_work[target][c] = true;
                    work.push((target, c));
                }
            }
        }
        for &q in &preimage {
            marked[q] = false;
        }
    }

    let delta = blocks
        .iter()
        .map(|members| {
            let rep = members[0];
            (0..m).map(|a| block_of[reachable.next(rep, a)]).collect()
        })
        .collect();
    let accepting = (0..blocks.len()).filter(|&b| reachable.is_accepting(blocks[b][0]));
    let quotient = Dfa::new(
        reachable.alphabet().clone(),
        delta,
        block_of[reachable.start()],
        accepting,
    )
    .expect("quotient is a valid DFA");
    canonicalize(&quotient)
}

/// Result of a language-equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub equal: bool,
    /// A shortest (then lexicographically least) word in exactly one language.
    pub counterexample: Option<Vec<usize>>,
}

fn same_alphabet(a: &Dfa, b: &Dfa) -> Result<(), AutomataError> {
    if a.alphabet() != b.alphabet() {
        return Err(AutomataError::AlphabetMismatch(
            a.alphabet().to_string(),
            b.alphabet().to_string(),
        ));
    }
    Ok(())
}

/// Breadth-first search over the product automaton.
pub fn equivalent(a: &Dfa, b: &Dfa) -> Result<Equivalence, AutomataError> {
    same_alphabet(a, b)?;
    let m = a.num_symbols();
    let nb = b.num_states();
    let pair = |p: usize, q: usize| p * nb + q;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; a.num_states() * nb];
    let mut seen = vec![false; a.num_states() * nb];
    let start = pair(a.start(), b.start());
    seen[start] = true;
    let mut queue = VecDeque::from([(a.start(), b.start())]);
    while let Some((p, q)) = queue.pop_front() {
        if a.is_accepting(p) != b.is_accepting(q) {
            let mut word = Vec::new();
            let mut cur = pair(p, q);
            while let Some((prev, sym)) = parent[cur] {
                word.push(sym);
                cur = prev;
            }
            word.reverse();
            return Ok(Equivalence {
                equal: false,
                counterexample: Some(word),
            });
        }
        for s in 0..m {
            let (p2, q2) = (a.next(p, s), b.next(q, s));
            let id = pair(p2, q2);
            if !seen[id] {
                seen[id] = true;
                parent[id] = Some((pair(p, q), s));
                queue.push_back((p2, q2));
            }
        }
    }
    Ok(Equivalence {
        equal: true,
        counterexample: None,
    })
}

/// Structural identity up to state renaming. Both inputs must be minimal.
pub fn isomorphic(a: &Dfa, b: &Dfa) -> Result<bool, AutomataError> {
    same_alphabet(a, b)?;
    for d in [a, b] {
        let min = minimize(d).num_states();
        if min != d.num_states() {
            return Err(AutomataError::NotMinimal {
                n: d.num_states(),
                min,
            });
        }
    }
    Ok(canonicalize(a) == canonicalize(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{tomita, Alphabet};

    /// Tomita 5 with a duplicated copy of state 3 (states 3 and 5 bisimilar).
    fn padded() -> Dfa {
        Dfa::new(
            Alphabet::ab(),
            vec![
                vec![1, 2],
                vec![0, 5],
                vec![3, 0],
                vec![2, 1],
                vec![4, 4], // unreachable
                vec![2, 1],
            ],
            0,
            [0],
        )
        .unwrap()
    }

    #[test]
    fn merges_bisimilar_and_drops_unreachable() {
        let d = padded();
        let min = minimize(&d);
        assert_eq!(min.num_states(), 4);
        assert_eq!(min, tomita(5).unwrap());
    }

    #[test]
    fn six_state_with_one_bisimilar_pair_gives_five() {
        // T3 plus a clone of its dead state, all reachable.
        let d = Dfa::new(
            Alphabet::ab(),
            vec![
                vec![1, 0],
                vec![0, 2],
                vec![3, 4],
                vec![5, 3],
                vec![1, 2],
                vec![3, 5],
            ],
            0,
            [0, 1, 4],
        )
        .unwrap();
        assert_eq!(minimize(&d).num_states(), 5);
        assert!(equivalent(&d, &minimize(&d)).unwrap().equal);
    }

    #[test]
    fn idempotent() {
        let d = padded();
        assert_eq!(minimize(&minimize(&d)), minimize(&d));
    }

    #[test]
    fn counterexample_is_shortest() {
        let t1 = tomita(1).unwrap();
        let t7 = tomita(7).unwrap();
        let eq = equivalent(&t1, &t7).unwrap();
        assert!(!eq.equal);
        assert_eq!(eq.counterexample, Some(vec![1]));
        assert!(equivalent(&tomita(3).unwrap(), &tomita(3).unwrap()).unwrap().equal);
    }

    #[test]
    fn alphabet_mismatch() {
        let other = Dfa::new(Alphabet::new("xy".chars()).unwrap(), vec![vec![0, 0]], 0, []).unwrap();
        assert!(matches!(
            equivalent(&tomita(1).unwrap(), &other),
            Err(AutomataError::AlphabetMismatch(..))
        ));
    }

    #[test]
    fn isomorphism_rules() {
        let t1 = tomita(1).unwrap();
        let t2 = tomita(2).unwrap();
        assert!(!isomorphic(&t1, &t2).unwrap());
        // relabel tomita 4 states: swap 0 and 3
        let relabelled = Dfa::new(
            Alphabet::ab(),
            vec![vec![0, 0], vec![2, 3], vec![0, 3], vec![1, 3]],
            3,
            [3, 1, 2],
        )
        .unwrap();
        assert!(isomorphic(&relabelled, &tomita(4).unwrap()).unwrap());
        assert!(matches!(
            isomorphic(&padded(), &tomita(5).unwrap()),
            Err(AutomataError::NotMinimal { n: 6, min: 4 })
        ));
    }
}
