//! Labeled string datasets drawn from a ground-truth DFA.
//!
//! Strings are drawn without replacement. Each draw picks a target class
//! (accept/reject), a length uniformly among the lengths that still have
//! unused members of that class, and then a uniform member of the class at
//! that length. The last step uses exact path counts through the DFA, which
//! yields the same distribution as redrawing uniform strings of that length
//! until one lands in the class.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::seq::SliceRandom;

use super::{Alphabet, AutomataError, Dfa};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledString {
    pub symbols: Vec<usize>,
    pub label: bool,
}

/// Provenance line written at the top of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetHeader {
    pub grammar: String,
    pub split: String,
    pub max_len: usize,
    pub seed: u64,
    pub shortfall: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub items: Vec<LabeledString>,
    pub max_len: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|s| s.label).count()
    }

    pub fn word_set(&self) -> HashSet<Vec<usize>> {
        self.items.iter().map(|s| s.symbols.clone()).collect()
    }

    /// Serialize as `<0|1>\t<string>` lines below a `#` provenance header.
    pub fn to_tsv(&self, alphabet: &Alphabet, header: &DatasetHeader) -> String {
        let mut out = format!(
            "# grammar={} split={} max_len={} seed={}",
            header.grammar, header.split, self.max_len, header.seed
        );
        if header.shortfall > 0 {
            let _ = write!(out, " shortfall={}", header.shortfall);
        }
        out.push('\n');
        for item in &self.items {
            let _ = writeln!(out, "{}\t{}", u8::from(item.label), alphabet.decode(&item.symbols));
        }
        out
    }

    pub fn from_tsv(text: &str, alphabet: &Alphabet) -> Result<(Self, DatasetHeader), AutomataError> {
        let mut lines = text.lines();
        let first = lines
            .next()
            .ok_or_else(|| AutomataError::Dataset("empty file".into()))?;
        let header = parse_header(first)?;
        let mut items = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (label, word) = line.split_once('\t').ok_or_else(|| {
                AutomataError::Dataset(format!("line {}: missing tab separator", lineno + 2))
            })?;
            let label = match label {
                "0" => false,
                "1" => true,
                other => {
                    return Err(AutomataError::Dataset(format!(
                        "line {}: label must be 0 or 1, got {other:?}",
                        lineno + 2
                    )))
                }
            };
            items.push(LabeledString {
                symbols: alphabet.encode(word)?,
                label,
            });
        }
        Ok((
            Dataset {
                name: header.split.clone(),
                items,
                max_len: header.max_len,
            },
            header,
        ))
    }
}

fn parse_header(line: &str) -> Result<DatasetHeader, AutomataError> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| AutomataError::Dataset("first line must be a '#' header".into()))?;
    let mut header = DatasetHeader::default();
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| AutomataError::Dataset(format!("header field {field:?} lacks '='")))?;
        let number = || {
            value
                .parse::<u64>()
                .map_err(|_| AutomataError::Dataset(format!("header field {key} is not a number")))
        };
        match key {
            "grammar" => header.grammar = value.to_string(),
            "split" => header.split = value.to_string(),
            "max_len" => header.max_len = number()? as usize,
            "seed" => header.seed = number()?,
            "shortfall" => header.shortfall = number()? as usize,
            _ => {}
        }
    }
    Ok(header)
}

/// Output of [`sample_dataset`]; `shortfall` counts missing items when fewer
/// than the requested number of distinct strings exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sampled {
    pub dataset: Dataset,
    pub shortfall: usize,
}

/// Number of words of each length that end in the given class, per state.
struct PathCounts {
    /// counts[r][q]: words of length r leading from q into the class
    counts: Vec<Vec<f64>>,
}

impl PathCounts {
    fn new(dfa: &Dfa, accept: bool, max_len: usize) -> Self {
        let n = dfa.num_states();
        let mut counts = Vec::with_capacity(max_len + 1);
        counts.push(
            (0..n)
                .map(|q| if dfa.is_accepting(q) == accept { 1.0 } else { 0.0 })
                .collect::<Vec<f64>>(),
        );
        for r in 1..=max_len {
            let prev: &Vec<f64> = &counts[r - 1];
            let row = (0..n)
                .map(|q| (0..dfa.num_symbols()).map(|a| prev[dfa.next(q, a)]).sum())
                .collect();
            counts.push(row);
        }
        Self { counts }
    }

    fn total(&self, dfa: &Dfa, len: usize) -> f64 {
        self.counts[len][dfa.start()]
    }

    fn draw(&self, dfa: &Dfa, len: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut q = dfa.start();
        let mut word = Vec::with_capacity(len);
        for r in (1..=len).rev() {
            let weights: Vec<f64> = (0..dfa.num_symbols())
                .map(|a| self.counts[r - 1][dfa.next(q, a)])
                .collect();
            let total: f64 = weights.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut chosen = weights.len() - 1;
            for (a, w) in weights.iter().enumerate() {
                if *w > 0.0 && pick < *w {
                    chosen = a;
                    break;
                }
                pick -= w;
            }
            // floating point can leave `chosen` on a zero-weight symbol
            if weights[chosen] == 0.0 {
                chosen = weights.iter().rposition(|&w| w > 0.0).expect("class non-empty");
            }
            word.push(chosen);
            q = dfa.next(q, chosen);
        }
        word
    }

    /// Every member of the class with length <= max_len, shortest first.
    fn enumerate(&self, dfa: &Dfa, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for len in 0..=max_len {
            let mut stack = vec![(dfa.start(), Vec::new())];
            while let Some((q, prefix)) = stack.pop() {
                let remaining = len - prefix.len();
                if remaining == 0 {
                    if self.counts[0][q] > 0.0 {
                        out.push(prefix);
                    }
                    continue;
                }
                for a in (0..dfa.num_symbols()).rev() {
                    let t = dfa.next(q, a);
                    if self.counts[remaining - 1][t] > 0.0 {
                        let mut w = prefix.clone();
                        w.push(a);
                        stack.push((t, w));
                    }
                }
            }
        }
        out
    }
}

struct ClassPlan {
    accept: bool,
    paths: PathCounts,
    /// unused members remaining per length
    remaining: Vec<f64>,
    available: f64,
}

impl ClassPlan {
    fn new(dfa: &Dfa, accept: bool, max_len: usize, exclude: &HashSet<Vec<usize>>) -> Self {
        let paths = PathCounts::new(dfa, accept, max_len);
        let mut remaining: Vec<f64> = (0..=max_len).map(|l| paths.total(dfa, l)).collect();
        for w in exclude {
            if w.len() <= max_len
                && dfa.alphabet().check(w).is_ok()
                && dfa.accepts(w) == Ok(accept)
            {
                remaining[w.len()] -= 1.0;
            }
        }
        let available = remaining.iter().sum();
        Self {
            accept,
            paths,
            remaining,
            available,
        }
    }
}

pub fn sample_dataset(
    dfa: &Dfa,
    count: usize,
    max_len: usize,
    seed: u64,
    exclude: &HashSet<Vec<usize>>,
) -> Sampled {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = ClassPlan::new(dfa, true, max_len, exclude);
    let mut neg = ClassPlan::new(dfa, false, max_len, exclude);

    let mut want_pos = count / 2;
    let mut want_neg = count - want_pos;
    if pos.available < want_pos as f64 {
        want_pos = pos.available as usize;
        want_neg = count - want_pos;
    } else if neg.available < want_neg as f64 {
        want_neg = neg.available as usize;
        want_pos = count - want_neg;
    }
    want_pos = want_pos.min(pos.available as usize);
    want_neg = want_neg.min(neg.available as usize);
    let shortfall = count - want_pos - want_neg;

    let mut taken: HashSet<Vec<usize>> = HashSet::new();
    let mut items = Vec::with_capacity(want_pos + want_neg);

    for (plan, want) in [(&mut pos, want_pos), (&mut neg, want_neg)] {
        if want as f64 >= plan.available {
            for w in plan.paths.enumerate(dfa, max_len) {
                if !exclude.contains(&w) {
                    items.push(LabeledString {
                        symbols: w,
                        label: plan.accept,
                    });
                }
            }
        }
    }
    let full_pos = want_pos as f64 >= pos.available;
    let full_neg = want_neg as f64 >= neg.available;

    // alternate classes so neither dominates early lengths
    let mut need = [
        if full_pos { 0 } else { want_pos },
        if full_neg { 0 } else { want_neg },
    ];
    let mut turn = 0;
    while need[0] + need[1] > 0 {
        if need[turn] == 0 {
            turn = 1 - turn;
            continue;
        }
        let plan = if turn == 0 { &mut pos } else { &mut neg };
        let lengths: Vec<usize> = (0..=max_len).filter(|&l| plan.remaining[l] >= 1.0).collect();
        let len = lengths[rng.random_range(0..lengths.len())];
        let word = loop {
            let w = plan.paths.draw(dfa, len, &mut rng);
            if !taken.contains(&w) && !exclude.contains(&w) {
                break w;
            }
        };
        plan.remaining[len] -= 1.0;
        taken.insert(word.clone());
        items.push(LabeledString {
            symbols: word,
            label: plan.accept,
        });
        need[turn] -= 1;
        turn = 1 - turn;
    }

    items.shuffle(&mut rng);
    Sampled {
        dataset: Dataset {
            name: "sample".into(),
            items,
            max_len,
        },
        shortfall,
    }
}
