use std::fmt::Write as _;

use super::{canonicalize, Dfa};

/// Graphviz rendering. States are renumbered canonically first so equal
/// languages over minimal automata produce identical text.
pub fn to_dot(dfa: &Dfa, name: &str) -> String {
    let dfa = canonicalize(dfa);
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", name.replace('"', "\\\""));
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  __start [shape=point];");
    for q in 0..dfa.num_states() {
        let shape = if dfa.is_accepting(q) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  q{q} [shape={shape}];");
    }
    let _ = writeln!(out, "  __start -> q{};", dfa.start());
    for q in 0..dfa.num_states() {
        // merge parallel edges into one labelled edge
        let mut targets: Vec<(usize, Vec<char>)> = Vec::new();
        for (a, &c) in dfa.alphabet().symbols().iter().enumerate() {
            let t = dfa.next(q, a);
            match targets.iter_mut().find(|(x, _)| *x == t) {
                Some((_, labels)) => labels.push(c),
                None => targets.push((t, vec![c])),
            }
        }
        for (t, labels) in targets {
            let label: Vec<String> = labels.iter().map(char::to_string).collect();
            let _ = writeln!(out, "  q{q} -> q{t} [label=\"{}\"];", label.join(","));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::tomita;

    #[test]
    fn shapes_and_start_arrow() {
        let dot = to_dot(&tomita(1).unwrap(), "t1");
        assert!(dot.contains("q0 [shape=doublecircle]"));
        assert!(dot.contains("q1 [shape=circle]"));
        assert!(dot.contains("__start -> q0"));
        assert!(dot.contains("q1 -> q1 [label=\"a,b\"]"));
        assert_eq!(dot, to_dot(&tomita(1).unwrap(), "t1"));
    }
}
