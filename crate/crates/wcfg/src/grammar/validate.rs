//! Structural validation: productivity, zero-length derivation cycles, and
//! reachability.

use super::{Alt, NtId, Symbol, WeightedGrammar};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use std::fmt;

/// Outcome of [`WeightedGrammar::validate`]. Unproductive nonterminals and
/// zero-length derivation cycles are errors; unreachable nonterminals are
/// reported as warnings only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub unproductive: Vec<NtId>,
    /// Nonterminals on a cycle N =>+ N that consumes no terminal. This is
    /// the condition that keeps the epsilon rule form admissible and the
    /// length-indexed mass recurrences well founded.
    pub zero_cycles: Vec<NtId>,
    pub unreachable: Vec<NtId>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.unproductive.is_empty() && self.zero_cycles.is_empty()
    }

    pub fn render(&self, g: &WeightedGrammar) -> String {
        let mut out = String::new();
        let names = |ids: &[NtId]| {
            ids.iter()
                .map(|&n| g.nonterminal_name(n).to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        if !self.unproductive.is_empty() {
            out.push_str(&format!(
                "error: unproductive nonterminals: {}\n",
                names(&self.unproductive)
            ));
        }
        if !self.zero_cycles.is_empty() {
            out.push_str(&format!(
                "error: nullable cycle through: {}\n",
                names(&self.zero_cycles)
            ));
        }
        if !self.unreachable.is_empty() {
            out.push_str(&format!(
                "warning: unreachable nonterminals: {}\n",
                names(&self.unreachable)
            ));
        }
        if self.is_valid() && self.unreachable.is_empty() {
            out.push_str("ok\n");
        }
        out
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unproductive: {:?}, zero cycles: {:?}, unreachable: {:?}",
            self.unproductive, self.zero_cycles, self.unreachable
        )
    }
}

/// Nonterminals that can derive the empty word, by fixpoint iteration.
pub(crate) fn nullable_set(g: &WeightedGrammar) -> Vec<bool> {
    let n = g.nonterminal_count();
    let mut nullable = vec![false; n];
    let sym_nullable = |nullable: &[bool], s: &Symbol| match *s {
        Symbol::Terminal(_) => false,
        Symbol::Nonterminal(nt) => nullable[nt.0 as usize],
    };
    loop {
        let mut changed = false;
        for nt in g.nonterminals() {
            if nullable[nt.0 as usize] {
                continue;
            }
            let derives_empty = g.alternatives(nt).iter().any(|alt| match alt {
                Alt::Epsilon => true,
                Alt::Single(s) => sym_nullable(&nullable, s),
                Alt::Pair(a, b) => sym_nullable(&nullable, a) && sym_nullable(&nullable, b),
            });
            if derives_empty {
                nullable[nt.0 as usize] = true;
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

/// Edges of the zero-consumption graph: N -> M whenever a single derivation
/// step from N can reach M without consuming any terminal length.
pub(crate) fn zero_edges(g: &WeightedGrammar, nullable: &[bool]) -> Vec<(NtId, NtId)> {
    let mut edges = Vec::new();
    let null = |s: &Symbol| match *s {
        Symbol::Terminal(_) => false,
        Symbol::Nonterminal(nt) => nullable[nt.0 as usize],
    };
    for nt in g.nonterminals() {
        for alt in g.alternatives(nt) {
            match alt {
                Alt::Epsilon => {}
                Alt::Single(Symbol::Nonterminal(m)) => edges.push((nt, *m)),
                Alt::Single(Symbol::Terminal(_)) => {}
                Alt::Pair(a, b) => {
                    if let Symbol::Nonterminal(m) = a {
                        if null(b) {
                            edges.push((nt, *m));
                        }
                    }
                    if let Symbol::Nonterminal(m) = b {
                        if null(a) {
                            edges.push((nt, *m));
                        }
                    }
                }
            }
        }
    }
    edges
}

pub(super) fn validate(g: &WeightedGrammar) -> ValidationReport {
    let n = g.nonterminal_count();

    // Productivity fixpoint: a nonterminal is productive once one of its
    // alternatives is built from productive parts only.
    let mut productive = vec![false; n];
    let sym_prod = |productive: &[bool], s: &Symbol| match *s {
        Symbol::Terminal(_) => true,
        Symbol::Nonterminal(nt) => productive[nt.0 as usize],
    };
    loop {
        let mut changed = false;
        for nt in g.nonterminals() {
            if productive[nt.0 as usize] {
                continue;
            }
            let ok = g.alternatives(nt).iter().any(|alt| match alt {
                Alt::Epsilon => true,
                Alt::Single(s) => sym_prod(&productive, s),
                Alt::Pair(a, b) => sym_prod(&productive, a) && sym_prod(&productive, b),
            });
            if ok {
                productive[nt.0 as usize] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unproductive: Vec<NtId> = g
        .nonterminals()
        .filter(|nt| !productive[nt.0 as usize])
        .collect();

    // Zero-length derivation cycles: strongly connected components of the
    // zero-consumption graph with more than one node, or with a self-loop.
    let nullable = nullable_set(g);
    let edges = zero_edges(g, &nullable);
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    let mut has_self_loop = vec![false; n];
    for (a, b) in &edges {
        if a == b {
            has_self_loop[a.0 as usize] = true;
        }
        graph.add_edge(nodes[a.0 as usize], nodes[b.0 as usize], ());
    }
    let mut zero_cycles = Vec::new();
    for scc in tarjan_scc(&graph) {
        if scc.len() > 1 {
            zero_cycles.extend(scc.iter().map(|ix| NtId(ix.index() as u32)));
        } else if has_self_loop[scc[0].index()] {
            zero_cycles.push(NtId(scc[0].index() as u32));
        }
    }
    zero_cycles.sort();

    // Reachability from the axiom (warning only).
    let mut reachable = vec![false; n];
    let mut stack = vec![g.axiom()];
    reachable[g.axiom().0 as usize] = true;
    while let Some(nt) = stack.pop() {
        let mut visit = |s: &Symbol| {
            if let Symbol::Nonterminal(m) = *s {
                if !reachable[m.0 as usize] {
                    reachable[m.0 as usize] = true;
                    stack.push(m);
                }
            }
        };
        for alt in g.alternatives(nt) {
            match alt {
                Alt::Epsilon => {}
                Alt::Single(s) => visit(s),
                Alt::Pair(a, b) => {
                    visit(a);
                    visit(b);
                }
            }
        }
    }
    let unreachable: Vec<NtId> = g
        .nonterminals()
        .filter(|nt| !reachable[nt.0 as usize])
        .collect();

    ValidationReport {
        unproductive,
        zero_cycles,
        unreachable,
    }
}

#[cfg(test)]
mod tests {
    use super::super::WeightedGrammar;

    #[test]
    fn binary_tree_grammar_is_valid() {
        let g = WeightedGrammar::parse(
            "axiom S\nterminal a weight 1\nterminal b weight 1\nS -> T | b\nT -> a U\nU -> S S\n",
        )
        .unwrap();
        let report = g.validate();
        assert!(report.is_valid());
        assert!(report.unreachable.is_empty());
    }

    #[test]
    fn self_product_is_unproductive() {
        let g = WeightedGrammar::parse("axiom S\nS -> S S\n").unwrap();
        let report = g.validate();
        assert_eq!(report.unproductive.len(), 1);
        assert!(!report.is_valid());
    }

    #[test]
    fn nullable_cycle_detected() {
        // E can reach itself without consuming length: E => S E => E => ...
        let g = WeightedGrammar::parse(
            "axiom S\nterminal a weight 1\nS -> T | E\nT -> a\nE -> _eps_ | S E\n",
        )
        .unwrap();
        let report = g.validate();
        assert!(!report.zero_cycles.is_empty());
        assert!(!report.is_valid());
    }

    #[test]
    fn unreachable_is_warning_only() {
        let g = WeightedGrammar::parse("axiom S\nterminal a weight 1\nS -> a\nX -> a\n").unwrap();
        let report = g.validate();
        assert!(report.is_valid());
        assert_eq!(report.unreachable.len(), 1);
    }

    #[test]
    fn unit_cycle_is_a_zero_cycle() {
        let g = WeightedGrammar::parse("axiom S\nS -> T | a\nT -> S | b\n").unwrap();
        let report = g.validate();
        assert!(!report.zero_cycles.is_empty());
    }
}
