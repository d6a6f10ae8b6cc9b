//! Rewriting a grammar into strict binary form.
//!
//! The transformation runs in five passes over the rule set:
//!
//! 1. Terminal letters (and `_eps_`) occurring inside a pair, or as one of
//!    several alternatives, are replaced by dedicated wrapper nonterminals
//!    (`__t_<t>`, `__eps`). A nonterminal whose sole alternative is a bare
//!    terminal is already a terminal rule and is left alone.
//! 2. A pair alternative of a nonterminal that has other alternatives is
//!    moved to a fresh product nonterminal (`__p_<N>`).
//! 3. A nonterminal with more than two (now atomic) alternatives is split
//!    into a chain of binary unions (`__u_<N>_<i>`).
//! 4. Nonterminals whose sole alternative is a single nonterminal are
//!    removed, with every occurrence replaced by their target.
//! 5. The result is typed into one strict [`Rule`] per nonterminal.
//!
//! Generated names carry the reserved `__` prefix and deterministic
//! numbering, so the output is reproducible byte for byte. Languages and
//! word weights are preserved, and an input already in strict binary form
//! comes back unchanged.

use super::{Alt, BcnfGrammar, NtId, Rule, Symbol, TermId, WeightedGrammar};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("unit-rule cycle through nonterminal `{0}`")]
    UnitCycle(String),
    #[error("nonterminal `{0}` has no rule")]
    EmptyRule(String),
}

struct Builder {
    names: Vec<String>,
    terminal_names: Vec<String>,
    alts: Vec<Vec<Alt>>,
}

impl Builder {
    /// Mint a nonterminal whose name collides with nothing, terminals
    /// included (name spaces stay disjoint).
    fn fresh(&mut self, base: String, alts: Vec<Alt>) -> NtId {
        let mut name = base;
        while self.names.contains(&name) || self.terminal_names.contains(&name) {
            name.push('_');
        }
        let id = NtId(self.names.len() as u32);
        self.names.push(name);
        self.alts.push(alts);
        id
    }
}

/// Rewrite `g` into strict binary form.
pub fn to_bcnf(g: &WeightedGrammar) -> Result<BcnfGrammar, NormalizeError> {
    let mut b = Builder {
        names: (0..g.nonterminal_count() as u32)
            .map(|i| g.nonterminal_name(NtId(i)).to_string())
            .collect(),
        terminal_names: g
            .terminals()
            .map(|t| g.terminal_name(t).to_string())
            .collect(),
        alts: (0..g.nonterminal_count() as u32)
            .map(|i| g.alternatives(NtId(i)).to_vec())
            .collect(),
    };
    let original = b.alts.len();
    let mut axiom = g.axiom();

    // Pass 1: wrap terminals and epsilon occurring in compound positions.
    let mut term_wrapper: Vec<Option<NtId>> = vec![None; g.terminal_count()];
    let mut eps_wrapper: Option<NtId> = None;
    for i in 0..original {
        let multi = b.alts[i].len() > 1;
        for j in 0..b.alts[i].len() {
            let alt = b.alts[i][j];
            let wrapped = match alt {
                Alt::Pair(x, y) => {
                    let wx = wrap_term(&mut b, g, &mut term_wrapper, x);
                    let wy = wrap_term(&mut b, g, &mut term_wrapper, y);
                    Alt::Pair(wx, wy)
                }
                Alt::Single(Symbol::Terminal(t)) if multi => {
                    Alt::Single(wrap_terminal(&mut b, g, &mut term_wrapper, t))
                }
                Alt::Epsilon if multi => {
                    let nt = *eps_wrapper
                        .get_or_insert_with(|| b.fresh("__eps".to_string(), vec![Alt::Epsilon]));
                    Alt::Single(Symbol::Nonterminal(nt))
                }
                other => other,
            };
            b.alts[i][j] = wrapped;
        }
    }

    // Pass 2: move pair alternatives of multi-rule nonterminals into
    // dedicated product nonterminals.
    for i in 0..original {
        if b.alts[i].len() < 2 {
            continue;
        }
        let pairs: Vec<usize> = (0..b.alts[i].len())
            .filter(|&j| matches!(b.alts[i][j], Alt::Pair(..)))
            .collect();
        for (k, &j) in pairs.iter().enumerate() {
            let base = if pairs.len() == 1 {
                format!("__p_{}", b.names[i])
            } else {
                format!("__p_{}_{}", b.names[i], k)
            };
            let pair = b.alts[i][j];
            let nt = b.fresh(base, vec![pair]);
            b.alts[i][j] = Alt::Single(Symbol::Nonterminal(nt));
        }
    }

    // Pass 3: binarize unions with more than two branches into a chain.
    for i in 0..b.alts.len() {
        if b.alts[i].len() <= 2 {
            continue;
        }
        let branches = b.alts[i].clone();
        debug_assert!(branches.iter().all(|a| matches!(a, Alt::Single(_))));
        // N keeps branch 0; __u_N_i carries branch i+1 and the rest.
        let mut tail = *branches.last().unwrap();
        for k in (1..branches.len() - 1).rev() {
            let nt = b.fresh(format!("__u_{}_{}", b.names[i], k), vec![branches[k], tail]);
            tail = Alt::Single(Symbol::Nonterminal(nt));
        }
        b.alts[i] = vec![branches[0], tail];
    }

    // Pass 4: resolve nonterminals whose sole alternative is a unit rule.
    let total = b.alts.len();
    let unit_target: Vec<Option<NtId>> = b
        .alts
        .iter()
        .map(|alts| match alts[..] {
            [Alt::Single(Symbol::Nonterminal(m))] => Some(m),
            _ => None,
        })
        .collect();
    let mut resolved: Vec<Option<NtId>> = vec![None; total];
    for start in 0..total {
        if resolved[start].is_some() {
            continue;
        }
        let mut path = vec![NtId(start as u32)];
        let mut cur = NtId(start as u32);
        loop {
            match unit_target[cur.0 as usize] {
                None => break,
                Some(next) => {
                    if let Some(t) = resolved[next.0 as usize] {
                        cur = t;
                        break;
                    }
                    if path.contains(&next) {
                        return Err(NormalizeError::UnitCycle(b.names[next.0 as usize].clone()));
                    }
                    path.push(next);
                    cur = next;
                }
            }
        }
        for nt in path {
            resolved[nt.0 as usize] = Some(cur);
        }
    }
    let target = |nt: NtId| resolved[nt.0 as usize].unwrap();

    // Drop the unit nonterminals and re-index the survivors.
    let keep: Vec<bool> = (0..total).map(|i| unit_target[i].is_none()).collect();
    let mut new_id: Vec<Option<NtId>> = vec![None; total];
    let mut names = Vec::new();
    let mut kept_alts = Vec::new();
    for i in 0..total {
        if keep[i] {
            new_id[i] = Some(NtId(names.len() as u32));
            names.push(b.names[i].clone());
            kept_alts.push(b.alts[i].clone());
        }
    }
    let map_sym = |s: Symbol| match s {
        Symbol::Terminal(_) => s,
        Symbol::Nonterminal(m) => Symbol::Nonterminal(new_id[target(m).0 as usize].unwrap()),
    };
    for alts in &mut kept_alts {
        for alt in alts.iter_mut() {
            *alt = match *alt {
                Alt::Epsilon => Alt::Epsilon,
                Alt::Single(s) => Alt::Single(map_sym(s)),
                Alt::Pair(x, y) => Alt::Pair(map_sym(x), map_sym(y)),
            };
        }
    }
    axiom = new_id[target(axiom).0 as usize].unwrap();

    // Pass 5: type every rule strictly.
    let mut rules = Vec::with_capacity(kept_alts.len());
    for (i, alts) in kept_alts.iter().enumerate() {
        let rule = match alts[..] {
            [Alt::Pair(Symbol::Nonterminal(x), Symbol::Nonterminal(y))] => Rule::Product(x, y),
            [Alt::Single(Symbol::Terminal(t))] => Rule::Terminal(t),
            [Alt::Epsilon] => Rule::Epsilon,
            [Alt::Single(Symbol::Nonterminal(x)), Alt::Single(Symbol::Nonterminal(y))] => {
                Rule::Union(x, y)
            }
            [] => return Err(NormalizeError::EmptyRule(names[i].clone())),
            _ => unreachable!("normalization left a non-binary rule shape"),
        };
        rules.push(rule);
    }

    let weights = g.weights().to_vec();
    let terminals: Vec<String> = g
        .terminals()
        .map(|t| g.terminal_name(t).to_string())
        .collect();
    let inner = WeightedGrammar::from_parts(terminals, names, kept_alts, axiom, weights);
    Ok(BcnfGrammar::from_parts(inner, rules))
}

fn wrap_term(
    b: &mut Builder,
    g: &WeightedGrammar,
    wrappers: &mut [Option<NtId>],
    s: Symbol,
) -> Symbol {
    match s {
        Symbol::Nonterminal(_) => s,
        Symbol::Terminal(t) => wrap_terminal(b, g, wrappers, t),
    }
}

fn wrap_terminal(
    b: &mut Builder,
    g: &WeightedGrammar,
    wrappers: &mut [Option<NtId>],
    t: TermId,
) -> Symbol {
    let nt = wrappers[t.0 as usize].unwrap_or_else(|| {
        let id = b.fresh(
            format!("__t_{}", g.terminal_name(t)),
            vec![Alt::Single(Symbol::Terminal(t))],
        );
        wrappers[t.0 as usize] = Some(id);
        id
    });
    Symbol::Nonterminal(nt)
}

#[cfg(test)]
mod tests {
    use super::super::WeightedGrammar;
    use super::*;

    fn bcnf(text: &str) -> BcnfGrammar {
        to_bcnf(&WeightedGrammar::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn cnf_with_terminal_branch() {
        // S -> A S | a; A -> a  becomes  S -> __p_S | __t_a with A kept.
        let g = bcnf("axiom S\nterminal a weight 1\nS -> A S | a\nA -> a\n");
        let s = g.as_weighted().nonterminal_id("S").unwrap();
        let (u1, u2) = match g.rule(s) {
            Rule::Union(a, b) => (a, b),
            r => panic!("expected union at S, got {r:?}"),
        };
        assert!(matches!(g.rule(u1), Rule::Product(..)));
        assert!(matches!(g.rule(u2), Rule::Terminal(_)));
        let a = g.as_weighted().nonterminal_id("A").unwrap();
        assert!(matches!(g.rule(a), Rule::Terminal(_)));
        assert!(g.as_weighted().validate().is_valid());
    }

    #[test]
    fn strict_binary_input_is_unchanged() {
        let text = "axiom S\nterminal a weight 1\nterminal b weight 1\n\
                    S -> T | NB\nT -> NA U\nU -> S S\nNA -> a\nNB -> b\n";
        let g = WeightedGrammar::parse(text).unwrap();
        let n = to_bcnf(&g).unwrap();
        assert_eq!(*n.as_weighted(), g);
    }

    #[test]
    fn four_branch_union_becomes_chain() {
        let g = bcnf("axiom S\nS -> X1 | X2 | X3 | X4\nX1 -> a\nX2 -> b\nX3 -> c\nX4 -> d\n");
        // Two chain nonterminals: S -> X1 | __u, __u -> X2 | __u', __u' -> X3 | X4.
        let w = g.as_weighted();
        assert_eq!(w.nonterminal_count(), 7);
        let s = w.nonterminal_id("S").unwrap();
        let mut unions = 0;
        let mut cur = s;
        while let Rule::Union(_, next) = g.rule(cur) {
            unions += 1;
            cur = next;
        }
        assert_eq!(unions, 3);
    }

    #[test]
    fn unit_rules_are_resolved() {
        let g = bcnf("axiom S\nS -> T\nT -> U\nU -> a\n");
        let w = g.as_weighted();
        assert_eq!(w.nonterminal_count(), 1);
        assert!(matches!(g.rule(w.axiom()), Rule::Terminal(_)));
        assert_eq!(w.nonterminal_name(w.axiom()), "U");
    }

    #[test]
    fn unit_cycle_is_an_error() {
        let g = WeightedGrammar::parse("axiom S\nS -> T\nT -> S\n").unwrap();
        assert!(matches!(to_bcnf(&g), Err(NormalizeError::UnitCycle(_))));
    }

    #[test]
    fn generated_names_dodge_reserved_collisions() {
        // A user-declared `__t_a` terminal must not capture the wrapper.
        let g =
            bcnf("axiom S\nterminal a weight 1\nterminal __t_a weight 2\nS -> S S | a | __t_a\n");
        let w = g.as_weighted();
        assert!(w.terminal_id("__t_a").is_some());
        let wrapper = w
            .nonterminal_id("__t_a_")
            .expect("wrapper renamed away from terminal");
        assert!(matches!(g.rule(wrapper), Rule::Terminal(t) if w.terminal_name(t) == "a"));
        let again = WeightedGrammar::parse(&w.serialize()).unwrap();
        assert_eq!(*w, again);
    }

    #[test]
    fn epsilon_branch_gets_wrapper() {
        let g = bcnf("axiom S\nterminal a weight 1\nS -> A S | _eps_\nA -> a\n");
        let w = g.as_weighted();
        let eps = w.nonterminal_id("__eps").unwrap();
        assert!(matches!(g.rule(eps), Rule::Epsilon));
        assert!(matches!(g.rule(w.axiom()), Rule::Union(..)));
    }
}
