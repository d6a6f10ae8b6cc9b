//! Exact integer scaling of terminal weights and the length-indexed table
//! of language masses that drives counting, sampling, and rank/unrank.
//!
//! Rational weights are scaled by `D`, the least common denominator, so
//! every mass is a plain big integer. All words of one length pick up the
//! same factor `D^n`, which leaves every probability at that length
//! unchanged.

use crate::grammar::{BcnfGrammar, NtId, Rule, TermId, WeightedGrammar, Word};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use thiserror::Error;

/// A grammar whose weights have been scaled to exact positive integers.
#[derive(Clone, Debug)]
pub struct ScaledGrammar {
    grammar: BcnfGrammar,
    /// The common scaling factor `D`.
    scale: BigUint,
    /// `int_weights[t] = D * weight(t)`, exactly.
    int_weights: Vec<BigUint>,
}

impl ScaledGrammar {
    /// Scale all terminal weights by their least common denominator.
    pub fn new(grammar: BcnfGrammar) -> ScaledGrammar {
        let mut d = BigInt::one();
        for w in grammar.as_weighted().weights() {
            d = d.lcm(w.denom());
        }
        let scale = BigRational::from_integer(d.clone());
        let int_weights = grammar
            .as_weighted()
            .weights()
            .iter()
            .map(|w| {
                let scaled = w * &scale;
                debug_assert!(scaled.is_integer() && scaled.is_positive());
                scaled.to_integer().to_biguint().expect("positive weight")
            })
            .collect();
        ScaledGrammar {
            grammar,
            scale: d.to_biguint().expect("positive lcm"),
            int_weights,
        }
    }

    /// Force every terminal weight to 1; the table then counts parse trees.
    pub fn unit(grammar: BcnfGrammar) -> ScaledGrammar {
        let int_weights = vec![BigUint::one(); grammar.as_weighted().terminal_count()];
        ScaledGrammar {
            grammar,
            scale: BigUint::one(),
            int_weights,
        }
    }

    pub fn grammar(&self) -> &BcnfGrammar {
        &self.grammar
    }

    pub fn scale(&self) -> &BigUint {
        &self.scale
    }

    pub fn int_weight(&self, t: TermId) -> &BigUint {
        &self.int_weights[t.0 as usize]
    }

    /// Scaled weight of a mature word: the product of its letters' scaled
    /// weights (the empty product is 1).
    pub fn word_weight(&self, w: &Word) -> BigUint {
        let mut acc = BigUint::one();
        for &t in w.letters() {
            acc *= &self.int_weights[t.0 as usize];
        }
        acc
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightError {
    #[error("the language at length {0} is empty")]
    EmptyLength(usize),
}

/// Masses of all nonterminal languages at every length up to `n_max`.
///
/// For a nonterminal `N` and a length `m`, `mass(N, m)` is the sum of the
/// scaled weights of all words of length `m` derivable from `N`. Zero
/// masses are stored explicitly; the samplers treat them as absent
/// branches. Immutable after build and freely shared across sessions.
#[derive(Clone, Debug)]
pub struct WeightTable {
    n_max: usize,
    /// `masses[nt][m]`, for `m` in `0..=n_max`.
    masses: Vec<Vec<BigUint>>,
}

impl WeightTable {
    /// Fill the table by bottom-up convolution.
    ///
    /// Requires a valid grammar (no zero-length derivation cycles): within
    /// one length, rules are evaluated in topological order of the
    /// zero-consumption graph, so union sums and the epsilon-side terms of
    /// product convolutions only read masses already computed.
    pub fn build(sg: &ScaledGrammar, n: usize) -> WeightTable {
        let g = sg.grammar();
        let nullable = crate::grammar::nullable_for(g.as_weighted());
        let order = zero_consumption_order(g.as_weighted());
        let count = g.nonterminal_count();
        let mut masses: Vec<Vec<BigUint>> = vec![Vec::with_capacity(n + 1); count];
        for m in 0..=n {
            for &nt in &order {
                let value = match g.rule(nt) {
                    Rule::Terminal(t) => {
                        if m == 1 {
                            sg.int_weight(t).clone()
                        } else {
                            BigUint::zero()
                        }
                    }
                    Rule::Epsilon => {
                        if m == 0 {
                            BigUint::one()
                        } else {
                            BigUint::zero()
                        }
                    }
                    Rule::Union(a, b) => &masses[a.0 as usize][m] + &masses[b.0 as usize][m],
                    Rule::Product(a, b) => {
                        // Interior terms read strictly shorter lengths from
                        // earlier rounds. The epsilon-side terms i=0 and i=m
                        // read a same-length row; the nullable guard is what
                        // guarantees (via the topological order) that the
                        // row is already filled.
                        let can_a = nullable[a.0 as usize];
                        let can_b = nullable[b.0 as usize];
                        let left = &masses[a.0 as usize];
                        let right = &masses[b.0 as usize];
                        let mut acc = BigUint::zero();
                        if m == 0 {
                            if can_a && can_b {
                                acc += &left[0] * &right[0];
                            }
                        } else {
                            for i in 1..m {
                                let l = &left[i];
                                if l.is_zero() {
                                    continue;
                                }
                                let r = &right[m - i];
                                if r.is_zero() {
                                    continue;
                                }
                                acc += l * r;
                            }
                            if can_a {
                                acc += &left[0] * &right[m];
                            }
                            if can_b {
                                acc += &left[m] * &right[0];
                            }
                        }
                        acc
                    }
                };
                let slot = &mut masses[nt.0 as usize];
                debug_assert_eq!(slot.len(), m);
                slot.push(value);
            }
        }
        WeightTable { n_max: n, masses }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mass(&self, nt: NtId, m: usize) -> &BigUint {
        &self.masses[nt.0 as usize][m]
    }

    /// Product split points at length `m` in investigation order, keeping
    /// only splits where both sides carry mass. Yields
    /// `(i, mass(left, i), mass(right, m - i))`.
    pub fn splits<'a>(
        &'a self,
        left: NtId,
        right: NtId,
        m: usize,
    ) -> impl Iterator<Item = (usize, &'a BigUint, &'a BigUint)> + 'a {
        split_order(m).filter_map(move |i| {
            let l = self.mass(left, i);
            if l.is_zero() {
                return None;
            }
            let r = self.mass(right, m - i);
            if r.is_zero() {
                return None;
            }
            Some((i, l, r))
        })
    }
}

/// The split investigation order for a product at length `m`: the
/// boustrophedon interleave `1, m-1, 2, m-2, ...` over the interior, then
/// the epsilon splits `0` and `m`. Every module that cares about the order
/// of words (enumeration, rank, unrank, the samplers) iterates splits in
/// exactly this sequence, so they all share one total order.
pub fn split_order(m: usize) -> SplitOrder {
    SplitOrder {
        lo: 1,
        hi: m.saturating_sub(1),
        from_low: true,
        endpoint: 0,
        m,
    }
}

pub struct SplitOrder {
    lo: usize,
    hi: usize,
    from_low: bool,
    endpoint: u8,
    m: usize,
}

impl Iterator for SplitOrder {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.lo <= self.hi && self.hi >= 1 {
            let next = if self.from_low {
                let v = self.lo;
                self.lo += 1;
                v
            } else {
                let v = self.hi;
                self.hi -= 1;
                v
            };
            self.from_low = !self.from_low;
            return Some(next);
        }
        match self.endpoint {
            0 => {
                self.endpoint = 1;
                Some(0)
            }
            1 if self.m > 0 => {
                self.endpoint = 2;
                Some(self.m)
            }
            _ => None,
        }
    }
}

/// Topological order of the zero-consumption graph (edges point from a
/// nonterminal to the symbols it can reach without consuming length).
/// Panics if the grammar has a zero-length derivation cycle; validate
/// first.
pub(crate) fn zero_consumption_order(g: &WeightedGrammar) -> Vec<NtId> {
    let nullable = crate::grammar::nullable_for(g);
    let edges = crate::grammar::zero_edges_for(g, &nullable);
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..g.nonterminal_count())
        .map(|_| graph.add_node(()))
        .collect();
    for (a, b) in &edges {
        graph.add_edge(nodes[a.0 as usize], nodes[b.0 as usize], ());
    }
    let sorted = toposort(&graph, None)
        .expect("zero-length derivation cycle; the grammar failed validation");
    // Dependencies (edge targets) must be evaluated first.
    sorted
        .into_iter()
        .rev()
        .map(|ix| NtId(ix.index() as u32))
        .collect()
}

/// Exact probability of `w` in the weighted distribution at its length.
/// Membership of `w` in the language is the caller's responsibility.
pub fn word_probability(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    w: &Word,
) -> Result<BigRational, WeightError> {
    let n = w.len();
    let total = wt.mass(sg.grammar().axiom(), n);
    if total.is_zero() {
        return Err(WeightError::EmptyLength(n));
    }
    let weight = sg.word_weight(w);
    Ok(BigRational::new(
        BigInt::from(weight),
        BigInt::from(total.clone()),
    ))
}
