//! Brute-force enumeration. Exponential in the word count by nature; every
//! other module's tests lean on it as the independent reference.

use super::{Alt, BcnfGrammar, NtId, Rule, Symbol, WeightedGrammar, Word};
use crate::weights::{split_order, ScaledGrammar, WeightTable};
use num_bigint::BigUint;
use num_traits::One;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

/// All words of length `m` derivable from `nt`, as a set. Works on the
/// general rule form, so it can compare languages across normalization.
/// Requires a valid grammar.
pub fn enumerate_language(g: &WeightedGrammar, nt: NtId, m: usize) -> BTreeSet<Word> {
    let nullable = crate::grammar::nullable_for(g);
    let mut e = SetEnumerator {
        g,
        nullable,
        memo: HashMap::new(),
        in_progress: HashSet::new(),
    };
    e.nonterminal(nt, m).iter().cloned().collect()
}

struct SetEnumerator<'a> {
    g: &'a WeightedGrammar,
    nullable: Vec<bool>,
    memo: HashMap<(NtId, usize), Rc<Vec<Word>>>,
    in_progress: HashSet<(NtId, usize)>,
}

impl SetEnumerator<'_> {
    fn nonterminal(&mut self, nt: NtId, m: usize) -> Rc<Vec<Word>> {
        if let Some(v) = self.memo.get(&(nt, m)) {
            return Rc::clone(v);
        }
        assert!(
            self.in_progress.insert((nt, m)),
            "zero-length derivation cycle; the grammar failed validation"
        );
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for alt_idx in 0..self.g.alternatives(nt).len() {
            let alt = self.g.alternatives(nt)[alt_idx];
            match alt {
                Alt::Epsilon => {
                    if m == 0 {
                        push_unique(&mut out, &mut seen, Word(vec![]));
                    }
                }
                Alt::Single(s) => {
                    for w in self.symbol(s, m).iter() {
                        push_unique(&mut out, &mut seen, w.clone());
                    }
                }
                Alt::Pair(x, y) => {
                    // The endpoint splits recurse at unchanged length; only
                    // take them when the other side can actually be empty.
                    for i in 0..=m {
                        if i == 0 && !self.sym_nullable(x) {
                            continue;
                        }
                        if i == m && !self.sym_nullable(y) {
                            continue;
                        }
                        let ls = self.symbol(x, i);
                        if ls.is_empty() {
                            continue;
                        }
                        let rs = self.symbol(y, m - i);
                        for u in ls.iter() {
                            for v in rs.iter() {
                                let mut letters = u.0.clone();
                                letters.extend_from_slice(&v.0);
                                push_unique(&mut out, &mut seen, Word(letters));
                            }
                        }
                    }
                }
            }
        }
        self.in_progress.remove(&(nt, m));
        let rc = Rc::new(out);
        self.memo.insert((nt, m), Rc::clone(&rc));
        rc
    }

    fn symbol(&mut self, s: Symbol, m: usize) -> Rc<Vec<Word>> {
        match s {
            Symbol::Terminal(t) => {
                if m == 1 {
                    Rc::new(vec![Word(vec![t])])
                } else {
                    Rc::new(vec![])
                }
            }
            Symbol::Nonterminal(nt) => self.nonterminal(nt, m),
        }
    }

    fn sym_nullable(&self, s: Symbol) -> bool {
        match s {
            Symbol::Terminal(_) => false,
            Symbol::Nonterminal(nt) => self.nullable[nt.0 as usize],
        }
    }
}

fn push_unique(out: &mut Vec<Word>, seen: &mut HashSet<Word>, w: Word) {
    if seen.insert(w.clone()) {
        out.push(w);
    }
}

/// All distinct words of length `m` derivable from `nt`, with scaled
/// weights, in generation order: union branches first to second, product
/// splits in investigation order, left part outermost. For an unambiguous
/// grammar this is exactly the rank order.
pub fn enumerate_from(sg: &ScaledGrammar, nt: NtId, m: usize) -> Vec<(Word, BigUint)> {
    let nullable = crate::grammar::nullable_for(sg.grammar().as_weighted());
    let mut e = WeightedEnumerator {
        sg,
        nullable,
        memo: HashMap::new(),
        in_progress: HashSet::new(),
    };
    let raw = e.words(nt, m);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for (w, weight) in raw.iter() {
        if seen.insert(w.clone()) {
            out.push((w.clone(), weight.clone()));
        }
    }
    out
}

/// Distinct words of length `n` from the axiom, in rank order.
pub fn enumerate_words(sg: &ScaledGrammar, n: usize) -> Vec<(Word, BigUint)> {
    enumerate_from(sg, sg.grammar().axiom(), n)
}

type WeightedWords = Rc<Vec<(Word, BigUint)>>;

struct WeightedEnumerator<'a> {
    sg: &'a ScaledGrammar,
    nullable: Vec<bool>,
    memo: HashMap<(NtId, usize), WeightedWords>,
    in_progress: HashSet<(NtId, usize)>,
}

impl WeightedEnumerator<'_> {
    fn words(&mut self, nt: NtId, m: usize) -> WeightedWords {
        if let Some(v) = self.memo.get(&(nt, m)) {
            return Rc::clone(v);
        }
        assert!(
            self.in_progress.insert((nt, m)),
            "zero-length derivation cycle; the grammar failed validation"
        );
        let mut out = Vec::new();
        match self.sg.grammar().rule(nt) {
            Rule::Terminal(t) => {
                if m == 1 {
                    out.push((Word(vec![t]), self.sg.int_weight(t).clone()));
                }
            }
            Rule::Epsilon => {
                if m == 0 {
                    out.push((Word(vec![]), BigUint::one()));
                }
            }
            Rule::Union(a, b) => {
                out.extend(self.words(a, m).iter().cloned());
                out.extend(self.words(b, m).iter().cloned());
            }
            Rule::Product(a, b) => {
                for i in split_order(m) {
                    // Endpoint splits recurse at unchanged length; only
                    // take them when the other side derives the empty word.
                    if i == 0 && !self.nullable[a.0 as usize] {
                        continue;
                    }
                    if i == m && !self.nullable[b.0 as usize] {
                        continue;
                    }
                    let ls = self.words(a, i);
                    if ls.is_empty() {
                        continue;
                    }
                    let rs = self.words(b, m - i);
                    for (u, wu) in ls.iter() {
                        for (v, wv) in rs.iter() {
                            let mut letters = u.0.clone();
                            letters.extend_from_slice(&v.0);
                            out.push((Word(letters), wu * wv));
                        }
                    }
                }
            }
        }
        self.in_progress.remove(&(nt, m));
        let rc = Rc::new(out);
        self.memo.insert((nt, m), Rc::clone(&rc));
        rc
    }
}

/// Result of comparing parse-tree counts with distinct-word counts at each
/// length. Equality does not prove unambiguity; a mismatch disproves it.
#[derive(Clone, Debug)]
pub struct AmbiguityReport {
    pub checked_up_to: usize,
    /// Smallest length at which the counts disagree, if any.
    pub ambiguous_at: Option<usize>,
    /// `(length, parse-tree count, distinct-word count)` per length.
    pub counts: Vec<(usize, BigUint, u64)>,
}

impl AmbiguityReport {
    pub fn ambiguity_detected(&self) -> bool {
        self.ambiguous_at.is_some()
    }
}

/// Compare the unit-weight table (which counts parse trees) against the
/// brute-force distinct-word count for every length up to `n_max`.
pub fn ambiguity_probe(g: &BcnfGrammar, n_max: usize) -> AmbiguityReport {
    let unit = ScaledGrammar::unit(g.clone());
    let wt = WeightTable::build(&unit, n_max);
    let axiom = g.axiom();
    let mut counts = Vec::with_capacity(n_max + 1);
    let mut ambiguous_at = None;
    for m in 0..=n_max {
        let trees = wt.mass(axiom, m).clone();
        let words = enumerate_from(&unit, axiom, m).len() as u64;
        if ambiguous_at.is_none() && trees != BigUint::from(words) {
            ambiguous_at = Some(m);
        }
        counts.push((m, trees, words));
    }
    AmbiguityReport {
        checked_up_to: n_max,
        ambiguous_at,
        counts,
    }
}
