//! The step-by-step sampler: immature words, the weighted trie of
//! forbidden parse walks, and the recursive-method engine built on both.
//!
//! A draw walks the derivation of one word left to right. At every choice
//! point the candidate masses are corrected by the total weight of
//! forbidden words still reachable through that candidate, fetched from
//! the trie node that mirrors the current immature word. Conservation is
//! exact: the corrected candidate masses always sum to the admissible mass
//! of the current state.

use crate::grammar::{NtId, Rule, Symbol, TermId, Word};
use crate::rng::uniform_below;
use crate::weights::{ScaledGrammar, WeightTable};
use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;
use std::collections::BTreeMap;
use thiserror::Error;

/// A word over both alphabets with a prescribed length attached to every
/// item; the intermediate state of a generation walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImmatureWord {
    pub items: Vec<(Symbol, usize)>,
}

impl ImmatureWord {
    /// The starting state: the axiom constrained to length `n`.
    pub fn axiom(sg: &ScaledGrammar, n: usize) -> ImmatureWord {
        ImmatureWord {
            items: vec![(Symbol::Nonterminal(sg.grammar().axiom()), n)],
        }
    }

    /// The derivation policy: index of the leftmost nonterminal item, or
    /// `None` when the word is mature.
    pub fn apply_policy(&self) -> Option<usize> {
        self.items
            .iter()
            .position(|(s, _)| matches!(s, Symbol::Nonterminal(_)))
    }

    pub fn is_mature(&self) -> bool {
        self.apply_policy().is_none()
    }
}

/// Canonical encoding of one atomic derivation at the policy position.
/// Union rules branch two ways, products branch per split point, and
/// terminal or epsilon rules have a single outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeltaKey {
    UnionFirst,
    UnionSecond,
    Split(u32),
    Emit,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("walk already present in the forbidden trie")]
pub struct DuplicateWalk;

/// Node handle inside a [`ForbiddenTrie`].
pub type TrieNodeId = u32;

#[derive(Clone, Debug)]
struct TrieNode {
    /// Total weight of forbidden words whose walks pass through this node.
    fmass: BigUint,
    children: BTreeMap<DeltaKey, TrieNodeId>,
}

/// Prefix tree over parse walks. Nodes are keyed by derivation deltas, not
/// by whole immature words, and each node carries the forbidden mass of
/// the immature word it stands for. Ordered children give logarithmic
/// lookup in a node's degree.
#[derive(Clone, Debug)]
pub struct ForbiddenTrie {
    nodes: Vec<TrieNode>,
}

impl Default for ForbiddenTrie {
    fn default() -> Self {
        ForbiddenTrie::new()
    }
}

impl ForbiddenTrie {
    pub fn new() -> ForbiddenTrie {
        ForbiddenTrie {
            nodes: vec![TrieNode {
                fmass: BigUint::zero(),
                children: BTreeMap::new(),
            }],
        }
    }

    pub const ROOT: TrieNodeId = 0;

    /// Node count, root included.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Forbidden mass of the whole language slice (the root's mass).
    pub fn root_mass(&self) -> &BigUint {
        &self.nodes[Self::ROOT as usize].fmass
    }

    pub fn child(&self, node: TrieNodeId, key: DeltaKey) -> Option<TrieNodeId> {
        self.nodes[node as usize].children.get(&key).copied()
    }

    /// Forbidden mass of the child reached by `key`; zero when absent
    /// (no forbidden word extends that derivation).
    pub fn child_mass(&self, node: Option<TrieNodeId>, key: DeltaKey) -> BigUint {
        match node.and_then(|n| self.child(n, key)) {
            Some(c) => self.nodes[c as usize].fmass.clone(),
            None => BigUint::zero(),
        }
    }

    pub fn node_mass(&self, node: Option<TrieNodeId>) -> BigUint {
        match node {
            Some(n) => self.nodes[n as usize].fmass.clone(),
            None => BigUint::zero(),
        }
    }

    /// Insert a complete walk and propagate its weight to every node on
    /// the path, root included. Top-down the missing suffix is created;
    /// bottom-up the weight is added. `weight` must be the scaled weight
    /// of the walk's word, or the sampler's mass corrections go wrong.
    pub fn insert_walk(
        &mut self,
        walk: &[DeltaKey],
        weight: &BigUint,
    ) -> Result<(), DuplicateWalk> {
        // Phase 1: follow existing nodes. Walks are never proper prefixes
        // of one another, so consuming the whole walk means a duplicate.
        let mut path = Vec::with_capacity(walk.len() + 1);
        path.push(Self::ROOT);
        let mut cur = Self::ROOT;
        let mut consumed = 0;
        for &key in walk {
            match self.child(cur, key) {
                Some(c) => {
                    cur = c;
                    consumed += 1;
                    path.push(c);
                }
                None => break,
            }
        }
        if consumed == walk.len() {
            return Err(DuplicateWalk);
        }
        // Phase 2: create the new suffix.
        for &key in &walk[consumed..] {
            let id = self.nodes.len() as TrieNodeId;
            self.nodes.push(TrieNode {
                fmass: BigUint::zero(),
                children: BTreeMap::new(),
            });
            self.nodes[cur as usize].children.insert(key, id);
            cur = id;
            path.push(id);
        }
        // Phase 3: propagate the weight back to the root.
        for id in path {
            self.nodes[id as usize].fmass += weight;
        }
        Ok(())
    }

    /// Every node with its path from the root, in depth-first order.
    pub fn paths(&self) -> Vec<(Vec<DeltaKey>, BigUint)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(Self::ROOT, Vec::new())];
        while let Some((id, path)) = stack.pop() {
            let node = &self.nodes[id as usize];
            for (&key, &child) in node.children.iter() {
                let mut p = path.clone();
                p.push(key);
                stack.push((child, p));
            }
            out.push((path, node.fmass.clone()));
        }
        out
    }

    /// The children-sum invariant: at every node with children, the mass
    /// equals the sum of the children's masses.
    pub fn check_children_sums(&self) -> Result<(), String> {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.children.is_empty() {
                continue;
            }
            let sum: BigUint = node
                .children
                .values()
                .map(|&c| &self.nodes[c as usize].fmass)
                .sum();
            if sum != node.fmass {
                return Err(format!(
                    "node {i}: mass {} != children sum {sum}",
                    node.fmass
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DrawError {
    #[error("the admissible language at this length is exhausted")]
    Exhausted,
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

/// One completed draw: the word, its walk, and its scaled weight.
#[derive(Clone, Debug)]
pub struct DrawOutcome {
    pub word: Word,
    pub walk: Vec<DeltaKey>,
    pub weight: BigUint,
}

/// One candidate derivation at a choice point: the delta, the mass of the
/// successor state, the forbidden-corrected mass, and the items the step
/// pushes (left item last, so it is processed first).
struct Candidate {
    key: DeltaKey,
    mu_child: BigUint,
    adjusted: BigUint,
    push: [Option<(NtId, usize)>; 2],
}

/// Candidates of a union or product choice point, lazily and in
/// investigation order. Laziness matters: the caller stops at the chosen
/// branch, which is what keeps product steps within the boustrophedon
/// cost bound instead of paying for every split up front.
fn candidates<'a>(
    sg: &'a ScaledGrammar,
    wt: &'a WeightTable,
    trie: &'a ForbiddenTrie,
    cursor: Option<TrieNodeId>,
    nt: NtId,
    m: usize,
    rest: &'a BigUint,
) -> impl Iterator<Item = Candidate> + 'a {
    use itertools::Either;
    match sg.grammar().rule(nt) {
        Rule::Union(a, b) => Either::Left(
            [(DeltaKey::UnionFirst, a), (DeltaKey::UnionSecond, b)]
                .into_iter()
                .filter_map(move |(key, child)| {
                    let mass = wt.mass(child, m);
                    if mass.is_zero() {
                        return None;
                    }
                    let mu_child = rest * mass;
                    let adjusted = &mu_child - trie.child_mass(cursor, key);
                    Some(Candidate {
                        key,
                        mu_child,
                        adjusted,
                        push: [Some((child, m)), None],
                    })
                }),
        ),
        Rule::Product(a, b) => Either::Right(wt.splits(a, b, m).map(move |(i, la, rb)| {
            let key = DeltaKey::Split(i as u32);
            let mu_child = rest * la * rb;
            let adjusted = &mu_child - trie.child_mass(cursor, key);
            Candidate {
                key,
                mu_child,
                adjusted,
                push: [Some((b, m - i)), Some((a, i))],
            }
        })),
        Rule::Terminal(_) | Rule::Epsilon => unreachable!("no choice at a deterministic step"),
    }
}

/// Draw one word of length `n` from the weighted distribution on the
/// language minus the trie's forbidden set, without mutating the trie.
pub fn draw_avoiding<R: RngCore>(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    n: usize,
    trie: &ForbiddenTrie,
    rng: &mut R,
) -> Result<DrawOutcome, DrawError> {
    let axiom = sg.grammar().axiom();
    let total = wt.mass(axiom, n);
    if *total <= *trie.root_mass() {
        return Err(DrawError::Exhausted);
    }

    let mut mu = total.clone();
    let mut cursor = Some(ForbiddenTrie::ROOT);
    let mut walk: Vec<DeltaKey> = Vec::with_capacity(3 * n + 4);
    let mut letters: Vec<TermId> = Vec::with_capacity(n);
    let mut stack: Vec<(NtId, usize)> = vec![(axiom, n)];
    // Walks are linear in n for cycle-free grammars; anything past this
    // bound means a corrupted table or trie.
    let step_limit = (2 * n + 4) * (sg.grammar().nonterminal_count() + 2) + 8;
    let mut steps = 0usize;

    while let Some((nt, m)) = stack.pop() {
        steps += 1;
        if steps > step_limit {
            return Err(DrawError::Internal(
                "derivation walk exceeds the length bound".into(),
            ));
        }
        let mut advance = |key: DeltaKey, cursor: &mut Option<TrieNodeId>| {
            walk.push(key);
            *cursor = cursor.and_then(|c| trie.child(c, key));
        };
        match sg.grammar().rule(nt) {
            Rule::Terminal(t) => {
                debug_assert_eq!(m, 1);
                letters.push(t);
                advance(DeltaKey::Emit, &mut cursor);
            }
            Rule::Epsilon => {
                debug_assert_eq!(m, 0);
                advance(DeltaKey::Emit, &mut cursor);
            }
            _ => {
                let pn = wt.mass(nt, m);
                debug_assert!(
                    (&mu % pn).is_zero(),
                    "threaded mass must factor through the item"
                );
                let rest = &mu / pn;
                let avail = &mu - trie.node_mass(cursor);
                debug_assert!(!avail.is_zero());
                #[cfg(debug_assertions)]
                {
                    // No probability leaks: corrected candidate masses sum
                    // to the admissible mass of the current state.
                    let sum: BigUint = candidates(sg, wt, trie, cursor, nt, m, &rest)
                        .map(|c| c.adjusted)
                        .sum();
                    debug_assert_eq!(sum, avail, "conservation at a choice point");
                }
                let mut iter = candidates(sg, wt, trie, cursor, nt, m, &rest);
                let Some(first) = iter.next() else {
                    return Err(DrawError::Internal("choice point with no candidate".into()));
                };
                let cand = match iter.next() {
                    // A forced step needs no randomness; by conservation
                    // its corrected mass is the whole admissible mass.
                    None => {
                        debug_assert_eq!(first.adjusted, avail);
                        first
                    }
                    Some(second) => {
                        let mut r = uniform_below(rng, &avail);
                        let mut chosen = None;
                        for cand in [first, second].into_iter().chain(iter) {
                            if r < cand.adjusted {
                                chosen = Some(cand);
                                break;
                            }
                            r -= &cand.adjusted;
                        }
                        match chosen {
                            Some(cand) => cand,
                            None => {
                                return Err(DrawError::Internal(
                                    "corrected masses fail to cover the drawn rank".into(),
                                ))
                            }
                        }
                    }
                };
                mu = cand.mu_child;
                for item in cand.push.into_iter().flatten() {
                    stack.push(item);
                }
                advance(cand.key, &mut cursor);
            }
        }
    }

    // After a full derivation the threaded mass has collapsed to the
    // word's own weight.
    debug_assert_eq!(mu, sg.word_weight(&Word(letters.clone())));
    Ok(DrawOutcome {
        word: Word(letters),
        walk,
        weight: mu,
    })
}

/// Materialize the sequence of immature words a delta walk passes
/// through, starting from the axiom at length `n`. Each step rewrites the
/// leftmost nonterminal item; epsilon expansions drop their item. The
/// final entry is mature exactly when the walk is complete.
pub fn replay_walk(sg: &ScaledGrammar, n: usize, walk: &[DeltaKey]) -> Vec<ImmatureWord> {
    let g = sg.grammar();
    let mut states = Vec::with_capacity(walk.len() + 1);
    let mut cur = ImmatureWord::axiom(sg, n);
    states.push(cur.clone());
    for &key in walk {
        let pos = cur
            .apply_policy()
            .expect("walk continues past a mature word");
        let (sym, m) = cur.items[pos];
        let nt = match sym {
            Symbol::Nonterminal(nt) => nt,
            Symbol::Terminal(_) => unreachable!("policy points at nonterminals only"),
        };
        let replacement: Vec<(Symbol, usize)> = match (g.rule(nt), key) {
            (Rule::Terminal(t), DeltaKey::Emit) => vec![(Symbol::Terminal(t), 1)],
            (Rule::Epsilon, DeltaKey::Emit) => vec![],
            (Rule::Union(a, _), DeltaKey::UnionFirst) => vec![(Symbol::Nonterminal(a), m)],
            (Rule::Union(_, b), DeltaKey::UnionSecond) => vec![(Symbol::Nonterminal(b), m)],
            (Rule::Product(a, b), DeltaKey::Split(i)) => {
                let i = i as usize;
                vec![(Symbol::Nonterminal(a), i), (Symbol::Nonterminal(b), m - i)]
            }
            (rule, key) => panic!("delta {key:?} does not apply to {rule:?}"),
        };
        cur.items.splice(pos..=pos, replacement);
        states.push(cur.clone());
    }
    states
}

/// The parse walk of a mature word under the leftmost-first policy, as the
/// delta sequence the sampler would record, plus the word's scaled weight.
/// This is a parse: each choice point is resolved by testing which branch
/// or split accepts the covered segment.
pub fn walk_of_word(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    w: &Word,
) -> Result<(Vec<DeltaKey>, BigUint), crate::unranking::RankError> {
    use crate::unranking::{contains, RankError};
    let letters = w.letters();
    let axiom = sg.grammar().axiom();
    if !contains(sg, wt, axiom, letters.len(), letters) {
        return Err(RankError::NotInLanguage);
    }
    let mut walk = Vec::with_capacity(3 * letters.len() + 4);
    let mut stack = vec![(axiom, letters.len())];
    let mut pos = 0usize;
    while let Some((nt, m)) = stack.pop() {
        // When an item reaches the top of the stack everything left of it
        // is already emitted, so it covers letters[pos..pos + m].
        let segment = &letters[pos..pos + m];
        match sg.grammar().rule(nt) {
            Rule::Terminal(t) => {
                debug_assert_eq!(segment, [t]);
                pos += 1;
                walk.push(DeltaKey::Emit);
            }
            Rule::Epsilon => walk.push(DeltaKey::Emit),
            Rule::Union(a, b) => {
                if contains(sg, wt, a, m, segment) {
                    stack.push((a, m));
                    walk.push(DeltaKey::UnionFirst);
                } else {
                    debug_assert!(contains(sg, wt, b, m, segment));
                    stack.push((b, m));
                    walk.push(DeltaKey::UnionSecond);
                }
            }
            Rule::Product(a, b) => {
                let split = wt
                    .splits(a, b, m)
                    .map(|(i, ..)| i)
                    .find(|&i| {
                        contains(sg, wt, a, i, &segment[..i])
                            && contains(sg, wt, b, m - i, &segment[i..])
                    })
                    .expect("a member word always has a parsing split");
                stack.push((b, m - split));
                stack.push((a, split));
                walk.push(DeltaKey::Split(split as u32));
            }
        }
    }
    Ok((walk, sg.word_weight(w)))
}

/// A sampling session over the step-by-step engine: each draw excludes all
/// previously drawn words by consulting the trie, then adds its own walk.
/// Single-owner mutable state; the grammar and table are shared immutably.
pub struct RecursiveSession<'a, R: RngCore> {
    sg: &'a ScaledGrammar,
    wt: &'a WeightTable,
    n: usize,
    trie: ForbiddenTrie,
    rng: R,
}

impl<'a, R: RngCore> RecursiveSession<'a, R> {
    pub fn new(sg: &'a ScaledGrammar, wt: &'a WeightTable, n: usize, rng: R) -> Self {
        assert!(n <= wt.n_max(), "table not built up to length {n}");
        RecursiveSession {
            sg,
            wt,
            n,
            trie: ForbiddenTrie::new(),
            rng,
        }
    }

    pub fn trie(&self) -> &ForbiddenTrie {
        &self.trie
    }

    pub fn forbidden_mass(&self) -> &BigUint {
        self.trie.root_mass()
    }

    /// Draw the next distinct word.
    pub fn sample(&mut self) -> Result<Word, DrawError> {
        let outcome = draw_avoiding(self.sg, self.wt, self.n, &self.trie, &mut self.rng)?;
        self.trie
            .insert_walk(&outcome.walk, &outcome.weight)
            .map_err(|_| DrawError::Internal("freshly drawn walk was already present".into()))?;
        Ok(outcome.word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{enumerate_words, to_bcnf, WeightedGrammar};
    use crate::rng::session_rng;
    use num_rational::BigRational;
    use num_traits::One;
    use std::collections::{HashMap, HashSet};

    fn scaled(text: &str) -> ScaledGrammar {
        let g = WeightedGrammar::parse(text).unwrap();
        assert!(g.validate().is_valid());
        ScaledGrammar::new(to_bcnf(&g).unwrap())
    }

    const G_BT: &str =
        "axiom S\nterminal a weight 1\nterminal b weight 1\nS -> T | b\nT -> a U\nU -> S S\n";
    const G_AB: &str = "axiom S\nterminal a weight 1\nterminal b weight 2\n\
        S -> SP | T\nSP -> A S\nT -> TP | E\nTP -> B T\nA -> a\nB -> b\nE -> _eps_\n";
    /// Two independent one-letter factors; the smallest grammar where a
    /// forbidden word skews the first-letter choice.
    const G_PAIR: &str = "axiom N\nterminal a weight 1\nterminal b weight 1\n\
        N -> L R\nL -> a | b\nR -> a | b\n";

    fn walk_of(sg: &ScaledGrammar, wt: &WeightTable, w: &str) -> (Vec<DeltaKey>, BigUint) {
        let word = sg.grammar().as_weighted().parse_word(w).unwrap();
        let trie = ForbiddenTrie::new();
        // Deterministic replay: with every word forbidden except `word`,
        // a draw must yield `word` itself.
        let mut t = trie;
        for (other, weight) in enumerate_words(sg, word.len()) {
            if other != word {
                let (walk, _) = walk_by_exhaustion(sg, wt, &other);
                t.insert_walk(&walk, &weight).unwrap();
            }
        }
        let mut rng = session_rng(0);
        let outcome = draw_avoiding(sg, wt, word.len(), &t, &mut rng).unwrap();
        assert_eq!(outcome.word, word);
        (outcome.walk, outcome.weight)
    }

    /// Walk of a word found by exhaustive unforbidden draws (test helper;
    /// small languages only).
    fn walk_by_exhaustion(
        sg: &ScaledGrammar,
        wt: &WeightTable,
        w: &Word,
    ) -> (Vec<DeltaKey>, BigUint) {
        let trie = ForbiddenTrie::new();
        let mut rng = session_rng(1);
        for _ in 0..10_000 {
            let outcome = draw_avoiding(sg, wt, w.len(), &trie, &mut rng).unwrap();
            if outcome.word == *w {
                return (outcome.walk, outcome.weight);
            }
        }
        panic!("word never drawn");
    }

    /// Exact output distribution of the engine on a small instance, by
    /// exploring every branch with its exact probability.
    fn engine_distribution(
        sg: &ScaledGrammar,
        wt: &WeightTable,
        n: usize,
        trie: &ForbiddenTrie,
    ) -> HashMap<Word, BigRational> {
        #[allow(clippy::too_many_arguments)]
        fn explore(
            sg: &ScaledGrammar,
            wt: &WeightTable,
            trie: &ForbiddenTrie,
            stack: &mut Vec<(NtId, usize)>,
            letters: &mut Vec<TermId>,
            cursor: Option<TrieNodeId>,
            mu: BigUint,
            prob: BigRational,
            out: &mut HashMap<Word, BigRational>,
        ) {
            let Some((nt, m)) = stack.pop() else {
                *out.entry(Word(letters.clone()))
                    .or_insert_with(|| BigRational::from_integer(0.into())) += prob;
                return;
            };
            match sg.grammar().rule(nt) {
                Rule::Terminal(t) => {
                    letters.push(t);
                    let cursor = cursor.and_then(|c| trie.child(c, DeltaKey::Emit));
                    explore(sg, wt, trie, stack, letters, cursor, mu, prob, out);
                    letters.pop();
                }
                Rule::Epsilon => {
                    let cursor = cursor.and_then(|c| trie.child(c, DeltaKey::Emit));
                    explore(sg, wt, trie, stack, letters, cursor, mu, prob, out);
                }
                _ => {
                    let pn = wt.mass(nt, m);
                    let rest = &mu / pn;
                    let avail = &mu - trie.node_mass(cursor);
                    for cand in candidates(sg, wt, trie, cursor, nt, m, &rest) {
                        if cand.adjusted.is_zero() {
                            continue;
                        }
                        let p = prob.clone()
                            * BigRational::new(cand.adjusted.clone().into(), avail.clone().into());
                        let child = cursor.and_then(|c| trie.child(c, cand.key));
                        let before = stack.len();
                        for item in cand.push.into_iter().flatten() {
                            stack.push(item);
                        }
                        explore(sg, wt, trie, stack, letters, child, cand.mu_child, p, out);
                        stack.truncate(before);
                    }
                }
            }
            stack.push((nt, m));
        }

        let mut out = HashMap::new();
        let mut stack = vec![(sg.grammar().axiom(), n)];
        let mut letters = Vec::new();
        let total = wt.mass(sg.grammar().axiom(), n).clone();
        explore(
            sg,
            wt,
            trie,
            &mut stack,
            &mut letters,
            Some(ForbiddenTrie::ROOT),
            total,
            BigRational::one(),
            &mut out,
        );
        out
    }

    #[test]
    fn policy_points_at_leftmost_nonterminal() {
        let sg = scaled(G_BT);
        let g = sg.grammar();
        let s = g.axiom();
        let a = g.as_weighted().terminal_id("a").unwrap();
        let w = ImmatureWord {
            items: vec![
                (Symbol::Terminal(a), 1),
                (Symbol::Nonterminal(s), 1),
                (Symbol::Nonterminal(s), 3),
            ],
        };
        assert_eq!(w.apply_policy(), Some(1));
        let mature = ImmatureWord {
            items: vec![(Symbol::Terminal(a), 1)],
        };
        assert_eq!(mature.apply_policy(), None);
        assert!(mature.is_mature());
        let start = ImmatureWord::axiom(&sg, 5);
        assert_eq!(start.apply_policy(), Some(0));
    }

    #[test]
    fn trie_masses_match_walk_prefixes() {
        let sg = scaled(G_BT);
        let wt = WeightTable::build(&sg, 5);
        let (walk_ababb, w1) = walk_of(&sg, &wt, "ababb");
        let (walk_aabbb, w2) = walk_of(&sg, &wt, "aabbb");

        let mut trie = ForbiddenTrie::new();
        trie.insert_walk(&walk_ababb, &w1).unwrap();
        assert_eq!(*trie.root_mass(), BigUint::one());

        // The immature word `a S1 S3` sits four derivations deep; its
        // sibling split `a S3 S1` carries no forbidden mass.
        let prefix = &walk_ababb[..4];
        let mut cur = Some(ForbiddenTrie::ROOT);
        for &key in &prefix[..3] {
            cur = cur.and_then(|c| trie.child(c, key));
        }
        assert_eq!(trie.child_mass(cur, prefix[3]), BigUint::one());
        assert_eq!(trie.child_mass(cur, DeltaKey::Split(3)), BigUint::zero());
        assert_eq!(trie.child_mass(None, DeltaKey::Emit), BigUint::zero());

        trie.insert_walk(&walk_aabbb, &w2).unwrap();
        assert_eq!(*trie.root_mass(), BigUint::from(2u32));
        assert_eq!(trie.child_mass(cur, DeltaKey::Split(3)), BigUint::one());
        trie.check_children_sums().unwrap();

        assert_eq!(trie.insert_walk(&walk_ababb, &w1), Err(DuplicateWalk));
    }

    #[test]
    fn forced_word_when_all_others_forbidden() {
        let sg = scaled(G_BT);
        let wt = WeightTable::build(&sg, 5);
        let g = sg.grammar().as_weighted();
        let (walk, weight) = walk_of(&sg, &wt, "ababb");
        let mut trie = ForbiddenTrie::new();
        trie.insert_walk(&walk, &weight).unwrap();
        for seed in 0..20 {
            let mut rng = session_rng(seed);
            let outcome = draw_avoiding(&sg, &wt, 5, &trie, &mut rng).unwrap();
            assert_eq!(g.render_word(&outcome.word), "aabbb");
        }
    }

    #[test]
    fn fully_forbidden_language_errors() {
        let sg = scaled(G_BT);
        let wt = WeightTable::build(&sg, 5);
        let mut trie = ForbiddenTrie::new();
        for w in ["ababb", "aabbb"] {
            let (walk, weight) = walk_of(&sg, &wt, w);
            trie.insert_walk(&walk, &weight).unwrap();
        }
        let mut rng = session_rng(9);
        assert_eq!(
            draw_avoiding(&sg, &wt, 5, &trie, &mut rng).unwrap_err(),
            DrawError::Exhausted
        );
    }

    #[test]
    fn skewed_first_letter_choice() {
        // With aa forbidden, the distribution on the remaining three words
        // is uniform, which forces P(first letter a) = 1/3.
        let sg = scaled(G_PAIR);
        let wt = WeightTable::build(&sg, 2);
        let g = sg.grammar().as_weighted();
        let aa = g.parse_word("aa").unwrap();
        let mut trie = ForbiddenTrie::new();
        let (walk, weight) = walk_by_exhaustion(&sg, &wt, &aa);
        trie.insert_walk(&walk, &weight).unwrap();

        let dist = engine_distribution(&sg, &wt, 2, &trie);
        let third = BigRational::new(1.into(), 3.into());
        for w in ["ab", "ba", "bb"] {
            let word = g.parse_word(w).unwrap();
            assert_eq!(dist.get(&word), Some(&third), "P({w})");
        }
        assert!(!dist.contains_key(&aa));
    }

    #[test]
    fn distribution_matches_oracle_for_every_forbidden_subset() {
        let cases = [(G_AB, 2usize), (G_AB, 3), (G_PAIR, 2), (G_BT, 5), (G_BT, 7)];
        for (text, n) in cases {
            let sg = scaled(text);
            let wt = WeightTable::build(&sg, n);
            let words = enumerate_words(&sg, n);
            let total = wt.mass(sg.grammar().axiom(), n);
            let walks: Vec<(Word, Vec<DeltaKey>, BigUint)> = words
                .iter()
                .map(|(w, weight)| {
                    let (walk, wgt) = walk_of_word(&sg, &wt, w).unwrap();
                    assert_eq!(wgt, *weight);
                    (w.clone(), walk, wgt)
                })
                .collect();
            for mask in 0..(1u32 << walks.len()) {
                let mut trie = ForbiddenTrie::new();
                let mut forbidden_mass = BigUint::zero();
                let mut forbidden: HashSet<Word> = HashSet::new();
                for (j, (w, walk, weight)) in walks.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        trie.insert_walk(walk, weight).unwrap();
                        forbidden_mass += weight;
                        forbidden.insert(w.clone());
                    }
                }
                if forbidden_mass == *total {
                    continue;
                }
                let admissible = total - &forbidden_mass;
                let dist = engine_distribution(&sg, &wt, n, &trie);
                for (w, weight) in &words {
                    let expected = if forbidden.contains(w) {
                        None
                    } else {
                        Some(BigRational::new(
                            weight.clone().into(),
                            admissible.clone().into(),
                        ))
                    };
                    assert_eq!(
                        dist.get(w).cloned(),
                        expected,
                        "n={n} mask {mask} word {w:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn session_collects_whole_language() {
        let sg = scaled(G_BT);
        let wt = WeightTable::build(&sg, 9);
        let expect: HashSet<Word> = enumerate_words(&sg, 9)
            .into_iter()
            .map(|(w, _)| w)
            .collect();
        for seed in 0..10 {
            let mut session = RecursiveSession::new(&sg, &wt, 9, session_rng(seed));
            let mut got = HashSet::new();
            for _ in 0..expect.len() {
                assert!(got.insert(session.sample().unwrap()));
            }
            assert_eq!(session.sample().unwrap_err(), DrawError::Exhausted);
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn replayed_walks_keep_length_and_locality() {
        let sg = scaled(G_BT);
        let wt = WeightTable::build(&sg, 9);
        let g = sg.grammar().as_weighted();
        for (w, _) in enumerate_words(&sg, 9) {
            let (walk, _) = walk_of_word(&sg, &wt, &w).unwrap();
            let states = replay_walk(&sg, 9, &walk);
            assert_eq!(states.len(), walk.len() + 1);
            assert!(states.last().unwrap().is_mature());
            for pair in states.windows(2) {
                let (before, after) = (&pair[0], &pair[1]);
                // Prescribed lengths always sum to the target.
                for state in [before, after] {
                    let sum: usize = state.items.iter().map(|&(_, m)| m).sum();
                    assert_eq!(sum, 9);
                }
                // Exactly the policy position changes; items to its left
                // and right are carried over unchanged.
                let pos = before.apply_policy().unwrap();
                assert_eq!(before.items[..pos], after.items[..pos]);
                let tail = &before.items[pos + 1..];
                assert_eq!(&after.items[after.items.len() - tail.len()..], tail);
            }
            // The mature end state spells the word itself.
            let letters: Vec<_> = states
                .last()
                .unwrap()
                .items
                .iter()
                .map(|&(s, _)| match s {
                    Symbol::Terminal(t) => t,
                    Symbol::Nonterminal(_) => unreachable!(),
                })
                .collect();
            assert_eq!(g.render_word(&Word(letters)), g.render_word(&w));
        }
    }

    #[test]
    fn parsed_walks_match_engine_walks() {
        for sg in [scaled(G_BT), scaled(G_AB), scaled(G_PAIR)] {
            for n in 0..=7usize {
                let wt = WeightTable::build(&sg, n);
                for (w, weight) in enumerate_words(&sg, n) {
                    let (walk, wgt) = walk_of_word(&sg, &wt, &w).unwrap();
                    let (engine_walk, engine_wgt) = walk_by_exhaustion(&sg, &wt, &w);
                    assert_eq!(walk, engine_walk, "walk of {w:?}");
                    assert_eq!(wgt, engine_wgt);
                    assert_eq!(wgt, weight);
                }
            }
        }
    }

    #[test]
    fn second_draw_is_the_other_word() {
        let sg = scaled(G_BT);
        let wt = WeightTable::build(&sg, 5);
        for seed in 0..20 {
            let mut session = RecursiveSession::new(&sg, &wt, 5, session_rng(seed));
            let first = session.sample().unwrap();
            let second = session.sample().unwrap();
            assert_ne!(first, second);
            assert_eq!(session.sample().unwrap_err(), DrawError::Exhausted);
        }
    }
}
