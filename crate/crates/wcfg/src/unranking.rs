//! Rank and unrank under the shared total order, the gapped-interval AVL
//! tree, and the unranking sampler built on top of them.
//!
//! Every word of length `n` owns a half-open interval of scaled weight
//! inside `[0, mass(axiom, n))`; the intervals tile that range in rank
//! order. Ranks are integers, never reals, so interval arithmetic and the
//! shift bijection below are checked exactly.

use crate::grammar::{NtId, Rule, TermId, Word};
use crate::rng::uniform_below;
use crate::weights::{ScaledGrammar, WeightTable};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use thiserror::Error;

/// The half-open rank interval `[low, high)` of a word; its width is the
/// word's scaled weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankInterval {
    pub low: BigUint,
    pub high: BigUint,
}

impl RankInterval {
    pub fn width(&self) -> BigUint {
        &self.high - &self.low
    }
}

impl std::fmt::Display for RankInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{})", self.low, self.high)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RankError {
    #[error("word is not in the language at its length")]
    NotInLanguage,
    #[error("rank {rank} out of range; the total mass at this length is {bound}")]
    OutOfRange { rank: BigUint, bound: BigUint },
}

/// Rank interval of `w` under the grammar's total order.
pub fn rank(sg: &ScaledGrammar, wt: &WeightTable, w: &Word) -> Result<RankInterval, RankError> {
    let n = w.len();
    let axiom = sg.grammar().axiom();
    if wt.mass(axiom, n).is_zero() {
        return Err(RankError::NotInLanguage);
    }
    let (low, width) = rank_at(sg, wt, axiom, n, w.letters())?;
    let high = &low + &width;
    Ok(RankInterval { low, high })
}

fn rank_at(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    nt: NtId,
    m: usize,
    letters: &[TermId],
) -> Result<(BigUint, BigUint), RankError> {
    debug_assert_eq!(letters.len(), m);
    match sg.grammar().rule(nt) {
        Rule::Terminal(t) => {
            if letters == [t] {
                Ok((BigUint::zero(), sg.int_weight(t).clone()))
            } else {
                Err(RankError::NotInLanguage)
            }
        }
        Rule::Epsilon => {
            if letters.is_empty() {
                Ok((BigUint::zero(), BigUint::one()))
            } else {
                Err(RankError::NotInLanguage)
            }
        }
        Rule::Union(a, b) => {
            let first_mass = wt.mass(a, m);
            if !first_mass.is_zero() {
                if let Ok((low, width)) = rank_at(sg, wt, a, m, letters) {
                    return Ok((low, width));
                }
            }
            if wt.mass(b, m).is_zero() {
                return Err(RankError::NotInLanguage);
            }
            let (low, width) = rank_at(sg, wt, b, m, letters)?;
            Ok((first_mass + low, width))
        }
        Rule::Product(a, b) => {
            // Unambiguity gives at most one split that parses both parts;
            // earlier blocks in investigation order stack up as the offset.
            let mut block_base = BigUint::zero();
            for (i, la, rb) in wt.splits(a, b, m) {
                let parsed = rank_at(sg, wt, a, i, &letters[..i]).and_then(|left| {
                    rank_at(sg, wt, b, m - i, &letters[i..]).map(|right| (left, right))
                });
                match parsed {
                    Ok(((l1, w1), (l2, w2))) => {
                        let low = block_base + l1 * rb + l2 * &w1;
                        return Ok((low, w1 * w2));
                    }
                    Err(_) => block_base += la * rb,
                }
            }
            Err(RankError::NotInLanguage)
        }
    }
}

/// Membership of a letter sequence in the language of `nt` at length `m`,
/// decided by the same recursive decomposition that ranking uses.
pub fn contains(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    nt: NtId,
    m: usize,
    letters: &[TermId],
) -> bool {
    letters.len() == m && !wt.mass(nt, m).is_zero() && rank_at(sg, wt, nt, m, letters).is_ok()
}

/// The unique word whose interval contains `r`, along with that interval.
pub fn unrank(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    nt: NtId,
    m: usize,
    r: &BigUint,
) -> Result<(Word, RankInterval), RankError> {
    let bound = wt.mass(nt, m);
    if r >= bound {
        return Err(RankError::OutOfRange {
            rank: r.clone(),
            bound: bound.clone(),
        });
    }
    let mut letters = Vec::with_capacity(m);
    let (low, width) = unrank_at(sg, wt, nt, m, r.clone(), &mut letters);
    let high = &low + &width;
    Ok((Word(letters), RankInterval { low, high }))
}

/// Recursive worker; requires `r < mass(nt, m)`. Appends the word's letters
/// and returns its interval relative to the `(nt, m)` block. All divisions
/// are integer divisions; they locate sub-intervals exactly because every
/// interval endpoint is an integer.
fn unrank_at(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    nt: NtId,
    m: usize,
    mut r: BigUint,
    letters: &mut Vec<TermId>,
) -> (BigUint, BigUint) {
    match sg.grammar().rule(nt) {
        Rule::Terminal(t) => {
            debug_assert!(m == 1 && r < *sg.int_weight(t));
            letters.push(t);
            (BigUint::zero(), sg.int_weight(t).clone())
        }
        Rule::Epsilon => {
            debug_assert!(m == 0 && r.is_zero());
            (BigUint::zero(), BigUint::one())
        }
        Rule::Union(a, b) => {
            let first_mass = wt.mass(a, m);
            if &r < first_mass {
                unrank_at(sg, wt, a, m, r, letters)
            } else {
                r -= first_mass;
                let (low, width) = unrank_at(sg, wt, b, m, r, letters);
                (first_mass + low, width)
            }
        }
        Rule::Product(a, b) => {
            let mut block_base = BigUint::zero();
            for (i, la, rb) in wt.splits(a, b, m) {
                let block = la * rb;
                if r >= block {
                    r -= &block;
                    block_base += block;
                    continue;
                }
                // Two-level water-filling: the quotient by the right-hand
                // mass locates the left part, the remainder scaled by the
                // left word's weight locates the right part.
                let r1 = &r / rb;
                let (l1, w1) = unrank_at(sg, wt, a, i, r1, letters);
                let r2 = (&r - &l1 * rb) / &w1;
                let (l2, w2) = unrank_at(sg, wt, b, m - i, r2, letters);
                let low = block_base + l1 * rb + l2 * &w1;
                return (low, w1 * w2);
            }
            unreachable!("rank below block mass always lands in a split")
        }
    }
}

/// Balanced search tree of disjoint forbidden rank intervals. Each node
/// carries `delta`, the total width stored in its left subtree, which is
/// what lets [`IntervalTree::mod_random`] compute the rightward shift in
/// logarithmic time.
#[derive(Clone, Debug, Default)]
pub struct IntervalTree {
    root: Link,
    total: BigUint,
    len: usize,
}

type Link = Option<Box<ItNode>>;

#[derive(Clone, Debug)]
struct ItNode {
    low: BigUint,
    high: BigUint,
    #[allow(dead_code)]
    word: Word,
    /// Total interval width in the left subtree.
    delta: BigUint,
    height: i32,
    left: Link,
    right: Link,
}

impl ItNode {
    fn width(&self) -> BigUint {
        &self.high - &self.low
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("interval [{low},{high}) overlaps a stored interval")]
pub struct OverlapError {
    pub low: BigUint,
    pub high: BigUint,
}

impl IntervalTree {
    pub fn new() -> IntervalTree {
        IntervalTree::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Total forbidden mass: the sum of all stored interval widths.
    pub fn total_forbidden(&self) -> &BigUint {
        &self.total
    }

    /// Insert a word's interval. Any overlap with a stored interval is a
    /// hard error: the caller's rank bookkeeping is broken, or the word
    /// was inserted twice.
    pub fn insert(&mut self, word: Word, interval: RankInterval) -> Result<(), OverlapError> {
        if interval.low >= interval.high {
            return Err(OverlapError {
                low: interval.low,
                high: interval.high,
            });
        }
        let width = interval.width();
        insert_rec(&mut self.root, word, interval)?;
        self.total += width;
        self.len += 1;
        Ok(())
    }

    /// Maps a rank drawn uniformly over the admissible mass
    /// `[0, total - forbidden)` to the rank space with forbidden intervals
    /// skipped: a strictly monotone, measure-preserving bijection onto the
    /// complement of the stored intervals.
    pub fn mod_random(&self, r: &BigUint) -> BigUint {
        let mut r = r.clone();
        let mut cur = &self.root;
        while let Some(node) = cur {
            // Admissible mass to the left of this node's interval.
            let left_admissible = &node.low - &node.delta;
            if r < left_admissible {
                cur = &node.left;
            } else {
                r += &node.delta + node.width();
                cur = &node.right;
            }
        }
        r
    }

    /// Walk all stored intervals in rank order.
    pub fn intervals(&self) -> Vec<RankInterval> {
        fn walk(link: &Link, out: &mut Vec<RankInterval>) {
            if let Some(n) = link {
                walk(&n.left, out);
                out.push(RankInterval {
                    low: n.low.clone(),
                    high: n.high.clone(),
                });
                walk(&n.right, out);
            }
        }
        let mut out = Vec::with_capacity(self.len);
        walk(&self.root, &mut out);
        out
    }

    /// Exhaustively verify the structural invariants: search order and
    /// disjointness, exact `delta` values, and height balance.
    pub fn check_invariants(&self) -> Result<(), String> {
        type Span = Option<(BigUint, BigUint)>;
        fn check(link: &Link) -> Result<(Span, BigUint, i32), String> {
            let Some(n) = link else {
                return Ok((None, BigUint::zero(), 0));
            };
            let (lspan, lwidth, lheight) = check(&n.left)?;
            let (rspan, rwidth, rheight) = check(&n.right)?;
            if n.low >= n.high {
                return Err(format!("empty interval [{},{})", n.low, n.high));
            }
            if let Some((_, lmax)) = &lspan {
                if lmax > &n.low {
                    return Err("left subtree reaches past node interval".into());
                }
            }
            if let Some((rmin, _)) = &rspan {
                if rmin < &n.high {
                    return Err("right subtree starts before node interval ends".into());
                }
            }
            if n.delta != lwidth {
                return Err(format!("delta {} != left width {}", n.delta, lwidth));
            }
            if (lheight - rheight).abs() > 1 {
                return Err("height balance violated".into());
            }
            let height = 1 + lheight.max(rheight);
            if n.height != height {
                return Err("stored height stale".into());
            }
            let min = lspan.map(|(lo, _)| lo).unwrap_or_else(|| n.low.clone());
            let max = rspan.map(|(_, hi)| hi).unwrap_or_else(|| n.high.clone());
            let width = lwidth + rwidth + n.width();
            Ok((Some((min, max)), width, height))
        }
        let (_, width, _) = check(&self.root)?;
        if width != self.total {
            return Err(format!("total {} != sum of widths {}", self.total, width));
        }
        Ok(())
    }
}

fn height(link: &Link) -> i32 {
    link.as_ref().map_or(0, |n| n.height)
}

fn update_height(n: &mut ItNode) {
    n.height = 1 + height(&n.left).max(height(&n.right));
}

fn balance_factor(n: &ItNode) -> i32 {
    height(&n.left) - height(&n.right)
}

/// Right rotation around `z = *link` with pivot `y = z.left`.
///
/// Delta fix-up: `y` keeps its left subtree, so `delta(y)` is unchanged;
/// `z` loses `y` and everything under it from its left side and retains
/// only `y`'s former right subtree, so
/// `delta(z) -= delta(y) + width(y)`.
fn rotate_right(link: &mut Link) {
    let mut z = link.take().expect("rotate on empty link");
    let mut y = z.left.take().expect("right rotation needs a left child");
    z.delta -= &y.delta + y.width();
    z.left = y.right.take();
    update_height(&mut z);
    y.right = Some(z);
    update_height(&mut y);
    *link = Some(y);
}

/// Left rotation around `z = *link` with pivot `y = z.right`.
///
/// Delta fix-up: `z` keeps its left subtree, so `delta(z)` is unchanged;
/// `y` gains `z` and `z`'s whole left side below it, so
/// `delta(y) += delta(z) + width(z)`.
fn rotate_left(link: &mut Link) {
    let mut z = link.take().expect("rotate on empty link");
    let mut y = z.right.take().expect("left rotation needs a right child");
    y.delta += &z.delta + z.width();
    z.right = y.left.take();
    update_height(&mut z);
    y.left = Some(z);
    update_height(&mut y);
    *link = Some(y);
}

fn rebalance(link: &mut Link) {
    let Some(n) = link.as_mut() else { return };
    update_height(n);
    let bf = balance_factor(n);
    if bf > 1 {
        if balance_factor(n.left.as_ref().expect("bf > 1 implies left child")) < 0 {
            rotate_left(&mut n.left);
        }
        rotate_right(link);
    } else if bf < -1 {
        if balance_factor(n.right.as_ref().expect("bf < -1 implies right child")) > 0 {
            rotate_right(&mut n.right);
        }
        rotate_left(link);
    }
}

fn insert_rec(link: &mut Link, word: Word, interval: RankInterval) -> Result<(), OverlapError> {
    let Some(node) = link.as_mut() else {
        *link = Some(Box::new(ItNode {
            low: interval.low,
            high: interval.high,
            word,
            delta: BigUint::zero(),
            height: 1,
            left: None,
            right: None,
        }));
        return Ok(());
    };
    if interval.high <= node.low {
        let width = interval.width();
        insert_rec(&mut node.left, word, interval)?;
        // New interval landed in the left subtree.
        node.delta += width;
    } else if interval.low >= node.high {
        insert_rec(&mut node.right, word, interval)?;
    } else {
        return Err(OverlapError {
            low: interval.low,
            high: interval.high,
        });
    }
    rebalance(link);
    Ok(())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("the admissible language at this length is exhausted")]
    Exhausted,
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

/// A sampling session over the unranking engine: draws are uniform over
/// the admissible mass, shifted past forbidden intervals, unranked, and
/// the resulting interval is added to the forbidden tree. Single-owner
/// mutable state; the grammar and table are shared immutably.
pub struct UnrankingSession<'a, R: RngCore> {
    sg: &'a ScaledGrammar,
    wt: &'a WeightTable,
    n: usize,
    tree: IntervalTree,
    rng: R,
}

impl<'a, R: RngCore> UnrankingSession<'a, R> {
    pub fn new(sg: &'a ScaledGrammar, wt: &'a WeightTable, n: usize, rng: R) -> Self {
        assert!(n <= wt.n_max(), "table not built up to length {n}");
        UnrankingSession {
            sg,
            wt,
            n,
            tree: IntervalTree::new(),
            rng,
        }
    }

    pub fn forbidden_mass(&self) -> &BigUint {
        self.tree.total_forbidden()
    }

    pub fn tree(&self) -> &IntervalTree {
        &self.tree
    }

    /// Draw the next distinct word.
    pub fn sample(&mut self) -> Result<Word, SampleError> {
        let total = self.wt.mass(self.sg.grammar().axiom(), self.n);
        let forbidden = self.tree.total_forbidden();
        if total <= forbidden {
            return Err(SampleError::Exhausted);
        }
        let admissible = total - forbidden;
        let r = uniform_below(&mut self.rng, &admissible);
        let shifted = self.tree.mod_random(&r);
        let (word, interval) = unrank(
            self.sg,
            self.wt,
            self.sg.grammar().axiom(),
            self.n,
            &shifted,
        )
        .map_err(|e| SampleError::Internal(format!("unrank after shift: {e}")))?;
        self.tree
            .insert(word.clone(), interval)
            .map_err(|e| SampleError::Internal(format!("insert drawn interval: {e}")))?;
        Ok(word)
    }
}
