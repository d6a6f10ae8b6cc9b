//! The sequential meta-algorithm: collect `k` pairwise-distinct words
//! through repeated single draws, with any of the three engines, handling
//! an externally supplied forbidden set lazily.
//!
//! External forbidden words are never parsed up front. A draw that hits
//! one already carries its walk or rank interval, which is inserted into
//! the engine's structure before redrawing, so each external word costs at
//! most one rejected draw in the non-rejection engines.

use crate::grammar::Word;
use crate::recursive::{DrawError, RecursiveSession};
use crate::rng::{session_rng, uniform_below};
use crate::unranking::{unrank, SampleError, UnrankingSession};
use crate::weights::{ScaledGrammar, WeightTable};
use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngCore;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Rejection,
    Recursive,
    Unranking,
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Engine, String> {
        match s {
            "rejection" => Ok(Engine::Rejection),
            "recursive" => Ok(Engine::Recursive),
            "unranking" => Ok(Engine::Unranking),
            other => Err(format!("unknown engine `{other}`")),
        }
    }
}

/// Everything that determines one generation session. A fixed seed fully
/// determines the output sequence for a fixed build.
#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub n: usize,
    pub k: u64,
    pub engine: Engine,
    pub seed: u64,
    pub external_forbidden: Vec<Word>,
    /// Optional cap on total draws. Only the rejection engine can stall
    /// without one when the admissible mass is tiny but nonzero.
    pub attempt_cap: Option<u64>,
}

impl SessionConfig {
    pub fn new(n: usize, k: u64, engine: Engine, seed: u64) -> SessionConfig {
        SessionConfig {
            n,
            k,
            engine,
            seed,
            external_forbidden: Vec::new(),
            attempt_cap: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// All `k` requested words were produced.
    Complete,
    /// The admissible language ran out first; `words` holds all of it.
    Exhausted,
    /// The attempt cap was hit before `k` words were found.
    AttemptCapReached,
}

/// Result of one session: the distinct words in draw order, one exact
/// sequential draw probability per word (its weight over the admissible
/// mass known at the moment of the draw), and the total number of draws.
#[derive(Clone, Debug)]
pub struct GeneratedSet {
    pub words: Vec<Word>,
    pub probabilities: Vec<BigRational>,
    pub attempts: u64,
    pub outcome: Outcome,
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

fn push_word(
    sg: &ScaledGrammar,
    total: &BigUint,
    words: &mut Vec<Word>,
    probabilities: &mut Vec<BigRational>,
    w: Word,
    forbidden_before: &BigUint,
) {
    let weight = sg.word_weight(&w);
    probabilities.push(ratio(&weight, &(total - forbidden_before)));
    words.push(w);
}

/// Draw `k` distinct words of length `cfg.n` outside `cfg.external_forbidden`,
/// in the exact sequential without-replacement distribution.
pub fn generate_distinct(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    cfg: &SessionConfig,
) -> GeneratedSet {
    let rng = session_rng(cfg.seed);
    let external: HashSet<Word> = cfg.external_forbidden.iter().cloned().collect();
    let total = wt.mass(sg.grammar().axiom(), cfg.n).clone();
    let mut words = Vec::new();
    let mut probabilities = Vec::new();
    let mut attempts = 0u64;

    let outcome = match cfg.engine {
        Engine::Rejection => {
            let mut session = RejectionSession::new(sg, wt, cfg.n, rng);
            for w in &external {
                session.deny(w.clone());
            }
            loop {
                if words.len() as u64 == cfg.k {
                    break Outcome::Complete;
                }
                let budget = cfg.attempt_cap.map(|cap| cap.saturating_sub(attempts));
                match session.sample(budget) {
                    Ok((w, used)) => {
                        attempts += used;
                        let before = session.denied_seen_mass().clone();
                        push_word(
                            sg,
                            &total,
                            &mut words,
                            &mut probabilities,
                            w.clone(),
                            &before,
                        );
                        session.deny(w);
                    }
                    Err(RejectionError::Exhausted { used }) => {
                        attempts += used;
                        break Outcome::Exhausted;
                    }
                    Err(RejectionError::CapReached { used }) => {
                        attempts += used;
                        break Outcome::AttemptCapReached;
                    }
                }
            }
        }
        Engine::Recursive => {
            let mut session = RecursiveSession::new(sg, wt, cfg.n, rng);
            loop {
                if words.len() as u64 == cfg.k {
                    break Outcome::Complete;
                }
                if cfg.attempt_cap.is_some_and(|cap| attempts >= cap) {
                    break Outcome::AttemptCapReached;
                }
                let before = session.forbidden_mass().clone();
                match session.sample() {
                    Ok(w) => {
                        attempts += 1;
                        // An external hit has already inserted its walk;
                        // the next draw excludes it for free.
                        if !external.contains(&w) {
                            push_word(sg, &total, &mut words, &mut probabilities, w, &before);
                        }
                    }
                    Err(DrawError::Exhausted) => break Outcome::Exhausted,
                    Err(DrawError::Internal(msg)) => {
                        panic!("recursive engine invariant breach: {msg}")
                    }
                }
            }
        }
        Engine::Unranking => {
            let mut session = UnrankingSession::new(sg, wt, cfg.n, rng);
            loop {
                if words.len() as u64 == cfg.k {
                    break Outcome::Complete;
                }
                if cfg.attempt_cap.is_some_and(|cap| attempts >= cap) {
                    break Outcome::AttemptCapReached;
                }
                let before = session.forbidden_mass().clone();
                match session.sample() {
                    Ok(w) => {
                        attempts += 1;
                        if !external.contains(&w) {
                            push_word(sg, &total, &mut words, &mut probabilities, w, &before);
                        }
                    }
                    Err(SampleError::Exhausted) => break Outcome::Exhausted,
                    Err(SampleError::Internal(msg)) => {
                        panic!("unranking engine invariant breach: {msg}")
                    }
                }
            }
        }
    };

    GeneratedSet {
        words,
        probabilities,
        attempts,
        outcome,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RejectionError {
    #[error("the admissible language at this length is exhausted")]
    Exhausted { used: u64 },
    #[error("attempt cap reached after {used} draws")]
    CapReached { used: u64 },
}

/// The naive rejection baseline: draw from the unconstrained weighted
/// distribution (a uniform rank pushed through unrank) until the word
/// falls outside the denied set.
///
/// Exhaustion is detected exactly: a denied word's mass counts once the
/// word has been drawn at least once, which proves it lies in the
/// language; when the counted mass reaches the total, nothing admissible
/// remains.
pub struct RejectionSession<'a, R: RngCore> {
    sg: &'a ScaledGrammar,
    wt: &'a WeightTable,
    n: usize,
    rng: R,
    denied: HashSet<Word>,
    /// Words proven to lie in the language by having been drawn.
    drawn: HashSet<Word>,
    /// Denied words whose mass has been counted.
    counted: HashSet<Word>,
    counted_mass: BigUint,
}

impl<'a, R: RngCore> RejectionSession<'a, R> {
    pub fn new(sg: &'a ScaledGrammar, wt: &'a WeightTable, n: usize, rng: R) -> Self {
        assert!(n <= wt.n_max(), "table not built up to length {n}");
        RejectionSession {
            sg,
            wt,
            n,
            rng,
            denied: HashSet::new(),
            drawn: HashSet::new(),
            counted: HashSet::new(),
            counted_mass: BigUint::zero(),
        }
    }

    /// Add a word to the denied set.
    pub fn deny(&mut self, w: Word) {
        if self.denied.insert(w.clone()) && self.drawn.contains(&w) {
            self.count(w);
        }
    }

    fn count(&mut self, w: Word) {
        let weight = self.sg.word_weight(&w);
        if self.counted.insert(w) {
            self.counted_mass += weight;
        }
    }

    /// Mass of denied words proven to lie in the language. An accepted
    /// word's sequential draw probability is its weight over
    /// `total - this`, read before denying it.
    pub fn denied_seen_mass(&self) -> &BigUint {
        &self.counted_mass
    }

    /// Draw until a word outside the denied set appears; returns the word
    /// and the number of draws used. `budget` caps the draws.
    pub fn sample(&mut self, budget: Option<u64>) -> Result<(Word, u64), RejectionError> {
        let total = self.wt.mass(self.sg.grammar().axiom(), self.n);
        let mut used = 0u64;
        loop {
            if self.counted_mass >= *total {
                return Err(RejectionError::Exhausted { used });
            }
            if budget.is_some_and(|b| used >= b) {
                return Err(RejectionError::CapReached { used });
            }
            let r = uniform_below(&mut self.rng, total);
            let (w, _) = unrank(self.sg, self.wt, self.sg.grammar().axiom(), self.n, &r)
                .expect("a rank below the total mass always unranks");
            used += 1;
            self.drawn.insert(w.clone());
            if self.denied.contains(&w) {
                self.count(w);
                continue;
            }
            return Ok((w, used));
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("k = {k} exceeds the language size {l}")]
    KTooLarge { l: u64, k: u64 },
    #[error("a word lies outside the language at length {0}")]
    NotInLanguage(usize),
}

/// Expected total draws of uniform rejection sampling to collect `k`
/// distinct words out of `l` equally likely ones:
/// `sum_{i=0}^{k-1} l / (l - i)`, that is `l (H_l - H_{l-k})`.
pub fn expected_attempts_uniform(l: u64, k: u64) -> Result<BigRational, StatsError> {
    if k > l || l == 0 {
        return Err(StatsError::KTooLarge { l, k });
    }
    let mut acc = BigRational::zero();
    for i in 0..k {
        acc += BigRational::new(BigInt::from(l), BigInt::from(l - i));
    }
    Ok(acc)
}

/// Exact probability that one session of `|words|` draws produces exactly
/// this set, summed over all draw orders. Factorial cost; oracle use only.
pub fn set_probability(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    words: &[Word],
) -> Result<BigRational, StatsError> {
    assert!(!words.is_empty(), "set probability of an empty set");
    let n = words[0].len();
    let total = wt.mass(sg.grammar().axiom(), n);
    let weights: Vec<BigUint> = words
        .iter()
        .map(|w| {
            if w.len() != n || crate::unranking::rank(sg, wt, w).is_err() {
                Err(StatsError::NotInLanguage(n))
            } else {
                Ok(sg.word_weight(w))
            }
        })
        .collect::<Result<_, _>>()?;
    let mut acc = BigRational::zero();
    for perm in (0..words.len()).permutations(words.len()) {
        let mut term = BigRational::one();
        let mut removed = BigUint::zero();
        for idx in perm {
            term *= ratio(&weights[idx], &(total - &removed));
            removed += &weights[idx];
        }
        acc += term;
    }
    Ok(acc)
}

/// Mean total rejection draws to collect `1..=k_max` distinct words, over
/// `trials` independently seeded runs; index `k-1` holds the mean for `k`.
/// Trials fan out across threads when the `parallel` feature is enabled;
/// the per-trial totals are integers, so the merge is order-independent
/// and the result identical either way.
pub fn mean_rejection_attempts(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    n: usize,
    k_max: u64,
    trials: u64,
    base_seed: u64,
) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        mean_rejection_attempts_par(sg, wt, n, k_max, trials, base_seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        mean_rejection_attempts_seq(sg, wt, n, k_max, trials, base_seed)
    }
}

/// One trial: cumulative draw counts at each coupon milestone.
fn attempts_trial(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    n: usize,
    k_max: u64,
    seed: u64,
) -> Vec<u64> {
    let mut session = RejectionSession::new(sg, wt, n, session_rng(seed));
    let mut acc = Vec::with_capacity(k_max as usize);
    let mut attempts = 0u64;
    for _ in 0..k_max {
        let (w, used) = session
            .sample(None)
            .expect("trial requested more distinct words than the language holds");
        attempts += used;
        acc.push(attempts);
        session.deny(w);
    }
    acc
}

fn merge(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

fn means(totals: Vec<u64>, trials: u64) -> Vec<f64> {
    totals
        .into_iter()
        .map(|t| t as f64 / trials as f64)
        .collect()
}

pub fn mean_rejection_attempts_seq(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    n: usize,
    k_max: u64,
    trials: u64,
    base_seed: u64,
) -> Vec<f64> {
    let totals = (0..trials)
        .map(|t| attempts_trial(sg, wt, n, k_max, base_seed.wrapping_add(t)))
        .fold(vec![0u64; k_max as usize], merge);
    means(totals, trials)
}

#[cfg(feature = "parallel")]
pub fn mean_rejection_attempts_par(
    sg: &ScaledGrammar,
    wt: &WeightTable,
    n: usize,
    k_max: u64,
    trials: u64,
    base_seed: u64,
) -> Vec<f64> {
    use rayon::prelude::*;
    let totals = (0..trials)
        .into_par_iter()
        .map(|t| attempts_trial(sg, wt, n, k_max, base_seed.wrapping_add(t)))
        .reduce(|| vec![0u64; k_max as usize], merge);
    means(totals, trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ab_geometric, binary_trees};
    use crate::grammar::enumerate_words;
    use std::collections::HashSet;

    #[test]
    fn expected_attempts_formula() {
        assert_eq!(
            expected_attempts_uniform(5, 1).unwrap(),
            BigRational::from_integer(1.into())
        );
        assert_eq!(
            expected_attempts_uniform(5, 5).unwrap(),
            BigRational::new(137.into(), 12.into())
        );
        assert_eq!(
            expected_attempts_uniform(2, 2).unwrap(),
            BigRational::from_integer(3.into())
        );
        assert!(expected_attempts_uniform(3, 4).is_err());
    }

    #[test]
    fn set_probability_examples() {
        let sg = ab_geometric();
        let wt = WeightTable::build(&sg, 2);
        let g = sg.grammar().as_weighted();

        // Exhausting the whole length-1 language has probability 1.
        let all: Vec<Word> = vec![g.parse_word("a").unwrap(), g.parse_word("b").unwrap()];
        assert_eq!(set_probability(&sg, &wt, &all).unwrap(), BigRational::one());

        let pair = vec![g.parse_word("aa").unwrap(), g.parse_word("ab").unwrap()];
        assert_eq!(
            set_probability(&sg, &wt, &pair).unwrap(),
            BigRational::new(11.into(), 105.into())
        );

        let sg_bt = binary_trees();
        let wt_bt = WeightTable::build(&sg_bt, 5);
        let single = vec![sg_bt.grammar().as_weighted().parse_word("ababb").unwrap()];
        assert_eq!(
            set_probability(&sg_bt, &wt_bt, &single).unwrap(),
            BigRational::new(1.into(), 2.into())
        );
    }

    #[test]
    fn set_probability_rejects_outsiders() {
        let sg = ab_geometric();
        let wt = WeightTable::build(&sg, 2);
        let g = sg.grammar().as_weighted();
        let bad = vec![g.parse_word("ba").unwrap()];
        assert!(set_probability(&sg, &wt, &bad).is_err());
    }

    #[test]
    fn rejection_needs_one_attempt_without_forbidden() {
        let sg = binary_trees();
        let wt = WeightTable::build(&sg, 5);
        for seed in 0..10 {
            let cfg = SessionConfig::new(5, 1, Engine::Rejection, seed);
            let set = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(set.outcome, Outcome::Complete);
            assert_eq!(set.attempts, 1);
            assert_eq!(set.words.len(), 1);
        }
    }

    #[test]
    fn every_engine_collects_the_language() {
        let sg = binary_trees();
        let wt = WeightTable::build(&sg, 7);
        let expect: HashSet<Word> = enumerate_words(&sg, 7)
            .into_iter()
            .map(|(w, _)| w)
            .collect();
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            let cfg = SessionConfig::new(7, expect.len() as u64, engine, 11);
            let set = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(set.outcome, Outcome::Complete, "{engine:?}");
            let got: HashSet<Word> = set.words.iter().cloned().collect();
            assert_eq!(got, expect, "{engine:?}");
            assert_eq!(set.words.len(), set.probabilities.len());
        }
    }

    #[test]
    fn exhaustion_returns_partial_set() {
        let sg = binary_trees();
        let wt = WeightTable::build(&sg, 5);
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            let cfg = SessionConfig::new(5, 3, engine, 5);
            let set = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(set.outcome, Outcome::Exhausted, "{engine:?}");
            assert_eq!(set.words.len(), 2, "{engine:?}");
        }
    }

    #[test]
    fn external_forbidden_words_never_appear() {
        let sg = ab_geometric();
        let wt = WeightTable::build(&sg, 4);
        let g = sg.grammar().as_weighted();
        let banned = g.parse_word("bbbb").unwrap();
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            for seed in 0..20 {
                let mut cfg = SessionConfig::new(4, 4, engine, seed);
                cfg.external_forbidden = vec![banned.clone()];
                let set = generate_distinct(&sg, &wt, &cfg);
                assert_eq!(set.outcome, Outcome::Complete);
                assert!(!set.words.contains(&banned), "{engine:?} seed {seed}");
                if engine != Engine::Rejection {
                    // At most one rejected draw per external word.
                    assert!(
                        set.attempts <= 4 + 1,
                        "{engine:?} attempts {}",
                        set.attempts
                    );
                }
            }
        }
    }

    #[test]
    fn exhaustion_with_external_set() {
        // Five words of length 4 minus one banned leaves four.
        let sg = ab_geometric();
        let wt = WeightTable::build(&sg, 4);
        let g = sg.grammar().as_weighted();
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            let mut cfg = SessionConfig::new(4, 6, engine, 3);
            cfg.external_forbidden = vec![g.parse_word("abbb").unwrap()];
            let set = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(set.outcome, Outcome::Exhausted, "{engine:?}");
            assert_eq!(set.words.len(), 4, "{engine:?}");
        }
    }

    #[test]
    fn sequential_probabilities_follow_the_product_rule() {
        let sg = ab_geometric();
        let wt = WeightTable::build(&sg, 2);
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            let cfg = SessionConfig::new(2, 3, engine, 4);
            let set = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(set.outcome, Outcome::Complete);
            let total = wt.mass(sg.grammar().axiom(), 2).clone();
            let mut removed = BigUint::zero();
            for (w, p) in set.words.iter().zip(&set.probabilities) {
                let expect = ratio(&sg.word_weight(w), &(&total - &removed));
                assert_eq!(*p, expect, "{engine:?}");
                removed += sg.word_weight(w);
            }
        }
    }

    #[test]
    fn deterministic_per_seed_and_engine() {
        let sg = binary_trees();
        let wt = WeightTable::build(&sg, 9);
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            let cfg = SessionConfig::new(9, 5, engine, 1234);
            let a = generate_distinct(&sg, &wt, &cfg);
            let b = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(a.words, b.words);
            assert_eq!(a.attempts, b.attempts);
        }
    }

    #[test]
    fn attempt_cap_reported() {
        let sg = ab_geometric();
        let wt = WeightTable::build(&sg, 4);
        // Ban everything: the rejection engine can never finish; either it
        // proves exhaustion by observing all five words or the cap stops
        // it. Both are reported, never a silent truncation.
        let mut cfg = SessionConfig::new(4, 5, Engine::Rejection, 0);
        cfg.external_forbidden = enumerate_words(&sg, 4)
            .into_iter()
            .map(|(w, _)| w)
            .collect();
        cfg.attempt_cap = Some(50);
        let set = generate_distinct(&sg, &wt, &cfg);
        assert!(matches!(
            set.outcome,
            Outcome::AttemptCapReached | Outcome::Exhausted
        ));
        assert!(set.words.is_empty());
    }

    #[test]
    fn length_zero_sessions_work() {
        // The geometric grammar derives the empty word, so its length-0
        // slice holds exactly one word.
        let sg = ab_geometric();
        let wt = WeightTable::build(&sg, 2);
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            let cfg = SessionConfig::new(0, 2, engine, 8);
            let set = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(set.outcome, Outcome::Exhausted, "{engine:?}");
            assert_eq!(set.words, vec![Word(vec![])], "{engine:?}");
            assert_eq!(set.probabilities, vec![BigRational::one()]);
        }
        // The tree-prefix grammar has no empty word at all.
        let sg = binary_trees();
        let wt = WeightTable::build(&sg, 2);
        for engine in [Engine::Rejection, Engine::Recursive, Engine::Unranking] {
            let cfg = SessionConfig::new(0, 1, engine, 8);
            let set = generate_distinct(&sg, &wt, &cfg);
            assert_eq!(set.outcome, Outcome::Exhausted, "{engine:?}");
            assert!(set.words.is_empty());
        }
    }

    #[test]
    fn mean_attempts_parallel_matches_sequential() {
        let sg = binary_trees();
        let wt = WeightTable::build(&sg, 7);
        let seq = mean_rejection_attempts_seq(&sg, &wt, 7, 5, 64, 99);
        #[cfg(feature = "parallel")]
        {
            let par = mean_rejection_attempts_par(&sg, &wt, 7, 5, 64, 99);
            assert_eq!(seq, par);
        }
        assert_eq!(seq.len(), 5);
        assert!(
            (seq[0] - 1.0).abs() < 1e-9,
            "first word always takes one draw"
        );
        assert!(
            seq.windows(2).all(|w| w[0] <= w[1]),
            "cumulative means are monotone"
        );
    }
}
