//! Non-redundant random generation of fixed-length words from weighted
//! context-free grammars.
//!
//! Given a grammar in binary normal form with positive rational terminal
//! weights, this crate draws `k` pairwise-distinct words of length `n` in
//! the exact sequential without-replacement distribution, optionally
//! avoiding an externally supplied forbidden set. Three interchangeable
//! engines are provided:
//!
//! - **rejection** — redraws from the unconstrained distribution until an
//!   unseen word comes out;
//! - **recursive** — a step-by-step sampler whose branch probabilities are
//!   corrected by a weighted trie of forbidden parse walks;
//! - **unranking** — draws a uniform integer over the admissible mass,
//!   shifts it past forbidden rank intervals, and unranks it.
//!
//! All arithmetic is exact: rational weights are scaled to big integers
//! and every probability statement in the test suite is checked without
//! tolerances wherever the quantity is not statistical.
//!
//! ```
//! use wcfg::{generate_distinct, to_bcnf, Engine, SessionConfig};
//! use wcfg::{ScaledGrammar, WeightTable, WeightedGrammar};
//!
//! let g = WeightedGrammar::parse(wcfg::fixtures::BINARY_TREES)?;
//! assert!(g.validate().is_valid());
//! let sg = ScaledGrammar::new(to_bcnf(&g)?);
//! let table = WeightTable::build(&sg, 9);
//!
//! let cfg = SessionConfig::new(9, 5, Engine::Unranking, 42);
//! let set = generate_distinct(&sg, &table, &cfg);
//! assert_eq!(set.words.len(), 5);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod fixtures;
pub mod grammar;
pub mod recursive;
pub mod rng;
pub mod session;
pub mod unranking;
pub mod weights;

pub use grammar::{
    to_bcnf, BcnfGrammar, NtId, ParseError, Rule, Symbol, TermId, ValidationReport,
    WeightedGrammar, Word,
};
pub use session::{generate_distinct, Engine, GeneratedSet, Outcome, SessionConfig};
pub use weights::{split_order, ScaledGrammar, WeightTable};
