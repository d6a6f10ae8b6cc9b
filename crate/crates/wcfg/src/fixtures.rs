//! Example grammars used by the tests, benches, and documentation.

use crate::grammar::{to_bcnf, WeightedGrammar};
use crate::weights::ScaledGrammar;

/// Prefix notations of binary trees: `a` marks an internal node, `b` a
/// leaf, so words exist at odd lengths only and the counts are the Catalan
/// numbers. Uniform weights.
pub const BINARY_TREES: &str = "\
# prefix notations of binary trees
axiom S
terminal a weight 1
terminal b weight 1
S -> T | b
T -> a U
U -> S S
";

/// The regular language a*b* with geometric weights (b twice as heavy as
/// a), written in strict binary form. The mass at length m is 2^(m+1)-1,
/// and the heaviest word dominates: rejection sampling collapses on it.
pub const AB_GEOMETRIC: &str = "\
# a*b* with weight(b) = 2
axiom S
terminal a weight 1
terminal b weight 2
S -> SP | T
SP -> A S
T -> TP | E
TP -> B T
A -> a
B -> b
E -> _eps_
";

pub fn binary_trees() -> ScaledGrammar {
    scaled(BINARY_TREES)
}

pub fn ab_geometric() -> ScaledGrammar {
    scaled(AB_GEOMETRIC)
}

fn scaled(text: &str) -> ScaledGrammar {
    let g = WeightedGrammar::parse(text).expect("fixture parses");
    debug_assert!(g.validate().is_valid());
    ScaledGrammar::new(to_bcnf(&g).expect("fixture normalizes"))
}
