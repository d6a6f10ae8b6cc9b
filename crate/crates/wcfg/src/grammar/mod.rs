//! Grammar data model: symbols, rules, the text format, validation,
//! binary normalization, and the brute-force enumeration oracle.

mod normalize;
mod oracle;
mod parse;
mod validate;

pub use normalize::{to_bcnf, NormalizeError};
pub use oracle::{
    ambiguity_probe, enumerate_from, enumerate_language, enumerate_words, AmbiguityReport,
};
pub use parse::ParseError;
pub use validate::ValidationReport;

pub(crate) use validate::{nullable_set as nullable_for, zero_edges as zero_edges_for};

use num_rational::BigRational;
use std::fmt;

/// Index of a terminal symbol within its grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

/// Index of a nonterminal symbol within its grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NtId(pub u32);

/// A grammar symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(TermId),
    Nonterminal(NtId),
}

/// One alternative on the right-hand side of a rule, as written in the
/// grammar file. Compound alternatives may mix terminals and nonterminals;
/// [`to_bcnf`] rewrites them into strict binary rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alt {
    /// Two symbols in sequence.
    Pair(Symbol, Symbol),
    /// A single symbol: a terminal letter, or a unit/union branch.
    Single(Symbol),
    /// The empty word.
    Epsilon,
}

/// A mature word: a sequence of terminal letters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<TermId>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[TermId] {
        &self.0
    }
}

/// A context-free grammar with exact positive rational terminal weights.
///
/// Rules are kept in the general alternative-list form produced by the
/// parser, which covers both plain Chomsky normal form and the strict
/// binary form. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGrammar {
    terminals: Vec<String>,
    nonterminals: Vec<String>,
    /// Alternatives per nonterminal, indexed by `NtId`.
    rules: Vec<Vec<Alt>>,
    axiom: NtId,
    /// Weight per terminal, indexed by `TermId`. Strictly positive.
    weights: Vec<BigRational>,
}

impl WeightedGrammar {
    pub(crate) fn from_parts(
        terminals: Vec<String>,
        nonterminals: Vec<String>,
        rules: Vec<Vec<Alt>>,
        axiom: NtId,
        weights: Vec<BigRational>,
    ) -> Self {
        debug_assert_eq!(terminals.len(), weights.len());
        debug_assert_eq!(nonterminals.len(), rules.len());
        debug_assert!((axiom.0 as usize) < nonterminals.len());
        WeightedGrammar {
            terminals,
            nonterminals,
            rules,
            axiom,
            weights,
        }
    }

    /// Parse the line-oriented grammar text format.
    pub fn parse(text: &str) -> Result<WeightedGrammar, ParseError> {
        parse::parse(text)
    }

    pub fn axiom(&self) -> NtId {
        self.axiom
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn nonterminal_count(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn terminal_name(&self, t: TermId) -> &str {
        &self.terminals[t.0 as usize]
    }

    pub fn nonterminal_name(&self, nt: NtId) -> &str {
        &self.nonterminals[nt.0 as usize]
    }

    pub fn terminal_id(&self, name: &str) -> Option<TermId> {
        self.terminals
            .iter()
            .position(|t| t == name)
            .map(|i| TermId(i as u32))
    }

    pub fn nonterminal_id(&self, name: &str) -> Option<NtId> {
        self.nonterminals
            .iter()
            .position(|t| t == name)
            .map(|i| NtId(i as u32))
    }

    pub fn weight(&self, t: TermId) -> &BigRational {
        &self.weights[t.0 as usize]
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn alternatives(&self, nt: NtId) -> &[Alt] {
        &self.rules[nt.0 as usize]
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = NtId> {
        (0..self.nonterminals.len() as u32).map(NtId)
    }

    pub fn terminals(&self) -> impl Iterator<Item = TermId> {
        (0..self.terminals.len() as u32).map(TermId)
    }

    /// Validation report: unproductive nonterminals and zero-length
    /// derivation cycles are errors, unreachable nonterminals a warning.
    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Canonical text rendering; `parse` of the output reproduces the
    /// grammar exactly.
    pub fn serialize(&self) -> String {
        parse::serialize(self)
    }

    /// Render a word using this grammar's terminal names. Single-letter
    /// alphabets concatenate; otherwise letters are space-separated.
    pub fn render_word(&self, w: &Word) -> String {
        let compact = self.terminals.iter().all(|t| t.chars().count() == 1);
        let names: Vec<&str> = w.0.iter().map(|&t| self.terminal_name(t)).collect();
        if compact {
            names.concat()
        } else {
            names.join(" ")
        }
    }

    /// Parse a word rendered by [`Self::render_word`].
    pub fn parse_word(&self, s: &str) -> Result<Word, String> {
        let compact = self.terminals.iter().all(|t| t.chars().count() == 1);
        let mut letters = Vec::new();
        if compact {
            for c in s.chars().filter(|c| !c.is_whitespace()) {
                let name = c.to_string();
                let t = self
                    .terminal_id(&name)
                    .ok_or_else(|| format!("unknown terminal `{name}`"))?;
                letters.push(t);
            }
        } else {
            for name in s.split_whitespace() {
                let t = self
                    .terminal_id(name)
                    .ok_or_else(|| format!("unknown terminal `{name}`"))?;
                letters.push(t);
            }
        }
        Ok(Word(letters))
    }
}

/// A strict binary rule. In a normalized grammar every nonterminal owns
/// exactly one of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Product(NtId, NtId),
    Union(NtId, NtId),
    Terminal(TermId),
    Epsilon,
}

/// A grammar in strict binary form. Obtained through [`to_bcnf`]; the
/// samplers and the rank/unrank machinery operate on this type only.
#[derive(Clone, Debug, PartialEq)]
pub struct BcnfGrammar {
    inner: WeightedGrammar,
    /// Exactly one rule per nonterminal, indexed by `NtId`.
    rules: Vec<Rule>,
}

impl BcnfGrammar {
    pub(crate) fn from_parts(inner: WeightedGrammar, rules: Vec<Rule>) -> Self {
        debug_assert_eq!(inner.nonterminal_count(), rules.len());
        BcnfGrammar { inner, rules }
    }

    pub fn as_weighted(&self) -> &WeightedGrammar {
        &self.inner
    }

    pub fn rule(&self, nt: NtId) -> Rule {
        self.rules[nt.0 as usize]
    }

    pub fn axiom(&self) -> NtId {
        self.inner.axiom()
    }

    pub fn nonterminal_count(&self) -> usize {
        self.inner.nonterminal_count()
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = NtId> {
        self.inner.nonterminals()
    }
}

impl fmt::Display for WeightedGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

#[cfg(test)]
mod tests {
    use super::WeightedGrammar;

    #[test]
    fn single_char_words_render_compact() {
        let g =
            WeightedGrammar::parse("axiom S\nterminal a weight 1\nS -> A S | a\nA -> a\n").unwrap();
        let w = g.parse_word("aaa").unwrap();
        assert_eq!(g.render_word(&w), "aaa");
    }

    #[test]
    fn multi_char_terminals_render_space_separated() {
        let g = WeightedGrammar::parse(
            "axiom S\nterminal open weight 1\nterminal close weight 1\n\
             S -> A B\nA -> open\nB -> close\n",
        )
        .unwrap();
        let w = g.parse_word("open close").unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(g.render_word(&w), "open close");
        assert!(g.parse_word("open shut").is_err());
    }
}
