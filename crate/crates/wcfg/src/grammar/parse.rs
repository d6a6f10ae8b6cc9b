//! The line-oriented grammar text format.
//!
//! ```text
//! # comment
//! axiom S
//! terminal a weight 1
//! terminal b weight 1/2
//! S -> T | b
//! T -> a U
//! U -> S S
//! E -> _eps_
//! ```
//!
//! Identifiers starting with a lowercase letter are terminals, all others
//! are nonterminals, unless a `terminal` line says otherwise. Weights are
//! exact rationals: integers, `p/q` fractions, or decimal strings (parsed
//! exactly, `0.25` is 1/4). Undeclared terminals default to weight 1.

use super::{Alt, NtId, Symbol, TermId, WeightedGrammar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;
use thiserror::Error;

const EPSILON_KEYWORD: &str = "_eps_";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}, column {col}: unknown symbol `{name}`")]
    UnknownSymbol {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("line {line}: duplicate rule for nonterminal `{name}`")]
    DuplicateRule { line: usize, name: String },
    #[error("line {line}, column {col}: rule arity exceeds binary/CNF shapes")]
    ArityExceeded { line: usize, col: usize },
    #[error("line {line}: weight of `{name}` must be a positive rational")]
    NonpositiveWeight { line: usize, name: String },
    #[error("missing axiom declaration")]
    MissingAxiom,
    #[error("line {line}: duplicate {what} declaration for `{name}`")]
    Duplicate {
        line: usize,
        what: &'static str,
        name: String,
    },
    #[error("line {line}: `{name}` is declared both terminal and nonterminal")]
    KindConflict { line: usize, name: String },
}

/// A token with its 1-based column.
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok {
                    text: &line[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok {
            text: &line[s..],
            col: s + 1,
        });
    }
    toks
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

fn looks_terminal(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

/// Parse an exact positive rational: `3`, `3/4`, or `0.25`.
fn parse_weight(s: &str) -> Option<BigRational> {
    let value = if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.parse().ok()?;
        let den: BigInt = q.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        BigRational::new(num, den)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        BigRational::new(digits, den)
    } else {
        BigRational::from_integer(s.parse().ok()?)
    };
    Some(value)
}

struct RuleLine<'a> {
    line: usize,
    lhs: Tok<'a>,
    alts: Vec<Vec<Tok<'a>>>,
}

pub(super) fn parse(text: &str) -> Result<WeightedGrammar, ParseError> {
    let syntax = |line: usize, col: usize, msg: &str| ParseError::Syntax {
        line,
        col,
        msg: msg.to_string(),
    };

    let mut axiom_name: Option<(String, usize, usize)> = None;
    let mut decl_terms: Vec<String> = Vec::new();
    let mut decl_weights: HashMap<String, BigRational> = HashMap::new();
    let mut rule_lines: Vec<RuleLine<'_>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let toks = tokenize(line);
        if toks.is_empty() {
            continue;
        }
        match toks[0].text {
            "axiom" => {
                if toks.len() != 2 {
                    return Err(syntax(
                        lineno,
                        toks[0].col,
                        "expected `axiom <nonterminal>`",
                    ));
                }
                if axiom_name.is_some() {
                    return Err(ParseError::Duplicate {
                        line: lineno,
                        what: "axiom",
                        name: toks[1].text.to_string(),
                    });
                }
                axiom_name = Some((toks[1].text.to_string(), lineno, toks[1].col));
            }
            "terminal" | "weight" => {
                // `terminal t weight W` or the shorthand `weight t W`.
                let (name_tok, weight_tok) = if toks[0].text == "terminal" {
                    if toks.len() == 2 {
                        (&toks[1], None)
                    } else if toks.len() == 4 && toks[2].text == "weight" {
                        (&toks[1], Some(&toks[3]))
                    } else {
                        return Err(syntax(
                            lineno,
                            toks[0].col,
                            "expected `terminal <t> [weight <value>]`",
                        ));
                    }
                } else {
                    if toks.len() != 3 {
                        return Err(syntax(lineno, toks[0].col, "expected `weight <t> <value>`"));
                    }
                    (&toks[1], Some(&toks[2]))
                };
                if !is_ident(name_tok.text) {
                    return Err(syntax(lineno, name_tok.col, "invalid terminal name"));
                }
                let name = name_tok.text.to_string();
                if !decl_terms.contains(&name) {
                    decl_terms.push(name.clone());
                } else if toks[0].text == "terminal" {
                    return Err(ParseError::Duplicate {
                        line: lineno,
                        what: "terminal",
                        name,
                    });
                }
                if let Some(w) = weight_tok {
                    let value = parse_weight(w.text)
                        .ok_or_else(|| syntax(lineno, w.col, "malformed weight"))?;
                    if value <= BigRational::zero() {
                        return Err(ParseError::NonpositiveWeight { line: lineno, name });
                    }
                    if decl_weights.insert(name.clone(), value).is_some() {
                        return Err(ParseError::Duplicate {
                            line: lineno,
                            what: "weight",
                            name,
                        });
                    }
                }
            }
            _ => {
                // `<NT> -> alt | alt`
                let arrow = toks.iter().position(|t| t.text == "->").ok_or_else(|| {
                    syntax(
                        lineno,
                        toks[0].col,
                        "expected `axiom`, `terminal`, `weight`, or a rule",
                    )
                })?;
                if arrow != 1 {
                    return Err(syntax(
                        lineno,
                        toks[0].col,
                        "rule must start with `<name> ->`",
                    ));
                }
                if !is_ident(toks[0].text) || toks[0].text == EPSILON_KEYWORD {
                    return Err(syntax(lineno, toks[0].col, "invalid nonterminal name"));
                }
                let mut alts: Vec<Vec<Tok<'_>>> = vec![Vec::new()];
                for t in toks.into_iter().skip(2) {
                    if t.text == "|" {
                        alts.push(Vec::new());
                    } else if is_ident(t.text) {
                        alts.last_mut().unwrap().push(t);
                    } else {
                        return Err(syntax(
                            lineno,
                            t.col,
                            "expected identifier, `|`, or `_eps_`",
                        ));
                    }
                }
                let lhs_col = 1;
                for alt in &alts {
                    match alt.len() {
                        0 => return Err(syntax(lineno, lhs_col, "empty alternative")),
                        1 | 2 => {}
                        _ => {
                            return Err(ParseError::ArityExceeded {
                                line: lineno,
                                col: alt[2].col,
                            })
                        }
                    }
                    if alt.len() == 2 && alt.iter().any(|t| t.text == EPSILON_KEYWORD) {
                        return Err(syntax(
                            lineno,
                            alt[0].col,
                            "`_eps_` cannot appear in a pair",
                        ));
                    }
                }
                let lhs_text = line.split_whitespace().next().unwrap();
                let lhs = Tok {
                    text: lhs_text,
                    col: lhs_col,
                };
                if rule_lines.iter().any(|r| r.lhs.text == lhs.text) {
                    return Err(ParseError::DuplicateRule {
                        line: lineno,
                        name: lhs.text.to_string(),
                    });
                }
                rule_lines.push(RuleLine {
                    line: lineno,
                    lhs,
                    alts,
                });
            }
        }
    }

    // Second pass: assign ids (terminals in declaration order, nonterminals
    // in rule-line order) and resolve all right-hand sides.
    let mut nt_ids: HashMap<&str, NtId> = HashMap::new();
    let mut nonterminals: Vec<String> = Vec::new();
    for r in &rule_lines {
        if decl_terms.iter().any(|t| t == r.lhs.text) {
            return Err(ParseError::KindConflict {
                line: r.line,
                name: r.lhs.text.to_string(),
            });
        }
        nt_ids.insert(r.lhs.text, NtId(nonterminals.len() as u32));
        nonterminals.push(r.lhs.text.to_string());
    }
    let mut term_ids: HashMap<String, TermId> = HashMap::new();
    let mut terminals: Vec<String> = Vec::new();
    let mut weights: Vec<BigRational> = Vec::new();
    for name in &decl_terms {
        term_ids.insert(name.clone(), TermId(terminals.len() as u32));
        terminals.push(name.clone());
        weights.push(decl_weights.remove(name).unwrap_or_else(BigRational::one));
    }

    let mut rules: Vec<Vec<Alt>> = Vec::with_capacity(rule_lines.len());
    for r in &rule_lines {
        let mut alts = Vec::with_capacity(r.alts.len());
        for alt in &r.alts {
            if alt.len() == 1 && alt[0].text == EPSILON_KEYWORD {
                alts.push(Alt::Epsilon);
                continue;
            }
            let mut syms = Vec::with_capacity(alt.len());
            for t in alt {
                if t.text == EPSILON_KEYWORD {
                    unreachable!("rejected above");
                }
                let sym = if let Some(&id) = nt_ids.get(t.text) {
                    Symbol::Nonterminal(id)
                } else if let Some(id) = term_ids.get(t.text) {
                    Symbol::Terminal(*id)
                } else if looks_terminal(t.text) {
                    // Implicitly declared terminal, weight 1.
                    let id = TermId(terminals.len() as u32);
                    term_ids.insert(t.text.to_string(), id);
                    terminals.push(t.text.to_string());
                    weights.push(BigRational::one());
                    Symbol::Terminal(id)
                } else {
                    return Err(ParseError::UnknownSymbol {
                        line: r.line,
                        col: t.col,
                        name: t.text.to_string(),
                    });
                };
                syms.push(sym);
            }
            alts.push(match syms.len() {
                1 => Alt::Single(syms[0]),
                2 => Alt::Pair(syms[0], syms[1]),
                _ => unreachable!("arity checked above"),
            });
        }
        rules.push(alts);
    }

    let (axiom_name, axiom_line, axiom_col) = axiom_name.ok_or(ParseError::MissingAxiom)?;
    let axiom = *nt_ids
        .get(axiom_name.as_str())
        .ok_or(ParseError::UnknownSymbol {
            line: axiom_line,
            col: axiom_col,
            name: axiom_name,
        })?;

    Ok(WeightedGrammar::from_parts(
        terminals,
        nonterminals,
        rules,
        axiom,
        weights,
    ))
}

fn format_weight(w: &BigRational) -> String {
    if w.denom().is_one() {
        w.numer().to_string()
    } else {
        format!("{}/{}", w.numer(), w.denom())
    }
}

pub(super) fn serialize(g: &WeightedGrammar) -> String {
    let mut out = String::new();
    out.push_str(&format!("axiom {}\n", g.nonterminal_name(g.axiom())));
    for t in g.terminals() {
        out.push_str(&format!(
            "terminal {} weight {}\n",
            g.terminal_name(t),
            format_weight(g.weight(t))
        ));
    }
    let name = |s: &super::Symbol| match *s {
        Symbol::Terminal(t) => g.terminal_name(t).to_string(),
        Symbol::Nonterminal(n) => g.nonterminal_name(n).to_string(),
    };
    for nt in g.nonterminals() {
        let alts: Vec<String> = g
            .alternatives(nt)
            .iter()
            .map(|alt| match alt {
                Alt::Epsilon => EPSILON_KEYWORD.to_string(),
                Alt::Single(s) => name(s),
                Alt::Pair(a, b) => format!("{} {}", name(a), name(b)),
            })
            .collect();
        out.push_str(&format!(
            "{} -> {}\n",
            g.nonterminal_name(nt),
            alts.join(" | ")
        ));
    }
    out
}
