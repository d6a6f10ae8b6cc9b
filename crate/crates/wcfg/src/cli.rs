//! Command-line surface: normalize, validate, count, enumerate, sample,
//! rank, unrank, bench.
//!
//! Exit codes: 0 ok, 2 usage or out-of-range argument, 3 grammar parse or
//! validation failure, 4 exhausted, 5 internal invariant breach. Errors
//! carry a machine-readable class: `error[parse]: ...`, `error[range]: ...`
//! and so on; `--json` switches all output to structured JSON with big
//! integers and rationals rendered as decimal strings.

use crate::grammar::{to_bcnf, BcnfGrammar, WeightedGrammar, Word};
use crate::session::{generate_distinct, mean_rejection_attempts, Engine, Outcome, SessionConfig};
use crate::unranking::{rank, unrank, RankError};
use crate::weights::{ScaledGrammar, WeightTable};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Num, One};
use serde_json::json;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "wcfg",
    about = "Non-redundant random generation from weighted context-free grammars",
    after_help = "Grammar files are line oriented: `axiom S`, `terminal a weight 1/2`, \
                  and rules `S -> T | b` with at most two symbols per alternative \
                  (`_eps_` for the empty word). Ranks are decimal integers in the \
                  scaled-weight domain (see `count` for the scale factor D)."
)]
struct Cli {
    /// Emit structured JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rewrite a grammar into strict binary normal form.
    Normalize { grammar: PathBuf },
    /// Report unproductive nonterminals, nullable cycles, and unreachable symbols.
    Validate { grammar: PathBuf },
    /// Print the total scaled mass of the language at length N.
    Count {
        grammar: PathBuf,
        #[arg(short, long)]
        n: usize,
    },
    /// List all words of length N with their scaled weights, in rank order.
    Enumerate {
        grammar: PathBuf,
        #[arg(short, long)]
        n: usize,
    },
    /// Draw K pairwise-distinct words of length N.
    Sample {
        grammar: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        k: u64,
        #[arg(long, value_enum, default_value = "recursive")]
        engine: EngineArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// File of words to avoid, one per line.
        #[arg(long)]
        forbid: Option<PathBuf>,
        /// Cap on total draws (rejection engine can stall without one).
        #[arg(long)]
        attempt_cap: Option<u64>,
    },
    /// Print the rank interval of a word.
    Rank {
        grammar: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long)]
        word: String,
    },
    /// Print the word whose rank interval contains a rank.
    Unrank {
        grammar: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long)]
        rank: String,
    },
    /// Mean rejection draws to collect 1..=k-max distinct words.
    Bench {
        grammar: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k_max: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Rejection,
    Recursive,
    Unranking,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Rejection => Engine::Rejection,
            EngineArg::Recursive => Engine::Recursive,
            EngineArg::Unranking => Engine::Unranking,
        }
    }
}

/// Error classes with their exit codes.
enum CliError {
    Parse(String),
    Validation(String),
    Range(String),
    Exhausted(String),
    Internal(String),
}

impl CliError {
    fn class(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Range(_) => "range",
            CliError::Exhausted(_) => "exhausted",
            CliError::Internal(_) => "internal",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Validation(m)
            | CliError::Range(m)
            | CliError::Exhausted(m)
            | CliError::Internal(m) => m,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Range(_) => 2,
            CliError::Parse(_) | CliError::Validation(_) => 3,
            CliError::Exhausted(_) => 4,
            CliError::Internal(_) => 5,
        }
    }
}

/// Run the command line. Returns the process exit code; output goes to
/// stdout, diagnostics to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land here too; keep clap's exit semantics.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let json = cli.json;
    // Engine invariants surface as panics; report them on the internal
    // class rather than aborting with the default panic exit status.
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(cli)))
        .unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "invariant breach".to_string());
            Err(CliError::Internal(msg))
        });
    match result {
        Ok(()) => 0,
        Err(e) => {
            if json {
                eprintln!(
                    "{}",
                    json!({"error": {"class": e.class(), "message": e.message()}})
                );
            } else {
                eprintln!("error[{}]: {}", e.class(), e.message());
            }
            e.exit_code()
        }
    }
}

fn rational_str(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn load_grammar(path: &Path) -> Result<WeightedGrammar, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    WeightedGrammar::parse(&text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Parse, validate, normalize, and scale: the common front half of every
/// verb that runs the engines.
fn prepare(path: &Path) -> Result<ScaledGrammar, CliError> {
    let g = load_grammar(path)?;
    let report = g.validate();
    if !report.is_valid() {
        return Err(CliError::Validation(
            report.render(&g).trim_end().to_string(),
        ));
    }
    let bcnf: BcnfGrammar = to_bcnf(&g).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(ScaledGrammar::new(bcnf))
}

fn load_forbidden(sg: &ScaledGrammar, path: &Path) -> Result<Vec<Word>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let g = sg.grammar().as_weighted();
    let mut words = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let w = g
            .parse_word(line)
            .map_err(|e| CliError::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?;
        words.push(w);
    }
    Ok(words)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let json = cli.json;
    match cli.cmd {
        Cmd::Normalize { grammar } => {
            let g = load_grammar(&grammar)?;
            let bcnf = to_bcnf(&g).map_err(|e| CliError::Validation(e.to_string()))?;
            if json {
                println!("{}", json!({"grammar": bcnf.as_weighted().serialize()}));
            } else {
                print!("{}", bcnf.as_weighted().serialize());
            }
            Ok(())
        }
        Cmd::Validate { grammar } => {
            let g = load_grammar(&grammar)?;
            let report = g.validate();
            if json {
                let names = |ids: &[crate::grammar::NtId]| -> Vec<String> {
                    ids.iter()
                        .map(|&n| g.nonterminal_name(n).to_string())
                        .collect()
                };
                println!(
                    "{}",
                    json!({
                        "valid": report.is_valid(),
                        "unproductive": names(&report.unproductive),
                        "nullable_cycles": names(&report.zero_cycles),
                        "unreachable": names(&report.unreachable),
                    })
                );
            } else {
                print!("{}", report.render(&g));
            }
            if report.is_valid() {
                Ok(())
            } else {
                Err(CliError::Validation("grammar is invalid".to_string()))
            }
        }
        Cmd::Count { grammar, n } => {
            let sg = prepare(&grammar)?;
            let wt = WeightTable::build(&sg, n);
            let total = wt.mass(sg.grammar().axiom(), n).clone();
            let scale = sg.scale().clone();
            let weight =
                BigRational::new(total.clone().into(), BigUint::pow(&scale, n as u32).into());
            if json {
                println!(
                    "{}",
                    json!({
                        "count": total.to_string(),
                        "scale": scale.to_string(),
                        "weight": rational_str(&weight),
                    })
                );
            } else {
                println!("{total}");
                if !scale.is_one() {
                    println!("scale {scale}");
                    println!("weight {}", rational_str(&weight));
                }
            }
            Ok(())
        }
        Cmd::Enumerate { grammar, n } => {
            let sg = prepare(&grammar)?;
            let g = sg.grammar().as_weighted();
            let words = crate::grammar::enumerate_words(&sg, n);
            if json {
                let items: Vec<_> = words
                    .iter()
                    .map(|(w, wt)| json!({"word": g.render_word(w), "weight": wt.to_string()}))
                    .collect();
                println!("{}", json!({"words": items}));
            } else {
                for (w, wt) in &words {
                    println!("{}\t{}", g.render_word(w), wt);
                }
            }
            Ok(())
        }
        Cmd::Sample {
            grammar,
            n,
            k,
            engine,
            seed,
            forbid,
            attempt_cap,
        } => {
            let sg = prepare(&grammar)?;
            let wt = WeightTable::build(&sg, n);
            let external = match &forbid {
                Some(path) => load_forbidden(&sg, path)?,
                None => Vec::new(),
            };
            let cfg = SessionConfig {
                n,
                k,
                engine: engine.into(),
                seed,
                external_forbidden: external,
                attempt_cap,
            };
            let set = generate_distinct(&sg, &wt, &cfg);
            let g = sg.grammar().as_weighted();
            if json {
                let items: Vec<_> = set
                    .words
                    .iter()
                    .zip(&set.probabilities)
                    .map(|(w, p)| {
                        json!({
                            "word": g.render_word(w),
                            "weight": sg.word_weight(w).to_string(),
                            "probability": rational_str(p),
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    json!({
                        "words": items,
                        "attempts": set.attempts,
                        "exhausted": set.outcome == Outcome::Exhausted,
                        "cap_reached": set.outcome == Outcome::AttemptCapReached,
                    })
                );
            } else {
                for w in &set.words {
                    println!("{}", g.render_word(w));
                }
            }
            match set.outcome {
                Outcome::Complete => Ok(()),
                Outcome::Exhausted => Err(CliError::Exhausted(format!(
                    "only {} admissible words exist at length {n}",
                    set.words.len()
                ))),
                Outcome::AttemptCapReached => Err(CliError::Exhausted(format!(
                    "attempt cap hit after {} draws with {} words found",
                    set.attempts,
                    set.words.len()
                ))),
            }
        }
        Cmd::Rank { grammar, n, word } => {
            let sg = prepare(&grammar)?;
            let wt = WeightTable::build(&sg, n);
            let g = sg.grammar().as_weighted();
            let w = g.parse_word(&word).map_err(CliError::Range)?;
            if w.len() != n {
                return Err(CliError::Range(format!(
                    "word has length {}, expected {n}",
                    w.len()
                )));
            }
            let interval = rank(&sg, &wt, &w).map_err(|e| CliError::Range(e.to_string()))?;
            if json {
                println!(
                    "{}",
                    json!({"low": interval.low.to_string(), "high": interval.high.to_string()})
                );
            } else {
                println!("{interval}");
            }
            Ok(())
        }
        Cmd::Unrank {
            grammar,
            n,
            rank: rank_str,
        } => {
            let sg = prepare(&grammar)?;
            let wt = WeightTable::build(&sg, n);
            let r = BigUint::from_str_radix(&rank_str, 10)
                .map_err(|_| CliError::Range(format!("malformed rank `{rank_str}`")))?;
            let (w, interval) =
                unrank(&sg, &wt, sg.grammar().axiom(), n, &r).map_err(|e| match e {
                    RankError::OutOfRange { .. } => CliError::Range(e.to_string()),
                    RankError::NotInLanguage => CliError::Internal(e.to_string()),
                })?;
            let g = sg.grammar().as_weighted();
            if json {
                println!(
                    "{}",
                    json!({
                        "word": g.render_word(&w),
                        "low": interval.low.to_string(),
                        "high": interval.high.to_string(),
                    })
                );
            } else {
                println!("{} {interval}", g.render_word(&w));
            }
            Ok(())
        }
        Cmd::Bench {
            grammar,
            n,
            k_max,
            trials,
            seed,
        } => {
            let sg = prepare(&grammar)?;
            let wt = WeightTable::build(&sg, n);
            let means = mean_rejection_attempts(&sg, &wt, n, k_max, trials, seed);
            if json {
                let items: Vec<_> = means
                    .iter()
                    .enumerate()
                    .map(|(i, m)| json!({"k": i + 1, "mean_attempts": m}))
                    .collect();
                println!("{}", json!({"trials": trials, "rows": items}));
            } else {
                println!("k\tmean_attempts");
                for (i, m) in means.iter().enumerate() {
                    println!("{}\t{m:.3}", i + 1);
                }
            }
            Ok(())
        }
    }
}

impl fmt::Debug for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class(), self.message())
    }
}
