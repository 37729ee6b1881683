//! Batch front end: evaluation, formula compilation, constructions, the
//! graph reduction, EF games, statistics, tree-width and merge checks.
//!
//! `check` exits 0 when the formula holds, 1 when it does not and 2 on any
//! error; every other command exits 0 on success and 2 on error, with
//! messages on standard error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use permlogic::construct::{
    incidence_structure, pi_kl, spiral, staircase_matrix, treewidth, StaircaseOracle, TwMode,
};
use permlogic::ef::{ef_winner, ef_winner_parallel, Winner};
use permlogic::eval::{Assignment, Evaluator};
use permlogic::graph::Graph;
use permlogic::logic::{parse_formula, Formula, Signature, Structure};
use permlogic::merge::{admissible_coloring, Color, Strategy};
use permlogic::perm::{statistics, Permutation};
use permlogic::reduce::{decode_graph, encode_graph, translate_sentence, ReductionMeta, ReductionOutput};
use permlogic::transform;

#[derive(Parser)]
#[command(name = "permlogic", version, about = "Two-order logic on permutations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Theory {
    Toto,
    Word,
    Graph,
    Incidence,
    Linear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Propagate,
    Naive,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a sentence on a structure; exit 0 = true, 1 = false, 2 = error.
    Check {
        /// Structure input: inline text or a file path (a permutation, or
        /// a word / graph file depending on --theory).
        #[arg(long)]
        perm: String,
        /// File holding the sentence.
        #[arg(long)]
        formula: PathBuf,
        #[arg(long, value_enum, default_value = "toto")]
        theory: Theory,
        /// Abort after this many evaluation steps.
        #[arg(long)]
        budget: Option<u64>,
        /// Emit {result, runtime_ms, nodes_evaluated} as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Formula-to-formula compilers; the result prints on standard output.
    #[command(subcommand)]
    Compile(CompileCmd),
    /// Encode a graph and sentence into a permutation and sentence, or
    /// decode a previous encoding.
    Reduce(ReduceArgs),
    /// Construct witness permutations and matrices.
    #[command(subcommand)]
    Construct(ConstructCmd),
    /// Decide the k-move game between two structures.
    Ef {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(short = 'k', long)]
        k: usize,
        #[arg(long, value_enum, default_value = "toto")]
        theory: Theory,
        /// Explore top-level moves on this many threads.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Descents, major index, inversions, fixed points, maxima.
    Stats {
        #[arg(long)]
        perm: String,
        #[arg(long)]
        json: bool,
    },
    /// Tree-width of the permutation's incidence graph.
    Tw {
        #[arg(long)]
        perm: String,
        /// Exact subset dynamic program (up to 14 points) instead of the
        /// greedy upper bound.
        #[arg(long)]
        exact: bool,
    },
    /// Search for a two-coloring with no monochromatic copy of the pattern.
    MergeCheck {
        #[arg(long)]
        perm: String,
        #[arg(long)]
        alpha: String,
        #[arg(long, value_enum, default_value = "propagate")]
        strategy: StrategyArg,
    },
}

#[derive(Subcommand)]
enum CompileCmd {
    /// Modular counting: a sentence true iff the number of satisfying
    /// tuples of the formula is congruent to q modulo r.
    Card {
        #[arg(long)]
        formula: PathBuf,
        /// Number of free element variables the formula must have.
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        r: u32,
    },
    /// The merge sentence of the given part sentences.
    Merge {
        #[arg(long = "formula", required = true)]
        formulas: Vec<PathBuf>,
    },
    /// Relativize all quantifiers to a free set variable.
    Relativize {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        set: String,
    },
    /// Rewrite a two-order formula for words over {a, b}.
    WordSim {
        #[arg(long)]
        formula: PathBuf,
    },
    /// Rewrite a two-order formula over the labeled incidence signature.
    Interpret {
        #[arg(long)]
        formula: PathBuf,
    },
}

#[derive(Args)]
struct ReduceArgs {
    #[command(subcommand)]
    decode: Option<ReduceSub>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    formula: Option<PathBuf>,
    #[arg(long)]
    out_perm: Option<PathBuf>,
    #[arg(long)]
    out_formula: Option<PathBuf>,
    #[arg(long)]
    out_meta: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReduceSub {
    /// Read the graph back from an encoded permutation and its meta file.
    Decode {
        #[arg(long)]
        perm: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// The skew tower with k upper and l lower points.
    Pikl {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
    /// The spiral permutation with 4*ell + 2 blocks over a simple pattern.
    Spiral {
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        alpha: String,
        /// Also emit the block/track plan as JSON.
        #[arg(long)]
        json: bool,
    },
    /// The all-increasing staircase gridding matrix with k cells.
    Staircase {
        #[arg(long)]
        k: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

/// Inline text or the contents of an existing file.
fn read_input(input: &str) -> Result<String, AnyError> {
    if Path::new(input).exists() {
        Ok(fs::read_to_string(input)?.trim().to_string())
    } else {
        Ok(input.to_string())
    }
}

fn read_perm(input: &str) -> Result<Permutation, AnyError> {
    Ok(Permutation::from_str(&read_input(input)?)?)
}

fn read_formula_file(path: &Path, sig: &Signature) -> Result<Formula, AnyError> {
    let text = fs::read_to_string(path)?;
    Ok(parse_formula(text.trim(), sig)?)
}

/// Letters appearing in the word or referenced by `P<letter>(` atoms.
fn word_alphabet(word: &str, formula_text: &str) -> Vec<char> {
    let mut letters: std::collections::BTreeSet<char> =
        word.chars().filter(|c| c.is_ascii_lowercase()).collect();
    let bytes = formula_text.as_bytes();
    for i in 0..bytes.len().saturating_sub(2) {
        if bytes[i] == b'P' && bytes[i + 1].is_ascii_lowercase() && bytes[i + 2] == b'(' {
            let boundary = i == 0 || !(bytes[i - 1] as char).is_ascii_alphanumeric();
            if boundary {
                letters.insert(bytes[i + 1] as char);
            }
        }
    }
    letters.into_iter().collect()
}

fn build_structure(theory: Theory, input: &str, formula_text: &str) -> Result<(Structure, Signature), AnyError> {
    let text = read_input(input)?;
    match theory {
        Theory::Toto => {
            let p: Permutation = text.parse()?;
            Ok((Structure::of_permutation(&p), Signature::toto()))
        }
        Theory::Word => {
            let alphabet = word_alphabet(&text, formula_text);
            let s = Structure::of_word(&text, &alphabet)?;
            let sig = s.signature().clone();
            Ok((s, sig))
        }
        Theory::Graph => {
            let g: Graph = text.parse()?;
            Ok((Structure::of_graph(&g), Signature::graph()))
        }
        Theory::Incidence => {
            let p: Permutation = text.parse()?;
            let li = incidence_structure(&p)?;
            Ok((li.structure().clone(), Signature::incidence()))
        }
        Theory::Linear => {
            let n: usize = text.parse().map_err(|_| "linear theory expects a size")?;
            Ok((Structure::linear_order(n), Signature::linear_order()))
        }
    }
}

fn print_or_write(out: Option<&Path>, content: &str) -> Result<(), AnyError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => println!("{content}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, AnyError> {
    match cli.command {
        Command::Check { perm, formula, theory, budget, json } => {
            let formula_text = fs::read_to_string(&formula)?;
            let (structure, sig) = build_structure(theory, &perm, &formula_text)?;
            let parsed = parse_formula(formula_text.trim(), &sig)?;
            let mut ev = Evaluator::new(&structure, &parsed)?;
            if let Some(b) = budget {
                ev = ev.with_budget(b);
            }
            let start = Instant::now();
            let result = ev.run(&Assignment::new())?;
            let runtime_ms = start.elapsed().as_millis();
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "result": result,
                        "runtime_ms": runtime_ms as u64,
                        "nodes_evaluated": ev.nodes_evaluated(),
                    })
                );
            } else {
                println!("{result}");
            }
            Ok(if result { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }

        Command::Compile(cmd) => {
            let out = match cmd {
                CompileCmd::Card { formula, vars, q, r } => {
                    let phi = read_formula_file(&formula, &Signature::toto())?;
                    let free = phi.free_element_vars();
                    if free.len() != vars {
                        return Err(format!(
                            "formula has {} free element variables, --vars says {vars}",
                            free.len()
                        )
                        .into());
                    }
                    transform::modular_count_sentence(&phi, q, r)?
                }
                CompileCmd::Merge { formulas } => {
                    let parts = formulas
                        .iter()
                        .map(|f| read_formula_file(f, &Signature::toto()))
                        .collect::<Result<Vec<_>, _>>()?;
                    transform::merge_sentence(&parts)?
                }
                CompileCmd::Relativize { formula, set } => {
                    let phi = read_formula_file(&formula, &Signature::toto())?;
                    transform::relativize(&phi, &set)?
                }
                CompileCmd::WordSim { formula } => {
                    let phi = read_formula_file(&formula, &Signature::toto())?;
                    transform::word_simulation(&phi)?
                }
                CompileCmd::Interpret { formula } => {
                    let phi = read_formula_file(&formula, &Signature::toto())?;
                    transform::interpret_incidence(&phi)?
                }
            };
            println!("{out}");
            Ok(ExitCode::SUCCESS)
        }

        Command::Reduce(args) => {
            if let Some(ReduceSub::Decode { perm, meta }) = args.decode {
                let permutation: Permutation = fs::read_to_string(&perm)?.trim().parse()?;
                let meta: ReductionMeta = serde_json::from_str(&fs::read_to_string(&meta)?)?;
                let out = ReductionOutput { permutation, sentence: None, meta };
                let g = decode_graph(&out)?;
                print!("{g}");
                return Ok(ExitCode::SUCCESS);
            }
            let graph_path = args.graph.ok_or("reduce requires --graph")?;
            let formula_path = args.formula.ok_or("reduce requires --formula")?;
            let g: Graph = fs::read_to_string(&graph_path)?.parse()?;
            let phi = read_formula_file(&formula_path, &Signature::graph())?;
            let mut out = encode_graph(&g, &StaircaseOracle)?;
            out.sentence = Some(translate_sentence(&phi)?);
            print_or_write(args.out_perm.as_deref(), &format!("{}\n", out.permutation))?;
            print_or_write(
                args.out_formula.as_deref(),
                &format!("{}\n", out.sentence.as_ref().unwrap()),
            )?;
            print_or_write(
                args.out_meta.as_deref(),
                &format!("{}\n", serde_json::to_string_pretty(&out.meta)?),
            )?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Construct(cmd) => {
            match cmd {
                ConstructCmd::Pikl { k, l } => println!("{}", pi_kl(k, l)),
                ConstructCmd::Spiral { ell, alpha, json } => {
                    let alpha = read_perm(&alpha)?;
                    let (p, plan) = spiral(ell, &alpha)?;
                    if json {
                        println!(
                            "{}",
                            serde_json::json!({
                                "permutation": p.to_string(),
                                "plan": serde_json::to_value(&plan)?,
                            })
                        );
                    } else {
                        println!("{p}");
                    }
                }
                ConstructCmd::Staircase { k } => {
                    if k == 0 {
                        return Err("staircase requires k >= 1".into());
                    }
                    print!("{}", staircase_matrix(k));
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Ef { left, right, k, theory, threads } => {
            let (a, _) = build_structure(theory, &left, "")?;
            let (b, _) = build_structure(theory, &right, "")?;
            let winner = match threads {
                Some(t) if t > 1 => ef_winner_parallel(&a, &b, k, t)?,
                _ => ef_winner(&a, &b, k)?,
            };
            match winner {
                Winner::Duplicator => println!("Duplicator"),
                Winner::Spoiler => println!("Spoiler"),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Stats { perm, json } => {
            let p = read_perm(&perm)?;
            let s = statistics(&p);
            if json {
                println!("{}", serde_json::to_string(&s)?);
            } else {
                fn join(set: &std::collections::BTreeSet<usize>) -> String {
                    set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
                }
                println!("descent_set: {}", join(&s.descent_set));
                println!("maj: {}", s.maj);
                println!("inversions: {}", s.inversions);
                println!("fixed_points: {}", join(&s.fixed_points));
                println!("ltr_maxima: {}", join(&s.ltr_maxima));
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Tw { perm, exact } => {
            let p = read_perm(&perm)?;
            let g = permlogic::construct::incidence_graph(&p);
            let mode = if exact { TwMode::Exact } else { TwMode::Upper };
            println!("{}", treewidth(&g, mode)?);
            Ok(ExitCode::SUCCESS)
        }

        Command::MergeCheck { perm, alpha, strategy } => {
            let p = read_perm(&perm)?;
            let a = read_perm(&alpha)?;
            let strategy = match strategy {
                StrategyArg::Propagate => Strategy::Propagate,
                StrategyArg::Naive => Strategy::Naive,
            };
            match admissible_coloring(&p, &a, strategy)? {
                Some(coloring) => {
                    let text: Vec<&str> = coloring
                        .iter()
                        .map(|c| match c {
                            Color::Red => "R",
                            Color::Blue => "B",
                        })
                        .collect();
                    println!("{}", text.join(" "));
                }
                None => println!("none"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
