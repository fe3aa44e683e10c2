use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cosetlin::covering::Strategy;
use cosetlin::io::{LiftStats, ResultRecord};
use cosetlin::lifting::{lift, Kind};
use cosetlin::oracles::{brute_force_opt, regime_flags, OracleBudget};
use cosetlin::solver::verify_deletion;
use cosetlin::{
    generate_planted, parse_instance, solve, write_instance, GenParams, Instance, Mode,
    SolverConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "cosetlin",
    version,
    about = "Constraint deletion for dyadic-list linear equations mod 2^d"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a deletion set of at most K constraints.
    Solve(SolveArgs),
    /// Show the lifted gain graph.
    Lift {
        instance: PathBuf,
        /// Print only the summary.
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check that deleting the listed constraints leaves a satisfiable instance.
    Verify {
        instance: PathBuf,
        /// JSON result record or a list of constraint ids.
        #[arg(long)]
        deletions: PathBuf,
    },
    /// Generate a planted instance.
    Gen(GenArgs),
    /// Exact optimum by exhaustive search (small instances only).
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        weighted: bool,
        #[arg(long)]
        json: bool,
    },
    /// Instance summary.
    Stats {
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, env = "COSETLIN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "cycle-sampling")]
    strategy: String,
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value = "covering")]
    mode: String,
    /// Candidates tried per covering attempt before it is cut short.
    #[arg(long, default_value_t = 1_000_000)]
    candidate_budget: u64,
    /// Rely on covering alone even when lifted balance does not decide satisfiability.
    #[arg(long)]
    no_fallback: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    d: u32,
    #[arg(long, default_value_t = 1)]
    plant_k: usize,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    /// Relative weights of eq, neg and dbl.
    #[arg(long, value_delimiter = ',', num_args = 3, default_value = "1,1,1")]
    mix: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    anchors: usize,
    #[arg(long, default_value_t = 1)]
    max_weight: i64,
    #[arg(long, env = "COSETLIN_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the instance here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the planted constraint ids here.
    #[arg(long)]
    planted: Option<PathBuf>,
}

/// Failure exit code for usage, parse and I/O errors.
const USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}

fn load(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn exit(ok: bool) -> u8 {
    if ok {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(a) => {
            let instance = load(&a.instance)?;
            let cfg = SolverConfig {
                k: a.budget,
                repetitions: a.reps,
                seed: a.seed,
                strategy: a.strategy.parse::<Strategy>()?,
                weighted: a.weighted,
                mode: a.mode.parse::<Mode>()?,
                candidate_budget: a.candidate_budget,
                exact_fallback: !a.no_fallback,
            };
            let report = solve(&instance, &cfg)?;
            let record = ResultRecord::new(&report, &cfg);
            if a.json {
                println!("{}", serde_json::to_string_pretty(&record)?);
            } else {
                println!("{}", record.answer);
                if let Some(best) = &report.best {
                    let names: Vec<String> = best
                        .constraint_ids
                        .iter()
                        .map(|id| id.to_string())
                        .collect();
                    println!("deletions: [{}]", names.join(", "));
                    println!(
                        "cardinality: {}  weight: {}",
                        best.cardinality, best.total_weight
                    );
                }
                println!(
                    "rho: {}  R: {}  exact regime: {}  mandatory: {:?}",
                    record.rho, record.ambient_dim, record.exact_regime, record.mandatory_deletions
                );
                if !record.f_sizes.is_empty() {
                    let max = record.f_sizes.iter().max().copied().unwrap_or(0);
                    println!(
                        "attempts: {}  max |F|: {}  candidates: {}  verifications: {}",
                        record.f_sizes.len(),
                        max,
                        record.candidates_enumerated,
                        record.verification_calls
                    );
                }
                if record.truncated_attempts > 0 {
                    println!("truncated attempts: {}", record.truncated_attempts);
                }
            }
            Ok(exit(record.is_yes()))
        }
        Command::Lift {
            instance,
            stats,
            json,
        } => {
            let instance = load(&instance)?;
            let lifted = lift(&instance);
            let summary = LiftStats::new(&lifted);
            if json {
                let mut value = serde_json::to_value(&summary)?;
                if !stats {
                    let g = &lifted.graph;
                    let edges: Vec<_> = (0..g.edge_count())
                        .map(|e| {
                            let (u, v) = g.endpoints(e);
                            json!({
                                "constraint": lifted.constraint_ids[lifted.constraint_of_edge[e]],
                                "u": u,
                                "v": v,
                                "label": g.label(e).to_string(),
                            })
                        })
                        .collect();
                    value["edges"] = json!(edges);
                }
                println!("{}", serde_json::to_string_pretty(&value)?);
            } else {
                println!(
                    "rho: {}\nR: {}\nmu: {}\nvertices: {}\nedges: {}\nexact_regime: {}\nmandatory: {:?}",
                    summary.rho,
                    summary.ambient_dim,
                    summary.mu,
                    summary.vertices,
                    summary.edges,
                    summary.exact_regime,
                    summary.mandatory_deletions
                );
                if !stats {
                    let g = &lifted.graph;
                    for e in 0..g.edge_count() {
                        let (u, v) = g.endpoints(e);
                        let name = |x: usize| {
                            if x == lifted.anchor_vertex {
                                "*".to_string()
                            } else {
                                instance.names()[x].clone()
                            }
                        };
                        println!(
                            "c{}: {} -- {} [{}]",
                            lifted.constraint_ids[lifted.constraint_of_edge[e]],
                            name(u),
                            name(v),
                            g.label(e)
                        );
                    }
                }
            }
            Ok(0)
        }
        Command::Verify {
            instance,
            deletions,
        } => {
            let instance = load(&instance)?;
            let text = fs::read_to_string(&deletions)
                .with_context(|| format!("reading {}", deletions.display()))?;
            let ids = parse_deletions(&text)?;
            let ok = verify_deletion(&instance, &ids)?;
            println!("{}", if ok { "VALID" } else { "INVALID" });
            Ok(exit(ok))
        }
        Command::Gen(a) => {
            let params = GenParams {
                n: a.n,
                m: a.m,
                d: a.d,
                plant_k: a.plant_k,
                list_density: a.density,
                kind_mix: [a.mix[0], a.mix[1], a.mix[2]],
                anchors: a.anchors,
                max_weight: a.max_weight,
                seed: a.seed,
            };
            let (instance, planted) = generate_planted(&params)?;
            let text = write_instance(&instance);
            match &a.out {
                Some(path) => {
                    fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
                }
                None => print!("{text}"),
            }
            if let Some(path) = &a.planted {
                let ids: Vec<String> = planted
                    .constraint_ids
                    .iter()
                    .map(|id| id.to_string())
                    .collect();
                fs::write(path, ids.join(" ") + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(0)
        }
        Command::Oracle {
            instance,
            budget,
            weighted,
            json,
        } => {
            let instance = load(&instance)?;
            let best = brute_force_opt(&instance, budget, weighted, &OracleBudget::default())?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(
                        &json!({ "answer": if best.is_some() { "YES" } else { "NO" }, "best": best })
                    )?
                );
            } else {
                match &best {
                    Some(b) => println!(
                        "YES\ndeletions: {:?}\ncardinality: {}  weight: {}",
                        b.constraint_ids, b.cardinality, b.total_weight
                    ),
                    None => println!("NO"),
                }
            }
            Ok(exit(best.is_some()))
        }
        Command::Stats { instance, json } => {
            let instance = load(&instance)?;
            let count = |k: Kind| {
                instance
                    .constraints()
                    .iter()
                    .filter(|c| c.relation.kind() == k)
                    .count()
            };
            let restricted = instance.lists().iter().filter(|l| l.ell > 0).count();
            let flags = regime_flags(&instance);
            let value = json!({
                "variables": instance.variable_count(),
                "constraints": instance.constraint_count(),
                "d": instance.depth(),
                "eq": count(Kind::Eq),
                "neg": count(Kind::Neg),
                "dbl": count(Kind::Dbl),
                "anchor": count(Kind::Anchor),
                "restricted_lists": restricted,
                "regimes": flags,
            });
            if json {
                println!("{}", serde_json::to_string_pretty(&value)?);
            } else {
                println!(
                    "variables: {}\nconstraints: {} (eq {}, neg {}, dbl {}, anchor {})\nd: {}\nrestricted lists: {}",
                    instance.variable_count(),
                    instance.constraint_count(),
                    count(Kind::Eq),
                    count(Kind::Neg),
                    count(Kind::Dbl),
                    count(Kind::Anchor),
                    instance.depth(),
                    restricted
                );
                println!(
                    "d <= 2: {}\none free bit: {}\neq-only zero offset: {}\nlift exact: {}",
                    flags.depth_at_most_two,
                    flags.one_free_bit,
                    flags.eq_zero_offset,
                    flags.lift_exact
                );
            }
            Ok(0)
        }
    }
}

/// Ids from a JSON result record or a whitespace/comma separated list.
fn parse_deletions(text: &str) -> Result<Vec<usize>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let record: ResultRecord = serde_json::from_str(text).context("reading result record")?;
        return Ok(record.deletions);
    }
    if trimmed.starts_with('[') {
        return serde_json::from_str(text).context("reading id list");
    }
    let mut ids = Vec::new();
    for tok in text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
    {
        match tok.parse() {
            Ok(id) => ids.push(id),
            Err(_) => bail!("`{tok}` is not a constraint id"),
        }
    }
    Ok(ids)
}
