//! Command-line driver: model generation, one-step and bounded exploration,
//! Monte-Carlo simulation, and the two reachability checkers.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use confmc::antichain::{check_reach, ReachOutcome};
use confmc::explore::{
    empirical_hit_frequency, explore, reach_prob_bounded, simulate, ExploreOptions,
};
use confmc::gen::{gen_casino, gen_exam, gen_subsetsum, table1};
use confmc::io::{
    certificate_file, parse_model, parse_query, query_file, serialize_model, successors_field,
    Query, ResultRecord,
};
use confmc::lp::ExactSimplex;
use confmc::model::MdpModel;
use confmc::rat::{format_rat, parse_rat};
use confmc::scheduler::Scheduler;
use confmc::semantics::{config_step, SemanticsId};
use confmc::synthesis::{check_msct, CheckOptions, CheckOutcome, SolverChoice};

#[derive(Parser)]
#[command(name = "confmc", version, about = "Configuration Markov chains for MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct ModelQueryArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Query file (JSON).
    #[arg(long)]
    query: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// One config-MC step from the query's initial configuration.
    Step {
        #[command(flatten)]
        common: ModelQueryArgs,
    },
    /// Bounded breadth-first unfolding; reports the exact bounded
    /// reachability probability of the query target.
    Explore {
        #[command(flatten)]
        common: ModelQueryArgs,
        /// Unfolding depth.
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Write the explored graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Monte-Carlo simulation of the config MC.
    Simulate {
        #[command(flatten)]
        common: ModelQueryArgs,
        /// Steps per run.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Number of runs (1 prints the sampled path).
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Antichain backward reachability (chance scheduler, mass
    /// transitions); the target must be monotone.
    CheckCsmt {
        #[command(flatten)]
        common: ModelQueryArgs,
        /// Pullback solutions per element.
        #[arg(long = "K", default_value_t = 3)]
        big_k: usize,
        /// Resamples per infeasible tightening.
        #[arg(long = "L", default_value_t = 1)]
        big_l: usize,
        #[arg(long, default_value_t = 100)]
        loop_limit: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scheduler + scaled-submartingale certificate synthesis (mass
    /// scheduler, chance transitions); needs a monotone target and a
    /// threshold.
    CheckMsct {
        #[command(flatten)]
        common: ModelQueryArgs,
        /// Scaling factor in (0,1); defaults to 1 - 10^-5.
        #[arg(long)]
        gamma: Option<String>,
        /// Product-basis degree bound.
        #[arg(long, default_value_t = 4)]
        degree: usize,
        /// External SMT-LIB solver command (falls back to CONFMC_SOLVER_CMD,
        /// then to the built-in solver).
        #[arg(long)]
        solver_cmd: Option<String>,
        /// Solver timeout in seconds.
        #[arg(long, default_value_t = 120)]
        timeout: u64,
        /// Exact verification sample count.
        #[arg(long, default_value_t = 1000)]
        verify_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit a benchmark model (and for subsetsum, its query).
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Print the tool version.
    Version,
}

#[derive(Subcommand)]
enum GenCommand {
    /// The three-state two-action toy model.
    Table1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Subset-sum reachability instance (exact answer known in closed
    /// form).
    Subsetsum {
        /// Comma-separated positive integers.
        #[arg(long, value_delimiter = ',')]
        set: Vec<u64>,
        /// Target sum.
        #[arg(long)]
        target: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the matching query file.
        #[arg(long)]
        query_out: Option<PathBuf>,
    },
    /// Casino model: bets distribute the fund over reward states.
    Casino {
        #[arg(long, default_value_t = 5)]
        games: usize,
        #[arg(long, default_value_t = 2)]
        rewards: usize,
        /// Make reward states absorbing instead of returning to play.
        #[arg(long)]
        absorbing: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exam model: problem sets release decaying mass onto grades.
    Exam {
        #[arg(long, default_value_t = 5)]
        sets: usize,
        #[arg(long, default_value_t = 2)]
        grades: usize,
        /// Self-loop probability of the reservoir state.
        #[arg(long, default_value = "1/2")]
        decay: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit codes: 0 verdict produced (including unknown/stabilized), 2 invalid
/// input, 3 backend or solver failure.
const EXIT_INVALID: u8 = 2;
const EXIT_BACKEND: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

fn backend(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_BACKEND,
        message: message.into(),
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&PathBuf>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn load(common: &ModelQueryArgs) -> Result<(MdpModel, Query), Failure> {
    let model = parse_model(&read(&common.model)?).map_err(|e| invalid(e.to_string()))?;
    let query = parse_query(&read(&common.query)?, &model).map_err(|e| invalid(e.to_string()))?;
    Ok((model, query))
}

/// The query's scheduler, defaulting to the only action for single-action
/// models.
fn scheduler_for(m: &MdpModel, q: &Query) -> Result<Scheduler, Failure> {
    match &q.scheduler {
        Some(s) => Ok(s.clone()),
        None if m.n_actions() == 1 => Ok(Scheduler::pure(confmc::model::ActionId(0))),
        None => Err(invalid("query needs a scheduler for this command")),
    }
}

fn emit(record: &ResultRecord, format: Format, text_summary: &str) {
    match format {
        Format::Json => println!("{}", record.to_json()),
        Format::Text => println!("{text_summary}"),
    }
}

fn run() -> Result<(), Failure> {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("confmc {}", confmc::VERSION);
            Ok(())
        }
        Command::Gen { what } => run_gen(what),
        Command::Step { common } => {
            let (m, q) = load(&common)?;
            let sched = scheduler_for(&m, &q)?;
            let start = Instant::now();
            let step = config_step(&m, &sched, q.semantics, std::slice::from_ref(&q.initial))
                .map_err(|e| backend(e.to_string()))?;
            let mut rec = ResultRecord::new("ok");
            rec.successors = Some(successors_field(&step.successors));
            rec.timing_ms = start.elapsed().as_millis();
            let mut lines = vec![format!("successors under {}:", q.semantics)];
            for (c, p) in step.successors.iter() {
                lines.push(format!("  {} -> {c:?}", format_rat(p)));
            }
            emit(&rec, common.format, &lines.join("\n"));
            Ok(())
        }
        Command::Explore { common, depth, dot } => {
            let (m, q) = load(&common)?;
            let sched = scheduler_for(&m, &q)?;
            let depth = q.options.depth.unwrap_or(depth);
            let start = Instant::now();
            let graph = explore(
                &m,
                &sched,
                q.semantics,
                &q.initial,
                depth,
                Some(&q.target),
                ExploreOptions::default(),
            )
            .map_err(|e| backend(e.to_string()))?;
            let (prob, settled) = reach_prob_bounded(
                &m,
                &sched,
                q.semantics,
                &q.initial,
                &q.target,
                depth,
                ExploreOptions::default(),
            )
            .map_err(|e| backend(e.to_string()))?;
            if let Some(dot_path) = dot {
                std::fs::write(&dot_path, graph.to_dot())
                    .map_err(|e| invalid(format!("{}: {e}", dot_path.display())))?;
            }
            let mut rec = ResultRecord::new("ok");
            rec.probability = Some(format_rat(&prob));
            rec.settled = Some(settled);
            rec.timing_ms = start.elapsed().as_millis();
            emit(
                &rec,
                common.format,
                &format!(
                    "explored {} nodes to depth {depth}; reach probability {} (settled: {settled})",
                    graph.nodes.len(),
                    format_rat(&prob)
                ),
            );
            Ok(())
        }
        Command::Simulate {
            common,
            steps,
            runs,
            seed,
        } => {
            let (m, q) = load(&common)?;
            let sched = scheduler_for(&m, &q)?;
            let start = Instant::now();
            let mut rec = ResultRecord::new("ok");
            rec.seed = Some(seed);
            let summary = if runs <= 1 {
                let path = simulate(&m, &sched, q.semantics, &q.initial, steps, seed)
                    .map_err(|e| backend(e.to_string()))?;
                rec.path = Some(
                    path.iter()
                        .map(|c| c.weights().iter().map(format_rat).collect())
                        .collect(),
                );
                format!("sampled a path of length {}", path.len())
            } else {
                let freq = empirical_hit_frequency(
                    &m,
                    &sched,
                    q.semantics,
                    &q.initial,
                    &q.target,
                    runs,
                    steps,
                    seed,
                )
                .map_err(|e| backend(e.to_string()))?;
                rec.hit_frequency = Some(freq);
                format!("hit frequency over {runs} runs (cap {steps} steps): {freq}")
            };
            rec.timing_ms = start.elapsed().as_millis();
            emit(&rec, common.format, &summary);
            Ok(())
        }
        Command::CheckCsmt {
            common,
            big_k,
            big_l,
            loop_limit,
            seed,
        } => {
            let (m, q) = load(&common)?;
            let big_k = q.options.big_k.unwrap_or(big_k);
            let big_l = q.options.big_l.unwrap_or(big_l);
            let loop_limit = q.options.loop_limit.unwrap_or(loop_limit);
            let seed = q.options.seed.unwrap_or(seed);
            let start = Instant::now();
            let outcome = check_reach(
                &ExactSimplex,
                &m,
                &q.initial,
                &q.target,
                big_k,
                big_l,
                loop_limit,
                seed,
            )
            .map_err(|e| backend(e.to_string()))?;
            let mut rec = ResultRecord::new(match &outcome {
                ReachOutcome::Reachable { .. } => "reachable",
                ReachOutcome::Stabilized { .. } => "stabilized",
                ReachOutcome::LoopLimit { .. } => "loop_limit",
            });
            rec.seed = Some(seed);
            let summary = match outcome {
                ReachOutcome::Reachable {
                    witness,
                    iterations,
                } => {
                    let names: Vec<String> = witness
                        .iter()
                        .map(|a| m.action_names[a.0].clone())
                        .collect();
                    rec.witness = Some(names.clone());
                    rec.iterations = Some(iterations);
                    format!(
                        "reachable in {iterations} iteration(s); witness: [{}]",
                        names.join(", ")
                    )
                }
                ReachOutcome::Stabilized { iterations } => {
                    rec.iterations = Some(iterations);
                    format!("stabilized after {iterations} iteration(s) without covering the initial configuration (no negative conclusion)")
                }
                ReachOutcome::LoopLimit { limit } => {
                    rec.iterations = Some(limit);
                    format!("loop limit {limit} reached without a verdict")
                }
            };
            rec.timing_ms = start.elapsed().as_millis();
            emit(&rec, common.format, &summary);
            Ok(())
        }
        Command::CheckMsct {
            common,
            gamma,
            degree,
            solver_cmd,
            timeout,
            verify_samples,
            seed,
        } => {
            let (m, q) = load(&common)?;
            let xi = q
                .threshold
                .clone()
                .ok_or_else(|| invalid("query needs a threshold for certificate synthesis"))?;
            let gamma_string = gamma.or(q.options.gamma.clone());
            let mut opts = CheckOptions::default();
            if let Some(g) = gamma_string {
                opts.gamma = parse_rat(&g).map_err(|e| invalid(e.to_string()))?;
            }
            opts.degree_bound = q.options.degree.unwrap_or(degree);
            opts.timeout = Duration::from_secs(timeout);
            opts.verify_samples = verify_samples;
            opts.seed = q.options.seed.unwrap_or(seed);
            let command = solver_cmd.or_else(|| std::env::var("CONFMC_SOLVER_CMD").ok());
            opts.solver = match command {
                Some(command) => SolverChoice::External { command },
                None => SolverChoice::Builtin,
            };
            let start = Instant::now();
            let outcome = check_msct(&m, &q.initial, &q.target, &xi, &opts)
                .map_err(|e| backend(e.to_string()))?;
            let mut rec = ResultRecord::new(match &outcome {
                CheckOutcome::Certified(_) => "certified",
                CheckOutcome::Unknown(_) => "unknown",
            });
            rec.seed = Some(opts.seed);
            let summary = match outcome {
                CheckOutcome::Certified(cert) => {
                    rec.certificate = Some(certificate_file(&cert, &m));
                    format!(
                        "certified: reachability probability at least {} is achievable",
                        format_rat(&xi)
                    )
                }
                CheckOutcome::Unknown(reason) => {
                    rec.reason = Some(reason.clone());
                    format!("unknown: {reason}")
                }
            };
            rec.timing_ms = start.elapsed().as_millis();
            emit(&rec, common.format, &summary);
            Ok(())
        }
    }
}

fn run_gen(what: GenCommand) -> Result<(), Failure> {
    match what {
        GenCommand::Table1 { out } => write_out(out.as_ref(), &serialize_model(&table1())),
        GenCommand::Subsetsum {
            set,
            target,
            out,
            query_out,
        } => {
            let (m, d0, h, xi) =
                gen_subsetsum(&set, target).map_err(|e| invalid(e.to_string()))?;
            write_out(out.as_ref(), &serialize_model(&m))?;
            if let Some(qpath) = query_out {
                let qf = query_file(&m, &d0, SemanticsId::MsCt, &h, Some(&xi), None);
                let text =
                    serde_json::to_string_pretty(&qf).map_err(|e| invalid(e.to_string()))?;
                write_out(Some(&qpath), &text)?;
            }
            Ok(())
        }
        GenCommand::Casino {
            games,
            rewards,
            absorbing,
            seed,
            out,
        } => {
            if games == 0 || rewards == 0 {
                return Err(invalid("casino needs at least one game and one reward"));
            }
            let m = gen_casino(games, rewards, !absorbing, seed);
            write_out(out.as_ref(), &serialize_model(&m))
        }
        GenCommand::Exam {
            sets,
            grades,
            decay,
            seed,
            out,
        } => {
            if sets == 0 || grades == 0 {
                return Err(invalid("exam needs at least one set and one grade"));
            }
            let decay = parse_rat(&decay).map_err(|e| invalid(e.to_string()))?;
            if decay <= confmc::rat::zero() || decay >= confmc::rat::one() {
                return Err(invalid("decay must lie strictly between 0 and 1"));
            }
            let m = gen_exam(sets, grades, &decay, seed);
            write_out(out.as_ref(), &serialize_model(&m))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
