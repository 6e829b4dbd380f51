use clap::{Parser, Subcommand, ValueEnum};
use sampled_mip::bench::{check_reports, report_csv, run_benchmark, BenchConfig, Method};
use sampled_mip::error::Error;
use sampled_mip::io::{
    model_from_json, model_to_json, problem_from_json, problem_to_json, solution_from_json, solution_to_json,
    trace_csv, ModelDocument, ProblemDocument, SolutionDocument,
};
use sampled_mip::learn::{generate_training_data, solve_sequential_learned, train, TrainConfig};
use sampled_mip::model::{combinatorial_dimension, Basis};
use sampled_mip::problems::{FamilySpec, RandomMilpSpec, UnitCommitmentSpec};
use sampled_mip::scenario::{build_sampled_problem, empirical_violation, sample_complexity, RobustnessSpec};
use sampled_mip::sequential::{solve_direct, solve_sequential, SeqOptions};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Sampled mixed-integer programs: sample sizes, generators, and the direct,
/// sequential and learned solvers.
#[derive(Parser)]
#[command(name = "sampled-mip", version)]
struct Cli {
    /// Seed for sampling and training.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Feasibility tolerance on constraint slack.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Milp,
    Uc,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Direct,
    Seq,
    Learned,
}

#[derive(Subcommand)]
enum Command {
    /// Combinatorial dimension and the scenario sample size.
    Bound {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        dr: usize,
        #[arg(long)]
        dz: usize,
    },
    /// Draw a sampled problem from a benchmark family.
    Generate {
        #[arg(long, value_enum)]
        family: Family,
        /// Family parameters; missing fields take the published defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a sampled problem.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "seq")]
        method: SolveMethod,
        /// Trained model, for `--method learned`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        r: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate labelled samples and train the strategy classifier.
    Train {
        /// Family spec, e.g. {"family":"milp","spec":{...}}.
        #[arg(long)]
        model_family: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the methods against each other on fresh samples.
    Bench {
        #[arg(long)]
        family_spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "direct,seq")]
        methods: Vec<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fraction of fresh samples a solution violates.
    Violation {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        samples: usize,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn seq_options(cli: &Cli, r: usize) -> SeqOptions<f64> {
    let mut opts = SeqOptions { r, ..SeqOptions::default() };
    if let Some(tol) = cli.tol {
        opts.mip.tol.feasibility = tol;
    }
    opts
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Bound { epsilon, delta, dr, dz } => {
            let d_comb = combinatorial_dimension(*dr, *dz)?;
            let n = sample_complexity(&RobustnessSpec::new(*epsilon, *delta)?, d_comb)?;
            println!("{}", json!({ "d_comb": d_comb, "n": n }));
        }
        Command::Generate { family, spec, n, out } => {
            let source = match (family, spec) {
                (Family::Milp, None) => FamilySpec::Milp(RandomMilpSpec::default()),
                (Family::Uc, None) => FamilySpec::Uc(UnitCommitmentSpec::default()),
                (Family::Milp, Some(p)) => FamilySpec::Milp(serde_json::from_str(&read(p)?)?),
                (Family::Uc, Some(p)) => FamilySpec::Uc(serde_json::from_str(&read(p)?)?),
            };
            let model = source.build::<f64>()?;
            let problem = build_sampled_problem(model.as_ref(), *n, cli.seed)?;
            write(out, &problem_to_json(&ProblemDocument { problem, source: Some(source) })?)?;
        }
        Command::Solve { problem, method, model, r, trace, out } => {
            let doc = problem_from_json(&read(problem)?)?;
            let opts = seq_options(cli, *r);
            let learned = match (method, model) {
                (SolveMethod::Learned, Some(m)) => Some(model_from_json(&read(m)?)?),
                (SolveMethod::Learned, None) => {
                    return Err(Error::InvalidModel("--method learned needs --model".into()))
                }
                _ => None,
            };
            let started = Instant::now();
            let (name, solution, basis, seq_trace) = match method {
                SolveMethod::Direct => {
                    let outcome = solve_direct(&doc.problem, &opts.mip)?;
                    let sol = outcome.solution.ok_or(Error::Subproblem("infeasible"))?;
                    ("direct", sol, Basis::default(), None)
                }
                SolveMethod::Seq => {
                    let (sol, basis, t) = solve_sequential(&doc.problem, &opts)?;
                    ("seq", sol, basis, Some(t))
                }
                SolveMethod::Learned => {
                    let m = learned.as_ref().expect("loaded above");
                    if m.family.is_some() && doc.source.is_some() && m.family != doc.source {
                        log::warn!("model was trained on a different family than the problem was drawn from");
                    }
                    let (sol, basis, t) = solve_sequential_learned(&doc.problem, &m.net, &m.dict, &opts)?;
                    ("learned", sol, basis, Some(t))
                }
            };
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            if let (Some(path), Some(t)) = (trace, &seq_trace) {
                write(path, &trace_csv(t)?)?;
            }
            let summary = json!({
                "method": name,
                "objective": solution.objective,
                "iterations": seq_trace.as_ref().map(|t| t.iterations),
                "max_constraints_per_solve": seq_trace.as_ref().map(|t| t.max_constraints_per_solve()),
                "fallback_count": seq_trace.as_ref().map(|t| t.fallback_count),
                "basis_size": basis.len(),
                "wall_ms": wall_ms,
            });
            if let Some(path) = out {
                let doc = SolutionDocument { method: name.into(), solution, basis };
                write(path, &solution_to_json(&doc)?)?;
            }
            println!("{summary}");
        }
        Command::Train { model_family, samples, config, out } => {
            let family: FamilySpec = serde_json::from_str(&read(model_family)?)?;
            let mut cfg: TrainConfig = match config {
                Some(p) => serde_json::from_str(&read(p)?)?,
                None => TrainConfig::default(),
            };
            if config.is_none() {
                cfg.seed = cli.seed;
            }
            let model = family.build::<f64>()?;
            let opts = seq_options(cli, 1);
            let (ts, dict) = generate_training_data(model.as_ref(), *samples, cli.seed, &opts.mip)?;
            let (net, metrics) = train(&ts, &dict, &cfg)?;
            println!(
                "{}",
                json!({ "train_acc": metrics.train_acc, "test_acc": metrics.test_acc, "dict_size": metrics.dict_size })
            );
            let doc = ModelDocument { net, dict, config: cfg, family: Some(family), metrics: Some(metrics) };
            write(out, &model_to_json(&doc)?)?;
        }
        Command::Bench { family_spec, n, methods, model, out } => {
            let family: FamilySpec = serde_json::from_str(&read(family_spec)?)?;
            let methods = methods
                .iter()
                .filter(|m| !m.is_empty())
                .map(|m| serde_json::from_value::<Method>(json!(m)))
                .collect::<Result<Vec<_>, _>>()?;
            let loaded = model.as_deref().map(read).transpose()?.map(|t| model_from_json(&t)).transpose()?;
            let cfg = BenchConfig {
                family: &family,
                ns: n,
                methods: &methods,
                seed: cli.seed,
                seq: seq_options(cli, 10),
                learned: loaded.as_ref().map(|m| (&m.net, &m.dict)),
            };
            let reports = run_benchmark(&cfg)?;
            let csv = report_csv(&reports)?;
            match out {
                Some(path) => write(path, &csv)?,
                None => print!("{csv}"),
            }
            check_reports(&reports)?;
        }
        Command::Violation { problem, solution, samples } => {
            let doc = problem_from_json(&read(problem)?)?;
            let sol = solution_from_json(&read(solution)?)?;
            let source = doc.source.ok_or_else(|| Error::Schema {
                field: "source".into(),
                message: "the problem does not record its family, so fresh samples cannot be drawn".into(),
            })?;
            let model = source.build::<f64>()?;
            let tol = cli.tol.unwrap_or(1e-8);
            let rate = empirical_violation(&sol.solution.x, model.as_ref(), *samples, cli.seed, tol)?;
            println!("{rate}");
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema { .. } | Error::Parse(_) | Error::Io(_) => 2,
        Error::Invariant(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
