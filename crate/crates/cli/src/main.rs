//! `hsvi` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage or input errors, 2 when a solve
//! stopped early with a partial result or a bench row failed.

mod bench;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hsvi::io::{PolicyFile, RockSampleParams};
use hsvi::{
    evaluate, gen_rocksample, load_policy, load_pomdp, save_policy, save_pomdp, EvalConfig,
    EvalResult, Execution, ModelIoError, PomdpModel, SolveResult, SolverConfig, SolverError,
    Termination,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelIoError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn model(path: &Path, source: ModelIoError) -> Self {
        CliError::Model {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hsvi", version, about = "Heuristic search value iteration for POMDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a model to a target width at the initial belief.
    Solve(SolveArgs),
    /// Tighten the bounds until the time budget runs out.
    Anytime(SolveArgs),
    /// Write a RockSample[n, k] model in `.pomdp` format.
    GenRocksample(GenArgs),
    /// Simulate a policy file on a model.
    Evaluate(EvalArgs),
    /// Run a suite of solve-and-evaluate jobs from a TOML file.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    model: PathBuf,
    /// Target width (final target in anytime mode).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    max_trials: Option<usize>,
    /// Trace CSV output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Policy file output.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Debug, Args)]
struct GenArgs {
    n: usize,
    k: usize,
    #[arg(long, default_value_t = 0)]
    layout_seed: u64,
    /// Half-efficiency distance of the rock sensor.
    #[arg(long, default_value_t = hsvi::io::DEFAULT_HALF_EFFICIENCY_DISTANCE)]
    d0: f64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    model: PathBuf,
    policy: PathBuf,
    #[arg(long, default_value_t = 500)]
    episodes: usize,
    #[arg(long, default_value_t = 251)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sum raw rather than discounted rewards.
    #[arg(long)]
    undiscounted: bool,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Debug, Args)]
struct BenchArgs {
    config: PathBuf,
    /// Directory for per-row trace CSVs and policies.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Table CSV output (stdout when absent).
    #[arg(long)]
    table: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Debug, Args)]
struct JobsArg {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long)]
    jobs: Option<usize>,
}

impl JobsArg {
    fn execution(&self) -> Result<Execution, CliError> {
        match self.jobs {
            Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
            Some(1) => Ok(Execution::Sequential),
            Some(n) => {
                configure_pool(n);
                Ok(Execution::Parallel)
            }
            None => Ok(Execution::default()),
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_pool(threads: usize) {
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        log::warn!("could not size the thread pool: {e}");
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_pool(_threads: usize) {
    log::warn!("built without the parallel feature; --jobs is ignored");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HSVI_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args, false),
        Command::Anytime(args) => cmd_solve(&args, true),
        Command::GenRocksample(args) => cmd_gen_rocksample(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Bench(args) => args.jobs.execution().and_then(|exec| {
            bench::cmd_bench(&args.config, &args.out_dir, args.table.as_deref(), exec)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub(crate) fn read_model(path: &Path) -> Result<PomdpModel, CliError> {
    load_pomdp(path).map_err(|e| match e {
        ModelIoError::Io(source) => CliError::io(path, source),
        other => CliError::model(path, other),
    })
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_outputs(
    result: &SolveResult,
    trace: Option<&Path>,
    policy: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(path) = trace {
        let mut w = create(path)?;
        result
            .trace
            .write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = policy {
        let mut w = create(path)?;
        save_policy(&PolicyFile::from_lower_bound(&result.bounds.lower), &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs, anytime: bool) -> Result<u8, CliError> {
    let execution = args.jobs.execution()?;
    let model = read_model(&args.model)?;
    if anytime && args.timeout.is_none() && args.max_trials.is_none() {
        return Err(CliError::Usage("anytime needs --timeout or --max-trials".into()));
    }
    let timeout = args
        .timeout
        .map(|t| {
            Duration::try_from_secs_f64(t).map_err(|_| CliError::Usage(format!("invalid timeout {t}")))
        })
        .transpose()?;
    let config = SolverConfig {
        epsilon: args.epsilon.unwrap_or(if anytime { 0.0 } else { 1e-3 }),
        timeout,
        max_trials: args.max_trials,
        execution,
        ..Default::default()
    };
    let result = if anytime {
        hsvi::solve_anytime(&model, &config)?
    } else {
        hsvi::solve(&model, &config)?
    };
    write_outputs(&result, args.trace.as_deref(), args.policy.as_deref())?;
    println!(
        "{} lower={} upper={} width={} vectors={} points={} trials={}",
        result.terminated_by.as_str(),
        result.lower_b0,
        result.upper_b0,
        result.final_width,
        result.bounds.lower.len(),
        result.bounds.upper.len(),
        result.trace.rows.len().saturating_sub(1)
    );
    Ok(match result.terminated_by {
        Termination::EpsilonReached => 0,
        // Running out the budget is how an anytime solve is meant to end.
        Termination::Timeout | Termination::TrialCap if anytime => 0,
        Termination::Timeout | Termination::TrialCap => 2,
    })
}

fn cmd_gen_rocksample(args: &GenArgs) -> Result<u8, CliError> {
    let mut params = RockSampleParams::with_layout_seed(args.n, args.k, args.layout_seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    params.half_efficiency_distance = args.d0;
    let model = gen_rocksample(&params).map_err(|e| CliError::Usage(e.to_string()))?;
    save_pomdp(&model, &args.out).map_err(|e| match e {
        ModelIoError::Io(source) => CliError::io(&args.out, source),
        other => CliError::model(&args.out, other),
    })?;
    println!(
        "{} {} {}",
        model.num_states(),
        model.num_actions(),
        model.num_observations()
    );
    Ok(0)
}

#[derive(Debug, Serialize)]
struct EvalReport {
    episodes: usize,
    horizon: usize,
    seed: u64,
    discounted: bool,
    mean: f64,
    stderr: f64,
    ci95: f64,
    min: f64,
    max: f64,
    restarted_episodes: usize,
    truncation_error: f64,
}

impl EvalReport {
    fn new(config: &EvalConfig, r: &EvalResult) -> Self {
        EvalReport {
            episodes: config.num_episodes,
            horizon: config.horizon,
            seed: config.seed,
            discounted: config.discounted,
            mean: r.mean,
            stderr: r.stderr,
            ci95: r.ci_half_width,
            min: r.min,
            max: r.max,
            restarted_episodes: r.restarted_episodes,
            truncation_error: r.truncation_error,
        }
    }
}

fn cmd_evaluate(args: &EvalArgs) -> Result<u8, CliError> {
    let execution = args.jobs.execution()?;
    if args.episodes == 0 || args.horizon == 0 {
        return Err(CliError::Usage("--episodes and --horizon must be positive".into()));
    }
    let model = read_model(&args.model)?;
    let file = File::open(&args.policy).map_err(|e| CliError::io(&args.policy, e))?;
    let policy = load_policy(BufReader::new(file)).map_err(|e| CliError::model(&args.policy, e))?;
    policy
        .validate(&model)
        .map_err(|e| CliError::model(&args.policy, e))?;
    let lb = policy
        .into_lower_bound()
        .map_err(|e| CliError::model(&args.policy, e))?;
    let config = EvalConfig {
        num_episodes: args.episodes,
        horizon: args.horizon,
        seed: args.seed,
        discounted: !args.undiscounted,
        execution,
    };
    let result = evaluate(&model, &lb, &config);
    let report = EvalReport::new(&config, &result);
    if args.json {
        let json = serde_json::to_string(&report).expect("report serializes");
        println!("{json}");
    } else {
        println!(
            "mean {:.6} +/- {:.6} (95% CI) over {} episodes",
            report.mean, report.ci95, report.episodes
        );
    }
    Ok(0)
}
