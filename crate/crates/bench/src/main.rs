use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use replicable_bench::config::LearnerSpec;
use replicable_bench::{preset, run_experiment, BenchError, ExperimentConfig, RunReport, PRESETS};

#[derive(Parser)]
#[command(name = "rlearn", version, about = "Estimate the replicability of learning algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment config (default preset: r-mean).
    RhoEstimate(RunArgs),
    /// One-way-sequence learner (default preset: ows-learn).
    RunOws(RunArgs),
    /// Affine parity learners (default preset: aff-parity).
    RunParity(RunArgs),
    /// Lifting a uniform learner through a learned tree (default preset: parity-lift).
    RunLift(RunArgs),
    /// Decision-tree distribution learning (default preset: build-dt).
    BuildDt(RunArgs),
    /// Weak learner from a pure-DP learner (default preset: dp2rep-weak).
    RunDp2rep(RunArgs),
    /// Print a preset config as JSON, or list the presets.
    Preset { name: Option<String> },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; overrides the preset.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json and trials.csv; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn load(args: &RunArgs, default_preset: &str) -> Result<ExperimentConfig, BenchError> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        (None, name) => {
            let name = name.as_deref().unwrap_or(default_preset);
            preset(name).ok_or_else(|| BenchError::Config {
                path: "preset".into(),
                message: format!("unknown preset `{name}`; known: {}", PRESETS.join(", ")),
            })?
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn check_learner(command: &str, learner: &LearnerSpec) -> Result<(), BenchError> {
    let ok = match command {
        "run-ows" => matches!(learner, LearnerSpec::ROws),
        "run-parity" => matches!(learner, LearnerSpec::RAffParity | LearnerSpec::NaiveGaussian { .. }),
        "run-lift" => matches!(learner, LearnerSpec::Lift { .. }),
        "build-dt" => matches!(learner, LearnerSpec::RBuildDt { .. }),
        "run-dp2rep" => matches!(learner, LearnerSpec::Dp2rep { .. }),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(BenchError::Config {
            path: "learner.kind".into(),
            message: format!("learner {learner:?} cannot be run by `{command}`"),
        })
    }
}

fn print_summary(report: &RunReport, seconds: f64) {
    let s = &report.summary;
    eprintln!("experiment   {}", s.experiment);
    eprintln!("trials       {}", s.trials);
    eprintln!(
        "rho_hat      {:.4}  (95% Wilson [{:.4}, {:.4}])",
        s.rho_hat, s.wilson.lower, s.wilson.upper
    );
    eprintln!("target rho   {}  certified: {}", report.config.rho, report.certified);
    eprintln!(
        "accuracy     {}/{} executions within {}",
        s.accuracy.within, s.accuracy.executions, s.accuracy.threshold
    );
    if s.failed_executions > 0 {
        eprintln!("failures     {} executions in {} pairs", s.failed_executions, s.failed_pairs);
    }
    eprintln!("wall clock   {seconds:.2}s");
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let (name, default, args) = match &cli.command {
        Command::RhoEstimate(a) => ("rho-estimate", "r-mean", a),
        Command::RunOws(a) => ("run-ows", "ows-learn", a),
        Command::RunParity(a) => ("run-parity", "aff-parity", a),
        Command::RunLift(a) => ("run-lift", "parity-lift", a),
        Command::BuildDt(a) => ("build-dt", "build-dt", a),
        Command::RunDp2rep(a) => ("run-dp2rep", "dp2rep-weak", a),
        Command::Preset { name: None } => {
            PRESETS.iter().for_each(|p| println!("{p}"));
            return Ok(());
        }
        Command::Preset { name: Some(p) } => {
            let config = preset(p).ok_or_else(|| BenchError::Config {
                path: "preset".into(),
                message: format!("unknown preset `{p}`"),
            })?;
            println!("{}", config.to_json());
            return Ok(());
        }
    };
    let config = load(args, default)?;
    check_learner(name, &config.learner)?;
    let start = Instant::now();
    let report = run_experiment(&config, args.threads)?;
    if config.out.is_none() {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    print_summary(&report, start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
