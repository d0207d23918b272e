use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kerrchain_cli::config::Emit;
use kerrchain_cli::{run, CliError, ExperimentConfig, Scenario};

/// Worker-count variable; everything else comes from the config file.
const WORKERS_VAR: &str = "KERRCHAIN_WORKERS";

#[derive(Parser)]
#[command(name = "kerrchain", version, about = "Squeezer → Kerr analyzer measurement-chain experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stochastic two-class classification (shots + metrics).
    Simulate(Common),
    /// Two-parameter steady-state sweep.
    Sweep(Common),
    /// Fisher discriminant vs pump phase for several classical-noise levels.
    Noise(Common),
    /// Dispersive readout map over squeezer pump phase and shift.
    Readout(Common),
    /// Thresholds, gain, squeezing axes and filtered covariance of the linear chain.
    Linear(Common),
    /// Physical SNAIL parameters to effective analyzer parameters, or back.
    Convert(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `controls.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectories per class (overrides `controls.n_traj`).
    #[arg(long)]
    traj: Option<usize>,
    /// Output formats (overrides `output.emit`).
    #[arg(long, value_delimiter = ',')]
    emit: Option<Vec<EmitArg>>,
}

fn resolve(scenario: Scenario, args: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(scenario),
    };
    match cfg.scenario {
        Some(s) if s != scenario => {
            return Err(CliError::Config(format!("config declares scenario {s:?}, subcommand asks for {scenario:?}")));
        }
        _ => cfg.scenario = Some(scenario),
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        cfg.controls.seed = seed;
    }
    if let Some(n) = args.traj {
        cfg.controls.n_traj = n;
    }
    if let Some(e) = &args.emit {
        cfg.output.emit = e
            .iter()
            .map(|e| match e {
                EmitArg::Csv => Emit::Csv,
                EmitArg::Json => Emit::Json,
            })
            .collect();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_pool() -> Result<(), CliError> {
    let Ok(v) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{WORKERS_VAR} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main_inner() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (scenario, args) = match &cli.command {
        Command::Simulate(a) => (Scenario::Classify, a),
        Command::Sweep(a) => (Scenario::Sweep2d, a),
        Command::Noise(a) => (Scenario::NoiseStudy, a),
        Command::Readout(a) => (Scenario::ReadoutMap, a),
        Command::Linear(a) => (Scenario::LinearAnalysis, a),
        Command::Convert(a) => (Scenario::ConvertParams, a),
    };
    init_pool()?;
    let cfg = resolve(scenario, args)?;
    let outputs = run(&cfg)?;
    for path in outputs.write(&cfg.output.dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
