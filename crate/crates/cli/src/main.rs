use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsc_forge::commands::{self, exit, CliError, CliResult};
use qsc_forge::config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "qsc-forge", version, about = "Synthesize quantum sensor circuits with a hybrid quantum-selection DQN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write episodes.csv, run_report.json, best_circuit.txt,
    /// learning_curve.svg and checkpoint.json.
    Train(TrainArgs),
    /// Exhaustively rank every gate sequence up to a length.
    Search(SearchArgs),
    /// Run a comma-separated circuit from |00> and print its QFI trajectory.
    Eval(EvalArgs),
    /// Render learning_curve.svg from a run_report.json.
    Plot(PlotArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Flat key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for one run; repeat for several.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// hcqa, classical-dqn or random.
    #[arg(long)]
    agent: Option<String>,
    /// sample or argmax.
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of seeds trained concurrently.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    max_len: usize,
    /// Rows printed to stdout; search.csv always holds every sequence.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, allow_hyphen_values = true)]
    circuit: String,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    report: PathBuf,
    /// Output SVG path; defaults to learning_curve.svg beside the report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&PathBuf>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("reading config {}: {e}", path.display())))?;
    Ok(RunConfig::from_text(&text)?)
}

fn set(cfg: &mut RunConfig, key: &str, value: Option<String>) -> Result<(), ConfigError> {
    match value {
        Some(v) => cfg.set(key, &v),
        None => Ok(()),
    }
}

fn train(args: TrainArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_ref())?;
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds;
    }
    set(&mut cfg, "episodes", args.episodes.map(|v| v.to_string()))?;
    set(&mut cfg, "agent", args.agent)?;
    set(&mut cfg, "selection", args.selection)?;
    set(&mut cfg, "parallel", args.parallel.map(|v| v.to_string()))?;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    log::debug!("agent {}, selection {}", cfg.agent, cfg.selection.name());
    commands::train(&cfg).map(|_| ())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Search(args) => {
            let cfg = load_config(args.config.as_ref())?;
            commands::search(&cfg.env, args.max_len, args.top, &args.out)
        }
        Command::Eval(args) => {
            let cfg = load_config(args.config.as_ref())?;
            commands::eval(&cfg.env, &args.circuit).map(|_| ())
        }
        Command::Plot(args) => {
            let path = commands::plot(&args.report, args.out)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QSC_FORGE_LOG", "error"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
