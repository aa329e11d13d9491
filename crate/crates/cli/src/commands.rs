//! Subcommand implementations. Results go to stdout; diagnostics go through `log`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use qsc_core::sensor_env::{evolve, format_circuit, qfi, raw_qfi};
use qsc_core::trainer::{brute_force, RunReport, Trainer};
use qsc_core::{Action, EnvConfig};
use rayon::prelude::*;

use crate::artifacts::{best_circuit_line, render_report_json, render_search_csv, EpisodesCsv};
use crate::config::{ConfigError, RunConfig};
use crate::plot::learning_curve_svg;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => exit::CONFIG,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Io(_) => exit::FAILURE,
        }
    }
}

impl From<qsc_core::Error> for CliError {
    fn from(e: qsc_core::Error) -> Self {
        match e {
            qsc_core::Error::Numerical(msg) => CliError::Numerical(msg),
            qsc_core::Error::Config(_) => CliError::Config(ConfigError::Core(e)),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Files written for one training run.
pub const EPISODES_FILE: &str = "episodes.csv";
pub const REPORT_FILE: &str = "run_report.json";
pub const BEST_CIRCUIT_FILE: &str = "best_circuit.txt";
pub const CURVE_FILE: &str = "learning_curve.svg";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SEARCH_FILE: &str = "search.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(())
}

struct SeedRun {
    report: RunReport,
    checkpoint: String,
}

fn train_seed(cfg: &RunConfig, seed: u64) -> CliResult<SeedRun> {
    log::info!("training {} seed {seed} for {} episodes", cfg.agent, cfg.episodes);
    let mut trainer = Trainer::new(
        cfg.env.clone(),
        cfg.hyperparams.clone(),
        cfg.agent,
        cfg.selection,
        seed,
    )?;
    trainer.run(cfg.episodes)?;
    Ok(SeedRun {
        report: trainer.report()?,
        checkpoint: trainer.checkpoint().to_json()?,
    })
}

fn write_run(dir: &Path, run: &SeedRun) -> CliResult<()> {
    create_dir(dir)?;
    let report = &run.report;
    write(&dir.join(EPISODES_FILE), &EpisodesCsv::from_report(report).render())?;
    write(
        &dir.join(REPORT_FILE),
        &render_report_json(report).context("serializing run report")?,
    )?;
    write(&dir.join(BEST_CIRCUIT_FILE), &format!("{}\n", best_circuit_line(report)))?;
    let svg = learning_curve_svg(report).map_err(|e| CliError::Usage(e.to_string()))?;
    write(&dir.join(CURVE_FILE), &svg)?;
    write(&dir.join(CHECKPOINT_FILE), &run.checkpoint)?;
    Ok(())
}

/// Trains one agent per seed. A single seed writes straight into the output
/// directory; several seeds each get a `seed-<n>` subdirectory plus a summary.
pub fn train(cfg: &RunConfig) -> CliResult<Vec<RunReport>> {
    cfg.validate()?;
    create_dir(&cfg.out)?;
    let runs: Vec<CliResult<SeedRun>> = if cfg.parallel > 1 && cfg.seeds.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallel)
            .build()
            .context("building worker pool")?;
        pool.install(|| cfg.seeds.par_iter().map(|&s| train_seed(cfg, s)).collect())
    } else {
        cfg.seeds.iter().map(|&s| train_seed(cfg, s)).collect()
    };

    let single = cfg.seeds.len() == 1;
    let mut reports = Vec::with_capacity(runs.len());
    let mut summary = String::from("seed,agent,episodes,convergence_episode,final500_mean_qfi,best_circuit,best_qfi\n");
    for run in runs {
        let run = run?;
        let report = &run.report;
        let dir = if single {
            cfg.out.clone()
        } else {
            cfg.out.join(format!("seed-{}", report.seed))
        };
        write_run(&dir, &run)?;
        println!("seed {}: {}", report.seed, best_circuit_line(report));
        let (circuit, best_qfi) = report
            .best_circuit
            .as_ref()
            .map(|b| (format_circuit(&b.actions, "|"), b.qfi))
            .unwrap_or_default();
        summary.push_str(&format!(
            "{},{},{},{},{:.6},{},{:.6}\n",
            report.seed,
            report.agent,
            report.records.len(),
            report.convergence_episode.map(|e| e.to_string()).unwrap_or_default(),
            report.tail_mean_qfi(500),
            circuit,
            best_qfi
        ));
        reports.push(run.report);
    }
    if !single {
        write(&cfg.out.join(SUMMARY_FILE), &summary)?;
    }
    Ok(reports)
}

pub fn search(env: &EnvConfig, max_len: usize, top: usize, out: &Path) -> CliResult<()> {
    if max_len == 0 || max_len > qsc_core::trainer::MAX_SEARCH_LEN {
        return Err(CliError::Usage(format!(
            "--max-len must be in 1..={}, got {max_len}",
            qsc_core::trainer::MAX_SEARCH_LEN
        )));
    }
    let ranked = brute_force(env, max_len)?;
    println!("{:>5}  {:>8}  {:>6}  sequence", "rank", "qfi", "length");
    for (rank, e) in ranked.iter().take(top).enumerate() {
        println!(
            "{:>5}  {:>8.6}  {:>6}  {}",
            rank + 1,
            e.qfi,
            e.actions.len(),
            format_circuit(&e.actions, " ")
        );
    }
    create_dir(out)?;
    write(&out.join(SEARCH_FILE), &render_search_csv(&ranked))
}

/// Parses a comma-separated gate list such as `Ry,S,Ry`.
pub fn parse_circuit(text: &str) -> CliResult<Vec<Action>> {
    if text.trim().is_empty() {
        return Err(CliError::Usage("empty circuit".into()));
    }
    text.split(',')
        .enumerate()
        .map(|(i, token)| {
            token.parse::<Action>().map_err(|_| {
                CliError::Usage(format!("unknown gate '{}' at token {}", token.trim(), i + 1))
            })
        })
        .collect()
}

pub fn eval(env: &EnvConfig, circuit: &str) -> CliResult<f64> {
    env.validate().map_err(ConfigError::from)?;
    let actions = parse_circuit(circuit)?;
    let mut final_qfi = 0.0;
    for k in 1..=actions.len() {
        let state = evolve(env, &actions[..k])?;
        final_qfi = qfi(&state)?;
        println!("step {k:>2}  {:<2}  qfi {final_qfi:.6}", actions[k - 1]);
    }
    let state = evolve(env, &actions)?;
    println!("final qfi {final_qfi:.6} (raw {:.6})", raw_qfi(&state)?);
    println!("amplitudes (re, im):");
    let n = env.n_qubits;
    for (k, a) in state.amplitudes().iter().enumerate() {
        println!("|{:0width$b}>  {:>9.6}  {:>9.6}", k, a.re, a.im, width = n);
    }
    Ok(final_qfi)
}

pub fn plot(report_path: &Path, out: Option<PathBuf>) -> CliResult<PathBuf> {
    let text = fs::read_to_string(report_path)
        .with_context(|| format!("reading {}", report_path.display()))?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed report {}: {e}", report_path.display())))?;
    let svg = learning_curve_svg(&report).map_err(|e| CliError::Usage(e.to_string()))?;
    let target = out.unwrap_or_else(|| {
        report_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(CURVE_FILE)
    });
    write(&target, &svg)?;
    Ok(target)
}
