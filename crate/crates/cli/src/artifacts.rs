//! On-disk artifact formats.

use std::fmt::Write as _;

use qsc_core::sensor_env::format_circuit;
use qsc_core::trainer::{RunReport, SearchEntry};
use qsc_core::{Action, AgentKind, Termination};
use thiserror::Error;

pub const EPISODES_CSV_VERSION: u32 = 1;
pub const EPISODES_CSV_HEADER: &str = "episode,steps,final_qfi,cum_reward,epsilon,termination,actions";
pub const SEARCH_CSV_HEADER: &str = "rank,sequence,length,qfi";

#[derive(Debug, Error, PartialEq)]
pub enum ArtifactError {
    #[error("episodes.csv line {line}: {reason}")]
    Episodes { line: usize, reason: String },
}

/// One row of `episodes.csv`, with numbers at their printed precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub steps: usize,
    pub final_qfi: f64,
    pub cum_reward: f64,
    pub epsilon: f64,
    pub termination: Termination,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodesCsv {
    pub version: u32,
    pub agent: AgentKind,
    pub seed: u64,
    pub rows: Vec<EpisodeRow>,
}

impl EpisodesCsv {
    pub fn from_report(report: &RunReport) -> Self {
        let rows = report
            .records
            .iter()
            .map(|r| EpisodeRow {
                episode: r.episode,
                steps: r.steps,
                final_qfi: r.final_qfi,
                cum_reward: r.cumulative_reward,
                epsilon: r.epsilon,
                termination: r.termination,
                actions: r.actions.clone(),
            })
            .collect();
        Self {
            version: EPISODES_CSV_VERSION,
            agent: report.agent,
            seed: report.seed,
            rows,
        }
    }

    /// Leading comment line carries the schema version and run identity,
    /// followed by the fixed header and one row per episode.
    pub fn render(&self) -> String {
        let mut out = format!(
            "# qsc-forge episodes v{} agent={} seed={}\n{EPISODES_CSV_HEADER}\n",
            self.version, self.agent, self.seed
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{},{}",
                r.episode,
                r.steps,
                r.final_qfi,
                r.cum_reward,
                r.epsilon,
                r.termination,
                format_circuit(&r.actions, "|")
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ArtifactError> {
        let err = |line: usize, reason: String| ArtifactError::Episodes { line, reason };
        let mut lines = text.lines().enumerate();
        let (_, meta) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let mut version = None;
        let mut agent = None;
        let mut seed = None;
        let fields = meta
            .strip_prefix("# qsc-forge episodes ")
            .ok_or_else(|| err(1, "missing version line".into()))?;
        for field in fields.split_whitespace() {
            if let Some(v) = field.strip_prefix('v') {
                version = v.parse().ok();
            } else if let Some(v) = field.strip_prefix("agent=") {
                agent = v.parse().ok();
            } else if let Some(v) = field.strip_prefix("seed=") {
                seed = v.parse().ok();
            }
        }
        let (Some(version), Some(agent), Some(seed)) = (version, agent, seed) else {
            return Err(err(1, format!("malformed version line '{meta}'")));
        };
        if version != EPISODES_CSV_VERSION {
            return Err(err(1, format!("unsupported schema version {version}")));
        }
        match lines.next() {
            Some((_, h)) if h == EPISODES_CSV_HEADER => {}
            _ => return Err(err(2, "missing or wrong header".into())),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(err(n, format!("expected 7 columns, got {}", cols.len())));
            }
            let num = |k: usize| -> Result<f64, ArtifactError> {
                cols[k].parse().map_err(|_| err(n, format!("bad number '{}'", cols[k])))
            };
            let int = |k: usize| -> Result<usize, ArtifactError> {
                cols[k].parse().map_err(|_| err(n, format!("bad integer '{}'", cols[k])))
            };
            let actions = if cols[6].is_empty() {
                Vec::new()
            } else {
                cols[6]
                    .split('|')
                    .map(|t| t.parse::<Action>().map_err(|e| err(n, e.to_string())))
                    .collect::<Result<_, _>>()?
            };
            rows.push(EpisodeRow {
                episode: int(0)?,
                steps: int(1)?,
                final_qfi: num(2)?,
                cum_reward: num(3)?,
                epsilon: num(4)?,
                termination: cols[5].parse().map_err(|e: qsc_core::Error| err(n, e.to_string()))?,
                actions,
            });
        }
        Ok(Self {
            version,
            agent,
            seed,
            rows,
        })
    }
}

pub fn render_search_csv(entries: &[SearchEntry]) -> String {
    let mut out = format!("{SEARCH_CSV_HEADER}\n");
    for (rank, e) in entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{:.6}",
            rank + 1,
            format_circuit(&e.actions, "|"),
            e.actions.len(),
            e.qfi
        );
    }
    out
}

/// Human-readable line for the best circuit, e.g. `Ry S Ry → QFI 1.000000`.
pub fn best_circuit_line(report: &RunReport) -> String {
    match &report.best_circuit {
        Some(b) => format!("{} → QFI {:.6}", format_circuit(&b.actions, " "), b.qfi),
        None => "no episodes recorded".to_string(),
    }
}

pub fn render_report_json(report: &RunReport) -> serde_json::Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}
