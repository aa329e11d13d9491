//! Training loop, run reports and the exhaustive circuit-search oracle.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnet::{
    epsilon_at, init_params, sync_target, train_step, Adam, Checkpoint, Hyperparams,
    NetworkParams, ReplayBuffer, Transition,
};
use crate::selector::{select_epsilon_greedy, select_hybrid, uniform_action, SelectionMode};
use crate::sensor_env::{apply_action, qfi, Action, EnvConfig, SensorEnv, Termination};
use crate::statevector::StateVector;

pub const MOVING_AVERAGE_WINDOW: usize = 100;
pub const CONVERGENCE_LEVEL: f64 = 0.95;
pub const MAX_SEARCH_LEN: usize = 12;

/// QFI values closer than this are treated as equal when ranking circuits.
const QFI_RANK_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    /// DQN with quantum action selection.
    Hcqa,
    ClassicalDqn,
    RandomPolicy,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Hcqa => "hcqa",
            AgentKind::ClassicalDqn => "classical-dqn",
            AgentKind::RandomPolicy => "random",
        }
    }

    pub fn learns(self) -> bool {
        !matches!(self, AgentKind::RandomPolicy)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hcqa" => Ok(AgentKind::Hcqa),
            "classical-dqn" => Ok(AgentKind::ClassicalDqn),
            "random" => Ok(AgentKind::RandomPolicy),
            other => Err(Error::Parse(format!("unknown agent '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub actions: Vec<Action>,
    pub qfi_per_step: Vec<f64>,
    pub final_qfi: f64,
    pub steps: usize,
    pub termination: Termination,
    pub epsilon: f64,
    pub cumulative_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCircuit {
    pub actions: Vec<Action>,
    pub qfi: f64,
    pub episode: usize,
}

/// Event counts used to audit the update and sync cadence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingCounters {
    pub env_steps: u64,
    pub train_steps: u64,
    /// Update slots skipped because the buffer held fewer than a batch.
    pub warmup_skips: u64,
    pub target_syncs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub agent: AgentKind,
    pub selection_mode: SelectionMode,
    pub env_config: EnvConfig,
    pub hyperparams: Hyperparams,
    pub records: Vec<EpisodeRecord>,
    pub moving_avg_qfi: Vec<f64>,
    pub convergence_episode: Option<usize>,
    pub best_circuit: Option<BestCircuit>,
    pub counters: TrainingCounters,
}

impl RunReport {
    pub fn final_qfis(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.final_qfi).collect()
    }

    /// Mean final QFI over the last `n` episodes (all of them if fewer).
    pub fn tail_mean_qfi(&self, n: usize) -> f64 {
        let start = self.records.len().saturating_sub(n);
        let tail = &self.records[start..];
        tail.iter().map(|r| r.final_qfi).sum::<f64>() / tail.len().max(1) as f64
    }
}

/// Trailing mean; the first `window - 1` entries average over what is available.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Usage("moving average of an empty sequence".into()));
    }
    if window == 0 {
        return Err(Error::Config("moving-average window must be at least 1".into()));
    }
    Ok((0..values.len())
        .map(|i| {
            let start = (i + 1).saturating_sub(window);
            let slice = &values[start..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect())
}

/// First episode whose full trailing window averages at least `level`.
pub fn convergence_episode(moving_avg: &[f64], window: usize, level: f64) -> Option<usize> {
    moving_avg
        .iter()
        .enumerate()
        .skip(window.saturating_sub(1))
        .find(|(_, &v)| v >= level)
        .map(|(i, _)| i)
}

fn rank_key(qfi: f64) -> i64 {
    (qfi / QFI_RANK_RESOLUTION).round() as i64
}

/// Highest final QFI, then fewest gates, then lexicographic by action index.
pub fn best_circuit(records: &[EpisodeRecord]) -> Option<BestCircuit> {
    records
        .iter()
        .min_by(|a, b| {
            (Reverse(rank_key(a.final_qfi)), a.actions.len(), &a.actions)
                .cmp(&(Reverse(rank_key(b.final_qfi)), b.actions.len(), &b.actions))
        })
        .map(|r| BestCircuit {
            actions: r.actions.clone(),
            qfi: r.final_qfi,
            episode: r.episode,
        })
}

/// Drives one agent through repeated episodes.
pub struct Trainer {
    env_config: EnvConfig,
    hyperparams: Hyperparams,
    agent: AgentKind,
    mode: SelectionMode,
    seed: u64,
    env: SensorEnv,
    online: NetworkParams,
    target: NetworkParams,
    optimizer: Adam,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    counters: TrainingCounters,
    records: Vec<EpisodeRecord>,
    losses: Vec<f64>,
}

impl Trainer {
    pub fn new(
        env_config: EnvConfig,
        hyperparams: Hyperparams,
        agent: AgentKind,
        mode: SelectionMode,
        seed: u64,
    ) -> Result<Self> {
        hyperparams.validate()?;
        let (env, _) = SensorEnv::reset(env_config.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = init_params(rng.gen(), env_config.feature_dim())?;
        let target = online.clone();
        let optimizer = Adam::new(&online);
        let buffer = ReplayBuffer::new(hyperparams.buffer_capacity)?;
        Ok(Self {
            env_config,
            hyperparams,
            agent,
            mode,
            seed,
            env,
            online,
            target,
            optimizer,
            buffer,
            rng,
            counters: TrainingCounters::default(),
            records: Vec::new(),
            losses: Vec::new(),
        })
    }

    pub fn counters(&self) -> TrainingCounters {
        self.counters
    }

    pub fn records(&self) -> &[EpisodeRecord] {
        &self.records
    }

    /// Loss of every optimizer step taken so far.
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn online(&self) -> &NetworkParams {
        &self.online
    }

    pub fn target(&self) -> &NetworkParams {
        &self.target
    }

    pub fn replay_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            self.hyperparams.clone(),
            self.online.clone(),
            self.target.clone(),
            self.optimizer.clone(),
            self.rng.clone(),
        )
    }

    fn choose(&mut self, features: &[f64], epsilon: f64) -> Result<Action> {
        match self.agent {
            AgentKind::Hcqa => {
                let q = self.online.forward(features)?;
                select_hybrid(&q, epsilon, self.mode, &mut self.rng)
            }
            AgentKind::ClassicalDqn => {
                let q = self.online.forward(features)?;
                Ok(select_epsilon_greedy(&q, epsilon, &mut self.rng))
            }
            AgentKind::RandomPolicy => Ok(uniform_action(&mut self.rng)),
        }
    }

    fn after_env_step(&mut self) -> Result<()> {
        self.counters.env_steps += 1;
        if !self.agent.learns() {
            return Ok(());
        }
        let hp = &self.hyperparams;
        if self.counters.env_steps.is_multiple_of(hp.update_every_steps as u64) {
            if self.buffer.len() >= hp.batch_size {
                let batch = self.buffer.sample(hp.batch_size, &mut self.rng)?;
                let loss = train_step(
                    &mut self.online,
                    &self.target,
                    &mut self.optimizer,
                    &batch,
                    hp.gamma,
                    hp.learning_rate,
                )?;
                self.losses.push(loss);
                self.counters.train_steps += 1;
            } else {
                self.counters.warmup_skips += 1;
            }
        }
        if self.counters.env_steps.is_multiple_of(hp.target_sync_every_steps as u64) {
            sync_target(&self.online, &mut self.target);
            self.counters.target_syncs += 1;
        }
        Ok(())
    }

    pub fn run_episode(&mut self) -> Result<&EpisodeRecord> {
        let episode = self.records.len();
        let epsilon = epsilon_at(episode, &self.hyperparams);
        let mut features = self.env.restart();
        let mut actions = Vec::new();
        let mut qfi_per_step = Vec::new();
        let mut cumulative_reward = 0.0;
        let termination = loop {
            let action = self.choose(features.as_slice(), epsilon)?;
            let outcome = self.env.step(action)?;
            actions.push(action);
            qfi_per_step.push(outcome.qfi);
            cumulative_reward += outcome.reward;
            if self.agent.learns() {
                self.buffer.push(Transition {
                    state: features,
                    action,
                    reward: outcome.reward,
                    next_state: outcome.features.clone(),
                    done: outcome.done,
                });
            }
            self.after_env_step()?;
            features = outcome.features;
            if outcome.done {
                break outcome.termination;
            }
        };
        let final_qfi = *qfi_per_step.last().expect("episode has at least one step");
        let n = self.env_config.n_qubits as f64;
        log::debug!(
            "episode {episode}: {} steps, qfi {final_qfi:.6} (raw {:.6}), eps {epsilon:.4}",
            actions.len(),
            final_qfi * n * n
        );
        self.records.push(EpisodeRecord {
            episode,
            steps: actions.len(),
            actions,
            qfi_per_step,
            final_qfi,
            termination,
            epsilon,
            cumulative_reward,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn run(&mut self, episodes: usize) -> Result<()> {
        for _ in 0..episodes {
            self.run_episode()?;
        }
        Ok(())
    }

    pub fn report(&self) -> Result<RunReport> {
        let finals: Vec<f64> = self.records.iter().map(|r| r.final_qfi).collect();
        let moving_avg_qfi = moving_average(&finals, MOVING_AVERAGE_WINDOW)?;
        Ok(RunReport {
            seed: self.seed,
            agent: self.agent,
            selection_mode: self.mode,
            env_config: self.env_config.clone(),
            hyperparams: self.hyperparams.clone(),
            convergence_episode: convergence_episode(
                &moving_avg_qfi,
                MOVING_AVERAGE_WINDOW,
                CONVERGENCE_LEVEL,
            ),
            best_circuit: best_circuit(&self.records),
            records: self.records.clone(),
            moving_avg_qfi,
            counters: self.counters,
        })
    }
}

/// Runs `episodes` episodes from scratch and summarizes them.
pub fn run_training(
    env_config: &EnvConfig,
    hyperparams: &Hyperparams,
    agent: AgentKind,
    mode: SelectionMode,
    episodes: usize,
    seed: u64,
) -> Result<RunReport> {
    if episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    let mut trainer = Trainer::new(env_config.clone(), hyperparams.clone(), agent, mode, seed)?;
    trainer.run(episodes)?;
    log::info!(
        "{agent} seed {seed}: {episodes} episodes, final-500 mean qfi {:.6}",
        trainer.report()?.tail_mean_qfi(500)
    );
    trainer.report()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub actions: Vec<Action>,
    pub qfi: f64,
}

/// Evaluates every gate sequence of length `1..=max_len` from `|0...0>` and
/// ranks them by QFI (descending), then length, then lexicographic order.
pub fn brute_force(config: &EnvConfig, max_len: usize) -> Result<Vec<SearchEntry>> {
    config.validate()?;
    if !(1..=MAX_SEARCH_LEN).contains(&max_len) {
        return Err(Error::Config(format!(
            "max_len must be in 1..={MAX_SEARCH_LEN}, got {max_len}"
        )));
    }
    let mut entries = Vec::new();
    let root = StateVector::zero_state(config.n_qubits)?;
    let mut prefix = Vec::with_capacity(max_len);
    enumerate(config, max_len, &root, &mut prefix, &mut entries)?;
    entries.sort_by(|a, b| {
        (Reverse(rank_key(a.qfi)), a.actions.len(), &a.actions)
            .cmp(&(Reverse(rank_key(b.qfi)), b.actions.len(), &b.actions))
    });
    Ok(entries)
}

fn enumerate(
    config: &EnvConfig,
    max_len: usize,
    state: &StateVector,
    prefix: &mut Vec<Action>,
    out: &mut Vec<SearchEntry>,
) -> Result<()> {
    for action in Action::ALL {
        let next = apply_action(state, action, config.gate_angle);
        prefix.push(action);
        out.push(SearchEntry {
            actions: prefix.clone(),
            qfi: qfi(&next)?,
        });
        if prefix.len() < max_len {
            enumerate(config, max_len, &next, prefix, out)?;
        }
        prefix.pop();
    }
    Ok(())
}
