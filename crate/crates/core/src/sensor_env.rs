//! Quantum sensor circuit environment.
//!
//! The register starts in `|0...0>`; every action appends one collective gate
//! (Rx, Ry or one-axis twisting S) with a fixed angle. The reward is the
//! normalized quantum Fisher information `4 Var(Jz) / n^2` of the resulting
//! state, and the observation is the Husimi-Q function sampled on a grid of
//! spin-coherent states.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{jz_eigenvalue, Axis, StateVector};

/// Norm deviation tolerated by [`qfi`] before the state is rejected.
const QFI_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Rx = 0,
    Ry = 1,
    S = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Rx, Action::Ry, Action::S];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::Parse(format!("action index {index} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Rx => "Rx",
            Action::Ry => "Ry",
            Action::S => "S",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rx" => Ok(Action::Rx),
            "ry" => Ok(Action::Ry),
            "s" => Ok(Action::S),
            _ => Err(Error::Parse(format!("unknown gate '{}'", s.trim()))),
        }
    }
}

/// Formats a gate sequence as space-separated names, e.g. `Ry S Ry`.
pub fn format_circuit(actions: &[Action], separator: &str) -> String {
    actions
        .iter()
        .map(|a| a.name())
        .collect::<Vec<_>>()
        .join(separator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub n_qubits: usize,
    /// Angle used by every gate in the action set, in radians.
    pub gate_angle: f64,
    /// Episode ends successfully once the normalized QFI reaches this value.
    pub threshold: f64,
    pub max_steps: usize,
    pub grid_theta: usize,
    pub grid_phi: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_qubits: 2,
            gate_angle: FRAC_PI_2,
            threshold: 0.95,
            max_steps: 10,
            grid_theta: 8,
            grid_phi: 8,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > crate::statevector::MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={}, got {}",
                crate::statevector::MAX_QUBITS,
                self.n_qubits
            )));
        }
        if !self.gate_angle.is_finite() {
            return Err(Error::Config("gate_angle must be finite".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if self.grid_theta < 2 || self.grid_phi < 2 {
            return Err(Error::Config(format!(
                "Husimi grid must be at least 2x2, got {}x{}",
                self.grid_theta, self.grid_phi
            )));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.grid_theta * self.grid_phi
    }
}

/// Husimi-Q values on the observation grid, row-major over `(theta_i, phi_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HusimiFeatures {
    pub values: Vec<f64>,
}

impl HusimiFeatures {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    ThresholdReached,
    StepCapReached,
    NotDone,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::ThresholdReached => "threshold",
            Termination::StepCapReached => "step_cap",
            Termination::NotDone => "not_done",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(Termination::ThresholdReached),
            "step_cap" => Ok(Termination::StepCapReached),
            "not_done" => Ok(Termination::NotDone),
            other => Err(Error::Parse(format!("unknown termination '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub features: HusimiFeatures,
    /// Equal to `qfi`: the reward is the absolute QFI after the action.
    pub reward: f64,
    pub qfi: f64,
    pub done: bool,
    pub termination: Termination,
}

/// Un-normalized QFI `4 Var(Jz)` of a pure state.
pub fn raw_qfi(state: &StateVector) -> Result<f64> {
    let norm = state.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > QFI_NORM_TOL {
        return Err(Error::Numerical(format!(
            "QFI requires a unit-norm state, norm is {norm}"
        )));
    }
    let n = state.n_qubits();
    let (mut mean, mut second) = (0.0, 0.0);
    for (k, p) in state.probabilities().into_iter().enumerate() {
        let m = jz_eigenvalue(k, n);
        mean += p * m;
        second += p * m * m;
    }
    Ok(4.0 * (second - mean * mean).max(0.0))
}

/// Normalized QFI `4 Var(Jz) / n^2`, in `[0, 1]`; 1 for the N00N state.
pub fn qfi(state: &StateVector) -> Result<f64> {
    let n = state.n_qubits() as f64;
    Ok((raw_qfi(state)? / (n * n)).clamp(0.0, 1.0))
}

/// Spin-coherent product state `(cos(t/2)|0> + e^{i p} sin(t/2)|1>)^{(x)n}`.
pub fn coherent_state(n_qubits: usize, theta: f64, phi: f64) -> Result<StateVector> {
    StateVector::from_amplitudes(n_qubits, coherent_amplitudes(n_qubits, theta, phi))
}

fn coherent_amplitudes(n_qubits: usize, theta: f64, phi: f64) -> Vec<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    let one = Complex64::from_polar(s, phi);
    (0..1usize << n_qubits)
        .map(|k| {
            let ones = k.count_ones() as i32;
            one.powi(ones) * c.powi(n_qubits as i32 - ones)
        })
        .collect()
}

/// `Q(theta, phi) = |<alpha(theta, phi)|psi>|^2` at a single point.
pub fn husimi_value(state: &StateVector, theta: f64, phi: f64) -> f64 {
    let alpha = coherent_amplitudes(state.n_qubits(), theta, phi);
    alpha
        .iter()
        .zip(state.amplitudes())
        .map(|(a, psi)| a.conj() * psi)
        .sum::<Complex64>()
        .norm_sqr()
}

/// Grid point of the observation: `theta` at cell midpoints, `phi` at left edges.
pub fn grid_point(i: usize, j: usize, grid_theta: usize, grid_phi: usize) -> (f64, f64) {
    let theta = (i as f64 + 0.5) * PI / grid_theta as f64;
    let phi = j as f64 * 2.0 * PI / grid_phi as f64;
    (theta, phi)
}

pub fn husimi_grid(state: &StateVector, grid_theta: usize, grid_phi: usize) -> HusimiFeatures {
    let mut values = Vec::with_capacity(grid_theta * grid_phi);
    for i in 0..grid_theta {
        for j in 0..grid_phi {
            let (theta, phi) = grid_point(i, j, grid_theta, grid_phi);
            values.push(husimi_value(state, theta, phi).clamp(0.0, 1.0));
        }
    }
    HusimiFeatures { values }
}

pub fn husimi_features(state: &StateVector, config: &EnvConfig) -> HusimiFeatures {
    husimi_grid(state, config.grid_theta, config.grid_phi)
}

/// Applies one environment gate to `state`.
pub fn apply_action(state: &StateVector, action: Action, gate_angle: f64) -> StateVector {
    match action {
        Action::Rx => state.apply_collective_rotation(Axis::X, gate_angle),
        Action::Ry => state.apply_collective_rotation(Axis::Y, gate_angle),
        Action::S => state.apply_squeeze(gate_angle),
    }
}

/// Runs `actions` from `|0...0>` and returns the final state.
pub fn evolve(config: &EnvConfig, actions: &[Action]) -> Result<StateVector> {
    let mut state = StateVector::zero_state(config.n_qubits)?;
    for &a in actions {
        state = apply_action(&state, a, config.gate_angle);
    }
    Ok(state)
}

/// Single-episode environment handle.
#[derive(Debug, Clone)]
pub struct SensorEnv {
    config: EnvConfig,
    state: StateVector,
    steps: usize,
    done: bool,
}

impl SensorEnv {
    /// Validates `config` and returns an environment positioned at `|0...0>`
    /// together with its initial observation.
    pub fn reset(config: EnvConfig) -> Result<(Self, HusimiFeatures)> {
        config.validate()?;
        let state = StateVector::zero_state(config.n_qubits)?;
        let features = husimi_features(&state, &config);
        let env = Self {
            config,
            state,
            steps: 0,
            done: false,
        };
        Ok((env, features))
    }

    /// Starts a new episode on the same handle.
    pub fn restart(&mut self) -> HusimiFeatures {
        self.state = StateVector::zero_state(self.config.n_qubits)
            .expect("config validated at construction");
        self.steps = 0;
        self.done = false;
        husimi_features(&self.state, &self.config)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        self.state = apply_action(&self.state, action, self.config.gate_angle);
        self.steps += 1;
        let qfi = qfi(&self.state)?;
        let termination = if qfi >= self.config.threshold {
            Termination::ThresholdReached
        } else if self.steps >= self.config.max_steps {
            Termination::StepCapReached
        } else {
            Termination::NotDone
        };
        self.done = termination != Termination::NotDone;
        Ok(StepOutcome {
            features: husimi_features(&self.state, &self.config),
            reward: qfi,
            qfi,
            done: self.done,
            termination,
        })
    }
}
