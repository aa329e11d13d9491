//! Action selection.
//!
//! The quantum selector encodes the Q-values as a single rotation angle,
//! prepares `Ry(theta) (x) Ry(theta)` on `|00>`, applies `H (x) H` and reads
//! the computational-basis outcome distribution. Outcomes `00, 01, 10` map to
//! `Rx, Ry, S`; outcome `11` carries no action and is renormalized away.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnet::QValues;
use crate::sensor_env::Action;
use crate::statevector::{Gate2x2, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SelectionMode {
    /// Draw an action from the measured outcome distribution.
    #[default]
    Sample,
    /// Take the most probable assigned outcome.
    Argmax,
}

impl SelectionMode {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMode::Sample => "sample",
            SelectionMode::Argmax => "argmax",
        }
    }
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(SelectionMode::Sample),
            "argmax" => Ok(SelectionMode::Argmax),
            other => Err(Error::Parse(format!("unknown selection mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl OutcomeDistribution {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }

    /// Probabilities of `Rx, Ry, S` after discarding outcome `11`.
    pub fn action_probabilities(&self) -> [f64; 3] {
        let assigned = self.p00 + self.p01 + self.p10;
        [self.p00 / assigned, self.p01 / assigned, self.p10 / assigned]
    }
}

/// Rotation angle `pi * max(q+) / sum(q+)` with negatives clamped to zero.
///
/// Returns `None` when no Q-value is positive; callers then draw uniformly.
pub fn encode_angle(q: &QValues) -> Result<Option<f64>> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite Q-values {q:?}")));
    }
    let clamped = q.map(|v| v.max(0.0));
    let sum: f64 = clamped.iter().sum();
    if sum <= 0.0 {
        return Ok(None);
    }
    let max = clamped.iter().copied().fold(0.0, f64::max);
    Ok(Some((max / sum * PI).clamp(0.0, PI)))
}

/// Closed form: each qubit ends in `0` with probability `(1 + sin theta) / 2`.
pub fn outcome_probabilities(theta: f64) -> OutcomeDistribution {
    let p0 = 0.5 * (1.0 + theta.sin());
    let p1 = 1.0 - p0;
    OutcomeDistribution {
        p00: p0 * p0,
        p01: p0 * p1,
        p10: p1 * p0,
        p11: p1 * p1,
    }
}

/// The same distribution obtained by simulating the selection circuit.
pub fn simulate_selection_circuit(theta: f64) -> OutcomeDistribution {
    let state = StateVector::zero_state(2)
        .expect("two qubits is a valid register")
        .apply_all(&Gate2x2::ry(theta))
        .apply_all(&Gate2x2::hadamard());
    let p = state.probabilities();
    OutcomeDistribution {
        p00: p[0],
        p01: p[1],
        p10: p[2],
        p11: p[3],
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn uniform_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::ALL[rng.gen_range(0..Action::COUNT)]
}

fn draw<R: Rng + ?Sized>(probs: &[f64; 3], rng: &mut R) -> Action {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Action::ALL[i];
        }
    }
    Action::ALL[probs.iter().rposition(|&p| p > 0.0).unwrap_or(Action::COUNT - 1)]
}

pub fn select_quantum<R: Rng + ?Sized>(q: &QValues, mode: SelectionMode, rng: &mut R) -> Result<Action> {
    let Some(theta) = encode_angle(q)? else {
        return Ok(uniform_action(rng));
    };
    let dist = outcome_probabilities(theta);
    Ok(match mode {
        SelectionMode::Sample => draw(&dist.action_probabilities(), rng),
        SelectionMode::Argmax => Action::ALL[argmax(&[dist.p00, dist.p01, dist.p10])],
    })
}

pub fn select_epsilon_greedy<R: Rng + ?Sized>(q: &QValues, epsilon: f64, rng: &mut R) -> Action {
    if rng.gen::<f64>() < epsilon {
        uniform_action(rng)
    } else {
        Action::ALL[argmax(q)]
    }
}

/// Exploration gate for the hybrid agent: a uniform action with probability
/// `epsilon`, otherwise the quantum selector.
pub fn select_hybrid<R: Rng + ?Sized>(
    q: &QValues,
    epsilon: f64,
    mode: SelectionMode,
    rng: &mut R,
) -> Result<Action> {
    if rng.gen::<f64>() < epsilon {
        Ok(uniform_action(rng))
    } else {
        select_quantum(q, mode, rng)
    }
}
