//! Dense statevector engine for small qubit registers.
//!
//! Basis states are ordered big-endian: qubit 0 is the most significant bit
//! of the basis index, so for two qubits the order is `00, 01, 10, 11`.
//! Rotations follow the half-angle convention `R_a(t) = exp(-i t sigma_a / 2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex amplitude of one computational basis state.
pub type Amplitude = Complex64;

/// Largest register the dense engine will allocate.
pub const MAX_QUBITS: usize = 10;

const UNITARY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A 2x2 unitary acting on a single qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate2x2 {
    m: [[Complex64; 2]; 2],
}

impl Gate2x2 {
    /// Builds a gate from its matrix, rejecting matrices that are not unitary
    /// to within `1e-12`.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let gate = Self { m };
        let deviation = gate.unitarity_deviation();
        if !deviation.is_finite() || deviation > UNITARY_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(gate)
    }

    fn unchecked(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self::unchecked([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::unchecked([[h, h], [h, -h]])
    }

    pub fn rx(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        let mis = Complex64::new(0.0, -s);
        Self::unchecked([[c, mis], [mis, c]])
    }

    pub fn ry(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Self::unchecked([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    pub fn rz(angle: f64) -> Self {
        let half = angle / 2.0;
        Self::unchecked([
            [Complex64::from_polar(1.0, -half), ZERO],
            [ZERO, Complex64::from_polar(1.0, half)],
        ])
    }

    pub fn rotation(axis: Axis, angle: f64) -> Self {
        match axis {
            Axis::X => Self::rx(angle),
            Axis::Y => Self::ry(angle),
            Axis::Z => Self::rz(angle),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self::unchecked([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    /// Largest entrywise deviation of `G^dagger G` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let m = &self.m;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let entry = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
                let expected = if i == j { ONE } else { ZERO };
                worst = worst.max((entry - expected).norm());
            }
        }
        worst
    }
}

/// Unit-norm amplitude vector of an `n`-qubit register.
///
/// Values are immutable: every gate application returns a new state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// The all-zeros basis state `|0...0>`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_register_size(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes after checking length, finiteness and unit norm.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Amplitude>) -> Result<Self> {
        check_register_size(n_qubits)?;
        let expected = 1 << n_qubits;
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Numerical("non-finite amplitude".into()));
        }
        let state = Self { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Numerical(format!(
                "state norm {norm} deviates from 1"
            )));
        }
        Ok(state)
    }

    #[cfg(test)]
    pub(crate) fn from_raw_unchecked(n_qubits: usize, amps: Vec<Amplitude>) -> Self {
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Born-rule probabilities of each computational basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `gate` to `qubit`, leaving all other qubits untouched.
    pub fn apply_single(&self, gate: &Gate2x2, qubit: usize) -> Result<Self> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        let mut out = self.clone();
        out.apply_single_in_place(gate, qubit);
        Ok(out)
    }

    fn apply_single_in_place(&mut self, gate: &Gate2x2, qubit: usize) {
        let stride = 1 << (self.n_qubits - 1 - qubit);
        let [[g00, g01], [g10, g11]] = gate.m;
        for block in (0..self.amps.len()).step_by(stride << 1) {
            for lo in block..block + stride {
                let hi = lo + stride;
                let a0 = self.amps[lo];
                let a1 = self.amps[hi];
                self.amps[lo] = g00 * a0 + g01 * a1;
                self.amps[hi] = g10 * a0 + g11 * a1;
            }
        }
    }

    /// Applies the same single-qubit gate to every qubit of the register.
    pub fn apply_all(&self, gate: &Gate2x2) -> Self {
        let mut out = self.clone();
        for q in 0..self.n_qubits {
            out.apply_single_in_place(gate, q);
        }
        out
    }

    /// Collective rotation `exp(-i angle J_axis)` with `J = 1/2 sum_k sigma^(k)`,
    /// i.e. the rotation applied to each qubit.
    pub fn apply_collective_rotation(&self, axis: Axis, angle: f64) -> Self {
        self.apply_all(&Gate2x2::rotation(axis, angle))
    }

    /// One-axis twisting `exp(-i angle Jz^2)`, diagonal in the computational basis.
    pub fn apply_squeeze(&self, angle: f64) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let m = jz_eigenvalue(k, self.n_qubits);
                a * Complex64::from_polar(1.0, -angle * m * m)
            })
            .collect();
        Self {
            n_qubits: self.n_qubits,
            amps,
        }
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let factor = Complex64::from_polar(1.0, phase);
        Self {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|&a| a * factor).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Amplitude> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Eigenvalue of `Jz = 1/2 sum_k sigma_z^(k)` on basis state `index`:
/// half the number of zeros minus the number of ones.
pub fn jz_eigenvalue(index: usize, n_qubits: usize) -> f64 {
    let ones = (index & ((1 << n_qubits) - 1)).count_ones() as f64;
    (n_qubits as f64 - 2.0 * ones) / 2.0
}

fn check_register_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    Ok(())
}
