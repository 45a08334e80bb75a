use num_complex::Complex64;
use rand::RngCore;

use super::bit_to_sign;
use super::circuit::Gate;
use crate::error::{invalid, Error, Result};
use crate::rng::unit;
use crate::sign::SignVector;

/// Default simulation cap: 2^26 amplitudes, 1 GiB.
pub const DEFAULT_QUBIT_CAP: usize = 26;

const NORM_TOL: f64 = 1e-9;

/// Pure state on `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `qubits` qubits, subject to [`DEFAULT_QUBIT_CAP`].
    pub fn zero(qubits: usize) -> Result<Self> {
        Self::zero_with_cap(qubits, DEFAULT_QUBIT_CAP)
    }

    pub fn zero_with_cap(qubits: usize, cap: usize) -> Result<Self> {
        if qubits > cap {
            return Err(Error::Resource(format!(
                "{qubits} qubits exceeds the cap of {cap}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, amps })
    }

    /// Wraps an amplitude vector; it must be normalized to within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(invalid(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        let qubits = amps.len().trailing_zeros() as usize;
        if qubits > DEFAULT_QUBIT_CAP {
            return Err(Error::Resource(format!(
                "{qubits} qubits exceeds the cap of {DEFAULT_QUBIT_CAP}"
            )));
        }
        let state = Self { qubits, amps };
        state.check_normalized()?;
        Ok(state)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::ContractViolation(format!(
                "state is not normalized: |psi|^2 = {norm}"
            )));
        }
        Ok(())
    }

    /// Applies one gate. Measurements return their `±1` label and collapse
    /// the state; unitary gates return `None`.
    pub fn apply_gate<R: RngCore + ?Sized>(
        &mut self,
        gate: &Gate,
        rng: &mut R,
    ) -> Result<Option<i8>> {
        gate.validate(self.qubits)?;
        self.check_normalized()?;
        Ok(self.apply_validated(gate, rng))
    }

    pub(crate) fn apply_validated<R: RngCore + ?Sized>(
        &mut self,
        gate: &Gate,
        rng: &mut R,
    ) -> Option<i8> {
        match gate {
            Gate::Hadamard(q) => {
                self.hadamard(*q);
                None
            }
            Gate::Cnot { control, target } => {
                self.cnot(*control, *target);
                None
            }
            Gate::RPi8(q) => {
                self.r_pi8(*q);
                None
            }
            Gate::Oracle { signs, start } => {
                self.oracle(signs, *start);
                None
            }
            Gate::Measure(q) => Some(bit_to_sign(self.measure_with(*q, unit(rng)))),
        }
    }

    /// Applies the real 2×2 matrix `[[a, b], [c, d]]` to qubit `q`.
    fn single_real(&mut self, q: usize, a: f64, b: f64, c: f64, d: f64) {
        let stride = 1 << q;
        for block in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*x0, *x1);
                *x0 = u * a + v * b;
                *x1 = u * c + v * d;
            }
        }
    }

    pub(crate) fn hadamard(&mut self, q: usize) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        self.single_real(q, h, h, h, -h);
    }

    pub(crate) fn r_pi8(&mut self, q: usize) {
        let (s, c) = (std::f64::consts::PI / 8.0).sin_cos();
        self.single_real(q, c, -s, s, c);
    }

    pub(crate) fn cnot(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
    }

    /// Multiplies the amplitude of every basis state whose block value `i`
    /// (qubits `start..start + width`) satisfies `i < signs.len()` by
    /// `signs[i]`.
    pub(crate) fn oracle(&mut self, signs: &SignVector, start: usize) {
        let width = Gate::oracle_width(signs.len());
        let mask = (1usize << width) - 1;
        for (b, amp) in self.amps.iter_mut().enumerate() {
            let local = (b >> start) & mask;
            if local < signs.len() && signs.is_negative(local) {
                *amp = -*amp;
            }
        }
    }

    /// Born probability that qubit `q` reads bit 1.
    pub fn probability_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Measures qubit `q` using the uniform variate `u ∈ [0,1)`: the result
    /// is bit 1 iff `u < P[bit 1]`. Collapses and renormalizes.
    pub(crate) fn measure_with(&mut self, q: usize, u: f64) -> u8 {
        let p1 = self.probability_one(q);
        let outcome: u8 = if u < p1 { 1 } else { 0 };
        let p = if outcome == 1 { p1 } else { 1.0 - p1 };
        let scale = 1.0 / p.sqrt();
        let bit = 1usize << q;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if ((i & bit != 0) as u8) == outcome {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        outcome
    }
}
