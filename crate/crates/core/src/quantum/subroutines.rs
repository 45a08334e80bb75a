//! Circuit subroutines of the forrelation protocol, built only from the
//! simulated gate set.

use std::ops::Range;

use num_complex::Complex64;
use rand::RngCore;

use super::circuit::Gate;
use super::state::{StateVector, DEFAULT_QUBIT_CAP};
use crate::error::{invalid, Error, Result};

/// Gates of the controlled Hadamard, in application order:
/// `H(t), R(t), CNOT(c,t), H(t), R(t)`.
///
/// With the control at bit 0 the target sees `R·H·R·H = I`; with the control
/// at bit 1 it sees `R·H·X·R·H = H`.
pub fn controlled_h_gates(control: usize, target: usize) -> [Gate; 5] {
    [
        Gate::Hadamard(target),
        Gate::RPi8(target),
        Gate::Cnot { control, target },
        Gate::Hadamard(target),
        Gate::RPi8(target),
    ]
}

/// Applies `H` to `target` iff `control` holds bit 1 (label `-1`).
pub fn controlled_h(state: &mut StateVector, control: usize, target: usize) -> Result<()> {
    if control == target {
        return Err(invalid("controlled-H control equals target"));
    }
    let mut rng = NoEntropy;
    for g in controlled_h_gates(control, target) {
        state.apply_gate(&g, &mut rng)?;
    }
    Ok(())
}

/// Direct block application of controlled-H, used as the reference the
/// gate decomposition is checked against.
pub fn controlled_h_direct(state: &mut StateVector, control: usize, target: usize) -> Result<()> {
    let qubits = state.qubits();
    if control == target || control >= qubits || target >= qubits {
        return Err(invalid("bad controlled-H qubits"));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (cbit, tbit) = (1usize << control, 1usize << target);
    let mut amps = state.amplitudes().to_vec();
    for i in 0..amps.len() {
        if i & cbit != 0 && i & tbit == 0 {
            let (a, b) = (amps[i], amps[i | tbit]);
            amps[i] = (a + b) * h;
            amps[i | tbit] = (a - b) * h;
        }
    }
    *state = StateVector::from_amplitudes(amps)?;
    Ok(())
}

/// The 4×4 unitary induced by the controlled-H gate sequence, in the basis
/// `|c t⟩` with the control as the high bit (row = output, column = input).
pub fn controlled_h_matrix() -> [[Complex64; 4]; 4] {
    induced_matrix(|s| controlled_h(s, 1, 0).expect("valid qubits"))
}

/// `diag(I, H)` in the same basis.
pub fn controlled_h_target_matrix() -> [[Complex64; 4]; 4] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[one, z, z, z], [z, one, z, z], [z, z, h, h], [z, z, h, -h]]
}

fn induced_matrix(apply: impl Fn(&mut StateVector)) -> [[Complex64; 4]; 4] {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for col in 0..4 {
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[col] = Complex64::new(1.0, 0.0);
        let mut s = StateVector::from_amplitudes(amps).expect("basis state");
        apply(&mut s);
        for (row, a) in s.amplitudes().iter().enumerate() {
            m[row][col] = *a;
        }
    }
    m
}

/// Whether `a = e^{iθ} b` for some global phase, entrywise within `tol`.
pub fn equal_up_to_phase(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let Some(k) = (0..b.len()).max_by(|&i, &j| b[i].norm().total_cmp(&b[j].norm())) else {
        return true;
    };
    if b[k].norm() == 0.0 {
        return a.iter().all(|x| x.norm() <= tol);
    }
    let phase = a[k] / b[k];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    a.iter().zip(b).all(|(x, y)| (x - phase * y).norm() <= tol)
}

fn check_blocks(a: &Range<usize>, b: &Range<usize>) -> Result<()> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "E-operator blocks differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.start < b.end && b.start < a.end {
        return Err(invalid(format!(
            "E-operator blocks {a:?} and {b:?} overlap"
        )));
    }
    Ok(())
}

/// CNOT cascade from bit `j` of block `a` to bit `j` of block `b`:
/// `|a⟩|b⟩ → |a⟩|b ⊕ a⟩`.
pub fn e_operator_gates(a: Range<usize>, b: Range<usize>) -> Result<Vec<Gate>> {
    check_blocks(&a, &b)?;
    Ok(a.zip(b)
        .map(|(control, target)| Gate::Cnot { control, target })
        .collect())
}

/// Exchanges `|i⟩|i⟩` and `|i⟩|0⟩` for every `i`.
pub fn e_operator(state: &mut StateVector, a: Range<usize>, b: Range<usize>) -> Result<()> {
    let mut rng = NoEntropy;
    for g in e_operator_gates(a, b)? {
        state.apply_gate(&g, &mut rng)?;
    }
    Ok(())
}

/// `X` on `q` from the gate set: `R·R·H` is the reflection about angle pi/4.
pub fn negate_gates(q: usize) -> [Gate; 3] {
    [Gate::Hadamard(q), Gate::RPi8(q), Gate::RPi8(q)]
}

/// Swap test on a state `(|0⟩|φ⟩ + |1⟩|ψ⟩)/√2` with the selector on
/// `control`: Hadamard, measure, negate. Returns 1 with probability
/// `(1 + Re⟨φ|ψ⟩)/2`.
pub fn swap_test<R: RngCore + ?Sized>(
    state: &mut StateVector,
    control: usize,
    rng: &mut R,
) -> Result<u8> {
    state.apply_gate(&Gate::Hadamard(control), rng)?;
    let label = state
        .apply_gate(&Gate::Measure(control), rng)?
        .expect("measurement yields a label");
    // measured bit 0 (label +1) is reported as 1
    Ok(u8::from(label > 0))
}

/// Gates preparing `half` Bell pairs from `|0…0⟩`: Hadamards on qubits
/// `0..half`, then the E operator into `half..2·half`.
pub fn bell_pairs_gates(half: usize) -> Vec<Gate> {
    let mut gates: Vec<Gate> = (0..half).map(Gate::Hadamard).collect();
    gates.extend(e_operator_gates(0..half, half..2 * half).expect("disjoint equal blocks"));
    gates
}

/// `2^{-half/2} Σ_i |i⟩|i⟩` over `2·half` qubits.
pub fn bell_pairs(half: usize) -> Result<StateVector> {
    if 2 * half > DEFAULT_QUBIT_CAP {
        return Err(Error::Resource(format!(
            "{} qubits exceeds the cap of {DEFAULT_QUBIT_CAP}",
            2 * half
        )));
    }
    let mut s = StateVector::zero(2 * half)?;
    let mut rng = NoEntropy;
    for g in bell_pairs_gates(half) {
        s.apply_gate(&g, &mut rng)?;
    }
    Ok(s)
}

/// Entropy source for unitary-only sequences; drawing from it is a bug.
struct NoEntropy;

impl RngCore for NoEntropy {
    fn next_u32(&mut self) -> u32 {
        unreachable!("unitary sequence consumed randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("unitary sequence consumed randomness")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("unitary sequence consumed randomness")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamFamily};
    use rand::Rng;

    fn random_state(qubits: usize, seed: u64) -> StateVector {
        let mut rng = stream(seed, 0);
        let mut amps: Vec<Complex64> = (0..1 << qubits)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn basis(qubits: usize, index: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn controlled_h_matches_block_matrix() {
        let got: Vec<Complex64> = controlled_h_matrix().iter().flatten().copied().collect();
        let want: Vec<Complex64> = controlled_h_target_matrix()
            .iter()
            .flatten()
            .copied()
            .collect();
        assert!(equal_up_to_phase(&got, &want, 1e-10));
    }

    #[test]
    fn controlled_h_inactive_and_active() {
        // control qubit 1 at bit 0: target untouched
        let psi = random_state(1, 3);
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0] = psi.amplitude(0);
        amps[1] = psi.amplitude(1);
        let mut s = StateVector::from_amplitudes(amps.clone()).unwrap();
        controlled_h(&mut s, 1, 0).unwrap();
        for (i, a) in amps.iter().enumerate() {
            assert!((s.amplitude(i) - a).norm() < 1e-12);
        }
        // control at bit 1, target |0⟩ → (|0⟩ + |1⟩)/√2
        let mut s = basis(2, 0b10);
        controlled_h(&mut s, 1, 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(0b10).re - h).abs() < 1e-12);
        assert!((s.amplitude(0b11).re - h).abs() < 1e-12);
        assert!(controlled_h(&mut s, 0, 0).is_err());
    }

    #[test]
    fn controlled_h_agrees_with_direct_on_random_states() {
        for seed in 0..10 {
            let mut a = random_state(4, seed);
            let mut b = a.clone();
            controlled_h(&mut a, 3, 1).unwrap();
            controlled_h_direct(&mut b, 3, 1).unwrap();
            assert!(equal_up_to_phase(a.amplitudes(), b.amplitudes(), 1e-10));
        }
    }

    #[test]
    fn e_operator_basis_action() {
        for i in 0..16 {
            let mut s = basis(8, i | i << 4);
            e_operator(&mut s, 0..4, 4..8).unwrap();
            assert_eq!(s.amplitude(i).re, 1.0);
            e_operator(&mut s, 0..4, 4..8).unwrap();
            assert_eq!(s.amplitude(i | i << 4).re, 1.0);
        }
    }

    #[test]
    fn e_operator_rejects_bad_blocks() {
        let mut s = StateVector::zero(6).unwrap();
        assert!(e_operator(&mut s, 0..3, 2..5).is_err());
        assert!(e_operator(&mut s, 0..2, 3..6).is_err());
    }

    #[test]
    fn negate_is_pauli_x() {
        for b in 0..2 {
            let mut s = basis(1, b);
            let mut rng = stream(0, 0);
            for g in negate_gates(0) {
                s.apply_gate(&g, &mut rng).unwrap();
            }
            assert!((s.amplitude(1 - b).re - 1.0).abs() < 1e-12);
        }
    }

    fn swap_input(phi: &StateVector, psi: &StateVector) -> StateVector {
        // selector on qubit 0, payload on qubits 1..
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * phi.amplitudes().len()];
        for k in 0..phi.amplitudes().len() {
            amps[2 * k] = phi.amplitude(k) * h;
            amps[2 * k + 1] = psi.amplitude(k) * h;
        }
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn accept_rate(state: &StateVector, shots: u64, seed: u64) -> f64 {
        let fam = StreamFamily::new(seed);
        let ones: u64 = (0..shots)
            .map(|k| swap_test(&mut state.clone(), 0, &mut fam.stream(k)).unwrap() as u64)
            .sum();
        ones as f64 / shots as f64
    }

    #[test]
    fn swap_test_extremes() {
        let phi = random_state(3, 1);
        let mut neg = phi.clone();
        let amps: Vec<Complex64> = neg.amplitudes().iter().map(|a| -a).collect();
        neg = StateVector::from_amplitudes(amps).unwrap();
        assert_eq!(accept_rate(&swap_input(&phi, &phi), 2000, 1), 1.0);
        assert_eq!(accept_rate(&swap_input(&phi, &neg), 2000, 2), 0.0);
    }

    #[test]
    fn swap_test_orthogonal_is_fair() {
        let shots = 100_000;
        let p = accept_rate(&swap_input(&basis(2, 0), &basis(2, 3)), shots, 3);
        assert!((p - 0.5).abs() <= 3.0 * (0.25 / shots as f64).sqrt(), "{p}");
    }

    #[test]
    fn acceptance_probability_is_inner_product_law() {
        let phi = random_state(3, 10);
        let psi = random_state(3, 11);
        let mut s = swap_input(&phi, &psi);
        s.apply_gate(&Gate::Hadamard(0), &mut stream(0, 0)).unwrap();
        let p_accept = 1.0 - s.probability_one(0);
        assert!((p_accept - (1.0 + phi.inner(&psi).re) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bell_pair_amplitudes() {
        let s = bell_pairs(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let got: Vec<f64> = s.amplitudes().iter().map(|a| a.re).collect();
        for (g, w) in got.iter().zip([h, 0.0, 0.0, h]) {
            assert!((g - w).abs() < 1e-15);
        }
        let s = bell_pairs(3).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            let doubled = (i & 7) == (i >> 3);
            let want = if doubled { 1.0 / 8f64.sqrt() } else { 0.0 };
            assert!((a.re - want).abs() < 1e-15 && a.im == 0.0);
        }
        assert!(matches!(bell_pairs(14), Err(Error::Resource(_))));
    }

    #[test]
    fn bell_pair_marginal_is_uniform() {
        let m = 3;
        let base = bell_pairs(m).unwrap();
        let shots = 40_000u64;
        let fam = StreamFamily::new(8);
        let mut counts = [0u64; 8];
        for k in 0..shots {
            let mut s = base.clone();
            let mut rng = fam.stream(k);
            let mut value = 0;
            for q in 0..m {
                let label = s.apply_gate(&Gate::Measure(q), &mut rng).unwrap().unwrap();
                value |= (super::super::sign_to_bit(label) as usize) << q;
            }
            counts[value] += 1;
        }
        let p = 1.0 / 8.0;
        let sd = (p * (1.0 - p) / shots as f64).sqrt();
        for c in counts {
            assert!(
                (c as f64 / shots as f64 - p).abs() <= 3.5 * sd,
                "{counts:?}"
            );
        }
    }
}
