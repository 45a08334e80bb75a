//! Fourier-side analysis of classical protocols under the XOR lift.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use super::partition::{BitSet, RectanglePartition, DENSE_MAX_INPUT};
use crate::error::{invalid, Error, Result};
use crate::forrelation::{sample_d, ForrParams};
use crate::fourier::{convolve, level_mass, spectrum, FunctionTable};
use crate::sign::SignVector;
use crate::stats::{estimate, Estimate};

fn indicator(set: &BitSet) -> FunctionTable {
    FunctionTable::indicator(set.n(), set.points())
}

fn dense_view(p: &RectanglePartition) -> Result<RectanglePartition> {
    if p.n() > DENSE_MAX_INPUT {
        return Err(Error::Resource(format!(
            "dense protocol tables need 2N <= {DENSE_MAX_INPUT}, got {}",
            p.n()
        )));
    }
    if p.is_dense() {
        Ok(p.clone())
    } else {
        p.to_dense()
    }
}

/// `H(z) = E_x[C(x, x·z)] = Σ_cells out · (1_A ∗ 1_B)(z)`.
pub fn protocol_h(p: &RectanglePartition) -> Result<FunctionTable> {
    let dense = dense_view(p)?;
    let n = dense.n();
    let mut total = vec![0.0; 1 << n];
    for cell in dense.cells() {
        let (a, b) = cell_sets(cell);
        let conv = convolve(&indicator(a), &indicator(b))?;
        let out = cell.out as f64;
        for (t, v) in total.iter_mut().zip(conv.values()) {
            *t += out * v;
        }
    }
    FunctionTable::new(total)
}

fn cell_sets(cell: &super::partition::Cell) -> (&BitSet, &BitSet) {
    use super::partition::PointSet;
    match (&cell.a, &cell.b) {
        (PointSet::Dense(a), PointSet::Dense(b)) => (a, b),
        _ => unreachable!("dense view has dense cells"),
    }
}

/// Result of [`l2_audit`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Audit {
    pub l2_mass: f64,
    /// Cost after preconditioning: `cost + 4` if some side of some cell has
    /// measure above `1/e`, else `cost`.
    pub effective_cost: u32,
    pub bound: f64,
    pub pass: bool,
}

/// Level-2 Fourier mass of `H` against `120 c^2`.
///
/// The bound is argued for partitions whose cell sides all have measure at
/// most `1/e`. Any partition gets there by having each player first send
/// two input bits, which refines the cells without changing the protocol's
/// output (so `H` is unchanged) and raises the cost to `c + 4`.
pub fn l2_audit(p: &RectanglePartition) -> Result<L2Audit> {
    let dense = dense_view(p)?;
    let h = protocol_h(&dense)?;
    let l2_mass = level_mass(&spectrum(&h), 2)?;
    let limit = (-1.0f64).exp();
    let needs_split = dense.cells().iter().any(|c| {
        let (a, b) = cell_sets(c);
        a.measure() > limit || b.measure() > limit
    });
    let effective_cost = if needs_split { p.cost() + 4 } else { p.cost() };
    let bound = 120.0 * (effective_cost as f64).powi(2);
    Ok(L2Audit {
        l2_mass,
        effective_cost,
        bound,
        pass: l2_mass <= bound,
    })
}

/// `E_{x uniform, z ~ D}[C(x, x·z)] - E_{x,y uniform}[C(x, y)]`, estimated
/// with the same `x` in both terms of each sample.
pub fn advantage(
    p: &RectanglePartition,
    params: &ForrParams,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if samples < 10_000 {
        return Err(invalid(format!(
            "advantage estimation needs at least 10^4 samples, got {samples}"
        )));
    }
    let len = params.input_len();
    if p.n() != len {
        return Err(invalid(format!(
            "partition over n = {} used with 2N = {len}",
            p.n()
        )));
    }
    let failed = AtomicBool::new(false);
    let est = estimate(samples, seed, |rng, _| {
        let z = sample_d(params, rng);
        let x = SignVector::random(len, rng);
        let y_uniform = SignVector::random(len, rng);
        let y_lifted = x.product(&z).expect("equal lengths");
        match (p.eval(&x, &y_lifted), p.eval(&x, &y_uniform)) {
            (Ok(a), Ok(b)) => (a - b) as f64,
            _ => {
                failed.store(true, Ordering::Relaxed);
                0.0
            }
        }
    });
    if failed.load(Ordering::Relaxed) {
        return Err(Error::PartitionViolation(
            "a sampled input pair is not covered by exactly one cell".into(),
        ));
    }
    Ok(est)
}

/// `P[Binomial(reps, base_error) >= ceil(reps/2)]`: the error of a majority
/// vote over `reps` independent runs.
pub fn majority_amplify(base_error: f64, reps: u64) -> Result<f64> {
    if !(0.0..0.5).contains(&base_error) {
        return Err(invalid(format!(
            "base error {base_error} must lie in [0, 1/2)"
        )));
    }
    if reps.is_multiple_of(2) {
        return Err(invalid(format!("repetition count {reps} must be odd")));
    }
    if base_error == 0.0 {
        return Ok(0.0);
    }
    let need = reps.div_ceil(2);
    let (lp, lq) = (base_error.ln(), (1.0 - base_error).ln());
    // log C(reps, k), accumulated incrementally
    let mut log_binom = 0.0;
    let mut total = 0.0;
    for k in 0..=reps {
        if k > 0 {
            log_binom += ((reps - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= need {
            total += (log_binom + k as f64 * lp + (reps - k) as f64 * lq).exp();
        }
    }
    Ok(total.min(1.0))
}
