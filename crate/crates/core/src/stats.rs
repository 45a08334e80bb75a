//! Seeded Monte Carlo estimation with deterministic reductions.
//!
//! Samples are grouped into fixed-size blocks. Each block is accumulated
//! sequentially and the block partials are combined in index order, so the
//! floating-point result is identical for any rayon pool size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{StreamFamily, StreamRng};

const BLOCK: u64 = 2048;

/// A sample mean with its normal-approximation standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples: u64,
}

impl Estimate {
    /// An exactly known value (zero standard error).
    pub fn exact(value: f64) -> Self {
        Self {
            estimate: value,
            standard_error: 0.0,
            samples: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.standard_error == 0.0
    }

    /// `|estimate - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.standard_error
    }

    /// Distance to `target` in units of standard error (infinite if the
    /// estimate is exact and differs).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.estimate - target;
        if self.standard_error > 0.0 {
            d / self.standard_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// Running first and second moments of a batch of statistics.
#[derive(Clone, Debug)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    fn push(&mut self, values: &[f64]) {
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    fn finish(&self, n: u64) -> Vec<Estimate> {
        let nf = n as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(&s, &q)| {
                let mean = s / nf;
                let var = if n > 1 {
                    ((q - s * mean) / (nf - 1.0)).max(0.0)
                } else {
                    0.0
                };
                Estimate {
                    estimate: mean,
                    standard_error: (var / nf).sqrt(),
                    samples: n,
                }
            })
            .collect()
    }
}

/// Estimates the means of `dim` statistics jointly from `samples` draws.
///
/// `sample(rng, index, out)` writes the statistics of sample `index` into
/// `out`; `rng` is stream `index` of the generator keyed by `seed`.
pub fn estimate_many<F>(samples: u64, seed: u64, dim: usize, sample: F) -> Vec<Estimate>
where
    F: Fn(&mut StreamRng, u64, &mut [f64]) + Sync,
{
    let family = StreamFamily::new(seed);
    let blocks = samples.div_ceil(BLOCK);
    let partials: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Moments::new(dim);
            let mut out = vec![0.0; dim];
            let end = ((b + 1) * BLOCK).min(samples);
            for idx in b * BLOCK..end {
                let mut rng = family.stream(idx);
                out.iter_mut().for_each(|v| *v = 0.0);
                sample(&mut rng, idx, &mut out);
                acc.push(&out);
            }
            acc
        })
        .collect();
    let mut total = Moments::new(dim);
    for p in &partials {
        total.merge(p);
    }
    total.finish(samples)
}

/// Single-statistic form of [`estimate_many`].
pub fn estimate<F>(samples: u64, seed: u64, sample: F) -> Estimate
where
    F: Fn(&mut StreamRng, u64) -> f64 + Sync,
{
    estimate_many(samples, seed, 1, |rng, idx, out| out[0] = sample(rng, idx))[0]
}

/// Sample variance of a statistic with the standard error of that variance.
///
/// Uses the delta-method approximation `se(s^2) ~ sqrt((m4 - s^4) / n)`
/// computed from the same draws.
pub fn variance<F>(samples: u64, seed: u64, sample: F) -> Estimate
where
    F: Fn(&mut StreamRng, u64) -> f64 + Sync,
{
    let est = estimate_many(samples, seed, 4, |rng, idx, out| {
        let v = sample(rng, idx);
        let v2 = v * v;
        out[0] = v;
        out[1] = v2;
        out[2] = v2 * v;
        out[3] = v2 * v2;
    });
    let n = samples as f64;
    let m1 = est[0].estimate;
    let m2 = est[1].estimate;
    let m3 = est[2].estimate;
    let m4 = est[3].estimate;
    let var = (m2 - m1 * m1) * n / (n - 1.0);
    let central4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4);
    Estimate {
        estimate: var,
        standard_error: ((central4 - var * var).max(0.0) / n).sqrt(),
        samples,
    }
}
