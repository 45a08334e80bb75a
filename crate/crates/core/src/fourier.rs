//! Dense Fourier analysis on the Boolean hypercube.
//!
//! Points and subsets share one encoding: bit `i` of an index is coordinate
//! `i`. For a point a set bit means the coordinate is `-1`; for a subset it
//! means the coordinate belongs to the set. With that encoding
//! `chi_S(x) = (-1)^popcount(S & x)`.
//!
//! Normalization: [`fwht`] is the raw butterfly (no scaling, `fwht∘fwht =
//! 2^n`). [`spectrum`] divides by `2^n` once, giving the expectation form
//! `f̂(S) = E_x[f(x) chi_S(x)]`; [`inverse_spectrum`] applies no scaling.

use crate::error::{invalid, Error, Result};

/// Real-valued function on `{-1,1}^n`, stored by point index.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionTable {
    n: usize,
    values: Vec<f64>,
}

/// Fourier coefficients of a [`FunctionTable`], stored by subset bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coeffs: Vec<f64>,
}

fn dimension_of(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(invalid(format!("length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(invalid(format!("entry {i} is not finite"))),
        None => Ok(()),
    }
}

impl FunctionTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = dimension_of(values.len())?;
        check_finite(&values)?;
        Ok(Self { n, values })
    }

    /// Tabulates `f` over all `2^n` point indices.
    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new((0..1usize << n).map(f).collect())
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            n,
            values: vec![c; 1 << n],
        }
    }

    /// The character `chi_S`.
    pub fn character(n: usize, subset: usize) -> Self {
        Self {
            n,
            values: (0..1usize << n).map(|x| chi(subset, x)).collect(),
        }
    }

    /// 0/1 indicator of a set of point indices.
    pub fn indicator(n: usize, points: impl IntoIterator<Item = usize>) -> Self {
        let mut values = vec![0.0; 1 << n];
        for p in points {
            values[p] = 1.0;
        }
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, point: usize) -> f64 {
        self.values[point]
    }

    /// `E_x[f(x)]` under the uniform distribution.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl FourierSpectrum {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let n = dimension_of(coeffs.len())?;
        check_finite(&coeffs)?;
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, subset: usize) -> f64 {
        self.coeffs[subset]
    }

    /// `Σ_S f̂(S)^2`.
    pub fn total_weight(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// `chi_S(x)` for subset mask `S` and point index `x`.
#[inline]
pub fn chi(subset: usize, point: usize) -> f64 {
    if (subset & point).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
pub fn fwht_in_place(values: &mut [f64]) -> Result<()> {
    dimension_of(values.len())?;
    let len = values.len();
    let mut half = 1;
    while half < len {
        for block in values.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half <<= 1;
    }
    Ok(())
}

/// Unnormalized Walsh–Hadamard transform of `values` (length `2^n`).
pub fn fwht(values: &[f64]) -> Result<Vec<f64>> {
    let mut out = values.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// `f̂(S) = 2^{-n} Σ_x f(x) chi_S(x)` for every `S`.
pub fn spectrum(f: &FunctionTable) -> FourierSpectrum {
    let mut coeffs = f.values.clone();
    fwht_in_place(&mut coeffs).expect("table length is a power of two");
    let scale = 1.0 / coeffs.len() as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    FourierSpectrum { n: f.n, coeffs }
}

/// `f(x) = Σ_S f̂(S) chi_S(x)`.
pub fn inverse_spectrum(s: &FourierSpectrum) -> FunctionTable {
    let mut values = s.coeffs.clone();
    fwht_in_place(&mut values).expect("spectrum length is a power of two");
    FunctionTable { n: s.n, values }
}

/// `(f∗g)(x) = E_y[f(y) g(y·x)]`, computed through the spectrum:
/// `(f∗g)^(S) = f̂(S) ĝ(S)`.
pub fn convolve(f: &FunctionTable, g: &FunctionTable) -> Result<FunctionTable> {
    if f.n != g.n {
        return Err(invalid(format!(
            "convolution dimension mismatch: {} vs {}",
            f.n, g.n
        )));
    }
    let mut a = spectrum(f);
    let b = spectrum(g);
    for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
        *x *= y;
    }
    Ok(inverse_spectrum(&a))
}

/// Level-k Fourier mass `L_k = Σ_{|S|=k} |f̂(S)|`.
pub fn level_mass(s: &FourierSpectrum, k: usize) -> Result<f64> {
    level_sum(s, k, f64::abs)
}

/// Level-k Fourier weight `W_k = Σ_{|S|=k} f̂(S)^2`.
pub fn level_weight(s: &FourierSpectrum, k: usize) -> Result<f64> {
    level_sum(s, k, |c| c * c)
}

fn level_sum(s: &FourierSpectrum, k: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
    if k > s.n {
        return Err(Error::InvalidArgument(format!(
            "level {k} exceeds dimension {}",
            s.n
        )));
    }
    Ok(s.coeffs
        .iter()
        .enumerate()
        .filter(|(mask, _)| mask.count_ones() as usize == k)
        .map(|(_, &c)| f(c))
        .sum())
}

/// Evaluates the multilinear extension `Σ_S f̂(S) Π_{i∈S} x_i` at a real point.
///
/// Folds out one variable at a time from the highest bit, so the cost is
/// `O(2^n)` rather than `O(n 2^n)`.
pub fn multilinear_eval(s: &FourierSpectrum, point: &[f64]) -> Result<f64> {
    if point.len() != s.n {
        return Err(invalid(format!(
            "point has {} coordinates, spectrum has dimension {}",
            point.len(),
            s.n
        )));
    }
    check_finite(point)?;
    let mut buf = s.coeffs.clone();
    let mut len = buf.len();
    for &x in point.iter().rev() {
        len /= 2;
        let (lo, hi) = buf.split_at_mut(len);
        for (a, b) in lo.iter_mut().zip(&hi[..len]) {
            *a += x * b;
        }
    }
    Ok(buf[0])
}

/// Right-hand side of the level-k inequality for a 0/1 indicator of mean
/// `alpha`: `alpha^2 (2e ln(1/alpha) / k)^k`.
pub fn level_k_bound(alpha: f64, k: usize) -> f64 {
    if k == 0 {
        return alpha * alpha;
    }
    let kf = k as f64;
    alpha * alpha * (2.0 * std::f64::consts::E * (1.0 / alpha).ln() / kf).powf(kf)
}

/// Whether the level-k inequality applies: `k <= 2 ln(1/alpha)`.
pub fn level_k_applicable(alpha: f64, k: usize) -> bool {
    alpha > 0.0 && alpha < 1.0 && (k as f64) <= 2.0 * (1.0 / alpha).ln()
}
