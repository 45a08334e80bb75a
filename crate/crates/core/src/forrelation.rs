//! The forrelation functional and its input distributions.
//!
//! A vector of length `2N` is read as halves `(z1, z2)`, each of length `N`.
//! `H_N` below always means the orthonormal Hadamard matrix
//! `(H_N)_{ij} = (-1)^{<i,j>} / sqrt(N)`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::fwht_in_place;
use crate::rng::{fill_gaussian, stream, unit};
use crate::sign::SignVector;
use crate::stats::{estimate_many, Estimate};

/// Rejection-sampling cap used by [`generate_instance`] when none is given.
pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

/// Problem size `N` (half-length) and the Gaussian variance `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForrParams {
    half_len: usize,
    eps: f64,
}

impl ForrParams {
    /// `eps = 1 / (50 ln N)`; `N` must be a power of two, at least 4.
    pub fn new(half_len: usize) -> Result<Self> {
        if half_len < 4 || !half_len.is_power_of_two() {
            return Err(invalid(format!(
                "N = {half_len} must be a power of two and at least 4"
            )));
        }
        Ok(Self {
            half_len,
            eps: 1.0 / (50.0 * (half_len as f64).ln()),
        })
    }

    /// Same `N` with a caller-chosen `eps`, for exploring amplified regimes.
    pub fn with_eps_override(half_len: usize, eps: f64) -> Result<Self> {
        let mut p = Self::new(half_len)?;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(invalid(format!("eps override {eps} must be positive")));
        }
        p.eps = eps;
        Ok(p)
    }

    /// `N`.
    pub fn half_len(&self) -> usize {
        self.half_len
    }

    /// `2N`, the input length of each player.
    pub fn input_len(&self) -> usize {
        2 * self.half_len
    }

    /// `log2 N`.
    pub fn log_half(&self) -> u32 {
        self.half_len.trailing_zeros()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Promise threshold above which an instance is YES: `eps / 4`.
    pub fn yes_threshold(&self) -> f64 {
        self.eps / 4.0
    }

    /// Promise threshold below which an instance is NO: `eps / 8`.
    pub fn no_threshold(&self) -> f64 {
        self.eps / 8.0
    }
}

/// A real vector of length `2N` viewed as two halves.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPair2N {
    values: Vec<f64>,
}

impl RealPair2N {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        half_len_of(values.len())?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    pub fn second(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn half_len_of(len: usize) -> Result<usize> {
    let half = len / 2;
    if !len.is_multiple_of(2) || half == 0 || !half.is_power_of_two() {
        return Err(invalid(format!("length {len} is not twice a power of two")));
    }
    Ok(half)
}

/// `forr(z) = (1/N) <H_N z1, z2>` via one FWHT, `O(N log N)`.
pub fn forr(z: &[f64]) -> Result<f64> {
    let half = half_len_of(z.len())?;
    let (z1, z2) = z.split_at(half);
    let mut h = z1.to_vec();
    fwht_in_place(&mut h)?;
    let dot: f64 = h.iter().zip(z2).map(|(a, b)| a * b).sum();
    let n = half as f64;
    Ok(dot / (n * n.sqrt()))
}

/// [`forr`] of a sign vector.
pub fn forr_signs(z: &SignVector) -> Result<f64> {
    forr(&z.to_reals())
}

/// Coordinatewise clamp to `[-1, 1]`.
pub fn trnc(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.clamp(-1.0, 1.0)).collect()
}

/// One draw from the Gaussian distribution `G`: the first half i.i.d.
/// `N(0, eps)`, the second half `H_N` applied to the first.
pub fn sample_g<R: RngCore + ?Sized>(params: &ForrParams, rng: &mut R) -> RealPair2N {
    let n = params.half_len;
    let mut values = vec![0.0; 2 * n];
    let (first, second) = values.split_at_mut(n);
    fill_gaussian(rng, params.eps, first);
    second.copy_from_slice(first);
    fwht_in_place(second).expect("N is a power of two");
    let scale = 1.0 / (n as f64).sqrt();
    second.iter_mut().for_each(|v| *v *= scale);
    RealPair2N { values }
}

/// Rounds a real vector to signs: coordinate `i` is `+1` with probability
/// `(1 + trnc(z_i)) / 2`, independently.
pub fn round_to_signs<R: RngCore + ?Sized>(z: &[f64], rng: &mut R) -> SignVector {
    let mut out = SignVector::ones(z.len());
    for (i, &v) in z.iter().enumerate() {
        let p_plus = (1.0 + v.clamp(-1.0, 1.0)) / 2.0;
        if unit(rng) >= p_plus {
            out.set(i, -1);
        }
    }
    out
}

/// One draw from the forrelation distribution `D`, together with the
/// Gaussian sample it was rounded from.
pub fn sample_d_with_source<R: RngCore + ?Sized>(
    params: &ForrParams,
    rng: &mut R,
) -> (RealPair2N, SignVector) {
    let g = sample_g(params, rng);
    let signs = round_to_signs(&g.values, rng);
    (g, signs)
}

/// One draw from the forrelation distribution `D`.
pub fn sample_d<R: RngCore + ?Sized>(params: &ForrParams, rng: &mut R) -> SignVector {
    sample_d_with_source(params, rng).1
}

/// A draw from the lifted distribution: `x` uniform, `z ~ D`, `y = x·z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedSample {
    pub x: SignVector,
    pub y: SignVector,
    pub z: SignVector,
}

pub fn sample_v<R: RngCore + ?Sized>(params: &ForrParams, rng: &mut R) -> LiftedSample {
    let z = sample_d(params, rng);
    let x = SignVector::random(params.input_len(), rng);
    let y = x.product(&z).expect("equal lengths");
    LiftedSample { x, y, z }
}

/// Monte Carlo estimate of `G^(S,T) = E[Π_{i∈S} x_i Π_{j∈T} y_j]` under `G`.
///
/// `S` and `T` are 0-based index sets into the two halves. The empty moment
/// is returned exactly.
pub fn moment_g(
    params: &ForrParams,
    s: &[usize],
    t: &[usize],
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    Ok(moments_g(params, &[(s.to_vec(), t.to_vec())], samples, seed)?[0])
}

/// Several `G` moments estimated from one shared set of draws.
pub fn moments_g(
    params: &ForrParams,
    sets: &[(Vec<usize>, Vec<usize>)],
    samples: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if samples < 10_000 {
        return Err(invalid(format!(
            "moment estimation needs at least 10^4 samples, got {samples}"
        )));
    }
    let n = params.half_len;
    for (s, t) in sets {
        if let Some(&bad) = s.iter().chain(t).find(|&&i| i >= n) {
            return Err(invalid(format!(
                "moment index {bad} out of range for N = {n}"
            )));
        }
    }
    let mut est = estimate_many(samples, seed, sets.len(), |rng, _, out| {
        let g = sample_g(params, rng);
        let (x, y) = (g.first(), g.second());
        for (slot, (s, t)) in out.iter_mut().zip(sets) {
            *slot =
                s.iter().map(|&i| x[i]).product::<f64>() * t.iter().map(|&j| y[j]).product::<f64>();
        }
    });
    for (e, (s, t)) in est.iter_mut().zip(sets) {
        if s.is_empty() && t.is_empty() {
            *e = Estimate::exact(1.0);
        }
    }
    Ok(est)
}

/// Closed form of the first-order cross moment: `eps N^{-1/2} (-1)^{<i,j>}`.
pub fn cross_moment(params: &ForrParams, i: usize, j: usize) -> f64 {
    let sign = if (i & j).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    params.eps * sign / (params.half_len as f64).sqrt()
}

/// Semantic label of a lifted instance. YES means high forrelation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Yes,
    No,
    OutsidePromise,
}

impl Label {
    pub fn classify(forr_value: f64, params: &ForrParams) -> Self {
        if forr_value >= params.yes_threshold() {
            Label::Yes
        } else if forr_value <= params.no_threshold() {
            Label::No
        } else {
            Label::OutsidePromise
        }
    }
}

/// How [`generate_instance`] draws an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InstanceMode {
    /// `(x, y)` from the lifted distribution, conditioned on `forr >= eps/4`.
    PaperYes,
    /// Uniform `(x, y)`, conditioned on `forr <= eps/8`.
    PaperNo,
    /// `z2 = sign(H_N z1)` for uniform `z1`, masked by a uniform `x`;
    /// forrelation concentrates near `sqrt(2/pi)`.
    PlantedYes,
    /// Uniform `(x, y)` with no conditioning.
    UniformNo,
}

/// One two-party input with its measured forrelation.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedInstance {
    pub params: ForrParams,
    pub x: SignVector,
    pub y: SignVector,
    pub forr: f64,
    pub label: Label,
}

impl LiftedInstance {
    /// Builds an instance, computing `forr(x·y)` and its label.
    pub fn new(params: ForrParams, x: SignVector, y: SignVector) -> Result<Self> {
        if x.len() != params.input_len() || y.len() != params.input_len() {
            return Err(invalid(format!(
                "inputs must have length 2N = {}, got {} and {}",
                params.input_len(),
                x.len(),
                y.len()
            )));
        }
        let forr = forr_signs(&x.product(&y)?)?;
        Ok(Self {
            label: Label::classify(forr, &params),
            params,
            x,
            y,
            forr,
        })
    }

    /// `x·y`.
    pub fn product(&self) -> SignVector {
        self.x.product(&self.y).expect("equal lengths")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson =
            serde_json::from_str(text).map_err(|e| Error::Encoding(e.to_string()))?;
        let params = ForrParams::with_eps_override(raw.n, raw.eps)?;
        let len = params.input_len();
        Self::new(
            params,
            SignVector::from_base64(len, &raw.x)?,
            SignVector::from_base64(len, &raw.y)?,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    #[serde(rename = "N")]
    n: usize,
    eps: f64,
    x: String,
    y: String,
    forr: f64,
    label: Label,
}

impl From<&LiftedInstance> for InstanceJson {
    fn from(inst: &LiftedInstance) -> Self {
        Self {
            n: inst.params.half_len,
            eps: inst.params.eps,
            x: inst.x.to_base64(),
            y: inst.y.to_base64(),
            forr: inst.forr,
            label: inst.label,
        }
    }
}

/// Draws `z` with `z2 = sign(H_N z1)` (ties to `+1`) and `z1` uniform.
pub fn planted_product<R: RngCore + ?Sized>(params: &ForrParams, rng: &mut R) -> SignVector {
    let n = params.half_len;
    let z1 = SignVector::random(n, rng);
    let mut h = z1.to_reals();
    fwht_in_place(&mut h).expect("N is a power of two");
    let z2 = SignVector::from_reals_sign(&h);
    let mut z = SignVector::ones(2 * n);
    for i in 0..n {
        z.set(i, z1.get(i));
        z.set(n + i, z2.get(i));
    }
    z
}

/// Draws a lifted instance according to `mode` from the stream keyed by `seed`.
pub fn generate_instance(
    params: &ForrParams,
    mode: InstanceMode,
    seed: u64,
    max_attempts: u64,
) -> Result<LiftedInstance> {
    let mut rng = stream(seed, 0);
    let len = params.input_len();
    let mut attempts = 0;
    loop {
        if attempts == max_attempts {
            return Err(Error::SamplingFailure {
                attempts,
                reason: format!("no {mode:?} instance found at N = {}", params.half_len),
            });
        }
        attempts += 1;
        let (x, y) = match mode {
            InstanceMode::PaperYes => {
                let s = sample_v(params, &mut rng);
                (s.x, s.y)
            }
            InstanceMode::PaperNo | InstanceMode::UniformNo => (
                SignVector::random(len, &mut rng),
                SignVector::random(len, &mut rng),
            ),
            InstanceMode::PlantedYes => {
                let z = planted_product(params, &mut rng);
                let x = SignVector::random(len, &mut rng);
                let y = x.product(&z)?;
                (x, y)
            }
        };
        let inst = LiftedInstance::new(*params, x, y)?;
        let accept = match mode {
            InstanceMode::PaperYes => inst.forr >= params.yes_threshold(),
            InstanceMode::PaperNo => inst.forr <= params.no_threshold(),
            InstanceMode::PlantedYes | InstanceMode::UniformNo => true,
        };
        if accept {
            return Ok(inst);
        }
    }
}
