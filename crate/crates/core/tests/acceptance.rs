//! Acceptance gate. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line per criterion, and exits non-zero if any fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use forrlab_core::forrelation::{
    cross_moment, forr_signs, generate_instance, moments_g, planted_product, sample_d,
    sample_d_with_source, ForrParams, InstanceMode,
};
use forrlab_core::fourier::{
    convolve, level_k_applicable, level_k_bound, level_weight, multilinear_eval, spectrum,
    FunctionTable,
};
use forrlab_core::protocol::{
    l2_audit, protocol_h, run_quantum_protocol, Decision, QuantumProtocolConfig, RectanglePartition,
};
use forrlab_core::quantum::{
    controlled_h_matrix, controlled_h_target_matrix, e_operator, equal_up_to_phase, swap_test,
    StateVector,
};
use forrlab_core::rng::{stream, StreamFamily};
use forrlab_core::sign::SignVector;
use forrlab_core::stats::{estimate, estimate_many, variance};
use forrlab_core::trnc;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_state(qubits: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut amps: Vec<Complex64> = (0..1 << qubits)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    normalize(&mut amps);
    amps
}

fn normalize(amps: &mut [Complex64]) {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
}

/// 1. Swap test acceptance law on 20 random pairs of 5-qubit states.
fn swap_test_law() -> Outcome {
    let shots = 100_000u64;
    let mut rng = stream(1001, 0);
    let mut worst: f64 = 0.0;
    for pair in 0..20u64 {
        let phi = random_state(5, &mut rng);
        let chi = random_state(5, &mut rng);
        // spread the overlaps over [-1, 1]
        let w: f64 = rng.random_range(-1.0..1.0);
        let mut psi: Vec<Complex64> = phi
            .iter()
            .zip(&chi)
            .map(|(a, b)| a * w + b * (1.0 - w.abs()))
            .collect();
        normalize(&mut psi);
        let overlap: Complex64 = phi.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 64];
        for k in 0..32 {
            amps[2 * k] = phi[k] * h;
            amps[2 * k + 1] = psi[k] * h;
        }
        let base = StateVector::from_amplitudes(amps).unwrap();
        let fam = StreamFamily::new(2000 + pair);
        let ones: u64 = (0..shots)
            .map(|k| swap_test(&mut base.clone(), 0, &mut fam.stream(k)).unwrap() as u64)
            .sum();
        let p = (1.0 + overlap.re) / 2.0;
        let sd = (p * (1.0 - p) / shots as f64).sqrt().max(1e-300);
        let observed = ones as f64 / shots as f64;
        let z = if p * (1.0 - p) == 0.0 {
            if observed == p {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (observed - p).abs() / sd
        };
        worst = worst.max(z);
    }
    outcome(
        worst <= 4.0,
        format!("20 pairs x 1e5 shots, worst |z| = {worst:.2} (limit 4)"),
    )
}

/// Instance with `forr(x·y)` near `target`, from a planted product with a
/// random subset of the second half flipped.
fn instance_near(params: &ForrParams, target: f64, seed: u64) -> (SignVector, SignVector, f64) {
    let mut rng = stream(seed, 0);
    let mut z = planted_product(params, &mut rng);
    let base = forr_signs(&z).unwrap();
    let flip = ((1.0 - target / base) / 2.0).clamp(0.0, 1.0);
    let n = params.half_len();
    for j in n..2 * n {
        if rng.random_bool(flip) {
            z.flip(j);
        }
    }
    let x = SignVector::random(2 * n, &mut rng);
    let y = x.product(&z).unwrap();
    let f = forr_signs(&z).unwrap();
    (x, y, f)
}

/// 2. Per-copy acceptance of the protocol equals 1/2 + forr/2.
fn protocol_statistic() -> Outcome {
    let copies = 10_000u64;
    let mut worst: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in [16usize, 64] {
        let params = ForrParams::new(n).unwrap();
        for k in 0..10 {
            let target = -0.8 + 1.6 * k as f64 / 9.0;
            let (x, y, f) = instance_near(&params, target, 3000 + 100 * n as u64 + k);
            lo = lo.min(f);
            hi = hi.max(f);
            let cfg = QuantumProtocolConfig::new(params, copies, 4000 + k).unwrap();
            let stats = run_quantum_protocol(&x, &y, &cfg).unwrap();
            let p = 0.5 + f / 2.0;
            let sd = (p * (1.0 - p) / copies as f64).sqrt();
            worst = worst.max((stats.ones_fraction - p).abs() / sd);
        }
    }
    outcome(
        worst <= 4.0,
        format!(
            "N in {{16,64}}, forr spanned [{lo:.3}, {hi:.3}], worst |z| = {worst:.2} (limit 4)"
        ),
    )
}

/// 3. Planted vs uniform at N = 64 with 500 copies.
fn amplified_separation() -> Outcome {
    let params = ForrParams::new(64).unwrap();
    let copies = 500u64;
    let expected_qubits = copies * 2 * (128f64.log2() as u64);
    let mut correct = 0;
    let mut qubits_ok = true;
    for k in 0..400u64 {
        let (mode, want) = if k < 200 {
            (InstanceMode::PlantedYes, Decision::Yes)
        } else {
            (InstanceMode::UniformNo, Decision::No)
        };
        let inst = generate_instance(&params, mode, 5000 + k, 1).unwrap();
        let cfg = QuantumProtocolConfig::amplified(params, copies, 6000 + k).unwrap();
        let stats = run_quantum_protocol(&inst.x, &inst.y, &cfg).unwrap();
        correct += usize::from(stats.decision == want);
        qubits_ok &= stats.qubits_sent == expected_qubits;
    }
    let accuracy = correct as f64 / 400.0;
    outcome(
        accuracy >= 0.95 && qubits_ok,
        format!(
            "accuracy {accuracy:.4} (limit 0.95); qubits_sent = 500*2*log2(128) = {expected_qubits} per instance: {}",
            if qubits_ok { "exact" } else { "MISMATCH" }
        ),
    )
}

fn random_subset(n: usize, size: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = rng.random_range(i..n);
        all.swap(i, j);
    }
    all.truncate(size);
    all
}

/// 4. Moments of the Gaussian distribution at N = 16.
fn gaussian_moments() -> Outcome {
    let params = ForrParams::new(16).unwrap();
    let eps = params.eps();
    let mut rng = stream(7001, 0);
    let mut sets = Vec::new();
    let mut targets = Vec::new();
    // cross moments
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..16), rng.random_range(0..16));
        sets.push((vec![i], vec![j]));
        targets.push(cross_moment(&params, i, j));
    }
    // unequal sizes
    while sets.len() < 40 {
        let (a, b) = (rng.random_range(0..4), rng.random_range(0..4));
        if a == b {
            continue;
        }
        sets.push((
            random_subset(16, a, &mut rng),
            random_subset(16, b, &mut rng),
        ));
        targets.push(0.0);
    }
    // equal sizes up to 3
    while sets.len() < 60 {
        let k = rng.random_range(1..=3);
        sets.push((
            random_subset(16, k, &mut rng),
            random_subset(16, k, &mut rng),
        ));
        targets.push(f64::NAN);
    }
    let est = moments_g(&params, &sets, 1_000_000, 7002).unwrap();
    let mut fails = Vec::new();
    for (k, ((e, target), (s, _))) in est.iter().zip(&targets).zip(&sets).enumerate() {
        let ok = if k < 40 { e.within(*target, 5.0) } else { true };
        // magnitude bound for every set
        let mag = e.estimate.abs() <= eps.powi(s.len() as i32) + 5.0 * e.standard_error;
        if !(ok && mag) {
            fails.push(k);
        }
    }
    outcome(
        fails.is_empty(),
        format!("60 moments x 1e6 samples (20 cross, 20 unequal, 20 equal-size bound); failing: {fails:?}"),
    )
}

/// 5. Mean forrelation under the rounded distribution at N = 64.
fn rounded_mean_forrelation() -> Outcome {
    let params = ForrParams::new(64).unwrap();
    let e = estimate(1_000_000, 8001, |rng, _| {
        forr_signs(&sample_d(&params, rng)).unwrap()
    });
    let floor = params.eps() / 2.0 - 3.0 * e.standard_error;
    outcome(
        e.estimate >= floor,
        format!(
            "E[forr] = {:.5} ± {:.5}, eps = {:.5}, need >= eps/2 - 3se = {floor:.5}",
            e.estimate,
            e.standard_error,
            params.eps()
        ),
    )
}

/// 6. Rounding transfers expectations of multilinear functions.
fn rounding_transfer() -> Outcome {
    let params = ForrParams::new(4).unwrap();
    let mut rng = stream(9001, 0);
    let mut worst: f64 = 0.0;
    for k in 0..10u64 {
        let p = RectanglePartition::random(8, 4, &mut rng).unwrap();
        let h = protocol_h(&p).unwrap();
        let s = spectrum(&h);
        let diff = estimate(100_000, 9100 + k, |rng, _| {
            let (g, signs) = sample_d_with_source(&params, rng);
            h.get(signs.index() as usize) - multilinear_eval(&s, &trnc(g.values())).unwrap()
        });
        worst = worst.max(diff.z_score(0.0).abs());
    }
    outcome(
        worst <= 5.0,
        format!("10 protocol functions at 2N = 8, worst paired |z| = {worst:.2} (limit 5)"),
    )
}

/// 7. Level-2 mass of lifted protocols.
fn level_two_bound() -> Outcome {
    let mut rng = stream(10_001, 0);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let cost = rng.random_range(1..=4);
        let p = RectanglePartition::random(8, cost, &mut rng).unwrap();
        let audit = l2_audit(&p).unwrap();
        violations += usize::from(!audit.pass);
        worst_ratio = worst_ratio.max(audit.l2_mass / audit.bound);
    }
    outcome(
        violations == 0,
        format!("1000 partitions at 2N = 8, c <= 4: {violations} violations, max L2/bound = {worst_ratio:.2e}"),
    )
}

fn check_level_k(f: &FunctionTable, ks: impl Iterator<Item = usize>) -> (usize, usize) {
    let alpha = f.mean();
    let s = spectrum(f);
    let (mut checked, mut violations) = (0, 0);
    for k in ks {
        if !level_k_applicable(alpha, k) {
            continue;
        }
        checked += 1;
        let w = level_weight(&s, k).unwrap();
        if w > level_k_bound(alpha, k) * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    (checked, violations)
}

/// 8. Level-k inequality for indicators.
fn level_k_inequality() -> Outcome {
    let n = 8;
    let (mut checked, mut violations) = (0, 0);
    // subcubes: each coordinate free, fixed to +1, or fixed to -1
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let (mut mask, mut value) = (0usize, 0usize);
        for i in 0..n {
            match c % 3 {
                1 => mask |= 1 << i,
                2 => {
                    mask |= 1 << i;
                    value |= 1 << i;
                }
                _ => {}
            }
            c /= 3;
        }
        let f = FunctionTable::indicator(n, (0..1usize << n).filter(|p| p & mask == value));
        let (a, b) = check_level_k(&f, 1..=n);
        checked += a;
        violations += b;
    }
    let mut rng = stream(11_001, 0);
    let mut random_checked = 0;
    while random_checked < 1000 {
        let density: f64 = rng.random_range(0.001..0.36);
        let f = FunctionTable::from_fn(10, |_| if rng.random_bool(density) { 1.0 } else { 0.0 })
            .unwrap();
        let (a, b) = check_level_k(&f, 2..=2);
        random_checked += a;
        violations += b;
    }
    outcome(
        violations == 0,
        format!("{checked} (subcube, k) checks at n = 8 + 1000 random indicators at n = 10, k = 2: {violations} violations"),
    )
}

/// 9. Exactness of the Fourier engine.
fn fourier_engine() -> Outcome {
    let mut rng = stream(12_001, 0);
    let mut worst_parseval: f64 = 0.0;
    let mut worst_conv: f64 = 0.0;
    for _ in 0..100 {
        let f = FunctionTable::from_fn(12, |_| rng.random_range(-1.0..1.0)).unwrap();
        let g = FunctionTable::from_fn(12, |_| rng.random_range(-1.0..1.0)).unwrap();
        let (sf, sg) = (spectrum(&f), spectrum(&g));
        let energy = f.values().iter().map(|v| v * v).sum::<f64>() / 4096.0;
        worst_parseval = worst_parseval.max((sf.total_weight() - energy).abs());
        let sc = spectrum(&convolve(&f, &g).unwrap());
        for m in 0..4096 {
            worst_conv = worst_conv.max((sc.coeff(m) - sf.coeff(m) * sg.coeff(m)).abs());
        }
    }
    let mut worst_ext: f64 = 0.0;
    for _ in 0..10 {
        let f = FunctionTable::from_fn(8, |_| rng.random_range(-1.0..1.0)).unwrap();
        let s = spectrum(&f);
        for p in 0..256usize {
            let x: Vec<f64> = (0..8)
                .map(|i| if p >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            worst_ext = worst_ext.max((multilinear_eval(&s, &x).unwrap() - f.get(p)).abs());
        }
    }
    outcome(
        worst_parseval <= 1e-10 && worst_conv <= 1e-10 && worst_ext <= 1e-10,
        format!("Parseval {worst_parseval:.1e}, convolution {worst_conv:.1e}, extension {worst_ext:.1e} (limit 1e-10)"),
    )
}

/// 10. Concentration of forrelation under uniform inputs.
fn uniform_concentration() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [16usize, 64, 256] {
        let params = ForrParams::new(n).unwrap();
        let len = params.input_len();
        let var = variance(200_000, 13_000 + n as u64, |rng, _| {
            let x = SignVector::random(len, rng);
            let y = SignVector::random(len, rng);
            forr_signs(&x.product(&y).unwrap()).unwrap()
        });
        let var_ok = var.estimate <= 1.0 / n as f64 + 5.0 * var.standard_error;
        let low = estimate_many(200_000, 13_500 + n as u64, 1, |rng, _, out| {
            let z = SignVector::random(len, rng);
            out[0] = f64::from(u8::from(forr_signs(&z).unwrap() <= params.no_threshold()));
        })[0];
        let cheb = 64.0 / (n as f64 * params.eps().powi(2));
        let cheb_ok = if cheb < 1.0 {
            low.estimate >= 1.0 - cheb - 3.0 * low.standard_error
        } else {
            true
        };
        pass &= var_ok && cheb_ok;
        parts.push(format!(
            "N={n}: Var = {:.5} ± {:.5} vs 1/N = {:.5}; P[forr <= eps/8] = {:.3} (Chebyshev 64/(N eps^2) = {cheb:.0}{})",
            var.estimate,
            var.standard_error,
            1.0 / n as f64,
            low.estimate,
            if cheb < 1.0 { "" } else { ", vacuous" }
        ));
    }
    outcome(pass, parts.join("; "))
}

/// 11. Controlled-Hadamard decomposition and E-operator basis action.
fn subroutine_exactness() -> Outcome {
    let got: Vec<Complex64> = controlled_h_matrix().iter().flatten().copied().collect();
    let want: Vec<Complex64> = controlled_h_target_matrix()
        .iter()
        .flatten()
        .copied()
        .collect();
    let ch_ok = equal_up_to_phase(&got, &want, 1e-10);
    let mut e_ok = true;
    for i in 0..16usize {
        for (input, output) in [(i | i << 4, i), (i, i | i << 4)] {
            let mut amps = vec![Complex64::new(0.0, 0.0); 256];
            amps[input] = Complex64::new(1.0, 0.0);
            let mut s = StateVector::from_amplitudes(amps).unwrap();
            e_operator(&mut s, 0..4, 4..8).unwrap();
            e_ok &= s.amplitude(output) == Complex64::new(1.0, 0.0);
        }
    }
    outcome(
        ch_ok && e_ok,
        format!("controlled-H = diag(I, H) up to phase: {ch_ok}; E-operator exhaustive at width 4: {e_ok}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 11] = [
        (
            "AC-01 swap-test law",
            swap_test_law,
            Duration::from_secs(60),
        ),
        (
            "AC-02 protocol per-copy statistic",
            protocol_statistic,
            Duration::from_secs(300),
        ),
        (
            "AC-03 amplified end-to-end separation",
            amplified_separation,
            Duration::from_secs(600),
        ),
        (
            "AC-04 Gaussian moments",
            gaussian_moments,
            Duration::from_secs(120),
        ),
        (
            "AC-05 mean forrelation of rounded draws",
            rounded_mean_forrelation,
            Duration::from_secs(120),
        ),
        (
            "AC-06 rounding transfer",
            rounding_transfer,
            Duration::from_secs(120),
        ),
        (
            "AC-07 level-2 mass bound",
            level_two_bound,
            Duration::from_secs(120),
        ),
        (
            "AC-08 level-k inequality",
            level_k_inequality,
            Duration::from_secs(120),
        ),
        (
            "AC-09 exact Fourier engine",
            fourier_engine,
            Duration::from_secs(60),
        ),
        (
            "AC-10 uniform concentration",
            uniform_concentration,
            Duration::from_secs(120),
        ),
        (
            "AC-11 subroutine exactness",
            subroutine_exactness,
            Duration::from_secs(1),
        ),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = result.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "[{}] {name}: {} ({:.2}s, limit {}s{})",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", TOO SLOW" }
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
