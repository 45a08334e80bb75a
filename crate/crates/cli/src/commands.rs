use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use forrlab_core::forrelation::{cross_moment, forr_signs, generate_instance, moments_g, sample_d};
use forrlab_core::fourier::{
    level_k_applicable, level_k_bound, level_weight, spectrum, FunctionTable,
};
use forrlab_core::protocol::{
    default_copies, l2_audit, register_width, run_quantum_protocol, Decision,
    QuantumProtocolConfig, RectanglePartition, DENSE_MAX_INPUT,
};
use forrlab_core::rng::{derive_seed, stream};
use forrlab_core::stats::estimate;
use forrlab_core::{sample_g, sample_v, Estimate, InstanceMode};

use crate::record::{write_csv, write_lines, ResultRecord, RunConfig};
use crate::{params, Common, Distribution, InstanceKind, PartitionKind, ProtocolMode, UsageError};

const LOW_POWER_SAMPLES: u64 = 100_000;
const SIGMAS: f64 = 5.0;

fn finish(records: Vec<ResultRecord>, common: &Common) -> anyhow::Result<bool> {
    write_csv(&records, common.out.as_deref())?;
    Ok(records.iter().all(|r| r.pass))
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

fn set_label(s: &[usize], t: &[usize]) -> String {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    format!("S={{{}}} T={{{}}}", join(s), join(t))
}

pub fn verify_moments(n: usize, samples: u64, common: &Common) -> anyhow::Result<bool> {
    let params = params(n, common)?;
    let eps = params.eps();
    let cfg = RunConfig {
        experiment: "verify-moments",
        n,
        eps,
        seed: common.seed,
        samples,
        copies: 0,
        mode: "gaussian".into(),
    };
    let mut rng = stream(derive_seed(common.seed, 0), 0);
    let max_size = 3.min(n);
    let mut sets = Vec::new();
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        sets.push((vec![i], vec![j]));
    }
    while sets.len() < 40 {
        let (a, b) = (
            rng.random_range(0..=max_size),
            rng.random_range(0..=max_size),
        );
        if a != b {
            sets.push((random_subset(n, a, &mut rng), random_subset(n, b, &mut rng)));
        }
    }
    while sets.len() < 60 {
        let k = rng.random_range(1..=max_size);
        sets.push((random_subset(n, k, &mut rng), random_subset(n, k, &mut rng)));
    }
    let estimates = moments_g(&params, &sets, samples, derive_seed(common.seed, 1))?;
    let mut records = Vec::new();
    for (k, (e, (s, t))) in estimates.iter().zip(&sets).enumerate() {
        let label = set_label(s, t);
        let record = match k {
            0..20 => {
                let target = cross_moment(&params, s[0], t[0]);
                cfg.record(
                    format!("cross_moment {label}"),
                    *e,
                    Some(target),
                    e.within(target, SIGMAS),
                )
            }
            20..40 => cfg.record(
                format!("unequal_moment {label}"),
                *e,
                Some(0.0),
                e.within(0.0, SIGMAS),
            ),
            _ => {
                let bound = eps.powi(s.len() as i32);
                let pass = e.estimate.abs() <= bound + SIGMAS * e.standard_error;
                cfg.record(format!("moment_magnitude {label}"), *e, Some(bound), pass)
            }
        };
        records.push(record);
    }
    let mean = estimate(samples, derive_seed(common.seed, 2), |rng, _| {
        forr_signs(&sample_d(&params, rng)).expect("valid length")
    });
    let floor = eps / 2.0;
    records.push(cfg.record(
        "rounded_mean_forr",
        mean,
        Some(floor),
        mean.estimate >= floor - SIGMAS * mean.standard_error,
    ));
    let low_power = samples < LOW_POWER_SAMPLES;
    records.iter_mut().for_each(|r| r.low_power = low_power);
    finish(records, common)
}

pub fn run_protocol(
    n: usize,
    instances: u64,
    copies: Option<u64>,
    mode: ProtocolMode,
    slow: bool,
    target_error: f64,
    common: &Common,
) -> anyhow::Result<bool> {
    let params = params(n, common)?;
    if copies == Some(0) {
        return Err(UsageError("--copies must be at least 1".into()).into());
    }
    if instances == 0 {
        return Err(UsageError("--samples must be at least 1".into()).into());
    }
    if mode == ProtocolMode::Paper && !slow {
        return Err(UsageError(
            "paper mode needs about 10^7 copies per instance; pass --slow".into(),
        )
        .into());
    }
    let (copies, yes_mode, no_mode, bound) = match mode {
        ProtocolMode::Amplified => (
            copies.unwrap_or(500),
            InstanceMode::PlantedYes,
            InstanceMode::UniformNo,
            0.95,
        ),
        ProtocolMode::Paper => (
            match copies {
                Some(c) => c,
                None => default_copies(&params, target_error)?,
            },
            InstanceMode::PaperYes,
            InstanceMode::PaperNo,
            2.0 / 3.0,
        ),
    };
    let cfg = RunConfig {
        experiment: "run-protocol",
        n,
        eps: params.eps(),
        seed: common.seed,
        samples: instances,
        copies,
        mode: format!("{mode:?}").to_lowercase(),
    };
    let outcomes = (0..instances)
        .into_par_iter()
        .map(|k| {
            let yes = k % 2 == 0;
            let instance_mode = if yes { yes_mode } else { no_mode };
            let inst = generate_instance(
                &params,
                instance_mode,
                derive_seed(common.seed, 2 * k),
                forrlab_core::forrelation::DEFAULT_REJECTION_CAP,
            )?;
            let protocol =
                QuantumProtocolConfig::new(params, copies, derive_seed(common.seed, 2 * k + 1))?;
            let protocol = match mode {
                ProtocolMode::Amplified => {
                    QuantumProtocolConfig::amplified(params, copies, protocol.seed)?
                }
                ProtocolMode::Paper => protocol,
            };
            let stats = run_quantum_protocol(&inst.x, &inst.y, &protocol)?;
            let want = if yes { Decision::Yes } else { Decision::No };
            Ok((stats.decision == want, stats, inst.forr, yes))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let total = instances as f64;
    let correct = outcomes.iter().filter(|o| o.0).count() as f64;
    let rate = correct / total;
    // half a count away from the boundary so a perfect run is not reported as exact
    let clamped = rate.clamp(0.5 / total, 1.0 - 0.5 / total);
    let success = Estimate {
        estimate: rate,
        standard_error: (clamped * (1.0 - clamped) / total).sqrt(),
        samples: instances,
    };
    let mut records = vec![cfg.record("success_rate", success, Some(bound), rate >= bound)];
    for (name, want_yes) in [
        ("mean_forr_yes_instances", true),
        ("mean_forr_no_instances", false),
    ] {
        let values: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.3 == want_yes)
            .map(|o| o.2)
            .collect();
        if values.is_empty() {
            continue;
        }
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        let e = Estimate {
            estimate: mean,
            standard_error: (var / m).sqrt(),
            samples: values.len() as u64,
        };
        records.push(cfg.record(name, e, None, true));
    }
    let width = register_width(&params) as u64;
    let first = &outcomes[0].1;
    let qubits = copies * 2 * width;
    let consistent = outcomes.iter().all(|o| o.1.qubits_sent == qubits);
    records.push(cfg.record(
        "qubits_sent_per_instance",
        Estimate::exact(first.qubits_sent as f64),
        Some(qubits as f64),
        consistent,
    ));
    records.push(cfg.record(
        "oracle_calls_per_instance",
        Estimate::exact(first.oracle_calls as f64),
        Some(2.0 * copies as f64),
        first.oracle_calls == 2 * copies,
    ));
    records.push(cfg.record(
        "gates_per_copy",
        Estimate::exact((first.gate_count / copies) as f64),
        None,
        true,
    ));
    finish(records, common)
}

pub fn fourier_audit(
    n: usize,
    partitions: u64,
    max_cost: u32,
    common: &Common,
) -> anyhow::Result<bool> {
    let params = params(n, common)?;
    let len = params.input_len();
    if len > DENSE_MAX_INPUT {
        return Err(UsageError(format!(
            "exact audits need 2N <= {DENSE_MAX_INPUT}, got 2N = {len}"
        ))
        .into());
    }
    let cfg = RunConfig {
        experiment: "fourier-audit",
        n,
        eps: params.eps(),
        seed: common.seed,
        samples: partitions,
        copies: 0,
        mode: format!("max_cost={max_cost}"),
    };
    let mut records = Vec::new();
    let trivial = l2_audit(&RectanglePartition::trivial(len))?;
    records.push(cfg.record(
        "l2_trivial_partition",
        Estimate::exact(trivial.l2_mass),
        Some(trivial.bound),
        trivial.pass,
    ));

    let audits = (0..partitions)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(derive_seed(common.seed, 0), k);
            let cost = rng.random_range(1..=max_cost.max(1));
            l2_audit(&RectanglePartition::random(len, cost, &mut rng)?)
        })
        .collect::<forrlab_core::Result<Vec<_>>>()?;
    let violations = audits.iter().filter(|a| !a.pass).count();
    let worst = audits
        .iter()
        .map(|a| a.l2_mass / a.bound)
        .fold(0.0, f64::max);
    let max_l2 = audits.iter().map(|a| a.l2_mass).fold(0.0, f64::max);
    records.push(cfg.record(
        "l2_violations",
        Estimate::exact(violations as f64),
        Some(0.0),
        violations == 0,
    ));
    records.push(cfg.record("max_l2_mass", Estimate::exact(max_l2), None, true));
    records.push(cfg.record(
        "max_l2_over_bound",
        Estimate::exact(worst),
        Some(1.0),
        worst <= 1.0,
    ));

    let (checked, violations) = subcube_level_k(len.min(8));
    records.push(cfg.record(
        format!(
            "level_k_subcube_violations n={} checks={checked}",
            len.min(8)
        ),
        Estimate::exact(violations as f64),
        Some(0.0),
        violations == 0,
    ));
    let mut rng = stream(derive_seed(common.seed, 1), 0);
    let (mut checked, mut violations) = (0u64, 0u64);
    while checked < partitions {
        let density: f64 = rng.random_range(0.001..0.36);
        let f = FunctionTable::from_fn(len, |_| f64::from(u8::from(rng.random_bool(density))))?;
        let (c, v) = level_k_violations(&f, 2..=2);
        checked += c;
        violations += v;
    }
    records.push(cfg.record(
        format!("level_2_random_indicator_violations n={len} checks={checked}"),
        Estimate::exact(violations as f64),
        Some(0.0),
        violations == 0,
    ));
    finish(records, common)
}

fn level_k_violations(f: &FunctionTable, ks: impl Iterator<Item = usize>) -> (u64, u64) {
    let alpha = f.mean();
    let s = spectrum(f);
    let (mut checked, mut violations) = (0, 0);
    for k in ks.filter(|&k| level_k_applicable(alpha, k)) {
        checked += 1;
        let w = level_weight(&s, k).expect("k within range");
        violations += u64::from(w > level_k_bound(alpha, k) * (1.0 + 1e-12));
    }
    (checked, violations)
}

fn subcube_level_k(n: usize) -> (u64, u64) {
    (0..3usize.pow(n as u32))
        .into_par_iter()
        .map(|code| {
            let (mut c, mut mask, mut value) = (code, 0usize, 0usize);
            for i in 0..n {
                if c % 3 != 0 {
                    mask |= 1 << i;
                }
                if c % 3 == 2 {
                    value |= 1 << i;
                }
                c /= 3;
            }
            let f = FunctionTable::indicator(n, (0..1usize << n).filter(|p| p & mask == value));
            level_k_violations(&f, 1..=n)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

pub fn advantage(
    ns: &[usize],
    samples: u64,
    kind: PartitionKind,
    common: &Common,
) -> anyhow::Result<bool> {
    let mut records = Vec::new();
    let mut estimates = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let params = params(n, common)?;
        let cfg = RunConfig {
            experiment: "advantage",
            n,
            eps: params.eps(),
            seed: common.seed,
            samples,
            copies: 0,
            mode: format!("{kind:?}").to_lowercase(),
        };
        let partition = match kind {
            PartitionKind::Probe => RectanglePartition::forrelation_probe(&params),
            PartitionKind::Trivial => RectanglePartition::trivial(params.input_len()),
        };
        let mut e = forrlab_core::advantage(
            &partition,
            &params,
            samples,
            derive_seed(common.seed, k as u64),
        )?;
        let outputs = partition.cells().iter().map(|c| c.out);
        if outputs.clone().min() == outputs.max() {
            e = Estimate::exact(0.0);
        }
        records.push(cfg.record("advantage", e, None, true));
        estimates.push((cfg, e));
    }
    if let (Some((_, first)), Some((cfg, last))) = (estimates.first(), estimates.last()) {
        if estimates.len() > 1 {
            let se = first.standard_error.hypot(last.standard_error);
            let growth = Estimate {
                estimate: last.estimate.abs() - first.estimate.abs(),
                standard_error: se,
                samples: if se == 0.0 { 0 } else { samples },
            };
            let pass = growth.estimate <= 3.0 * se;
            records.push(cfg.record(
                format!("advantage_growth N={}->{}", ns[0], ns[ns.len() - 1]),
                growth,
                Some(0.0),
                pass,
            ));
        }
    }
    finish(records, common)
}

pub fn gen_instances(
    n: usize,
    count: u64,
    kind: InstanceKind,
    max_attempts: u64,
    common: &Common,
) -> anyhow::Result<bool> {
    let params = params(n, common)?;
    let mode = match kind {
        InstanceKind::PlantedYes => InstanceMode::PlantedYes,
        InstanceKind::UniformNo => InstanceMode::UniformNo,
        InstanceKind::PaperYes => InstanceMode::PaperYes,
        InstanceKind::PaperNo => InstanceMode::PaperNo,
    };
    let lines = (0..count)
        .into_par_iter()
        .map(|k| {
            Ok(
                generate_instance(&params, mode, derive_seed(common.seed, k), max_attempts)?
                    .to_json(),
            )
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    write_lines(&lines, common.out.as_deref())?;
    Ok(true)
}

pub fn sample_dist(
    n: usize,
    count: u64,
    dist: Distribution,
    common: &Common,
) -> anyhow::Result<bool> {
    let params = params(n, common)?;
    let lines = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(common.seed, k);
            let value = match dist {
                Distribution::G => {
                    let z = sample_g(&params, &mut rng);
                    let forr = forrlab_core::forr(z.values())?;
                    json!({"dist": "G", "N": n, "eps": params.eps(), "z": z.values(), "forr": forr})
                }
                Distribution::D => {
                    let z = sample_d(&params, &mut rng);
                    json!({"dist": "D", "N": n, "eps": params.eps(), "z": z.to_base64(), "forr": forr_signs(&z)?})
                }
                Distribution::V => {
                    let s = sample_v(&params, &mut rng);
                    json!({"dist": "V", "N": n, "eps": params.eps(), "x": s.x.to_base64(), "y": s.y.to_base64(), "forr": forr_signs(&s.z)?})
                }
            };
            Ok(value.to_string())
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    write_lines(&lines, common.out.as_deref())?;
    Ok(true)
}
