//! The simultaneous-message quantum protocol.
//!
//! Per copy, each player holds `r = log2(2N)` qubits of a shared maximally
//! entangled state: Alice on qubits `0..r`, Bob on `r..2r`. The most
//! significant qubit of each block (`r - 1` for Alice) selects the half of
//! the input, so block value `i` addresses coordinate `i` of a length-`2N`
//! input. The referee's swap test reads 1 with probability
//! `1/2 + forr(x·y)/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::forrelation::ForrParams;
use crate::quantum::{
    bell_pairs_gates, controlled_h_gates, e_operator_gates, negate_gates, Circuit, Gate,
    StateVector,
};
use crate::rng::{unit, StreamFamily};
use crate::sign::SignVector;

/// `eps` used to place the decision threshold in amplified-gap mode.
///
/// With this value the promise thresholds become `forr >= 0.7` (YES) and
/// `forr <= 0.35` (NO), and the referee threshold sits at ones fraction
/// `1/2 + 3/32 · 2.8 = 0.7625`, between planted instances (`forr ≈ 0.8`) and
/// uniform ones (`|forr| = O(N^{-1/2})`).
pub const AMPLIFIED_EPS: f64 = 2.8;

/// How copies are simulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CopySimulation {
    /// The unitary part of the copy circuit is the same for every copy, so
    /// it is simulated once; each copy then measures with its own stream.
    /// Produces the same bits as [`CopySimulation::PerCopy`].
    #[default]
    SharedPrefix,
    /// Every copy is simulated from `|0…0⟩`.
    PerCopy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumProtocolConfig {
    pub params: ForrParams,
    pub copies: u64,
    /// The referee answers YES iff the fraction of 1 outcomes exceeds this.
    pub threshold: f64,
    pub seed: u64,
    pub simulation: CopySimulation,
}

impl QuantumProtocolConfig {
    /// Threshold `1/2 + (3/32)·eps`.
    pub fn new(params: ForrParams, copies: u64, seed: u64) -> Result<Self> {
        if copies == 0 {
            return Err(invalid("copies must be at least 1"));
        }
        Ok(Self {
            params,
            copies,
            threshold: 0.5 + 3.0 / 32.0 * params.eps(),
            seed,
            simulation: CopySimulation::default(),
        })
    }

    /// Threshold from [`AMPLIFIED_EPS`], for planted-vs-uniform experiments.
    pub fn amplified(params: ForrParams, copies: u64, seed: u64) -> Result<Self> {
        Ok(Self::new(params, copies, seed)?.with_threshold(0.5 + 3.0 / 32.0 * AMPLIFIED_EPS))
    }

    /// Copy count from [`default_copies`] at the given error target.
    pub fn paper_faithful(params: ForrParams, target_error: f64, seed: u64) -> Result<Self> {
        Self::new(params, default_copies(&params, target_error)?, seed)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_simulation(mut self, simulation: CopySimulation) -> Self {
        self.simulation = simulation;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Yes,
    No,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolRunStats {
    pub ones_fraction: f64,
    pub per_copy_bits: Vec<u8>,
    pub decision: Decision,
    pub qubits_sent: u64,
    pub oracle_calls: u64,
    pub gate_count: u64,
}

/// Qubits per player per copy: `log2(2N)`.
pub fn register_width(params: &ForrParams) -> usize {
    params.log_half() as usize + 1
}

/// The circuit of one protocol copy, ending in the swap-test measurement
/// of Alice's selector qubit.
pub fn copy_circuit(params: &ForrParams, x: &SignVector, y: &SignVector) -> Result<Circuit> {
    let len = params.input_len();
    if x.len() != len || y.len() != len {
        return Err(invalid(format!(
            "inputs must have length 2N = {len}, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let r = register_width(params);
    let selector = r - 1;
    let mut c = Circuit::new(2 * r);
    // shared entanglement
    c.extend(bell_pairs_gates(r))?;
    // players: one oracle query each
    c.push(Gate::oracle(x.clone(), 0))?;
    c.push(Gate::oracle(y.clone(), r))?;
    // referee: erase Bob's register, flip the selector, H_N on the φ branch
    c.extend(e_operator_gates(0..r, r..2 * r)?)?;
    c.extend(negate_gates(selector))?;
    for target in 0..selector {
        c.extend(controlled_h_gates(selector, target))?;
    }
    c.push(Gate::Hadamard(selector))?;
    c.push(Gate::Measure(selector))?;
    Ok(c)
}

/// Exact per-copy probability that the swap test reports 1.
pub fn acceptance_probability(params: &ForrParams, x: &SignVector, y: &SignVector) -> Result<f64> {
    let (state, selector, _) = prepared_state(params, x, y)?;
    Ok(1.0 - state.probability_one(selector))
}

fn prepared_state(
    params: &ForrParams,
    x: &SignVector,
    y: &SignVector,
) -> Result<(StateVector, usize, Circuit)> {
    let circuit = copy_circuit(params, x, y)?;
    let (measure, unitary) = circuit.gates().split_last().expect("non-empty circuit");
    let Gate::Measure(selector) = *measure else {
        unreachable!("copy circuit ends in a measurement")
    };
    let prefix = Circuit::from_gates(circuit.qubits(), unitary.to_vec())?;
    let mut state = StateVector::zero(circuit.qubits())?;
    prefix.run(&mut state, &mut NoMeasurement)?;
    Ok((state, selector, circuit))
}

/// Runs `cfg.copies` copies of the protocol on inputs `(x, y)`.
///
/// Copy `k` measures with stream `k` of `cfg.seed`.
pub fn run_quantum_protocol(
    x: &SignVector,
    y: &SignVector,
    cfg: &QuantumProtocolConfig,
) -> Result<ProtocolRunStats> {
    if cfg.copies == 0 {
        return Err(invalid("copies must be at least 1"));
    }
    let family = StreamFamily::new(cfg.seed);
    let (bits, size) = match cfg.simulation {
        CopySimulation::SharedPrefix => {
            let (state, selector, circuit) = prepared_state(&cfg.params, x, y)?;
            let p1 = state.probability_one(selector);
            let bits: Vec<u8> = (0..cfg.copies)
                .into_par_iter()
                .map(|k| {
                    // bit 1 iff u < P[selector = 1]; the report is the negation
                    u8::from(unit(&mut family.stream(k)) >= p1)
                })
                .collect();
            (bits, circuit.size())
        }
        CopySimulation::PerCopy => {
            let circuit = copy_circuit(&cfg.params, x, y)?;
            let bits = (0..cfg.copies)
                .into_par_iter()
                .map(|k| -> Result<u8> {
                    let mut state = StateVector::zero(circuit.qubits())?;
                    let run = circuit.run(&mut state, &mut family.stream(k))?;
                    let (_, label) = run.outcomes[0];
                    Ok(u8::from(label > 0))
                })
                .collect::<Result<Vec<u8>>>()?;
            (bits, circuit.size())
        }
    };
    let ones: u64 = bits.iter().map(|&b| b as u64).sum();
    let ones_fraction = ones as f64 / cfg.copies as f64;
    let r = register_width(&cfg.params) as u64;
    Ok(ProtocolRunStats {
        ones_fraction,
        decision: if ones_fraction > cfg.threshold {
            Decision::Yes
        } else {
            Decision::No
        },
        per_copy_bits: bits,
        qubits_sent: cfg.copies * 2 * r,
        oracle_calls: cfg.copies * 2,
        gate_count: cfg.copies * size as u64,
    })
}

/// Smallest `T` with `2 exp(-2 T (eps/32)^2) <= target_error`: the copy
/// count at which the ones fraction is within `eps/32` of its mean with
/// probability at least `1 - target_error` (Hoeffding).
pub fn default_copies(params: &ForrParams, target_error: f64) -> Result<u64> {
    if !(target_error > 0.0 && target_error < 0.5) {
        return Err(invalid(format!(
            "target error {target_error} must lie in (0, 1/2)"
        )));
    }
    let dev = params.eps() / 32.0;
    let tail = |t: u64| 2.0 * (-2.0 * t as f64 * dev * dev).exp();
    let mut t = ((2.0 / target_error).ln() / (2.0 * dev * dev))
        .ceil()
        .max(1.0) as u64;
    while t > 1 && tail(t - 1) <= target_error {
        t -= 1;
    }
    while tail(t) > target_error {
        t += 1;
    }
    Ok(t)
}

/// Guard rng for the unitary prefix.
struct NoMeasurement;

impl rand::RngCore for NoMeasurement {
    fn next_u32(&mut self) -> u32 {
        unreachable!("unitary prefix consumed randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("unitary prefix consumed randomness")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("unitary prefix consumed randomness")
    }
}
