//! Simulation and audit toolkit for the XOR-lifted forrelation problem.
//!
//! * [`fourier`]: dense Walsh–Hadamard analysis on the Boolean hypercube.
//! * [`forrelation`]: the forrelation functional and its Gaussian, rounded
//!   and lifted input distributions.
//! * [`quantum`]: a state-vector simulator for the gate set
//!   `{H, CNOT, R_pi/8, measurement, oracle}` and the circuit subroutines
//!   built from it.
//! * [`protocol`]: the simultaneous-message quantum protocol and the
//!   analysis of classical protocols given as rectangle partitions.

pub mod error;
pub mod forrelation;
pub mod fourier;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod sign;
pub mod stats;

pub use error::{Error, Result};
pub use forrelation::{
    forr, forr_signs, generate_instance, moment_g, moments_g, sample_d, sample_g, sample_v, trnc,
    ForrParams, InstanceMode, Label, LiftedInstance, RealPair2N,
};
pub use fourier::{
    convolve, fwht, inverse_spectrum, level_mass, multilinear_eval, spectrum, FourierSpectrum,
    FunctionTable,
};
pub use protocol::{
    advantage, default_copies, eval_partition, l2_audit, majority_amplify, protocol_h,
    run_quantum_protocol, ProtocolRunStats, QuantumProtocolConfig, RectanglePartition,
};
pub use quantum::{Circuit, Gate, StateVector};
pub use sign::SignVector;
pub use stats::Estimate;
