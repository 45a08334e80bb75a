//! The quantum protocol and the classical-protocol analysis.

mod analysis;
mod partition;
mod quantum;

pub use analysis::{advantage, l2_audit, majority_amplify, protocol_h, L2Audit};
pub use partition::{
    eval_partition, BitSet, Cell, PointSet, Predicate, RectanglePartition, DENSE_MAX_INPUT,
};
pub use quantum::{
    acceptance_probability, copy_circuit, default_copies, register_width, run_quantum_protocol,
    CopySimulation, Decision, ProtocolRunStats, QuantumProtocolConfig, AMPLIFIED_EPS,
};
