//! State-vector simulation of oracle-access circuits.
//!
//! Qubit `q` is bit `q` of the basis index (little-endian). A qubit whose
//! bit is 0 carries the sign label `+1` and a qubit whose bit is 1 carries
//! `-1`; [`bit_to_sign`] and [`sign_to_bit`] are the only places that
//! mapping is written down.

mod circuit;
mod state;
mod subroutines;

pub use circuit::{Circuit, CircuitRun, Gate};
pub use state::{StateVector, DEFAULT_QUBIT_CAP};
pub use subroutines::{
    bell_pairs, bell_pairs_gates, controlled_h, controlled_h_direct, controlled_h_gates,
    controlled_h_matrix, controlled_h_target_matrix, e_operator, e_operator_gates,
    equal_up_to_phase, negate_gates, swap_test,
};

/// Measurement label of a basis bit.
#[inline]
pub const fn bit_to_sign(bit: u8) -> i8 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

/// Basis bit of a measurement label.
#[inline]
pub const fn sign_to_bit(sign: i8) -> u8 {
    if sign >= 0 {
        0
    } else {
        1
    }
}
