//! Per-syndrome logical maps, their Pauli classification, and the corrected
//! channel as a 4x4 superoperator.
//!
//! Two routes compute the same Kraus elements. [`kraus_element`] evaluates
//! the `(j, k)` double sum over coherent components directly. The outcome
//! tables behind [`OutcomeSet`] use the closed form obtained by substituting
//! `k = j + d`: the sum over `j` becomes a selection rule and what remains is
//!
//! ```text
//! c_K(n, m) = sum_d (-1)^{dK} (1 + w^d)^n (w^d - 1)^m,    w = e^{i pi/(L+1)}
//! ```
//!
//! which depends on the loss order `l` only through the parity of
//! `(l + n + m)/(L+1)`. Orders in the same class modulo `2(L+1)` give
//! proportional Kraus operators, so every count pair reduces to two matrices.

mod channel;
mod classify;
mod kraus;
mod search;

pub use channel::{
    channel_fidelity, corrected_channel_superop, unvectorize, vectorize, LogicalSuperop, Outcome,
    OutcomeSet,
};
pub use classify::{
    classify, classify_syndrome, pauli_map_grid, SyndromeClassification, SyndromeKind, DEFAULT_REFERENCE_GAMMA,
};
pub use kraus::{exact_syndrome_map, kraus_element, reduced_sums, KrausComponent};
pub use search::{fidelity_sweep, min_iterations_scan, ScanOptions, ScanResult, SweepRow};

use crate::C64;
use nalgebra::Matrix2;
use serde::Serialize;

/// A 2x2 map on logical amplitudes, indexed `(K output, J input)`.
pub type LogicalMap = Matrix2<C64>;

/// Count pair of a telecorrection step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SyndromeKey {
    pub n: u32,
    pub m: u32,
    pub l0: u32,
}

impl SyndromeKey {
    pub fn new(order: u32, n: u32, m: u32) -> Self {
        SyndromeKey { n, m, l0: minimal_loss_order(order, n, m) }
    }
}

/// Smallest loss order consistent with counts `(n, m)`: `L(n+m) mod (L+1)`.
pub fn minimal_loss_order(order: u32, n: u32, m: u32) -> u32 {
    assert!(order >= 1);
    let lp1 = order as u64 + 1;
    ((order as u64 * (n as u64 + m as u64)) % lp1) as u32
}

/// Pauli matrices used for corrections.
pub fn pauli_x() -> LogicalMap {
    let o = C64::new(0.0, 0.0);
    let i = C64::new(1.0, 0.0);
    Matrix2::new(o, i, i, o)
}

pub fn pauli_z() -> LogicalMap {
    let o = C64::new(0.0, 0.0);
    let i = C64::new(1.0, 0.0);
    Matrix2::new(i, o, o, -i)
}
