//! Cat-code telecorrection simulator.
//!
//! Codewords of order `L` are superpositions of `2L+2` coherent states on a
//! circle of radius `alpha`. A telecorrection step mixes a lossy codeword with
//! one arm of an entangled cat ancilla on a 50:50 beamsplitter, counts photons
//! on both outputs and leaves the logical qubit on the second ancilla arm,
//! transformed by a 2x2 map that depends only on the counts `(n, m)`.
//!
//! Everything downstream works with those 2x2 maps: the Pauli-corrected
//! channel is a 4x4 superoperator, so iterating it thousands of times is cheap.
//! The Fock-space code in [`fock`] exists to check the closed forms.

pub mod cat_algebra;
pub mod deformation;
pub mod diagnostics;
mod error;
pub mod fock;
mod params;
pub mod special;
pub mod telecorrector;

pub use error::{Error, Result};
pub use params::{db_to_gamma, segment_gamma, CodeParams, Cutoffs, DEFAULT_TAIL_TOL};

pub use num_complex::Complex64 as C64;
