//! Knill-Laflamme residuals of corrected syndrome maps and the mean error
//! probability of Pauli-eigenstate pairs after a final uncorrected loss.

use crate::deformation::{pauli_eigenstates, pure};
use crate::fock::{apply_loss, cat_fock_at, trace_distance, FockDensity};
use crate::telecorrector::{classify_syndrome, exact_syndrome_map, OutcomeSet, SyndromeKey};
use crate::{segment_gamma, CodeParams, Error, Result, C64};
use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KLReport {
    /// Largest off-diagonal magnitude of the Pauli-corrected map.
    pub orthogonality_residual: f64,
    /// `(|S'_00| - |S'_11|)` over their mean.
    pub diagonal_gap: f64,
}

/// Knill-Laflamme diagnostics of the leading corrected map for `(n, m)`.
/// The Pauli correction comes from classification at the reference loss,
/// so the report is also defined at zero loss.
pub fn kl_report(code: &CodeParams, n: u32, m: u32) -> Result<KLReport> {
    let key = SyndromeKey::new(code.order, n, m);
    let class = classify_syndrome(code, n, m)?;
    if !class.is_correctable() {
        return Err(Error::FailureSyndrome { n, m });
    }
    let s = class.correction() * exact_syndrome_map(code, n, m)?[0].map;
    let (a, b) = (s[(0, 0)].norm(), s[(1, 1)].norm());
    if a + b == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "syndrome ({n},{m}) needs loss order {} and has zero weight at this loss",
            key.l0
        )));
    }
    Ok(KLReport {
        orthogonality_residual: s[(0, 1)].norm().max(s[(1, 0)].norm()),
        diagonal_gap: (a - b) / (0.5 * (a + b)),
    })
}

/// Logical state written onto the codewords of `code` in a `dim`-level Fock space.
pub fn embed(code: &CodeParams, rho: &Matrix2<C64>, dim: usize) -> Result<FockDensity> {
    let w = [cat_fock_at(code.order, code.alpha, 0, dim)?, cat_fock_at(code.order, code.alpha, 1, dim)?];
    let d = w[0].dim();
    let mut mat = DMatrix::zeros(d, d);
    for j in 0..2 {
        for jp in 0..2 {
            mat += &w[j].amps * w[jp].amps.adjoint() * rho[(j, jp)];
        }
    }
    Ok(FockDensity { mat })
}

/// Mean error probability of the three eigenstate pairs after `segments`
/// corrected segments and one final uncorrected segment, all of loss
/// `1 - (1-Gamma)^{1/(N+1)}`. `segments = 0` is plain loss.
pub fn mean_error_probability(order: u32, alpha: f64, gamma_total: f64, segments: u32) -> Result<f64> {
    let code = CodeParams::new(order, alpha, 0.0)?;
    let g = segment_gamma(gamma_total, segments + 1);
    let channel = if segments > 0 {
        Some(OutcomeSet::build(&code.with_gamma(g)?)?.superop())
    } else {
        None
    };
    let eig = pauli_eigenstates();
    let dim = code.fock_dim();
    let mut p = 0.0;
    for pair in [(0, 1), (2, 3), (4, 5)] {
        let mut out = Vec::with_capacity(2);
        for i in [pair.0, pair.1] {
            let mut rho = pure(&eig[i]);
            if let Some(m) = &channel {
                for _ in 0..segments {
                    rho = m.apply(&rho);
                }
            }
            out.push(apply_loss(&embed(&code, &rho, dim)?, g, None)?);
        }
        p += 0.5 - 0.5 * trace_distance(&out[0], &out[1])?;
    }
    Ok(p / 3.0)
}
