use super::channel::classify_counts;
use super::kraus::SumTable;
use super::{pauli_x, pauli_z, LogicalMap, SyndromeKey};
use crate::{CodeParams, Error, Result, C64};
use serde::Serialize;
use std::f64::consts::PI;

/// Loss used to populate every residue class when classifying.
pub const DEFAULT_REFERENCE_GAMMA: f64 = 0.05;

const TAU_FAIL: f64 = 1e-9;
const TAU_ZERO: f64 = 1e-9;
const PHASE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SyndromeKind {
    Correctable,
    /// One logical column is annihilated: the qubit is lost.
    Failure,
    /// Both columns vanish by interference; the outcome never occurs.
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyndromeClassification {
    pub key: SyndromeKey,
    pub kind: SyndromeKind,
    pub x_flip: bool,
    pub z_flip: bool,
    /// `|S'_11| / |S'_00|` after the Pauli correction; 0 unless correctable.
    /// For failures `x_flip` still records which side of the diagonal the
    /// surviving entry sits on, and the channel applies that flip.
    pub deformation: f64,
    pub residual_phase: f64,
}

impl SyndromeClassification {
    pub fn is_failure(&self) -> bool {
        self.kind == SyndromeKind::Failure
    }

    pub fn is_correctable(&self) -> bool {
        self.kind == SyndromeKind::Correctable
    }

    /// `Z^z X^x`, applied on the left of the syndrome map.
    pub fn correction(&self) -> LogicalMap {
        let mut p = LogicalMap::identity();
        if self.x_flip {
            p = pauli_x() * p;
        }
        if self.z_flip {
            p = pauli_z() * p;
        }
        p
    }
}

/// Classify the leading Kraus component of a syndrome map.
pub fn classify(key: SyndromeKey, leading: &LogicalMap) -> Result<SyndromeClassification> {
    if leading.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(SyndromeClassification {
            key,
            kind: SyndromeKind::Null,
            x_flip: false,
            z_flip: false,
            deformation: 0.0,
            residual_phase: 0.0,
        });
    }
    let col = |j: usize| (leading[(0, j)].norm_sqr() + leading[(1, j)].norm_sqr()).sqrt();
    let (c0, c1) = (col(0), col(1));
    let diag = leading[(0, 0)].norm() + leading[(1, 1)].norm();
    let off = leading[(0, 1)].norm() + leading[(1, 0)].norm();
    let x_flip = if diag <= TAU_ZERO * off {
        true
    } else if off <= TAU_ZERO * diag {
        false
    } else {
        return Err(Error::Unclassifiable { n: key.n, m: key.m, phase: f64::NAN });
    };
    if c0.min(c1) < TAU_FAIL * c0.max(c1) {
        // the surviving column still sits on or off the diagonal
        return Ok(SyndromeClassification {
            key,
            kind: SyndromeKind::Failure,
            x_flip,
            z_flip: false,
            deformation: 0.0,
            residual_phase: 0.0,
        });
    }
    let s = if x_flip { pauli_x() * leading } else { *leading };
    let rel: C64 = s[(1, 1)] / s[(0, 0)];
    let phase = rel.arg();
    let z_flip = phase.abs() > PI / 2.0;
    let residual = if z_flip { phase - PI.copysign(phase) } else { phase };
    if residual.abs() > PHASE_TOL {
        return Err(Error::Unclassifiable { n: key.n, m: key.m, phase: residual });
    }
    Ok(SyndromeClassification {
        key,
        kind: SyndromeKind::Correctable,
        x_flip,
        z_flip,
        deformation: rel.norm(),
        residual_phase: residual,
    })
}

/// Classification of every `(n, m)` with `n <= n_max`, `m <= m_max` at
/// `reference_gamma` (row-major in `n`).
///
/// Cells are classified from the reduced sums, whose interference zeros are
/// exact. The literal double sum in [`super::exact_syndrome_map`] agrees with them,
/// but at large counts it can leave rounding residue above the phase
/// tolerance when a structurally zero pair dominates the surviving terms.
pub fn pauli_map_grid(
    code: &CodeParams,
    n_max: u32,
    m_max: u32,
    reference_gamma: f64,
) -> Result<Vec<SyndromeClassification>> {
    if !(reference_gamma > 0.0) {
        return Err(Error::InvalidParameter(
            "classification needs a positive reference loss so that every class is populated".into(),
        ));
    }
    let reference = code.with_gamma(reference_gamma)?;
    let table = SumTable::shared(code.order, (n_max + m_max) as usize);
    let mut out = Vec::with_capacity(((n_max + 1) * (m_max + 1)) as usize);
    for n in 0..=n_max {
        for m in 0..=m_max {
            out.push(classify_counts(&reference, &table, n, m)?);
        }
    }
    Ok(out)
}

/// Classification of a single `(n, m)`. Zero loss is classified at the
/// default reference loss.
pub fn classify_syndrome(code: &CodeParams, n: u32, m: u32) -> Result<SyndromeClassification> {
    let reference = if code.gamma > 0.0 { *code } else { code.with_gamma(DEFAULT_REFERENCE_GAMMA)? };
    classify_counts(&reference, &SumTable::shared(code.order, (n + m) as usize), n, m)
}
