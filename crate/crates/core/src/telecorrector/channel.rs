use super::kraus::SumTable;
use super::{classify, LogicalMap, SyndromeClassification, SyndromeKey};
use crate::cat_algebra::ln_norm;
use crate::special::{ln_factorial, ln_residue_series};
use crate::{segment_gamma, CodeParams, Error, Result, C64};
use nalgebra::{Matrix2, Matrix4};
use rayon::prelude::*;
use std::f64::consts::LN_2;

/// Fixed chunk size for reductions, so sums do not depend on thread count.
const CHUNK: usize = 1024;
const MAX_GROWTH_STEPS: usize = 4;

/// Everything the channel needs about one count pair.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub class: SyndromeClassification,
    /// Weighted Kraus operators for loss orders `l = l0 mod 2(L+1)` and
    /// `l = l0 + L + 1 mod 2(L+1)`, before any correction.
    pub raw: [LogicalMap; 2],
    /// `raw` with the Pauli correction applied on the left.
    pub corrected: [LogicalMap; 2],
}

impl Outcome {
    pub fn key(&self) -> SyndromeKey {
        self.class.key
    }

    /// Probability of this outcome for logical state `rho`.
    pub fn probability(&self, rho: &Matrix2<C64>) -> f64 {
        self.raw.iter().map(|k| (k * rho * k.adjoint()).trace().re).sum()
    }

    /// Unnormalized Pauli-corrected output state.
    pub fn apply(&self, rho: &Matrix2<C64>) -> Matrix2<C64> {
        self.corrected.iter().map(|k| k * rho * k.adjoint()).sum()
    }
}

/// All outcomes with `n + m <= total_count` for one code and loss.
#[derive(Debug, Clone)]
pub struct OutcomeSet {
    pub code: CodeParams,
    pub outcomes: Vec<Outcome>,
    pub total_count: usize,
    pub completeness_deficit: f64,
}

impl OutcomeSet {
    /// Assemble with the count cutoff grown (by half each time) until the
    /// Kraus operators are complete to the tail tolerance.
    pub fn build(code: &CodeParams) -> Result<Self> {
        let mut total = code.total_count();
        let mut last = 0.0;
        for _ in 0..=MAX_GROWTH_STEPS {
            let outcomes = assemble(code, total)?;
            let completeness = chunked_sum(&outcomes, |o| {
                o.raw.iter().map(|k| k.adjoint() * k).sum::<Matrix2<C64>>()
            });
            let deficit = (completeness - Matrix2::identity()).norm();
            if deficit < code.cutoffs.tail_tol {
                return Ok(OutcomeSet { code: *code, outcomes, total_count: total, completeness_deficit: deficit });
            }
            log::debug!("count cutoff {total} leaves deficit {deficit:.3e}; growing");
            last = deficit;
            total += total / 2;
        }
        Err(Error::CutoffExhausted { what: "syndrome count", cutoff: total, deficit: last })
    }

    pub fn superop(&self) -> LogicalSuperop {
        let matrix = chunked_sum(&self.outcomes, |o| {
            o.corrected.iter().map(|k| k.conjugate().kronecker(k)).sum::<Matrix4<C64>>()
        });
        LogicalSuperop {
            matrix,
            completeness_deficit: self.completeness_deficit,
            total_count: self.total_count,
        }
    }

    /// Outcome probabilities for a logical state, in outcome order.
    pub fn probabilities(&self, rho: &Matrix2<C64>) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability(rho)).collect()
    }
}

fn chunked_sum<T, F>(items: &[Outcome], f: F) -> T
where
    T: std::iter::Sum<T> + Send,
    F: Fn(&Outcome) -> T + Sync,
{
    let partial: Vec<T> = items.par_chunks(CHUNK).map(|c| c.iter().map(&f).sum()).collect();
    partial.into_iter().sum()
}

fn assemble(code: &CodeParams, total: usize) -> Result<Vec<Outcome>> {
    let order = code.order;
    let lp1 = order as usize + 1;
    let legs = 2 * lp1;
    let (a, g) = (code.alpha, code.gamma);
    let a2 = a * a;
    let ln_n = [ln_norm(order, a, 0), ln_norm(order, a, 1)];
    let ln_nu = [ln_norm(order, code.damped_alpha(), 0), ln_norm(order, code.damped_alpha(), 1)];
    // ln sum over a residue class modulo 2(L+1) of (g a^2)^l / l!
    let ln_class: Vec<f64> = (0..legs).map(|r| ln_residue_series(g * a2, r, legs)).collect();
    let table = SumTable::shared(order, total);
    let ln_count_base = (2.0 * (1.0 - g) * a2).ln();
    let common = 0.5 * (g - 2.0) * a2 + (legs as f64).ln() - 0.5 * LN_2;

    let pairs: Vec<(usize, usize)> =
        (0..=total).flat_map(|t| (0..=t).map(move |n| (n, t - n))).collect();
    pairs
        .par_iter()
        .map(|&(n, m)| {
            let key = SyndromeKey::new(order, n as u32, m as u32);
            let c = table.get(n, m);
            let ln_base = common
                + 0.5 * ((n + m) as f64 * ln_count_base - ln_factorial(n) - ln_factorial(m));
            let mut raw = [LogicalMap::zeros(); 2];
            for (q, k_q) in raw.iter_mut().enumerate() {
                let l = key.l0 as usize + q * lp1;
                let flip = ((l + n + m) / lp1) % 2;
                for j in 0..2 {
                    let k = j ^ flip;
                    if c[k] == 0.0 {
                        continue;
                    }
                    let ln_mag = ln_base + 0.5 * ln_class[l] - 0.5 * (ln_n[j] + ln_nu[k]) + c[k].abs().ln();
                    k_q[(k, j)] = C64::new(ln_mag.exp().copysign(c[k]), 0.0);
                }
            }
            let class = classify(key, &shape(order, key, c, &ln_n, &ln_nu))?;
            let p = class.correction();
            Ok(Outcome { class, corrected: [p * raw[0], p * raw[1]], raw })
        })
        .collect()
}

/// Leading Kraus operator of `key` up to a positive factor, which is all
/// classification needs.
fn shape(order: u32, key: SyndromeKey, c: [f64; 2], ln_n: &[f64; 2], ln_nu: &[f64; 2]) -> LogicalMap {
    let lp1 = order as usize + 1;
    let flip = ((key.l0 as usize + (key.n + key.m) as usize) / lp1) % 2;
    let mut s = LogicalMap::zeros();
    for j in 0..2 {
        let k = j ^ flip;
        s[(k, j)] = C64::new(c[k] * (-0.5 * (ln_n[j] + ln_nu[k])).exp(), 0.0);
    }
    s
}

/// Classification of `(n, m)` for `code`, from the reduced sums.
pub(crate) fn classify_counts(code: &CodeParams, table: &SumTable, n: u32, m: u32) -> Result<SyndromeClassification> {
    let order = code.order;
    let ln_n = [ln_norm(order, code.alpha, 0), ln_norm(order, code.alpha, 1)];
    let ln_nu = [ln_norm(order, code.damped_alpha(), 0), ln_norm(order, code.damped_alpha(), 1)];
    let key = SyndromeKey::new(order, n, m);
    classify(key, &shape(order, key, table.get(n as usize, m as usize), &ln_n, &ln_nu))
}

/// The Pauli-corrected telecorrection channel on vectorized (column-major)
/// logical density matrices: `vec(K rho K^+) = (conj(K) (x) K) vec(rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalSuperop {
    pub matrix: Matrix4<C64>,
    pub completeness_deficit: f64,
    pub total_count: usize,
}

impl LogicalSuperop {
    pub fn apply(&self, rho: &Matrix2<C64>) -> Matrix2<C64> {
        unvectorize(&(self.matrix * vectorize(rho)))
    }

    pub fn power(&self, n: u32) -> Matrix4<C64> {
        let mut result = Matrix4::identity();
        let mut base = self.matrix;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result *= base;
            }
            base *= base;
            e >>= 1;
        }
        result
    }

    /// Entanglement fidelity of `N` uses of the channel: `Tr(M^N) / 4`.
    pub fn fidelity(&self, uses: u32) -> f64 {
        self.power(uses).trace().re / 4.0
    }
}

pub fn vectorize(rho: &Matrix2<C64>) -> nalgebra::Vector4<C64> {
    nalgebra::Vector4::new(rho[(0, 0)], rho[(1, 0)], rho[(0, 1)], rho[(1, 1)])
}

pub fn unvectorize(v: &nalgebra::Vector4<C64>) -> Matrix2<C64> {
    Matrix2::new(v[0], v[2], v[1], v[3])
}

/// Corrected channel for one telecorrection segment with loss `segment_gamma`.
pub fn corrected_channel_superop(code: &CodeParams, segment_gamma: f64) -> Result<LogicalSuperop> {
    Ok(OutcomeSet::build(&code.with_gamma(segment_gamma)?)?.superop())
}

/// Channel fidelity after splitting `gamma_total` into `segments` corrected
/// segments. The loss stored in `code` is ignored.
pub fn channel_fidelity(code: &CodeParams, gamma_total: f64, segments: u32) -> Result<f64> {
    if segments == 0 {
        return Err(Error::InvalidParameter("number of iterations must be >= 1".into()));
    }
    let g = segment_gamma(gamma_total, segments);
    Ok(corrected_channel_superop(code, g)?.fidelity(segments))
}
