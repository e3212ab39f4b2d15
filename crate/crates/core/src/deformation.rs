//! Deformation bookkeeping: trajectory Monte Carlo over syndrome sequences,
//! biased ancillas for the terminal correction, and code switching.
//!
//! Convention: a deformation is stored as the diagonal magnitudes
//! `(D_00, D_11)` of the Pauli-corrected map, and its ratio is `D_11 / D_00`
//! as in [`crate::telecorrector::SyndromeClassification`].

use crate::telecorrector::{exact_syndrome_map, KrausComponent, Outcome, OutcomeSet, SyndromeKey};
use crate::{segment_gamma, CodeParams, Error, Result, C64};
use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Name recorded in manifests for the trajectory generator.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(master), stream = trajectory index)";

/// `|0>, |1>, |+>, |->, |+i>, |-i>` in the logical frame.
pub fn pauli_eigenstates() -> [Vector2<C64>; 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |a: f64, b: f64| C64::new(a, b);
    [
        Vector2::new(c(1.0, 0.0), c(0.0, 0.0)),
        Vector2::new(c(0.0, 0.0), c(1.0, 0.0)),
        Vector2::new(c(h, 0.0), c(h, 0.0)),
        Vector2::new(c(h, 0.0), c(-h, 0.0)),
        Vector2::new(c(h, 0.0), c(0.0, h)),
        Vector2::new(c(h, 0.0), c(0.0, -h)),
    ]
}

pub fn pure(psi: &Vector2<C64>) -> Matrix2<C64> {
    psi * psi.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub syndromes: Vec<SyndromeKey>,
    /// Accumulated `(D_00, D_11)`, scaled to unit product.
    pub deformation: [f64; 2],
    pub x_count: u32,
    pub z_count: u32,
    pub failed: bool,
    /// Normalized Pauli-corrected logical state after the last step.
    pub state: Matrix2<C64>,
}

impl Trajectory {
    /// Overlap with `psi` after undoing the accumulated deformation
    /// (`D^-1` with unit determinant, then renormalized).
    pub fn corrected_fidelity(&self, psi: &Vector2<C64>) -> f64 {
        let [d0, d1] = self.deformation;
        let s = (d0 * d1).sqrt();
        let inv = Matrix2::new(C64::new(s / d0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s / d1, 0.0));
        let r = inv * self.state * inv.adjoint();
        overlap(&(r / r.trace()), psi)
    }

    pub fn fidelity(&self, psi: &Vector2<C64>) -> f64 {
        overlap(&self.state, psi)
    }
}

fn overlap(rho: &Matrix2<C64>, psi: &Vector2<C64>) -> f64 {
    (psi.adjoint() * rho * psi)[(0, 0)].re
}

/// Outcome table of one segment plus the per-outcome weights needed for
/// fast sampling. Every Kraus column has a single nonzero entry, so `K^+ K`
/// is diagonal and an outcome's probability is `g_0 rho_00 + g_1 rho_11`.
pub struct Sampler {
    pub set: OutcomeSet,
    pub steps: u32,
    g: Vec<[f64; 2]>,
    totals: [f64; 2],
}

impl Sampler {
    /// Sampler for `steps` corrected segments sharing the total loss `code.gamma`.
    pub fn new(code: &CodeParams, steps: u32) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("number of iterations must be >= 1".into()));
        }
        let seg = code.with_gamma(segment_gamma(code.gamma, steps))?;
        let set = OutcomeSet::build(&seg)?;
        let mut g = Vec::with_capacity(set.outcomes.len());
        for o in &set.outcomes {
            let mut w = [0.0; 2];
            for k in &o.raw {
                let kk = k.adjoint() * k;
                if kk[(0, 1)].norm() > 1e-12 * (kk[(0, 0)].re + kk[(1, 1)].re) {
                    return Err(Error::Internal(format!("Kraus columns of {:?} are not orthogonal", o.key())));
                }
                w[0] += kk[(0, 0)].re;
                w[1] += kk[(1, 1)].re;
            }
            g.push(w);
        }
        let totals = g.iter().fold([0.0, 0.0], |t, w| [t[0] + w[0], t[1] + w[1]]);
        Ok(Sampler { set, steps, g, totals })
    }

    fn draw(&self, rho: &Matrix2<C64>, rng: &mut ChaCha8Rng) -> usize {
        let (p0, p1) = (rho[(0, 0)].re, rho[(1, 1)].re);
        let total = p0 * self.totals[0] + p1 * self.totals[1];
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (i, w) in self.g.iter().enumerate() {
            acc += p0 * w[0] + p1 * w[1];
            if acc > target {
                return i;
            }
        }
        // rounding left the target just above the last partial sum
        self.g.iter().rposition(|w| p0 * w[0] + p1 * w[1] > 0.0).unwrap_or(0)
    }

    pub fn outcome(&self, i: usize) -> &Outcome {
        &self.set.outcomes[i]
    }

    /// One trajectory; trajectory `index` draws from its own stream of the
    /// master seed, so results do not depend on scheduling.
    pub fn run(&self, master_seed: u64, index: u64, input: &Matrix2<C64>) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(index);
        let mut t = Trajectory {
            syndromes: Vec::with_capacity(self.steps as usize),
            deformation: [1.0, 1.0],
            x_count: 0,
            z_count: 0,
            failed: false,
            state: *input / input.trace(),
        };
        for _ in 0..self.steps {
            let i = self.draw(&t.state, &mut rng);
            let o = self.outcome(i);
            t.syndromes.push(o.key());
            if o.class.is_failure() {
                t.failed = true;
                break;
            }
            let next = o.apply(&t.state);
            t.state = next / next.trace();
            let [d0, d1] = t.deformation;
            let d1 = d1 * o.class.deformation;
            let s = (d0 * d1).sqrt();
            t.deformation = [d0 / s, d1 / s];
            t.x_count = (t.x_count + o.class.x_flip as u32) % 2;
            t.z_count = (t.z_count + o.class.z_flip as u32) % 2;
        }
        t
    }
}

/// Single trajectory of `steps` segments with total loss `code.gamma`.
pub fn sample_trajectory(code: &CodeParams, steps: u32, seed: u64, input: &Matrix2<C64>) -> Result<Trajectory> {
    Ok(Sampler::new(code, steps)?.run(seed, 0, input))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeformationStats {
    pub alpha_fraction: f64,
    pub alpha: f64,
    pub trials: usize,
    pub failures: usize,
    pub pct_fail: f64,
    /// Mean fidelities (percent) over successful trajectories; `None` if all failed.
    pub f_pc: Option<f64>,
    pub f_dc: Option<f64>,
    pub delta_f: Option<f64>,
    pub delta_f_opt: Option<f64>,
}

/// Deformation-correction statistics. Trajectory `i` starts in eigenstate `i mod 6`.
/// `f_opt` is a fraction; reported quantities are in percent.
pub fn deformation_corrected_stats(
    order: u32,
    alpha_opt: f64,
    f_opt: f64,
    fractions: &[f64],
    gamma_total: f64,
    steps: u32,
    trials: usize,
    seed: u64,
) -> Result<Vec<DeformationStats>> {
    let eig = pauli_eigenstates();
    fractions
        .iter()
        .map(|&frac| {
            let alpha = frac * alpha_opt;
            let code = CodeParams::new(order, alpha, gamma_total)?;
            let sampler = Sampler::new(&code, steps)?;
            let per: Vec<Option<(f64, f64)>> = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let psi = &eig[i % 6];
                    let t = sampler.run(seed, i as u64, &pure(psi));
                    (!t.failed).then(|| (t.fidelity(psi), t.corrected_fidelity(psi)))
                })
                .collect();
            let ok: Vec<(f64, f64)> = per.iter().flatten().copied().collect();
            let failures = trials - ok.len();
            let mean = |f: fn(&(f64, f64)) -> f64| {
                (!ok.is_empty()).then(|| 100.0 * ok.iter().map(f).sum::<f64>() / ok.len() as f64)
            };
            let f_pc = mean(|x| x.0);
            let f_dc = mean(|x| x.1);
            Ok(DeformationStats {
                alpha_fraction: frac,
                alpha,
                trials,
                failures,
                pct_fail: 100.0 * failures as f64 / trials.max(1) as f64,
                f_pc,
                f_dc,
                delta_f: f_dc.zip(f_pc).map(|(a, b)| a - b),
                delta_f_opt: f_dc.map(|a| a - 100.0 * f_opt),
            })
        })
        .collect()
}

/// Ancilla prepared as `(|0>|0> + x |1>|1>) / sqrt(1 + |x|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedAncilla {
    pub x: C64,
}

impl BiasedAncilla {
    pub fn new(x: C64) -> Result<Self> {
        if x == C64::new(0.0, 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameter(format!("bias must be finite and nonzero, got {x}")));
        }
        Ok(BiasedAncilla { x })
    }

    /// Left factor on every Kraus operator relative to the balanced ancilla,
    /// `sqrt(2/(1+|x|^2)) diag(1, x)`.
    pub fn row_scaling(&self) -> Matrix2<C64> {
        let s = (2.0 / (1.0 + self.x.norm_sqr())).sqrt();
        Matrix2::new(C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), self.x * s)
    }
}

pub fn biased_syndrome_map(maps: &[KrausComponent], bias: &BiasedAncilla) -> Vec<KrausComponent> {
    let b = bias.row_scaling();
    maps.iter().map(|c| KrausComponent { loss_order: c.loss_order, map: b * c.map }).collect()
}

/// Relative tolerance when matching a deformation ratio to its target.
/// Two decimals, the precision at which deformations are grouped.
pub const DEFORMATION_MATCH_TOL: f64 = 5e-3;

/// Deformation ratio of an outcome after biasing: the bias multiplies the
/// ratio by `|x|` for diagonal outcomes and by `1/|x|` for flipped ones.
pub fn biased_deformation(o: &Outcome, bias: &BiasedAncilla) -> Option<f64> {
    if !o.class.is_correctable() {
        return None;
    }
    let x = bias.x.norm();
    Some(if o.class.x_flip { o.class.deformation / x } else { o.class.deformation * x })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasOutcome {
    pub success: f64,
    /// Total probability over all outcomes (1 up to truncation).
    pub total: f64,
}

/// Probability that a teleportation with a biased ancilla lands on the
/// branch whose deformation ratio is `1/|x|` (the identity branch at `x = 1`).
pub fn bias_success_prob(code: &CodeParams, x: C64, input: &Vector2<C64>) -> Result<BiasOutcome> {
    let set = OutcomeSet::build(code)?;
    Ok(bias_success_in(&set, &BiasedAncilla::new(x)?, input))
}

pub fn bias_success_in(set: &OutcomeSet, bias: &BiasedAncilla, input: &Vector2<C64>) -> BiasOutcome {
    let b = bias.row_scaling();
    let rho = pure(input);
    let target = 1.0 / bias.x.norm();
    let mut success = 0.0;
    let mut total = 0.0;
    for o in &set.outcomes {
        let p: f64 = o.raw.iter().map(|k| (b * k * rho * (b * k).adjoint()).trace().re).sum();
        total += p;
        if let Some(d) = biased_deformation(o, bias) {
            if (d / target - 1.0).abs() < DEFORMATION_MATCH_TOL {
                success += p;
            }
        }
    }
    BiasOutcome { success, total }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseTarget {
    /// Ancilla bias to prepare.
    pub x: f64,
    /// Deformation ratio (`D_11/D_00`) of the successful branch.
    pub target_ratio: f64,
}

/// Bias whose successful branch applies `D_total^-1` up to scale. The
/// flipped branch carries `diag(x, 1)` after its X correction, so
/// `x = D_11 / D_00` of the accumulated deformation.
pub fn select_inverse_deformation(d_total: [f64; 2]) -> Result<InverseTarget> {
    let [d0, d1] = d_total;
    if !(d0 > 0.0 && d1 > 0.0 && d0.is_finite() && d1.is_finite()) {
        return Err(Error::InvalidParameter(format!("deformation must be positive, got ({d0}, {d1})")));
    }
    let x = d1 / d0;
    Ok(InverseTarget { x, target_ratio: 1.0 / x })
}

/// Deformation after one terminal attempt with bias `x`. Success cancels
/// the deformation; failure applies `diag(1, x)` instead and doubles the
/// log-ratio.
pub fn terminal_attempt(d_total: [f64; 2], x: f64, success: bool) -> [f64; 2] {
    let [d0, d1] = d_total;
    let (a, b) = if success { (d0 * x, d1) } else { (d0, d1 * x) };
    let s = (a * b).sqrt();
    [a / s, b / s]
}

/// Teleportation into a different code: same Kraus coefficients, output
/// read in the order-`out_order`, amplitude-`out_alpha` codeword basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedMap {
    pub from: CodeParams,
    pub out_order: u32,
    pub out_alpha: f64,
    pub components: Vec<KrausComponent>,
}

pub fn code_switch_map(code_in: &CodeParams, out_order: u32, out_alpha: f64, n: u32, m: u32) -> Result<SwitchedMap> {
    if out_order == 0 || !(out_alpha > 0.0) {
        return Err(Error::InvalidParameter("output code needs L' >= 1 and alpha' > 0".into()));
    }
    Ok(SwitchedMap { from: *code_in, out_order, out_alpha, components: exact_syndrome_map(code_in, n, m)? })
}
