//! Truncated Fock-space numerics: coherent and cat states, the loss channel,
//! the 50:50 beamsplitter and a brute-force three-mode teleportation used as
//! an oracle for the closed-form syndrome maps.

use crate::cat_algebra::ln_norm;
use crate::special::{ln_binomial, ln_factorial, xlogy};
use crate::{CodeParams, Cutoffs, Error, Result, C64, DEFAULT_TAIL_TOL};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub amps: DVector<C64>,
}

impl FockVector {
    pub fn zeros(dim: usize) -> Self {
        FockVector { amps: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn mean_photon(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
    }

    /// `|amplitude|^2` summed over the top `window` photon numbers.
    pub fn tail_mass(&self, window: usize) -> f64 {
        let d = self.dim();
        self.amps.iter().skip(d.saturating_sub(window)).map(|a| a.norm_sqr()).sum()
    }

    pub fn density(&self) -> FockDensity {
        FockDensity { mat: &self.amps * self.amps.adjoint() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    pub mat: DMatrix<C64>,
}

impl FockDensity {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).camax()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(a, b));
    }
    Ok(())
}

/// `|alpha e^{i phi}>` truncated to `dim` levels, no adequacy check.
pub fn coherent_fock(alpha: f64, phi: f64, dim: usize) -> FockVector {
    assert!(dim >= 1 && alpha >= 0.0);
    let mut v = FockVector::zeros(dim);
    for n in 0..dim {
        if alpha == 0.0 && n > 0 {
            break;
        }
        let lmag = -0.5 * alpha * alpha + xlogy(n as f64, alpha) - 0.5 * ln_factorial(n);
        v.amps[n] = C64::from_polar(lmag.exp(), n as f64 * phi);
    }
    v
}

/// Coherent state whose truncation is checked: the dimension is grown once
/// to the default rule (or doubled) if the lost norm exceeds the tolerance.
pub fn coherent_fock_normalized(alpha: f64, phi: f64, dim: usize) -> Result<FockVector> {
    adequate(dim, alpha, "coherent state", |d| Ok(coherent_fock(alpha, phi, d)))
}

/// Order-`L` codeword `J` at amplitude `alpha`. Amplitudes off the residue
/// class `n = J(L+1) mod 2(L+1)` are never written, so they are exactly zero.
pub fn cat_fock_at(order: u32, alpha: f64, j: usize, dim: usize) -> Result<FockVector> {
    if order == 0 {
        return Err(Error::InvalidParameter("code order L must be >= 1".into()));
    }
    if j > 1 {
        return Err(Error::InvalidParameter(format!("logical index must be 0 or 1, got {j}")));
    }
    adequate(dim, alpha, "cat codeword", |d| Ok(cat_raw(order, alpha, j, d)))
}

pub fn cat_fock(code: &CodeParams, j: usize, dim: usize) -> Result<FockVector> {
    cat_fock_at(code.order, code.alpha, j, dim)
}

fn cat_raw(order: u32, alpha: f64, j: usize, dim: usize) -> FockVector {
    let lp1 = order as usize + 1;
    let legs = 2 * lp1;
    let lnorm = ln_norm(order, alpha, j);
    let mut v = FockVector::zeros(dim);
    let mut n = j * lp1;
    while n < dim {
        let lmag = (legs as f64).ln() - 0.5 * alpha * alpha + xlogy(n as f64, alpha)
            - 0.5 * ln_factorial(n)
            - 0.5 * lnorm;
        v.amps[n] = C64::new(lmag.exp(), 0.0);
        n += legs;
    }
    v
}

fn adequate(
    dim: usize,
    alpha: f64,
    what: &'static str,
    build: impl Fn(usize) -> Result<FockVector>,
) -> Result<FockVector> {
    if dim == 0 {
        return Err(Error::InvalidParameter("Fock dimension must be >= 1".into()));
    }
    let v = build(dim)?;
    let deficit = (1.0 - v.norm_sqr()).abs();
    if deficit < DEFAULT_TAIL_TOL {
        return Ok(v);
    }
    let grown = Cutoffs::default_fock_dim(alpha).max(2 * dim);
    let v = build(grown)?;
    let deficit = (1.0 - v.norm_sqr()).abs();
    if deficit < DEFAULT_TAIL_TOL {
        log::debug!("{what}: Fock dimension grown from {dim} to {grown}");
        Ok(v)
    } else {
        Err(Error::CutoffExhausted { what, cutoff: grown, deficit })
    }
}

/// Coefficient of the `l`-photon loss Kraus operator:
/// `(B_l psi)_n = sqrt(Gamma^l (1-Gamma)^n C(n+l, l)) psi_{n+l}`.
fn loss_coeff(gamma: f64, l: usize, n: usize) -> f64 {
    if gamma == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    (0.5 * (xlogy(l as f64, gamma) + xlogy(n as f64, 1.0 - gamma) + ln_binomial(n + l, l))).exp()
}

/// `B_l |psi>`, the (unnormalized) branch in which `l` photons were lost.
pub fn loss_branch(psi: &FockVector, gamma: f64, l: usize) -> FockVector {
    let d = psi.dim();
    let mut out = FockVector::zeros(d);
    for n in 0..d.saturating_sub(l) {
        out.amps[n] = psi.amps[n + l] * loss_coeff(gamma, l, n);
    }
    out
}

/// Loss channel applied to a density matrix. With `l_max = None` the number
/// of Kraus orders follows the default rule and keeps growing until a new
/// order adds less than 1e-12 of trace.
pub fn apply_loss(rho: &FockDensity, gamma: f64, l_max: Option<usize>) -> Result<FockDensity> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("loss must lie in [0,1), got {gamma}")));
    }
    let d = rho.dim();
    let mut out = DMatrix::<C64>::zeros(d, d);
    let mean_n: f64 = (0..d).map(|n| n as f64 * rho.mat[(n, n)].re).sum();
    let start = Cutoffs::default_loss_order(gamma, mean_n.max(0.0).sqrt());
    let mut l = 0;
    loop {
        if l >= d || (gamma == 0.0 && l > 0) {
            break;
        }
        if let Some(cap) = l_max {
            if l > cap {
                break;
            }
        }
        let coeff: Vec<f64> = (0..d - l).map(|n| loss_coeff(gamma, l, n)).collect();
        let mut added = 0.0;
        for a in 0..d - l {
            for b in 0..d - l {
                let v = rho.mat[(a + l, b + l)] * (coeff[a] * coeff[b]);
                out[(a, b)] += v;
            }
            added += coeff[a] * coeff[a] * rho.mat[(a + l, a + l)].re;
        }
        if l_max.is_none() && l >= start && added.abs() < 1e-12 {
            break;
        }
        l += 1;
    }
    let out = FockDensity { mat: out };
    let deficit = (out.trace() - rho.trace()).abs();
    if deficit >= DEFAULT_TAIL_TOL {
        return Err(Error::CutoffExhausted { what: "loss order", cutoff: l, deficit });
    }
    Ok(out)
}

/// Photon-number distribution of a lossy codeword split by loss order:
/// orders `l <= L` are correctable, `L < l <= l_cap` are not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockHistogram {
    pub p_correctable: Vec<f64>,
    pub p_uncorrectable: Vec<f64>,
    pub correctable_mass: f64,
    pub uncorrectable_mass: f64,
    pub l_cap: usize,
}

pub fn uncorrectable_mass(code: &CodeParams, j: usize, l_cap: usize) -> Result<FockHistogram> {
    let dim = code.fock_dim();
    let psi = cat_fock(code, j, dim)?;
    let d = psi.dim();
    let mut ok = vec![0.0; d];
    let mut bad = vec![0.0; d];
    for l in 0..=l_cap.min(d - 1) {
        let branch = loss_branch(&psi, code.gamma, l);
        let bin = if l <= code.order as usize { &mut ok } else { &mut bad };
        for (n, a) in branch.amps.iter().enumerate() {
            bin[n] += a.norm_sqr();
        }
    }
    Ok(FockHistogram {
        correctable_mass: ok.iter().sum(),
        uncorrectable_mass: bad.iter().sum(),
        p_correctable: ok,
        p_uncorrectable: bad,
        l_cap,
    })
}

/// Half the trace norm of `rho - sigma`.
pub fn trace_distance(rho: &FockDensity, sigma: &FockDensity) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    let diff = &rho.mat - &sigma.mat;
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    let ev = herm.symmetric_eigenvalues();
    Ok((0.5 * ev.iter().map(|x| x.abs()).sum::<f64>()).min(1.0))
}

/// Matrix elements of the 50:50 beamsplitter
/// `a1^+ -> (a1^+ - a2^+)/sqrt2`, `a2^+ -> (a1^+ + a2^+)/sqrt2`,
/// one block per conserved total photon number.
///
/// `block(t)[(n, p)] = <n, t-n| U |p, t-p>`; the elements are real.
#[derive(Debug, Clone)]
pub struct Beamsplitter {
    blocks: Vec<DMatrix<f64>>,
}

impl Beamsplitter {
    pub fn new(max_total: usize) -> Self {
        let mut blocks = vec![DMatrix::from_element(1, 1, 1.0)];
        for t in 1..=max_total {
            let prev = &blocks[t - 1];
            let mut b = DMatrix::zeros(t + 1, t + 1);
            for p in 0..=t {
                // column for |p, t-p>: raise one photon on top of a column of block t-1
                let (src, sign_a2, scale) = if p == 0 {
                    (0, 1.0, (2.0 * t as f64).sqrt())
                } else {
                    (p - 1, -1.0, (2.0 * p as f64).sqrt())
                };
                for n in 0..t {
                    let c = prev[(n, src)];
                    if c == 0.0 {
                        continue;
                    }
                    // a1^+ |n, t-1-n> = sqrt(n+1) |n+1, t-1-n>
                    b[(n + 1, p)] += c * ((n + 1) as f64).sqrt() / scale;
                    // a2^+ |n, t-1-n> = sqrt(t-n) |n, t-n>
                    b[(n, p)] += sign_a2 * c * ((t - n) as f64).sqrt() / scale;
                }
            }
            blocks.push(b);
        }
        Beamsplitter { blocks }
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    /// Apply to a two-mode state stored as `psi[(p, q)]`. Components whose
    /// total exceeds the precomputed range are dropped.
    pub fn apply(&self, psi: &DMatrix<C64>) -> DMatrix<C64> {
        let (d1, d2) = psi.shape();
        let mut out = DMatrix::zeros(d1, d2);
        for t in 0..=self.max_total().min(d1 + d2 - 2) {
            let b = self.block(t);
            for n in 0..=t {
                if n >= d1 || t - n >= d2 {
                    continue;
                }
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..=t {
                    if p < d1 && t - p < d2 {
                        acc += psi[(p, t - p)] * b[(n, p)];
                    }
                }
                out[(n, t - n)] = acc;
            }
        }
        out
    }
}

/// Options for [`teleport_oracle`].
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Fock dimension per mode; default rule if `None`.
    pub dim: Option<usize>,
    /// Largest allowed number of three-mode amplitudes.
    pub budget: usize,
    /// Code of the ancilla's second mode, `(L', alpha')`; defaults to the input code.
    pub output_code: Option<(u32, f64)>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { dim: None, budget: 4_000_000, output_code: None }
    }
}

/// Outcome of the brute-force teleportation for one count pair.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub probability: f64,
    /// `(l, [c0, c1])`: mode-3 state in branch `l`, in the codeword frame.
    pub branches: Vec<(usize, [C64; 2])>,
    pub span_residual: f64,
}

/// Teleport `q0|0> + q1|1>` through loss `Gamma` into the second arm of the
/// entangled ancilla, entirely in truncated Fock space, and post-select
/// counts `(n, m)` on the two beamsplitter outputs.
pub fn teleport_oracle(
    input: [C64; 2],
    code: &CodeParams,
    n: usize,
    m: usize,
    opts: OracleOptions,
) -> Result<OracleOutcome> {
    let dim = opts.dim.unwrap_or_else(|| code.fock_dim());
    let needed = dim.saturating_mul(dim).saturating_mul(dim);
    if needed > opts.budget {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }
    let (out_order, out_alpha) = opts.output_code.unwrap_or((code.order, code.alpha));
    let norm = (input[0].norm_sqr() + input[1].norm_sqr()).sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter("input amplitudes vanish".into()));
    }

    let mut psi = FockVector::zeros(dim);
    let mut anc1 = Vec::new();
    let mut anc3 = Vec::new();
    for k in 0..2 {
        let c = cat_fock_at(code.order, code.alpha, k, dim)?;
        let u = cat_fock_at(code.order, code.damped_alpha(), k, dim)?;
        let v = cat_fock_at(out_order, out_alpha, k, dim)?;
        for d in [c.dim(), u.dim(), v.dim()] {
            same_dim(dim, d)?;
        }
        psi.amps += &c.amps * (input[k] / norm);
        anc1.push(u);
        anc3.push(v);
    }

    let total = n + m;
    if total > 2 * (dim - 1) {
        return Err(Error::CutoffExhausted { what: "oracle Fock dimension", cutoff: dim, deficit: 1.0 });
    }
    let bs = Beamsplitter::new(total);
    let row = bs.block(total).row(n).clone_owned();

    // Gram matrix of the output frame for least squares
    let g = [
        [anc3[0].inner(&anc3[0])?, anc3[0].inner(&anc3[1])?],
        [anc3[1].inner(&anc3[0])?, anc3[1].inner(&anc3[1])?],
    ];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];

    let l_max = code.loss_order().min(dim - 1);
    let mut branches = Vec::new();
    let mut probability = 0.0;
    let mut worst_residual: f64 = 0.0;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for l in 0..=l_max {
        if code.gamma == 0.0 && l > 0 {
            break;
        }
        let lossy = loss_branch(&psi, code.gamma, l);
        // three-mode state (p, q, r) = (input, ancilla arm 1, ancilla arm 2)
        let mut state = vec![C64::new(0.0, 0.0); needed];
        let idx = |p: usize, q: usize, r: usize| (p * dim + q) * dim + r;
        for k in 0..2 {
            for p in 0..dim {
                let a = lossy.amps[p];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for q in 0..dim {
                    let b = anc1[k].amps[q];
                    if b == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for r in 0..dim {
                        state[idx(p, q, r)] += a * b * anc3[k].amps[r] * inv_sqrt2;
                    }
                }
            }
        }
        // <n, m| U on modes 1-2, leaving mode 3
        let mut phi = DVector::<C64>::zeros(dim);
        for p in 0..=total {
            let q = total - p;
            if p >= dim || q >= dim || row[p] == 0.0 {
                continue;
            }
            for r in 0..dim {
                phi[r] += state[idx(p, q, r)] * row[p];
            }
        }
        let weight: f64 = phi.iter().map(|x| x.norm_sqr()).sum();
        probability += weight;
        let b0 = anc3[0].amps.dotc(&phi);
        let b1 = anc3[1].amps.dotc(&phi);
        let c0 = (g[1][1] * b0 - g[0][1] * b1) / det;
        let c1 = (g[0][0] * b1 - g[1][0] * b0) / det;
        let resid = (&phi - &anc3[0].amps * c0 - &anc3[1].amps * c1).norm();
        worst_residual = worst_residual.max(resid);
        branches.push((l, [c0, c1]));
    }
    if worst_residual > DEFAULT_TAIL_TOL {
        return Err(Error::SpanViolation(worst_residual));
    }
    Ok(OracleOutcome { probability, branches, span_residual: worst_residual })
}
