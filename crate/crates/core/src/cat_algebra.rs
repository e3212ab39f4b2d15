//! Closed-form scalars of the code: codeword normalizations, the R_X overlap
//! and mean photon numbers.
//!
//! Expanding `sum_m (-1)^{Jm} |w^m alpha>` in Fock space leaves only photon
//! numbers `n = J(L+1) mod 2(L+1)`, each with weight `(2L+2) e^{-a^2/2} a^n/sqrt(n!)`.
//! Normalizations therefore reduce to residue-class sums of `a^{2n}/n!`, which
//! are sums of positive terms. The coherent-overlap double sum gives the same
//! numbers but cancels catastrophically at small `alpha`.

use crate::special::{ln_residue_series, Dd};
use crate::{Error, Result};
use serde::Serialize;

/// Codeword normalizations at `alpha` and at the damped amplitude
/// `sqrt(1-Gamma) alpha` (the `_under` fields).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    pub n0: f64,
    pub n1: f64,
    pub n0_under: f64,
    pub n1_under: f64,
}

impl NormPair {
    pub fn undamped(&self, j: usize) -> f64 {
        [self.n0, self.n1][j]
    }

    pub fn damped(&self, j: usize) -> f64 {
        [self.n0_under, self.n1_under][j]
    }
}

/// `ln N_J(alpha)` for the order-`L` codeword `J`.
pub fn ln_norm(order: u32, alpha: f64, j: usize) -> f64 {
    assert!(j < 2);
    let lp1 = order as usize + 1;
    let legs = 2 * lp1;
    2.0 * (legs as f64).ln() - alpha * alpha + ln_residue_series(alpha * alpha, j * lp1, legs)
}

pub fn norm_constants(order: u32, alpha: f64, gamma: f64) -> Result<NormPair> {
    check(order, alpha)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("loss must lie in [0,1], got {gamma}")));
    }
    let under = (1.0 - gamma).sqrt() * alpha;
    let n = |a: f64, j| ln_norm(order, a, j).exp();
    Ok(NormPair {
        n0: n(alpha, 0),
        n1: n(alpha, 1),
        n0_under: if gamma == 0.0 { n(alpha, 0) } else { n(under, 0) },
        n1_under: if gamma == 0.0 { n(alpha, 1) } else { n(under, 1) },
    })
}

/// Sums over `n = 0 mod (L+1)` of `a^{2n}/n!`, in double-double, split by the
/// parity of `n/(L+1)`. Both share a common (exact, power of two) scale.
fn rx_sums(order: u32, alpha: f64) -> (Dd, Dd) {
    let lp1 = order as usize + 1;
    let a2 = Dd::from_f64(alpha).mul_f64(alpha);
    let x = alpha * alpha;
    let stop = (x + 14.0 * (x + 1.0).sqrt() + 60.0).ceil() as usize;
    let big = 2f64.powi(500);
    let shrink = 2f64.powi(-600);

    let mut term = Dd::ONE;
    let mut even = Dd::ONE;
    let mut odd = Dd::ZERO;
    let mut n = 0usize;
    loop {
        n += 1;
        term = term * a2 / Dd::from_f64(n as f64);
        if n % lp1 == 0 {
            if (n / lp1) % 2 == 0 {
                even = even + term;
            } else {
                odd = odd + term;
            }
        }
        if term.hi > big {
            // exact rescaling by a power of two
            term = term.mul_f64(shrink);
            even = even.mul_f64(shrink);
            odd = odd.mul_f64(shrink);
        }
        if n >= stop && n % lp1 == 0 {
            break;
        }
    }
    (even, odd)
}

/// R_X codeword overlap and R_Z normalization mismatch.
#[derive(Debug, Clone, Copy)]
pub struct BasisOverlap {
    rx: Dd,
    rz: Dd,
}

impl BasisOverlap {
    pub fn rx_overlap(&self) -> f64 {
        self.rx.hi
    }

    pub fn rz_mismatch(&self) -> f64 {
        self.rz.hi
    }

    /// `|N0/N1 - (1+o)/(1-o)|`, evaluated in double-double. The ratio can be
    /// ~1e10 at small amplitude, where f64 alone cannot resolve 1e-12.
    pub fn identity_residual(&self) -> f64 {
        let rhs = (Dd::ONE + self.rx) / (Dd::ONE - self.rx);
        (self.rz - rhs).abs().hi
    }
}

pub fn basis_overlap(order: u32, alpha: f64) -> Result<BasisOverlap> {
    check(order, alpha)?;
    let (e, o) = rx_sums(order, alpha);
    // The overlap is the alternating sum over the full sum; the mismatch is the
    // split sum ratio. Distinct arithmetic paths, so the identity is a real check.
    let rx = (e - o) / (e + o);
    let rz = e / o;
    Ok(BasisOverlap { rx, rz })
}

/// `<0|1>_X` for the R_X codewords.
pub fn rx_overlap(order: u32, alpha: f64) -> Result<f64> {
    Ok(basis_overlap(order, alpha)?.rx_overlap())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MismatchRow {
    #[serde(rename = "L")]
    pub order: u32,
    pub alpha: f64,
    pub mismatch_ratio: f64,
    pub rx_overlap: f64,
}

pub fn mismatch_curves(orders: &[u32], alphas: &[f64]) -> Result<Vec<MismatchRow>> {
    let mut rows = Vec::with_capacity(orders.len() * alphas.len());
    for &order in orders {
        for &alpha in alphas {
            let b = basis_overlap(order, alpha)?;
            rows.push(MismatchRow {
                order,
                alpha,
                mismatch_ratio: b.rz_mismatch(),
                rx_overlap: b.rx_overlap(),
            });
        }
    }
    Ok(rows)
}

/// Mean photon number of codeword `J`.
pub fn mean_photon(order: u32, alpha: f64, j: usize) -> Result<f64> {
    check(order, alpha)?;
    if j > 1 {
        return Err(Error::InvalidParameter(format!("logical index must be 0 or 1, got {j}")));
    }
    let lp1 = order as usize + 1;
    let legs = 2 * lp1;
    let x = alpha * alpha;
    // sum n x^n/n! over the class = x * sum over the class shifted down by one
    let shifted = (j * lp1 + legs - 1) % legs;
    Ok(x * (ln_residue_series(x, shifted, legs) - ln_residue_series(x, j * lp1, legs)).exp())
}

fn check(order: u32, alpha: f64) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidParameter("code order L must be >= 1".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}
