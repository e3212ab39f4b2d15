use super::{minimal_loss_order, LogicalMap};
use crate::cat_algebra::{norm_constants, NormPair};
use crate::special::{ln_factorial, xlogy};
use crate::{CodeParams, Cutoffs, Error, Result, C64};
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

/// A sum whose magnitude is below this fraction of the sum of its terms'
/// magnitudes is an interference zero and is stored as exactly zero.
pub(crate) const CANCEL_TOL: f64 = 1e-12;

/// One loss-order term of a syndrome map.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausComponent {
    pub loss_order: usize,
    pub map: LogicalMap,
}

/// Kraus element for loss order `l` and counts `(n, m)`, from the direct
/// double sum over the coherent components `j` (input) and `k` (ancilla).
///
/// Zero unless `l = L(n+m) mod (L+1)`; a rule-violating `l` whose sum does
/// not cancel is reported as an internal fault.
pub fn kraus_element(code: &CodeParams, l: usize, n: u32, m: u32) -> Result<LogicalMap> {
    let norms = norm_constants(code.order, code.alpha, code.gamma)?;
    kraus_element_with(code, &norms, l, n, m)
}

pub(crate) fn kraus_element_with(
    code: &CodeParams,
    norms: &NormPair,
    l: usize,
    n: u32,
    m: u32,
) -> Result<LogicalMap> {
    let legs = code.legs();
    let lp1 = code.order as usize + 1;
    let (a, g) = (code.alpha, code.gamma);
    let allowed = l % lp1 == minimal_loss_order(code.order, n, m) as usize;
    let mut out = LogicalMap::zeros();
    if g == 0.0 && l > 0 {
        return Ok(out);
    }
    let (nf, mf) = (n as f64, m as f64);
    let lf = l as f64;
    let ln_pref = 0.5 * (g - 2.0) * a * a - 0.5 * (ln_factorial(n as usize) + ln_factorial(m as usize))
        + (nf + mf) * (((1.0 - g) / 2.0).sqrt() * a).ln()
        + xlogy(lf, g.sqrt() * a)
        - 0.5 * ln_factorial(l)
        - 0.5 * LN_2;

    let w = |j: usize| C64::from_polar(1.0, j as f64 * PI / lp1 as f64);
    // (log magnitude, phase) of the (j, k) term without the logical signs
    let mut terms = Vec::with_capacity(legs * legs);
    for j in 0..legs {
        for k in 0..legs {
            let sum_zero = (k + legs - j) % legs == lp1;
            let diff_zero = j == k;
            if (sum_zero && n > 0) || (diff_zero && m > 0) {
                continue;
            }
            let b1 = w(j) + w(k);
            let b2 = w(k) - w(j);
            let mut lmag = 0.0;
            let mut phase = j as f64 * lf * PI / lp1 as f64;
            if n > 0 {
                lmag += nf * b1.norm().ln();
                phase += nf * b1.arg();
            }
            if m > 0 {
                lmag += mf * b2.norm().ln();
                phase += mf * b2.arg();
            }
            terms.push((j, k, lmag, phase));
        }
    }
    let top = terms.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
    for kk in 0..2 {
        for jj in 0..2 {
            let mut s = C64::new(0.0, 0.0);
            let mut scale = 0.0;
            for &(j, k, lmag, phase) in &terms {
                let sign = if (j * jj + k * kk) % 2 == 0 { 1.0 } else { -1.0 };
                let mag = (lmag - top).exp();
                s += C64::from_polar(sign * mag, phase);
                scale += mag;
            }
            let cancelled = s.norm() <= CANCEL_TOL * scale;
            if !allowed {
                if !cancelled {
                    return Err(Error::Internal(format!(
                        "loss order {l} violates the selection rule at ({n},{m}) but the sum is {:.3e} of its terms",
                        s.norm() / scale
                    )));
                }
                continue;
            }
            if cancelled {
                continue;
            }
            let ln_norm = 0.5 * (norms.undamped(jj).ln() + norms.damped(kk).ln());
            out[(kk, jj)] = s * (top + ln_pref - ln_norm).exp();
        }
    }
    Ok(out)
}

/// All loss orders contributing to counts `(n, m)`: `l0, l0 + (L+1), ...`,
/// continued past the default cutoff until a term adds < 1e-12 of weight.
pub fn exact_syndrome_map(code: &CodeParams, n: u32, m: u32) -> Result<Vec<KrausComponent>> {
    let norms = norm_constants(code.order, code.alpha, code.gamma)?;
    let lp1 = code.order as usize + 1;
    let l0 = minimal_loss_order(code.order, n, m) as usize;
    let l_max = code.loss_order();
    let hard_cap = 4 * l_max + 4 * lp1;
    let mut out = Vec::new();
    let mut l = l0;
    loop {
        let map = kraus_element_with(code, &norms, l, n, m)?;
        let weight: f64 = map.iter().map(|z| z.norm_sqr()).sum();
        out.push(KrausComponent { loss_order: l, map });
        if code.gamma == 0.0 {
            break;
        }
        if l >= l_max && weight < 1e-12 {
            break;
        }
        l += lp1;
        if l > hard_cap {
            return Err(Error::CutoffExhausted { what: "loss order", cutoff: l, deficit: weight });
        }
    }
    Ok(out)
}

/// `c_K(n, m) / 2^{n+m}` for `K = 0, 1`, with interference zeros made exact.
///
/// With `t = d pi/(2L+2)` each term is `(-1)^{dK} cos^n(t) sin^m(t) i^m e^{i(n+m)t}`.
/// Terms `d` and `2L+2-d` are conjugate up to `(-1)^m` and pair up to
/// `2 cos^n sin^m` times `i^m cos((n+m)t)` (m even) or `i^{m+1} sin((n+m)t)`
/// (m odd), both real. The unpaired `d = 0` and `d = L+1` terms are real as
/// well, so the sums are real. `(n+m)d` is reduced as an integer so that
/// vanishing sines and cosines are exactly zero.
pub fn reduced_sums(order: u32, n: u32, m: u32) -> [f64; 2] {
    ReducedTable::new(order).eval(n, m)
}

struct ReducedTable {
    order: u32,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
    /// `cos(k pi/(2L+2))` and `sin(k pi/(2L+2))` for `k` modulo `4L+4`.
    cos_k: Vec<f64>,
    sin_k: Vec<f64>,
}

impl ReducedTable {
    fn new(order: u32) -> Self {
        let lp1 = order as usize + 1;
        let legs = 2 * lp1;
        let u = PI / legs as f64;
        let cos_t = (0..=lp1).map(|d| (d as f64 * u).cos()).collect();
        let sin_t = (0..=lp1).map(|d| (d as f64 * u).sin()).collect();
        let cos_k = (0..2 * legs)
            .map(|k| if k % legs == lp1 { 0.0 } else { (k as f64 * u).cos() })
            .collect();
        let sin_k = (0..2 * legs).map(|k| if k % legs == 0 { 0.0 } else { (k as f64 * u).sin() }).collect();
        ReducedTable { order, cos_t, sin_t, cos_k, sin_k }
    }

    fn eval(&self, n: u32, m: u32) -> [f64; 2] {
        let lp1 = self.order as usize + 1;
        let period = 4 * lp1;
        let (nu, mu) = (n as usize, m as usize);
        let mut out = [0.0; 2];
        let mut scale = 0.0;
        let mut add = |d: usize, v: f64, scale: &mut f64| {
            out[0] += v;
            out[1] += if d % 2 == 0 { v } else { -v };
            *scale += v.abs();
        };
        if m == 0 {
            add(0, 1.0, &mut scale);
        }
        if n == 0 {
            add(lp1, if m % 2 == 0 { 1.0 } else { -1.0 }, &mut scale);
        }
        // real unit i^m or i^{m+1}
        let unit = if m % 2 == 0 {
            if (mu / 2) % 2 == 0 { 1.0 } else { -1.0 }
        } else if ((mu + 1) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        for d in 1..lp1 {
            let k = ((nu + mu) % period) * d % period;
            let trig = if m % 2 == 0 { self.cos_k[k] } else { self.sin_k[k] };
            if trig == 0.0 {
                continue;
            }
            let mag = self.cos_t[d].powi(n as i32) * self.sin_t[d].powi(m as i32);
            add(d, 2.0 * unit * mag * trig, &mut scale);
        }
        for v in out.iter_mut() {
            if v.abs() <= CANCEL_TOL * scale {
                *v = 0.0;
            }
        }
        out
    }
}

/// Reduced sums for all `n + m <= max_total`, stored by total count.
pub(crate) struct SumTable {
    pub max_total: usize,
    data: Vec<[f64; 2]>,
}

impl SumTable {
    fn build(order: u32, max_total: usize) -> Self {
        let t = ReducedTable::new(order);
        let rows: Vec<Vec<[f64; 2]>> = (0..=max_total)
            .into_par_iter()
            .map(|tot| (0..=tot).map(|n| t.eval(n as u32, (tot - n) as u32)).collect())
            .collect();
        SumTable { max_total, data: rows.into_iter().flatten().collect() }
    }

    pub fn get(&self, n: usize, m: usize) -> [f64; 2] {
        let t = n + m;
        debug_assert!(t <= self.max_total);
        self.data[t * (t + 1) / 2 + n]
    }

    /// Shared table for `order` covering at least `max_total`.
    pub fn shared(order: u32, max_total: usize) -> Arc<SumTable> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Arc<SumTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("sum table cache poisoned").get(&order) {
            if t.max_total >= max_total {
                return Arc::clone(t);
            }
        }
        // build outside the lock; a concurrent duplicate build is harmless
        let target = max_total.max(Cutoffs::default_total_count(4.0));
        let table = Arc::new(SumTable::build(order, target));
        let mut guard = cache.lock().expect("sum table cache poisoned");
        let keep = match guard.get(&order) {
            Some(t) if t.max_total >= table.max_total => Arc::clone(t),
            _ => {
                guard.insert(order, Arc::clone(&table));
                table
            }
        };
        keep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_c(order: u32, n: u32, m: u32) -> [C64; 2] {
        let legs = 2 * order as usize + 2;
        let mut out = [C64::new(0.0, 0.0); 2];
        for d in 0..legs {
            let w = C64::from_polar(1.0, d as f64 * PI / (order as f64 + 1.0));
            let t = ((w + 1.0) / 2.0).powu(n) * ((w - 1.0) / 2.0).powu(m);
            out[0] += t;
            out[1] += if d % 2 == 0 { t } else { -t };
        }
        out
    }

    #[test]
    fn reduced_sums_match_complex_powers() {
        for order in 1..=4 {
            for n in 0..14 {
                for m in 0..14 {
                    let a = reduced_sums(order, n, m);
                    let b = direct_c(order, n, m);
                    for k in 0..2 {
                        assert!((a[k] - b[k]).norm() < 1e-13, "L={order} ({n},{m}) K={k}");
                        assert!(b[k].im.abs() < 1e-13);
                        if a[k] == 0.0 {
                            assert!(b[k].norm() < 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn table_lookup_matches_eval() {
        let t = SumTable::shared(2, 30);
        assert!(t.max_total >= 30);
        assert_eq!(t.get(7, 11), reduced_sums(2, 7, 11));
    }
}
