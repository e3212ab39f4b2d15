use super::channel_fidelity;
use crate::{CodeParams, Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub alpha_step: f64,
    pub alpha_max: f64,
    /// Largest iteration count tried before giving up.
    pub n_budget: u32,
    /// Consecutive grid points at least `drop` below the running maximum
    /// before an alpha scan stops early.
    pub patience: usize,
    pub drop: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { alpha_step: 0.1, alpha_max: 12.0, n_budget: 1 << 16, patience: 10, drop: 0.02 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    #[serde(rename = "L")]
    pub order: u32,
    pub target: f64,
    pub n_min: u32,
    pub alpha: f64,
    pub fidelity: f64,
    /// Iteration counts whose outcome contradicted monotone behaviour in `N`.
    pub monotonicity_violations: Vec<u32>,
}

struct Scanner {
    order: u32,
    gamma_total: f64,
    target: f64,
    opts: ScanOptions,
    memo: HashMap<(u32, usize), f64>,
}

impl Scanner {
    fn alpha(&self, k: usize) -> f64 {
        // round to the grid so that 29 * 0.1 reports as 2.9
        (k as f64 * self.opts.alpha_step * 1e9).round() / 1e9
    }

    fn fidelity(&mut self, segments: u32, k: usize) -> Result<f64> {
        if let Some(&f) = self.memo.get(&(segments, k)) {
            return Ok(f);
        }
        let code = CodeParams::new(self.order, self.alpha(k), 0.0)?;
        let f = channel_fidelity(&code, self.gamma_total, segments)?;
        self.memo.insert((segments, k), f);
        Ok(f)
    }

    /// First grid alpha reaching the target. With `exhaustive = false` the
    /// scan stops once the fidelity has sat clearly below its running maximum
    /// for `patience` points in a row. Past the peak the fidelity decays to
    /// the dephased value 1/2, and the low-alpha plateau only sags by ~1e-3,
    /// so the margin keeps the plateau from ending the scan.
    fn first_success(&mut self, segments: u32, exhaustive: bool) -> Result<Option<(usize, f64)>> {
        let k_max = (self.opts.alpha_max / self.opts.alpha_step + 1e-9).floor() as usize;
        let mut best = f64::NEG_INFINITY;
        let mut since_best = 0;
        for k in 1..=k_max {
            let f = self.fidelity(segments, k)?;
            if f >= self.target {
                return Ok(Some((k, f)));
            }
            best = best.max(f);
            if f > best - self.opts.drop {
                since_best = 0;
            } else {
                since_best += 1;
                if !exhaustive && since_best >= self.opts.patience {
                    break;
                }
            }
        }
        Ok(None)
    }
}

/// Smallest iteration count for which some alpha on the grid reaches
/// `target`, found by doubling then bisection.
pub fn min_iterations_scan(order: u32, gamma_total: f64, target: f64, opts: ScanOptions) -> Result<ScanResult> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("target fidelity must lie in (0,1), got {target}")));
    }
    if !(opts.alpha_step > 0.0 && opts.alpha_max >= opts.alpha_step) {
        return Err(Error::InvalidParameter("alpha grid is empty".into()));
    }
    let mut s = Scanner { order, gamma_total, target, opts, memo: HashMap::new() };

    let mut hi = 1u32;
    let mut lo = 0u32;
    loop {
        if s.first_success(hi, false)?.is_some() {
            break;
        }
        lo = hi;
        if hi >= opts.n_budget {
            return Err(Error::Unreachable(format!(
                "L={order}: no alpha <= {} reaches F={target} with N <= {}",
                opts.alpha_max, opts.n_budget
            )));
        }
        hi = (hi * 2).min(opts.n_budget);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if s.first_success(mid, false)?.is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (k, fidelity) = s.first_success(hi, false)?.expect("bisection keeps a successful upper end");

    let mut violations = Vec::new();
    if hi > 1 && s.first_success(hi - 1, true)?.is_some() {
        log::warn!("L={order}, F={target}: N={} also succeeds on the full alpha grid", hi - 1);
        violations.push(hi - 1);
    }
    if s.first_success(hi + 1, false)?.is_none() {
        log::warn!("L={order}, F={target}: N={} fails although N={hi} succeeds", hi + 1);
        violations.push(hi + 1);
    }
    Ok(ScanResult { order, target, n_min: hi, alpha: s.alpha(k), fidelity, monotonicity_violations: violations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub order: u32,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub segments: u32,
    pub gamma_total: f64,
    #[serde(rename = "F_C")]
    pub fidelity: f64,
    /// Largest fidelity of its `(L, N)` curve.
    pub is_peak: bool,
    /// Set on the peak row when the maximum sits on the end of the alpha grid.
    pub peak_at_edge: bool,
}

/// Channel fidelity on the grid `orders x segments x alphas`, ordered that way.
pub fn fidelity_sweep(orders: &[u32], gamma_total: f64, segments: &[u32], alphas: &[f64]) -> Result<Vec<SweepRow>> {
    let cells: Vec<(u32, u32, f64)> = orders
        .iter()
        .flat_map(|&l| segments.iter().flat_map(move |&n| alphas.iter().map(move |&a| (l, n, a))))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(order, n, alpha)| {
            let f = channel_fidelity(&CodeParams::new(order, alpha, 0.0)?, gamma_total, n)?;
            Ok(SweepRow {
                order,
                alpha,
                segments: n,
                gamma_total,
                fidelity: f,
                is_peak: false,
                peak_at_edge: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if !alphas.is_empty() {
        for curve in rows.chunks_mut(alphas.len()) {
            let (i, _) = curve
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r.fidelity > acc.1 { (i, r.fidelity) } else { acc });
            curve[i].is_peak = true;
            curve[i].peak_at_edge = i == 0 || i + 1 == curve.len();
        }
    }
    Ok(rows)
}
