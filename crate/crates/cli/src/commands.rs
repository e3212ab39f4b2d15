use crate::output::{csv_body, usage, Cache, Report};
use anyhow::Result;
use cat_telecor::cat_algebra::mismatch_curves;
use cat_telecor::deformation::{bias_success_in, deformation_corrected_stats, pauli_eigenstates, BiasedAncilla, RNG_NAME};
use cat_telecor::diagnostics::mean_error_probability;
use cat_telecor::fock::uncorrectable_mass;
use cat_telecor::telecorrector::{
    corrected_channel_superop, fidelity_sweep, min_iterations_scan, pauli_map_grid, OutcomeSet, ScanOptions,
    SweepRow, SyndromeKind, DEFAULT_REFERENCE_GAMMA,
};
use cat_telecor::{db_to_gamma, segment_gamma, CodeParams, Cutoffs, C64};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;

/// Loss given either in dB or as a fraction.
#[derive(Args, Debug, Clone, Copy, Serialize)]
#[group(multiple = false)]
pub struct Loss {
    /// Total loss in dB: Gamma = 1 - 10^(-dB/10)
    #[arg(long)]
    pub gamma_db: Option<f64>,
    /// Total loss as a fraction in [0, 1)
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl Loss {
    fn resolve(&self, default: Option<f64>) -> Result<f64> {
        match (self.gamma_db, self.gamma, default) {
            (Some(db), None, _) if db >= 0.0 && db.is_finite() => Ok(db_to_gamma(db)),
            (Some(db), None, _) => Err(usage(format!("--gamma-db must be a non-negative number, got {db}"))),
            (None, Some(g), _) if (0.0..1.0).contains(&g) => Ok(g),
            (None, Some(g), _) => Err(usage(format!("--gamma must lie in [0, 1), got {g}"))),
            (None, None, Some(g)) => Ok(g),
            (None, None, None) => Err(usage("loss required: pass --gamma-db or --gamma")),
            (Some(_), Some(_), _) => Err(usage("--gamma-db and --gamma are mutually exclusive")),
        }
    }
}

/// `a:b:step` (inclusive) or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let (a, b, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || b < a {
            return Err(format!("bad range {s}: need start <= stop and step > 0"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9).collect());
    }
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

fn default_cutoffs(alpha: f64, gamma: f64) -> serde_json::Value {
    json!({
        "fock_dim": Cutoffs::default_fock_dim(alpha),
        "total_count_initial": Cutoffs::default_total_count(alpha),
        "loss_order": Cutoffs::default_loss_order(gamma, alpha),
        "tail_tol": Cutoffs::default().tail_tol,
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FockHist {
    #[arg(long, visible_alias = "L")]
    pub order: u32,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub loss: Loss,
    /// Largest loss order included
    #[arg(long, default_value_t = 10)]
    pub l_cap: usize,
    /// Codeword index J
    #[arg(long, default_value_t = 0)]
    pub codeword: usize,
}

#[derive(Serialize)]
struct HistRow {
    n: usize,
    p_ok: f64,
    p_bad: f64,
}

pub fn fock_hist(a: &FockHist) -> Result<Report> {
    let gamma = a.loss.resolve(None)?;
    let code = CodeParams::new(a.order, a.alpha, gamma)?;
    let h = uncorrectable_mass(&code, a.codeword, a.l_cap)?;
    let rows: Vec<HistRow> = h
        .p_correctable
        .iter()
        .zip(&h.p_uncorrectable)
        .enumerate()
        .map(|(n, (&p_ok, &p_bad))| HistRow { n, p_ok, p_bad })
        .collect();
    Ok(Report {
        artifacts: vec![("fock_hist.csv".into(), csv_body(&rows)?)],
        gamma_total: Some(gamma),
        cutoffs: json!({ "fock_dim": code.fock_dim(), "l_cap": a.l_cap }),
        results: json!({ "correctable_mass": h.correctable_mass, "uncorrectable_mass": h.uncorrectable_mass }),
        ..Default::default()
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PauliMap {
    #[arg(long, visible_alias = "L")]
    pub order: u32,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 20)]
    pub n_max: u32,
    #[arg(long, default_value_t = 20)]
    pub m_max: u32,
    /// Loss at which cells are classified
    #[arg(long, default_value_t = DEFAULT_REFERENCE_GAMMA)]
    pub reference_gamma: f64,
}

#[derive(Serialize)]
struct MapRow {
    n: u32,
    m: u32,
    l0: u32,
    kind: SyndromeKind,
    x: u8,
    z: u8,
    deformation: f64,
}

pub fn pauli_map(a: &PauliMap) -> Result<Report> {
    let code = CodeParams::new(a.order, a.alpha, 0.0)?;
    let grid = pauli_map_grid(&code, a.n_max, a.m_max, a.reference_gamma)?;
    let rows: Vec<MapRow> = grid
        .iter()
        .map(|c| MapRow {
            n: c.key.n,
            m: c.key.m,
            l0: c.key.l0,
            kind: c.kind,
            x: c.x_flip as u8,
            z: c.z_flip as u8,
            deformation: c.deformation,
        })
        .collect();
    let failures = grid.iter().filter(|c| c.is_failure()).count();
    Ok(Report {
        artifacts: vec![("pauli_map.csv".into(), csv_body(&rows)?)],
        results: json!({ "cells": rows.len(), "failures": failures }),
        ..Default::default()
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Fidelity {
    #[arg(long, visible_alias = "L")]
    pub order: u32,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub loss: Loss,
    /// Number of corrected segments
    #[arg(long, visible_alias = "N")]
    pub segments: u32,
}

#[derive(Serialize, Deserialize)]
struct FidelityRow {
    #[serde(rename = "L")]
    order: u32,
    alpha: f64,
    #[serde(rename = "N")]
    segments: u32,
    gamma_total: f64,
    segment_gamma: f64,
    #[serde(rename = "F_C")]
    fidelity: f64,
    completeness_deficit: f64,
    total_count: usize,
}

pub fn fidelity(a: &Fidelity, cache: &Cache) -> Result<Report> {
    let gamma = a.loss.resolve(None)?;
    if a.segments == 0 {
        return Err(usage("--segments must be at least 1"));
    }
    let code = CodeParams::new(a.order, a.alpha, 0.0)?;
    let g = segment_gamma(gamma, a.segments);
    let row: FidelityRow = cache.fetch("fidelity", &(a.order, a.alpha, gamma, a.segments), || {
        let m = corrected_channel_superop(&code, g)?;
        Ok(FidelityRow {
            order: a.order,
            alpha: a.alpha,
            segments: a.segments,
            gamma_total: gamma,
            segment_gamma: g,
            fidelity: m.fidelity(a.segments),
            completeness_deficit: m.completeness_deficit,
            total_count: m.total_count,
        })
    })?;
    let mut cutoffs = default_cutoffs(a.alpha, g);
    cutoffs["total_count"] = json!(row.total_count);
    Ok(Report {
        stdout: Some(format!("{}", row.fidelity)),
        gamma_total: Some(gamma),
        cutoffs,
        completeness_deficit: Some(row.completeness_deficit),
        results: json!({ "F_C": row.fidelity }),
        artifacts: vec![("fidelity.csv".into(), csv_body(&[row])?)],
        ..Default::default()
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Table1 {
    #[command(flatten)]
    pub loss: Loss,
    /// Fidelity targets
    #[arg(long, value_parser = parse_list::<f64>, default_value = "0.95,0.99,0.999")]
    pub targets: Vec<Vec<f64>>,
    #[arg(long, value_parser = parse_list::<u32>, default_value = "1,2,3")]
    pub orders: Vec<Vec<u32>>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha_step: f64,
    #[arg(long, default_value_t = 12.0)]
    pub alpha_max: f64,
    /// Largest iteration count tried
    #[arg(long, default_value_t = 1 << 16)]
    pub n_budget: u32,
}

#[derive(Serialize, Deserialize)]
struct Table1Row {
    #[serde(rename = "L")]
    order: u32,
    target: f64,
    #[serde(rename = "N")]
    n_min: u32,
    alpha: f64,
    #[serde(rename = "F_C")]
    fidelity: f64,
    monotonicity_violations: usize,
}

pub fn table1(a: &Table1, cache: &Cache) -> Result<Report> {
    let gamma = a.loss.resolve(None)?;
    let opts = ScanOptions { alpha_step: a.alpha_step, alpha_max: a.alpha_max, n_budget: a.n_budget, ..Default::default() };
    let cells: Vec<(u32, f64)> =
        a.orders.concat().iter().flat_map(|&l| a.targets.concat().into_iter().map(move |t| (l, t))).collect();
    let rows = cells
        .par_iter()
        .map(|&(order, target)| {
            let key = (order, target, gamma, opts.alpha_step, opts.alpha_max, opts.n_budget, opts.patience, opts.drop);
            cache.fetch("table1-cell", &key, || {
                let r = min_iterations_scan(order, gamma, target, opts)?;
                Ok(Table1Row {
                    order,
                    target,
                    n_min: r.n_min,
                    alpha: r.alpha,
                    fidelity: r.fidelity,
                    monotonicity_violations: r.monotonicity_violations.len(),
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = |t: f64| {
        let n = |l: u32| rows.iter().find(|r| r.order == l && r.target == t).map(|r| r.n_min as f64);
        n(1).zip(n(3)).map(|(a, b)| a / b)
    };
    Ok(Report {
        gamma_total: Some(gamma),
        cutoffs: json!({ "rule": "per-cell defaults grown until completeness deficit < tail_tol", "tail_tol": Cutoffs::default().tail_tol }),
        results: json!({
            "scan": { "alpha_step": opts.alpha_step, "alpha_max": opts.alpha_max, "n_budget": opts.n_budget, "patience": opts.patience, "drop": opts.drop },
            "n_ratio_L1_L3": a.targets.concat().iter().map(|&t| json!({ "target": t, "ratio": ratio(t) })).collect::<Vec<_>>(),
        }),
        artifacts: vec![("table1.csv".into(), csv_body(&rows)?)],
        ..Default::default()
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Sweep {
    /// JSON sweep configuration
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub orders: Vec<u32>,
    pub segments: Vec<u32>,
    #[serde(default)]
    pub gamma_db: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha_range: Option<AlphaRange>,
}

impl SweepConfig {
    fn alphas(&self) -> Result<Vec<f64>> {
        match (&self.alphas, &self.alpha_range) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some(r)) => parse_grid(&format!("{}:{}:{}", r.start, r.stop, r.step)).map_err(usage),
            _ => Err(usage("config needs exactly one of \"alphas\" or \"alpha_range\"")),
        }
    }
}

pub fn sweep(a: &Sweep, cache: &Cache) -> Result<(Report, serde_json::Value)> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let cfg: SweepConfig = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let gamma = Loss { gamma_db: cfg.gamma_db, gamma: cfg.gamma }.resolve(None)?;
    let alphas = cfg.alphas()?;
    if cfg.segments.contains(&0) {
        return Err(usage("segments must be >= 1"));
    }
    let rows: Vec<SweepRowOut> = cache.fetch("sweep", &(&cfg.orders, &cfg.segments, gamma, &alphas), || {
        Ok(fidelity_sweep(&cfg.orders, gamma, &cfg.segments, &alphas)?.into_iter().map(SweepRowOut::from).collect())
    })?;
    let peaks: Vec<_> = rows.iter().filter(|r| r.is_peak).map(|r| json!({ "L": r.order, "N": r.segments, "alpha": r.alpha, "F_C": r.fidelity, "at_edge": r.peak_at_edge })).collect();
    let report = Report {
        gamma_total: Some(gamma),
        cutoffs: json!({ "rule": "per-cell defaults grown until completeness deficit < tail_tol", "tail_tol": Cutoffs::default().tail_tol }),
        results: json!({ "peaks": peaks }),
        artifacts: vec![("sweep.csv".into(), csv_body(&rows)?)],
        ..Default::default()
    };
    Ok((report, serde_json::to_value(&cfg)?))
}

#[derive(Serialize, Deserialize)]
struct SweepRowOut {
    #[serde(rename = "L")]
    order: u32,
    alpha: f64,
    #[serde(rename = "N")]
    segments: u32,
    gamma_total: f64,
    #[serde(rename = "F_C")]
    fidelity: f64,
    is_peak: bool,
    peak_at_edge: bool,
}

impl From<SweepRow> for SweepRowOut {
    fn from(r: SweepRow) -> Self {
        SweepRowOut {
            order: r.order,
            alpha: r.alpha,
            segments: r.segments,
            gamma_total: r.gamma_total,
            fidelity: r.fidelity,
            is_peak: r.is_peak,
            peak_at_edge: r.peak_at_edge,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Mep {
    #[arg(long, visible_alias = "L", default_value_t = 1)]
    pub order: u32,
    /// Amplitude grid, `start:stop:step` or a comma list
    #[arg(long, value_parser = parse_grid, required = true)]
    pub alphas: Vec<Vec<f64>>,
    #[command(flatten)]
    pub loss: Loss,
    /// Corrected segments before the final uncorrected one; 0 is plain loss
    #[arg(long, visible_alias = "N", value_parser = parse_list::<u32>, default_value = "0,1,2")]
    pub segments: Vec<Vec<u32>>,
}

#[derive(Serialize)]
struct MepRow {
    #[serde(rename = "L")]
    order: u32,
    alpha: f64,
    #[serde(rename = "N")]
    segments: u32,
    p_err: f64,
}

pub fn mep(a: &Mep) -> Result<Report> {
    let gamma = a.loss.resolve(None)?;
    let cells: Vec<(f64, u32)> =
        a.alphas.concat().into_iter().flat_map(|al| a.segments.concat().into_iter().map(move |n| (al, n))).collect();
    let rows = cells
        .par_iter()
        .map(|&(alpha, n)| {
            Ok(MepRow { order: a.order, alpha, segments: n, p_err: mean_error_probability(a.order, alpha, gamma, n)? })
        })
        .collect::<Result<Vec<_>>>()?;
    // first amplitude where one correction beats none
    let crossing = a.alphas.concat().into_iter().find(|&al| {
        let p = |n| rows.iter().find(|r| r.alpha == al && r.segments == n).map(|r| r.p_err);
        matches!((p(0), p(1)), (Some(a), Some(b)) if b < a)
    });
    Ok(Report {
        gamma_total: Some(gamma),
        results: json!({ "break_even_alpha": crossing }),
        artifacts: vec![("mep.csv".into(), csv_body(&rows)?)],
        ..Default::default()
    })
}

/// Reference optimum `(alpha_opt, F_opt %)` for orders 1..=3 at 1 dB, N = 10.
pub const REFERENCE_OPTIMA: [(f64, f64); 3] = [(2.5, 93.0), (3.7, 96.5), (5.1, 96.5)];

#[derive(Args, Debug, Clone, Serialize)]
pub struct DeformMc {
    #[arg(long, visible_alias = "L")]
    pub order: u32,
    /// Optimal amplitude; defaults to the reference optimum for L <= 3
    #[arg(long)]
    pub alpha_opt: Option<f64>,
    /// Optimal Pauli-corrected fidelity in percent
    #[arg(long)]
    pub f_opt: Option<f64>,
    #[arg(long, value_parser = parse_list::<f64>, default_value = "1,0.9,0.8,0.7,0.6,0.5")]
    pub fractions: Vec<Vec<f64>>,
    #[command(flatten)]
    pub loss: Loss,
    #[arg(long, visible_alias = "N", default_value_t = 10)]
    pub segments: u32,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Table2Row {
    #[serde(rename = "L")]
    order: u32,
    alpha_fraction: f64,
    alpha: f64,
    trials: usize,
    failures: usize,
    pct_fail: f64,
    f_pc: Option<f64>,
    f_dc: Option<f64>,
    delta_f: Option<f64>,
    delta_f_opt: Option<f64>,
}

pub fn deform_mc(a: &DeformMc, cache: &Cache) -> Result<Report> {
    let gamma = a.loss.resolve(None)?;
    let reference = REFERENCE_OPTIMA.get((a.order as usize).wrapping_sub(1)).copied();
    let (alpha_opt, f_opt) = match (a.alpha_opt, a.f_opt, reference) {
        (Some(x), Some(f), _) => (x, f),
        (x, f, Some((rx, rf))) => (x.unwrap_or(rx), f.unwrap_or(rf)),
        _ => return Err(usage("--alpha-opt and --f-opt are required for L > 3")),
    };
    if a.segments == 0 || a.trials == 0 {
        return Err(usage("--segments and --trials must be positive"));
    }
    let fractions = a.fractions.concat();
    let key = (a.order, alpha_opt, f_opt, &fractions, gamma, a.segments, a.trials, a.seed);
    let rows: Vec<Table2Row> = cache.fetch("deform-mc", &key, || {
        let stats =
            deformation_corrected_stats(a.order, alpha_opt, f_opt / 100.0, &fractions, gamma, a.segments, a.trials, a.seed)?;
        Ok(stats
            .into_iter()
            .map(|s| Table2Row {
                order: a.order,
                alpha_fraction: s.alpha_fraction,
                alpha: s.alpha,
                trials: s.trials,
                failures: s.failures,
                pct_fail: s.pct_fail,
                f_pc: s.f_pc,
                f_dc: s.f_dc,
                delta_f: s.delta_f,
                delta_f_opt: s.delta_f_opt,
            })
            .collect())
    })?;
    Ok(Report {
        gamma_total: Some(gamma),
        seed: Some(a.seed),
        rng: Some(RNG_NAME),
        cutoffs: default_cutoffs(alpha_opt, segment_gamma(gamma, a.segments)),
        results: json!({ "alpha_opt": alpha_opt, "f_opt": f_opt }),
        artifacts: vec![("table2.csv".into(), csv_body(&rows)?)],
        ..Default::default()
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Bias {
    #[arg(long, visible_alias = "L", default_value_t = 1)]
    pub order: u32,
    #[arg(long)]
    pub alpha: f64,
    /// Loss per teleportation; zero when omitted
    #[command(flatten)]
    pub loss: Loss,
    /// Ancilla biases, real, in (0, 1]
    #[arg(long, value_parser = parse_list::<f64>, required = true)]
    pub x: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Table3Row {
    x: f64,
    p_avg: f64,
    p_0: f64,
    p_1: f64,
    p_plus: f64,
    p_minus: f64,
    p_plus_i: f64,
    p_minus_i: f64,
}

pub fn bias(a: &Bias) -> Result<Report> {
    let gamma = a.loss.resolve(Some(0.0))?;
    let xs = a.x.concat();
    if xs.is_empty() || xs.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(usage("--x values must lie in (0, 1]"));
    }
    let code = CodeParams::new(a.order, a.alpha, gamma)?;
    let set = OutcomeSet::build(&code)?;
    let eig = pauli_eigenstates();
    let rows = xs
        .iter()
        .map(|&x| {
            let b = BiasedAncilla::new(C64::new(x, 0.0))?;
            let p: Vec<f64> = eig.iter().map(|psi| 100.0 * bias_success_in(&set, &b, psi).success).collect();
            Ok(Table3Row {
                x,
                p_avg: p.iter().sum::<f64>() / 6.0,
                p_0: p[0],
                p_1: p[1],
                p_plus: p[2],
                p_minus: p[3],
                p_plus_i: p[4],
                p_minus_i: p[5],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        gamma_total: Some(gamma),
        cutoffs: json!({ "total_count": set.total_count }),
        completeness_deficit: Some(set.completeness_deficit),
        artifacts: vec![("table3.csv".into(), csv_body(&rows)?)],
        ..Default::default()
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Mismatch {
    #[arg(long, value_parser = parse_list::<u32>, default_value = "1,2,3,4")]
    pub orders: Vec<Vec<u32>>,
    /// Amplitude grid, `start:stop:step` or a comma list
    #[arg(long, value_parser = parse_grid, default_value = "0.5:6:0.5")]
    pub alphas: Vec<Vec<f64>>,
}

pub fn mismatch(a: &Mismatch) -> Result<Report> {
    let rows = mismatch_curves(&a.orders.concat(), &a.alphas.concat())?;
    Ok(Report { artifacts: vec![("mismatch.csv".into(), csv_body(&rows)?)], ..Default::default() })
}
