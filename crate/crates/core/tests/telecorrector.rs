use cat_telecor::cat_algebra::norm_constants;
use cat_telecor::fock::{teleport_oracle, OracleOptions};
use cat_telecor::telecorrector::*;
use cat_telecor::{db_to_gamma, segment_gamma, CodeParams, C64};
use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_rho(rng: &mut ChaCha8Rng) -> Matrix2<C64> {
    let a = Matrix2::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let r = a * a.adjoint();
    r / r.trace()
}

fn kraus_sum(comps: &[KrausComponent], rho: &Matrix2<C64>) -> Matrix2<C64> {
    comps.iter().map(|k| k.map * rho * k.map.adjoint()).sum()
}

#[test]
fn minimal_loss_order_examples() {
    assert_eq!(minimal_loss_order(1, 2, 0), 0);
    assert_eq!(minimal_loss_order(1, 1, 0), 1);
    assert_eq!(minimal_loss_order(3, 10, 6), 0);
    assert_eq!(minimal_loss_order(2, 1, 0), 2);
    assert_eq!(SyndromeKey::new(3, 3, 2).l0, 3 * 5 % 4);
}

#[test]
fn worked_syndromes_l1() {
    let code = CodeParams::new(1, 2.0, 0.0).unwrap();
    let p = norm_constants(1, 2.0, 0.0).unwrap();
    let e4 = 4f64.exp();
    let root = |j: usize, k: usize| (p.undamped(j) * p.damped(k)).sqrt();

    let s00 = kraus_element(&code, 0, 0, 0).unwrap();
    let want = Matrix2::new(c(8.0 * SQRT_2 / (root(0, 0) * e4)), c(0.0), c(0.0), c(0.0));
    assert!((s00 - want).norm() < 1e-10, "{s00}");

    let s20 = kraus_element(&code, 0, 2, 0).unwrap();
    // rows K (output), columns J (input)
    let want = Matrix2::new(c(0.0), c(16.0 / (root(1, 0) * e4)), c(16.0 / (root(0, 1) * e4)), c(0.0));
    assert!((s20 - want).norm() < 1e-10, "{s20}");

    let s22 = kraus_element(&code, 0, 2, 2).unwrap();
    let want = Matrix2::new(
        c(32.0 * SQRT_2 / (root(0, 0) * e4)),
        c(0.0),
        c(0.0),
        c(-32.0 * SQRT_2 / (root(1, 1) * e4)),
    );
    assert!((s22 - want).norm() < 1e-10, "{s22}");
}

#[test]
fn worked_syndrome_l3_ten_six() {
    let code = CodeParams::new(3, 2.0, 0.0).unwrap();
    let p = norm_constants(3, 2.0, 0.0).unwrap();
    let s = kraus_element(&code, 0, 10, 6).unwrap();
    let d0 = s[(0, 0)] * (p.n0 * p.n0_under).sqrt();
    let d1 = s[(1, 1)] * (p.n1 * p.n1_under).sqrt();
    assert!((d0 - c(-0.36531)).norm() < 5e-6, "{d0}");
    assert!((d1 - c(-0.16605)).norm() < 5e-6, "{d1}");
    assert_eq!(s[(0, 1)], c(0.0));
    assert_eq!(s[(1, 0)], c(0.0));
}

#[test]
fn selection_rule_zeros() {
    for order in 1..=3u32 {
        let code = CodeParams::new(order, 2.0, 0.1).unwrap();
        for t in 0..=20u32 {
            for n in 0..=t {
                let m = t - n;
                let l0 = minimal_loss_order(order, n, m) as usize;
                for l in 0..=6usize {
                    let k = kraus_element(&code, l, n, m).unwrap();
                    if l % (order as usize + 1) != l0 {
                        assert!(k.iter().all(|z| z.norm() < 1e-14), "L={order} ({n},{m}) l={l}");
                    }
                }
            }
        }
    }
}

#[test]
fn zero_loss_single_component() {
    let code = CodeParams::new(2, 2.5, 0.0).unwrap();
    for (n, m) in [(3, 0), (4, 2), (1, 1), (6, 3)] {
        let comps = exact_syndrome_map(&code, n, m).unwrap();
        assert_eq!(comps.len(), 1);
        let l0 = minimal_loss_order(2, n, m) as usize;
        assert_eq!(comps[0].loss_order, l0);
        let direct = kraus_element(&code, l0, n, m).unwrap();
        assert_eq!(comps[0].map, direct);
        if l0 > 0 {
            assert!(direct.iter().all(|z| *z == c(0.0)));
        }
    }
}

/// Output state of counts (n, m) straight from the four-fold coherent sum,
/// including the ancilla factor 1/2.
fn rho_out_direct(code: &CodeParams, q: &Matrix2<C64>, n: u32, m: u32) -> Matrix2<C64> {
    let order = code.order;
    let legs = 2 * order as usize + 2;
    let (a, g) = (code.alpha, code.gamma);
    let p = norm_constants(order, a, g).unwrap();
    let w = |j: usize| C64::from_polar(1.0, j as f64 * PI / (order as f64 + 1.0));
    let pref = ((g - 2.0) * a * a).exp() / (factorial(n) * factorial(m)) * ((1.0 - g) / 2.0 * a * a).powi((n + m) as i32);
    let amp = |j: usize, k: usize| (w(j) + w(k)).powu(n) * (w(k) - w(j)).powu(m);
    let sign = |x: usize| if x % 2 == 0 { 1.0 } else { -1.0 };
    let mut out = Matrix2::zeros();
    for kk in 0..2 {
        for kp in 0..2 {
            let mut s = c(0.0);
            for jj in 0..2 {
                for jp in 0..2 {
                    let norm = (p.undamped(jj) * p.damped(kk) * p.undamped(jp) * p.damped(kp)).sqrt();
                    let mut t = c(0.0);
                    for j in 0..legs {
                        for jq in 0..legs {
                            let loss = (w(j) * w(jq).conj() * (g * a * a)).exp();
                            for k in 0..legs {
                                for kq in 0..legs {
                                    let sg = sign(j * jj + jq * jp + k * kk + kq * kp);
                                    t += sg * amp(j, k) * amp(jq, kq).conj() * loss;
                                }
                            }
                        }
                    }
                    s += q[(jj, jp)] * t / norm;
                }
            }
            out[(kk, kp)] = 0.5 * pref * s;
        }
    }
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn exact_map_matches_direct_output_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (order, alpha, g, n, m) in [(1u32, 2.0, 0.1, 2u32, 0u32), (1, 2.0, 0.1, 3, 2), (2, 1.7, 0.2, 2, 3)] {
        let code = CodeParams::new(order, alpha, g).unwrap();
        let comps = exact_syndrome_map(&code, n, m).unwrap();
        for _ in 0..3 {
            let q = random_rho(&mut rng);
            let got = kraus_sum(&comps, &q);
            let want = rho_out_direct(&code, &q, n, m);
            assert!((got - want).norm() < 1e-10, "L={order} ({n},{m}): {got} vs {want}");
        }
    }
}

#[test]
fn fast_outcomes_match_direct_kraus_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (order, alpha, g) in [(1u32, 2.5, 0.05), (2, 3.0, 0.1), (3, 3.5, 0.02)] {
        let code = CodeParams::new(order, alpha, g).unwrap();
        let set = OutcomeSet::build(&code).unwrap();
        let rho = random_rho(&mut rng);
        for o in set.outcomes.iter().filter(|o| o.key().n + o.key().m <= 24) {
            let k = o.key();
            let direct = kraus_sum(&exact_syndrome_map(&code, k.n, k.m).unwrap(), &rho);
            let fast: Matrix2<C64> = o.raw.iter().map(|r| r * rho * r.adjoint()).sum();
            let scale = direct.norm().max(1e-300);
            assert!((direct - fast).norm() <= 1e-10 * scale + 1e-300, "L={order} {k:?}");
        }
    }
}

#[test]
fn oracle_agrees_with_exact_maps() {
    let inputs = [[c(1.0), c(0.0)], [c(0.0), c(1.0)], [c(0.6), c(0.8)], [c(0.6), C64::new(0.0, 0.8)]];
    let code = CodeParams::new(1, 1.5, 0.05).unwrap();
    for t in 0..=12u32 {
        for n in 0..=t {
            let m = t - n;
            let comps = exact_syndrome_map(&code, n, m).unwrap();
            for q in &inputs {
                let out = teleport_oracle(*q, &code, n as usize, m as usize, OracleOptions::default()).unwrap();
                let qv = nalgebra::Vector2::new(q[0], q[1]);
                let mut p = 0.0;
                for (l, [c0, c1]) in &out.branches {
                    let got = nalgebra::Vector2::new(*c0, *c1);
                    let want = comps
                        .iter()
                        .find(|k| k.loss_order == *l)
                        .map(|k| k.map * qv)
                        .unwrap_or_else(nalgebra::Vector2::zeros);
                    p += want.norm_squared();
                    let ov = want.dotc(&got);
                    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0) };
                    assert!((got - want * phase).norm() < 1e-8, "({n},{m}) l={l}");
                }
                assert!((out.probability - p).abs() < 1e-8, "({n},{m}) {} vs {p}", out.probability);
            }
        }
    }
}

#[test]
fn classify_worked_examples() {
    let code = CodeParams::new(1, 2.0, 0.0).unwrap();
    let g = DEFAULT_REFERENCE_GAMMA;
    let p = norm_constants(1, 2.0, g).unwrap();
    let grid = pauli_map_grid(&code, 2, 2, g).unwrap();
    let at = |n: usize, m: usize| grid[n * 3 + m];

    assert!(at(0, 0).is_failure());

    let s = at(2, 0);
    assert!(s.is_correctable() && s.x_flip && !s.z_flip);
    let d = (p.n0 * p.n1_under / (p.n1 * p.n0_under)).sqrt();
    assert!((s.deformation / d - 1.0).abs() < 1e-10);

    let s = at(2, 2);
    assert!(s.is_correctable() && !s.x_flip && s.z_flip);
    let d = (p.n0 * p.n0_under / (p.n1 * p.n1_under)).sqrt();
    assert!((s.deformation / d - 1.0).abs() < 1e-10);
    assert!(s.residual_phase.abs() < 1e-6);
}

#[test]
fn grid_periodic_in_counts() {
    // the flip parity is ((l0 + n + m)/(L+1)) mod 2, so the period is 2(L+1)
    for order in 1..=3u32 {
        let code = CodeParams::new(order, 3.0, 0.0).unwrap();
        let period = 2 * (order + 1);
        let side = 14;
        let grid = pauli_map_grid(&code, side, side, DEFAULT_REFERENCE_GAMMA).unwrap();
        let at = |n: u32, m: u32| grid[(n * (side + 1) + m) as usize];
        for n in 0..=side - period {
            for m in 0..=side - period {
                let (a, b, c) = (at(n, m), at(n + period, m), at(n, m + period));
                if a.is_correctable() && b.is_correctable() {
                    assert_eq!(a.x_flip, b.x_flip, "L={order} ({n},{m})");
                }
                if a.is_correctable() && c.is_correctable() {
                    assert_eq!(a.x_flip, c.x_flip, "L={order} ({n},{m})");
                }
            }
        }
    }
    // half a period toggles X at L = 1: S(0,0) is diagonal, S(2,0) is sigma_x
    let grid = pauli_map_grid(&CodeParams::new(1, 2.0, 0.0).unwrap(), 4, 0, 0.05).unwrap();
    assert!(!grid[0].x_flip && grid[2].x_flip && !grid[4].x_flip);
}

#[test]
fn failures_are_sparse() {
    let code = CodeParams::new(1, 2.0, 0.0).unwrap();
    let grid = pauli_map_grid(&code, 12, 12, DEFAULT_REFERENCE_GAMMA).unwrap();
    let failures: Vec<_> = grid.iter().filter(|s| s.is_failure()).map(|s| (s.key.n, s.key.m)).collect();
    assert!(failures.contains(&(0, 0)));
    assert!(failures.len() * 5 < grid.len(), "{failures:?}");
    // a failure leaves one column: only one logical value can produce it
    for s in grid.iter().filter(|s| s.is_failure()) {
        assert!(s.key.n == 0 || s.key.m == 0, "{:?}", s.key);
    }
}

#[test]
fn classification_independent_of_reference_loss() {
    for order in 1..=3u32 {
        let code = CodeParams::new(order, 2.5, 0.0).unwrap();
        let a = pauli_map_grid(&code, 16, 16, 0.05).unwrap();
        let b = pauli_map_grid(&code, 16, 16, 0.2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.kind, x.x_flip, x.z_flip), (y.kind, y.x_flip, y.z_flip), "{:?}", x.key);
        }
    }
    assert!(pauli_map_grid(&CodeParams::new(1, 2.0, 0.0).unwrap(), 2, 2, 0.0).is_err());
}

#[test]
fn truncated_map_error_is_next_order() {
    for order in 1..=2u32 {
        for g in [0.01, 0.005] {
            let alpha = 2.0;
            let code = CodeParams::new(order, alpha, g).unwrap();
            for t in 0..=10u32 {
                for n in 0..=t {
                    let m = t - n;
                    let comps = exact_syndrome_map(&code, n, m).unwrap();
                    let l0 = comps[0].loss_order as f64;
                    let full: Matrix4<C64> = comps.iter().map(|k| k.map.conjugate().kronecker(&k.map)).sum();
                    let lead = comps[0].map.conjugate().kronecker(&comps[0].map);
                    let diff = (full - lead).norm();
                    let bound = 10.0 * g.powf((l0 + order as f64 + 1.0) / 2.0) * alpha.powf(l0 + order as f64 + 1.0);
                    assert!(diff < bound, "L={order} g={g} ({n},{m}): {diff:e} vs {bound:e}");
                }
            }
        }
    }
}

#[test]
fn completeness_at_table_point() {
    let code = CodeParams::new(1, 2.9, 0.0).unwrap();
    let m = corrected_channel_superop(&code, segment_gamma(db_to_gamma(1.0), 44)).unwrap();
    assert!(m.completeness_deficit < 1e-8);
    assert!(m.total_count >= code.total_count());
}

#[test]
fn channel_trace_and_hermiticity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (order, alpha, g) in [(1u32, 2.9, 0.01), (2, 3.8, 0.02), (3, 5.0, 0.05)] {
        let m = corrected_channel_superop(&CodeParams::new(order, alpha, 0.0).unwrap(), g).unwrap();
        assert!(m.completeness_deficit < 1e-8);
        for _ in 0..100 {
            let rho = random_rho(&mut rng);
            let out = m.apply(&rho);
            assert!((out.trace() - c(1.0)).norm() < 1e-8);
            assert!((out - out.adjoint()).norm() < 1e-10);
        }
    }
}

#[test]
fn lossless_high_amplitude_is_identity() {
    let m = corrected_channel_superop(&CodeParams::new(1, 4.0, 0.0).unwrap(), 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let rho = random_rho(&mut rng);
        assert!((m.apply(&rho) - rho).norm() < 1e-6);
    }
}

#[test]
fn maximally_mixed_is_fixed_at_high_amplitude() {
    let m = corrected_channel_superop(&CodeParams::new(1, 6.0, 0.0).unwrap(), 0.01).unwrap();
    let half = Matrix2::identity() * c(0.5);
    assert!((m.apply(&half) - half).norm() < 1e-8);
}

#[test]
fn fidelity_near_identity_limit() {
    let f = channel_fidelity(&CodeParams::new(1, 4.0, 0.0).unwrap(), 1e-6, 1).unwrap();
    assert!(f > 0.999, "{f}");
}

#[test]
fn fidelity_table_points() {
    let g = db_to_gamma(1.0);
    let f = channel_fidelity(&CodeParams::new(1, 2.9, 0.0).unwrap(), g, 44).unwrap();
    assert!(f >= 0.95, "{f}");
    let f = channel_fidelity(&CodeParams::new(3, 8.2, 0.0).unwrap(), g, 142).unwrap();
    assert!(f >= 0.999, "{f}");
}

#[test]
fn fidelity_equals_bell_overlap() {
    let g = db_to_gamma(1.0);
    for (order, alpha, segs) in [(1u32, 2.9, 44u32), (2, 3.8, 14)] {
        let m = corrected_channel_superop(&CodeParams::new(order, alpha, 0.0).unwrap(), segment_gamma(g, segs)).unwrap();
        for uses in [1u32, 3] {
            // (E (x) I) applied to |Phi+><Phi+| = 1/2 sum_ab |a><b| (x) |a><b|
            let mut rho4 = Matrix4::<C64>::zeros();
            for a in 0..2 {
                for b in 0..2 {
                    let mut e = Matrix2::zeros();
                    e[(a, b)] = c(1.0);
                    for _ in 0..uses {
                        e = m.apply(&e);
                    }
                    let mut unit = Matrix2::zeros();
                    unit[(a, b)] = c(0.5);
                    rho4 += e.kronecker(&unit);
                }
            }
            let mut phi = nalgebra::Vector4::<C64>::zeros();
            phi[0] = c(1.0 / SQRT_2);
            phi[3] = c(1.0 / SQRT_2);
            let overlap = (phi.adjoint() * rho4 * phi)[(0, 0)].re;
            assert!((overlap - m.fidelity(uses)).abs() < 1e-12, "{overlap} vs {}", m.fidelity(uses));
        }
    }
}

#[test]
fn superop_identical_across_thread_counts() {
    let code = CodeParams::new(2, 4.0, 0.0).unwrap();
    let build = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| corrected_channel_superop(&code, 0.01).unwrap())
    };
    let a = build(1);
    let b = build(4);
    assert_eq!(a.matrix, b.matrix);
    assert_eq!(a.completeness_deficit.to_bits(), b.completeness_deficit.to_bits());
}

#[test]
fn min_scan_small_case() {
    let r = min_iterations_scan(3, db_to_gamma(1.0), 0.95, ScanOptions::default()).unwrap();
    assert_eq!((r.n_min, r.alpha), (11, 5.0));
    assert!(r.fidelity >= 0.95);
    assert!(r.monotonicity_violations.is_empty());
}

#[test]
fn min_scan_reports_unreachable() {
    let opts = ScanOptions { alpha_max: 1.0, n_budget: 8, ..Default::default() };
    let err = min_iterations_scan(1, db_to_gamma(1.0), 0.99, opts).unwrap_err();
    assert!(matches!(err, cat_telecor::Error::Unreachable(_)));
    assert!(min_iterations_scan(1, 0.1, 1.5, ScanOptions::default()).is_err());
}

#[test]
fn sweep_properties() {
    let alphas: Vec<f64> = (2..=20).map(|k| 0.25 * k as f64).collect();
    let segs = [5u32, 10, 20, 40];
    let rows = fidelity_sweep(&[1], db_to_gamma(1.0), &segs, &alphas).unwrap();
    assert_eq!(rows.len(), segs.len() * alphas.len());
    let mut peaks = Vec::new();
    for curve in rows.chunks(alphas.len()) {
        let p: Vec<_> = curve.iter().filter(|r| r.is_peak).collect();
        assert_eq!(p.len(), 1);
        peaks.push(p[0].fidelity);
    }
    assert!(peaks.windows(2).all(|w| w[1] >= w[0]), "{peaks:?}");
    // below break-even more segments only add deformation
    let at = |n: u32, a: f64| rows.iter().find(|r| r.segments == n && r.alpha == a).unwrap().fidelity;
    assert!(at(40, 1.0) < at(5, 1.0));
}
