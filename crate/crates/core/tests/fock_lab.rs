use cat_telecor::fock::*;
use cat_telecor::special::ln_factorial;
use cat_telecor::{CodeParams, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn coherent_mean_photon_is_alpha_squared() {
    let v = coherent_fock(2.0, 0.0, 40);
    assert!((v.mean_photon() - 4.0).abs() < 1e-10);
}

#[test]
fn rotated_coherent_overlap() {
    let a = coherent_fock(1.0, 0.0, 30);
    let b = coherent_fock(1.0, PI / 2.0, 30);
    // oracle: sum_n (a^2 e^{i phi})^n / n! e^{-a^2}
    let mut series = C64::new(0.0, 0.0);
    let z = C64::new(0.0, 1.0);
    for n in 0..60 {
        series += z.powu(n) * (-ln_factorial(n as usize)).exp();
    }
    let expected = series * (-1.0f64).exp();
    let closed = (C64::new(0.0, 1.0) - 1.0).exp();
    assert!((expected - closed).norm() < 1e-14);
    assert!((a.inner(&b).unwrap() - closed).norm() < 1e-10);
}

#[test]
fn cat_support_l1_even_only() {
    let v = cat_fock_at(1, 2.0, 0, 40).unwrap();
    for (n, a) in v.amps.iter().enumerate() {
        if n % 2 == 1 {
            assert_eq!(*a, c(0.0), "odd n = {n}");
        }
    }
    let w = cat_fock_at(1, 2.0, 1, 40).unwrap();
    assert!(v.inner(&w).unwrap().norm() < 1e-14);
}

#[test]
fn cat_support_l3_j1() {
    let v = cat_fock_at(3, 3.5, 1, 60).unwrap();
    let support: Vec<usize> = (0..60).filter(|&n| v.amps[n] != c(0.0)).collect();
    let oracle: Vec<usize> = (0..60).filter(|n| n % 8 == 4).collect();
    assert_eq!(support, oracle);
    assert!((v.norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn cat_matches_coherent_superposition() {
    // sum_m (-1)^{Jm} |w^m a>, normalized, against the closed-form amplitudes
    for (order, a, j) in [(1u32, 1.3, 0usize), (2, 2.0, 1), (3, 2.5, 0)] {
        let legs = 2 * order as usize + 2;
        let d = 50;
        let mut s = DVector::<C64>::zeros(d);
        for m in 0..legs {
            let sign = if (j * m) % 2 == 0 { 1.0 } else { -1.0 };
            s += coherent_fock(a, m as f64 * PI / (order as f64 + 1.0), d).amps * c(sign);
        }
        let s = &s / c(s.norm());
        let v = cat_fock_at(order, a, j, d).unwrap();
        assert!((s - &v.amps).norm() < 1e-12, "L={order} a={a} J={j}");
    }
}

#[test]
fn loss_free_is_identity() {
    let rho = cat_fock_at(2, 2.2, 1, 40).unwrap().density();
    let out = apply_loss(&rho, 0.0, None).unwrap();
    assert_eq!(out, rho);
}

#[test]
fn coherent_state_stays_pure_under_loss() {
    let (a, g) = (2.0, 0.3);
    let rho = coherent_fock(a, 0.4, 45).density();
    let out = apply_loss(&rho, g, None).unwrap();
    let expect = coherent_fock((1.0f64 - g).sqrt() * a, 0.4, 45).density();
    assert!((&out.mat - &expect.mat).camax() < 1e-10);
    let purity = (&out.mat * &out.mat).trace().re;
    assert!((purity - 1.0).abs() < 1e-9);
}

#[test]
fn explicit_short_loss_cutoff_is_flagged() {
    let rho = coherent_fock(3.0, 0.0, 50).density();
    assert!(matches!(
        apply_loss(&rho, 0.5, Some(1)),
        Err(cat_telecor::Error::CutoffExhausted { .. })
    ));
}

#[test]
fn lossy_cat_diagonal_matches_histogram() {
    let code = CodeParams::new(1, 3.5, 0.1).unwrap();
    let d = code.fock_dim();
    let rho = cat_fock(&code, 0, d).unwrap().density();
    let out = apply_loss(&rho, 0.1, None).unwrap();
    let h = uncorrectable_mass(&code, 0, 30).unwrap();
    for (n, p) in out.diagonal().iter().enumerate() {
        assert!((p - h.p_correctable[n] - h.p_uncorrectable[n]).abs() < 1e-10, "n = {n}");
    }
}

#[test]
fn uncorrectable_mass_vanishes_without_loss() {
    let h = uncorrectable_mass(&CodeParams::new(1, 3.5, 0.0).unwrap(), 0, 10).unwrap();
    assert_eq!(h.uncorrectable_mass, 0.0);
    assert!(h.p_uncorrectable.iter().all(|&p| p == 0.0));
}

#[test]
fn uncorrectable_mass_decreases_with_order() {
    let masses: Vec<f64> = (1..=3)
        .map(|l| uncorrectable_mass(&CodeParams::new(l, 3.5, 0.1).unwrap(), 0, 10).unwrap().uncorrectable_mass)
        .collect();
    assert!(masses[0] > masses[1] && masses[1] > masses[2], "{masses:?}");
}

#[test]
fn uncorrectable_mass_binomial_oracle() {
    // each Fock component n loses l photons with probability C(n,l) G^l (1-G)^{n-l}
    let (a, g) = (3.5, 0.1);
    let code = CodeParams::new(1, a, g).unwrap();
    let psi = cat_fock(&code, 0, code.fock_dim()).unwrap();
    let mut oracle = 0.0;
    for (n, amp) in psi.amps.iter().enumerate() {
        let p = amp.norm_sqr();
        for l in 2..=10.min(n) {
            let lc = ln_factorial(n) - ln_factorial(l) - ln_factorial(n - l);
            oracle += p * (lc + l as f64 * g.ln() + (n - l) as f64 * (1.0 - g).ln()).exp();
        }
    }
    let h = uncorrectable_mass(&code, 0, 10).unwrap();
    assert!((h.uncorrectable_mass - oracle).abs() < 1e-12);
}

fn svd_trace_distance(a: &FockDensity, b: &FockDensity) -> f64 {
    0.5 * (&a.mat - &b.mat).singular_values().sum()
}

#[test]
fn trace_distance_cases() {
    let code = CodeParams::new(1, 2.0, 0.2).unwrap();
    let d = code.fock_dim();
    let zero = cat_fock(&code, 0, d).unwrap().density();
    let one = cat_fock(&code, 1, d).unwrap().density();
    assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-14);
    assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
    let lossy = apply_loss(&zero, 0.2, None).unwrap();
    let t = trace_distance(&zero, &lossy).unwrap();
    assert!((t - svd_trace_distance(&zero, &lossy)).abs() < 1e-10);
    assert!(matches!(
        trace_distance(&zero, &coherent_fock(1.0, 0.0, 5).density()),
        Err(cat_telecor::Error::DimensionMismatch(..))
    ));
}

#[test]
fn beamsplitter_on_coherent_product() {
    let (b, dlt) = (C64::new(1.1, 0.3), C64::new(-0.4, 0.7));
    let d = 30;
    let v1 = coherent_fock(b.norm(), b.arg(), d);
    let v2 = coherent_fock(dlt.norm(), dlt.arg(), d);
    let psi = &v1.amps * v2.amps.transpose();
    let bs = Beamsplitter::new(2 * d);
    let out = bs.apply(&psi);
    let s = (b + dlt) / 2f64.sqrt();
    let t = (dlt - b) / 2f64.sqrt();
    let w1 = coherent_fock(s.norm(), s.arg(), d);
    let w2 = coherent_fock(t.norm(), t.arg(), d);
    let expect = &w1.amps * w2.amps.transpose();
    // compare on the region unaffected by truncation
    let mut worst: f64 = 0.0;
    for p in 0..15 {
        for q in 0..15 {
            worst = worst.max((out[(p, q)] - expect[(p, q)]).norm());
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn beamsplitter_unitary_on_truncated_space() {
    let bs = Beamsplitter::new(40);
    for t in [0, 1, 7, 25, 40] {
        let b = bs.block(t);
        assert!((b.transpose() * b - DMatrix::identity(t + 1, t + 1)).amax() < 1e-8);
    }
}

#[test]
fn oracle_two_zero_flips_input() {
    let code = CodeParams::new(1, 1.5, 0.0).unwrap();
    let out = teleport_oracle([c(1.0), c(0.0)], &code, 2, 0, OracleOptions::default()).unwrap();
    assert_eq!(out.branches.len(), 1);
    let [c0, c1] = out.branches[0].1;
    assert!(c0.norm() < 1e-12 * c1.norm());
    assert!(c1.norm() > 0.0);
}

#[test]
fn oracle_budget_guard() {
    let code = CodeParams::new(1, 1.5, 0.0).unwrap();
    let opts = OracleOptions { budget: 1000, ..Default::default() };
    assert!(matches!(
        teleport_oracle([c(1.0), c(0.0)], &code, 0, 0, opts),
        Err(cat_telecor::Error::BudgetExceeded { .. })
    ));
}

proptest! {
    #[test]
    fn coherent_states_normalized(a in 0.0f64..4.0, phi in -3.2f64..3.2) {
        let v = coherent_fock_normalized(a, phi, 10).unwrap();
        prop_assert!((v.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cat_states_normalized(order in 1u32..4, a in 0.3f64..5.0, j in 0usize..2) {
        let v = cat_fock_at(order, a, j, 8).unwrap();
        prop_assert!((v.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!(v.norm_sqr() <= 1.0 + 1e-12);
    }

    #[test]
    fn loss_preserves_trace(a in 0.5f64..3.0, g in 0.0f64..0.9, j in 0usize..2) {
        let rho = cat_fock_at(2, a, j, 45).unwrap().density();
        let out = apply_loss(&rho, g, None).unwrap();
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-10);
        prop_assert!(out.hermiticity_defect() < 1e-12);
    }
}
