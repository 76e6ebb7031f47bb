use super::*;
use crate::evaluator::{IdealGas, MayerSeries, TonksGas};
use crate::hardrod::TonksParams;
use crate::point::{line, translate};
use proptest::prelude::*;

fn soft(eps: f64) -> PairPotential {
    PairPotential::soft_core(1.0, eps).unwrap()
}

fn free() -> PairPotential {
    PairPotential::gaussian_bump(0.0, 1.0).unwrap()
}

fn series(eps: f64, z: f64, order: usize) -> MayerSeries {
    MayerSeries::new(soft(eps), 1.0, 1, z, order, &QuadSpec::default()).unwrap()
}

#[test]
fn ideal_gas_solves_everything_without_interaction() {
    let quad = QuadSpec::default();
    let gas = IdealGas { rho: 0.3, nu: 2 };
    let pts = [Point::ORIGIN,
        Point::from_slice(&[0.4, -1.0]),
        Point::from_slice(&[2.0, 0.5])];
    for n in 1..=3 {
        let r = ks_residual(&pts[..n], 0.3, &gas, 1.0, &free(), 4, &quad).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.pass);
        let r = ks_symmetric_residual(&pts[..n], Point::from_slice(&[5.0, 1.0]), &gas, 1.0, &free(), 3, &quad).unwrap();
        assert_eq!(r.residual, 0.0);
    }
    let r = bbgky_residual(&pts[..2], &gas, 1.0, &free(), DEFAULT_FD_STEP, &quad).unwrap();
    assert_eq!(r.residual, 0.0);
    let moms = vec![Point::from_slice(&[0.3, 1.0]), Point::from_slice(&[-2.0, 0.1])];
    let r = bogolyubov_residual(&pts[..2], &moms, &gas, 1.0, &free(), DEFAULT_FD_STEP, &quad).unwrap();
    assert_eq!(r.residual, 0.0);
    assert!(r.pass);
}

#[test]
fn ks_holds_for_the_series() {
    let s = series(0.1, 0.05, 2);
    let quad = QuadSpec::default();
    for pts in [line(&[0.0]), line(&[0.0, 1.5]), line(&[0.0, 0.7])] {
        let r = ks_residual(&pts, 0.05, &s, 1.0, &soft(0.1), 6, &quad).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.components.tail > 0.0);
    }
}

#[test]
fn wrong_activity_fails_ks() {
    let s = series(0.1, 0.05, 4);
    let r = ks_residual(&line(&[0.0, 1.5]), 0.075, &s, 1.0, &soft(0.1), 6, &QuadSpec::default()).unwrap();
    assert!(!r.pass, "{r:?}");
}

#[test]
fn ks_tail_shrinks_with_order() {
    let quad = QuadSpec::default();
    let pts = line(&[0.0, 1.2]);
    let tails: Vec<f64> = (1..=3)
        .map(|p| {
            let r = ks_residual(&pts, 0.05, &series(0.1, 0.05, p), 1.0, &soft(0.1), 6, &quad).unwrap();
            assert!(r.pass, "{r:?}");
            r.components.tail
        })
        .collect();
    assert!(tails[1] < tails[0] && tails[2] < tails[1], "{tails:?}");
}

#[test]
fn ks_depth_is_checked() {
    let s = series(0.1, 0.05, 1);
    let e = ks_residual(
        &line(&[0.0, 1.5, 3.0]),
        0.05,
        &s,
        1.0,
        &soft(0.1),
        4,
        &QuadSpec::default(),
    );
    assert!(matches!(
        e,
        Err(Error::InsufficientDepth {
            required: 3,
            available: 2
        })
    ));
}

#[test]
fn symmetric_identity_at_coincident_free_point() {
    let s = series(0.1, 0.05, 2);
    let pts = line(&[0.3, 1.4]);
    let r = ks_symmetric_residual(&pts, pts[0], &s, 1.0, &soft(0.1), 4, &QuadSpec::default()).unwrap();
    assert_eq!(r.residual, 0.0);
}

#[test]
fn symmetric_identity_for_the_series() {
    let s = series(0.1, 0.05, 2);
    for q0 in [-3.0, 0.4, 1.1, 4.5] {
        let r = ks_symmetric_residual(
            &line(&[0.0, 1.5]),
            Point::new1(q0),
            &s,
            1.0,
            &soft(0.1),
            4,
            &QuadSpec::default(),
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn hierarchy_holds_for_the_series() {
    let s = series(0.1, 0.05, 2);
    let r = bbgky_residual(
        &line(&[0.0, 1.5]),
        &s,
        1.0,
        &soft(0.1),
        DEFAULT_FD_STEP,
        &QuadSpec::default(),
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.components.fd > 0.0);
}

#[test]
fn hierarchy_is_translation_invariant() {
    let s = series(0.1, 0.05, 2);
    let quad = QuadSpec::default();
    let pts = line(&[0.0, 1.3]);
    let a = bbgky_residual(&pts, &s, 1.0, &soft(0.1), DEFAULT_FD_STEP, &quad).unwrap();
    let moved = translate(&pts, Point::new1(3.7));
    let b = bbgky_residual(&moved, &s, 1.0, &soft(0.1), DEFAULT_FD_STEP, &quad).unwrap();
    assert!((a.residual - b.residual).abs() < 1e-12, "{} {}", a.residual, b.residual);
}

#[test]
fn central_differences_converge_at_second_order() {
    let s = series(0.1, 0.05, 2);
    let quad = QuadSpec::default();
    let ctx = Ctx::new(s.potential(), 1.0, 1, &quad).unwrap();
    let pts = line(&[0.0, 1.5]);
    let d = |h: f64| positional(&ctx, &s, &pts, 0, h, Level::Fine).unwrap().grad.x();
    let (a, b, c) = (d(0.08), d(0.04), d(0.02));
    let ratio = (a - b) / (b - c);
    assert!((ratio - 4.0).abs() < 0.8, "{ratio}");
}

#[test]
fn bogolyubov_vanishes_at_rest() {
    let s = series(0.1, 0.05, 2);
    let pts = line(&[0.0, 1.5]);
    let r = bogolyubov_residual(
        &pts,
        &[Point::ORIGIN; 2],
        &s,
        1.0,
        &soft(0.1),
        DEFAULT_FD_STEP,
        &QuadSpec::default(),
    )
    .unwrap();
    assert_eq!(r.residual, 0.0);
    assert!(r.pass);
}

#[test]
fn bogolyubov_matches_the_positional_form() {
    let s = series(0.1, 0.05, 2);
    let quad = QuadSpec::default();
    let pts = line(&[0.0, 1.5]);
    let moms = vec![
        vec![Point::new1(0.7), Point::new1(-1.3)],
        vec![Point::new1(-2.0), Point::new1(0.4)],
    ];
    let reports = bogolyubov_residuals(&pts, &moms, &s, 1.0, &soft(0.1), DEFAULT_FD_STEP, &quad).unwrap();
    let ctx = Ctx::new(s.potential(), 1.0, 1, &quad).unwrap();
    let parts: Vec<_> = (0..2)
        .map(|i| positional(&ctx, &s, &pts, i, DEFAULT_FD_STEP, Level::Fine).unwrap())
        .collect();
    for (ps, r) in moms.iter().zip(&reports) {
        assert!(r.pass, "{r:?}");
        let m = maxwellian(ps, 1.0, 1);
        let expect: f64 = ps
            .iter()
            .zip(&parts)
            .map(|(p, t)| m * p.dot(&bbgky_vector(&ctx, t, DEFAULT_FD_STEP).0))
            .sum();
        assert!(
            (r.residual - expect).abs() <= 1e-12 * expect.abs().max(1e-6),
            "{} {expect}",
            r.residual
        );
    }
}

#[test]
fn hard_rods_are_rejected_by_derivative_checks() {
    let gas = IdealGas { rho: 0.1, nu: 1 };
    let rod = PairPotential::hard_rod(1.0).unwrap();
    let e = bbgky_residual(&line(&[0.0, 2.0]), &gas, 1.0, &rod, 1e-4, &QuadSpec::default());
    assert!(matches!(e, Err(Error::Unsupported(_))));
    let e = bbgky_residual(&line(&[0.0, 0.0]), &gas, 1.0, &free(), 1e-4, &QuadSpec::default());
    assert!(matches!(e, Err(Error::Domain(_))));
}

#[test]
fn iteration_tail_examples() {
    let (q0, q1) = (Point::ORIGIN, Point::new1(10.0));
    assert_eq!(iteration_tail(5, 2, q0, q1, 2.0, 2.0, 0.0), 0.0);
    assert_eq!(iteration_depth(1e-12, 2, q0, q1, 2.0, 2.0, 0.05), Some(9));
    let t9 = iteration_tail(9, 2, q0, q1, 2.0, 2.0, 0.05);
    assert!((t9 - 1.3560267857142876e-13).abs() < 1e-25);
}

#[test]
fn tonks_cluster_gap_at_three_diameters() {
    let t = TonksGas {
        params: TonksParams::new(0.2, 1.0).unwrap(),
    };
    let g = cluster_gap(1, 1, 3.0, 1.5, &t).unwrap();
    assert!((g - 6.15427740242383e-05).abs() < 1e-15, "{g}");
}

#[test]
fn free_cluster_gap_is_zero() {
    let gas = IdealGas { rho: 0.4, nu: 1 };
    assert!(cluster_gap(2, 3, 0.5, 1.0, &gas).unwrap() <= 4.0 * f64::EPSILON * 0.4f64.powi(5));
}

#[test]
fn series_factorizes_far_apart() {
    let s = series(0.1, 0.05, 3);
    let r = cluster_gap_report(1, 1, 10.0, 1.5, &s).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn coefficient_bound_holds() {
    let s = series(0.1, 0.05, 3);
    for pts in [line(&[0.0]), line(&[0.0, 0.5]), line(&[0.0, 0.9, 1.6])] {
        let r = coefficient_bound_report(&s, &pts).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn report_serializes_with_schema_names() {
    let r = ResidualReport::new(
        Equation::KsSymmetric,
        2,
        Location::points(line(&[0.0, 1.0])),
        1e-9,
        1e-8,
        0.0,
        0.0,
    );
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["equation"], "KS_symmetric");
    assert_eq!(v["pass"], true);
    for key in ["tail", "quad", "fd"] {
        assert!(v["components"][key].is_number());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ideal_gas_ks_vanishes(rho in 0.01f64..0.5, xs in prop::collection::vec(-5.0f64..5.0, 1..4)) {
        let gas = IdealGas { rho, nu: 1 };
        let r = ks_residual(&line(&xs), rho, &gas, 1.0, &free(), 3, &QuadSpec::default()).unwrap();
        prop_assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn symmetric_residual_vanishes_when_free_point_is_first(
        rho in 0.01f64..0.3,
        xs in prop::collection::vec(-3.0f64..3.0, 1..3),
    ) {
        let gas = IdealGas { rho, nu: 1 };
        let pts = line(&xs);
        let r = ks_symmetric_residual(&pts, pts[0], &gas, 1.0, &soft(0.1), 2, &QuadSpec::default()).unwrap();
        prop_assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn iteration_tail_ratio(n in 1usize..5, big_n in 0usize..30, i in 0.1f64..3.0, xi in 0.001f64..0.2) {
        let (q0, q1) = (Point::ORIGIN, Point::new1(2.5));
        let a = iteration_tail(big_n, n, q0, q1, i, 1.3, xi);
        let b = iteration_tail(big_n + 1, n, q0, q1, i, 1.3, xi);
        let expect = 3.0 * i * xi / (big_n + 1) as f64;
        prop_assert!((b / a - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn budget_is_positive(res in -1.0f64..1.0, tail in 0.0f64..1.0, quad in 0.0f64..1.0) {
        let r = ResidualReport::new(Equation::Ks, 1, Location::default(), res, tail, quad, 0.0);
        prop_assert!(r.budget > 0.0);
        prop_assert_eq!(r.pass, res.abs() <= r.budget);
    }
}
