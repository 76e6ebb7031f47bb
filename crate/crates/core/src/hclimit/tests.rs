use super::*;
use crate::error::Error;

fn quad() -> QuadSpec {
    QuadSpec::default()
}

fn small_plan(drive: SweepDrive) -> SweepPlan {
    SweepPlan::new(vec![0.2, 0.1], 1.2, 2.4, 3, drive, 2).unwrap()
}

#[test]
fn plan_validation() {
    let bad = |eps: Vec<f64>, x_min: f64| SweepPlan::new(eps, x_min, 3.0, 4, SweepDrive::Activity(0.05), 2);
    assert!(matches!(bad(vec![0.1, 0.2], 1.5), Err(Error::Domain(_))));
    assert!(matches!(bad(vec![0.2, 0.0], 1.5), Err(Error::Domain(_))));
    assert!(matches!(bad(vec![0.2], 1.0), Err(Error::Domain(_))));
    assert!(SweepPlan::new(vec![0.2], 1.5, 3.0, 4, SweepDrive::Density(1.0), 2).is_err());
    let p = SweepPlan::standard();
    assert_eq!(p.x_grid.len(), 9);
    assert_eq!(p.x_grid[0], 1.05);
    assert_eq!(p.x_grid[8], 3.0);
}

#[test]
fn empty_softness_list_gives_an_empty_table() {
    let plan = SweepPlan::new(vec![], 1.2, 2.0, 3, SweepDrive::Activity(0.05), 2).unwrap();
    let s = limit_sweep(&plan, &quad()).unwrap();
    assert!(s.rows.is_empty() && s.summary.is_empty());
    assert_eq!(s.empirical_rate, None);
    assert_eq!(s.csv().lines().count(), 2);
}

#[test]
fn fixed_activity_sweep() {
    let s = limit_sweep(&small_plan(SweepDrive::Activity(0.05)), &quad()).unwrap();
    assert_eq!(s.rows.len(), 6);
    for r in &s.rows {
        assert_eq!(r.abs_error, (r.rho2_eps - r.rho2_hard).abs());
        assert!(!r.flagged && r.budget > 0.0);
        assert_eq!(r.z, 0.05);
    }
    assert!(s.nonincreasing());
    assert!(!s.any_flagged());
    let csv = s.csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], "epsilon,x,rho2_eps,rho2_hard,abs_error,budget");
    assert_eq!(lines.len(), 8);
    assert_eq!(
        csv,
        limit_sweep(&small_plan(SweepDrive::Activity(0.05)), &quad())
            .unwrap()
            .csv()
    );
}

#[test]
fn fixed_density_sweep_reports_the_activity() {
    let s = limit_sweep(&small_plan(SweepDrive::Density(0.05)), &quad()).unwrap();
    assert!(s.fixed_density);
    assert!(s.csv().lines().nth(1).unwrap().starts_with("epsilon,z,x,"));
    for e in &s.summary {
        // z exceeds rho by about I rho^2
        assert!(e.z > 0.05 && e.z < 0.06, "{}", e.z);
    }
}

#[test]
fn linear_fit_recovers_a_line() {
    let (a, b, r) = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
    assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && r < 1e-14);
    assert_eq!(linear_fit(&[(1.0, 1.0)]), None);
    assert_eq!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]), None);
}

#[test]
fn uniform_range_in_one_dimension() {
    assert!((uniform_xi(1, 1.0) - 1.0 / (4.0 * std::f64::consts::E)).abs() < 1e-16);
}

#[test]
fn alternating_bound_holds_outside_the_core() {
    for pts in [vec![Point::ORIGIN], line(&[0.0, 1.5])] {
        let r = groeneveld_check(&pts, 0.1, 0.05, 3, &quad()).unwrap();
        assert_eq!(r.equation, Equation::Groeneveld);
        assert!(r.pass, "{r:?}");
    }
    // deep in the core the generic tail is larger than z^2 exp(-beta phi)
    assert!(
        !groeneveld_check(&line(&[0.0, 0.1]), 0.1, 0.05, 2, &quad())
            .unwrap()
            .pass
    );
    assert!(groeneveld_check(&[Point::ORIGIN], 0.1, 0.0, 2, &quad()).is_err());
}

#[test]
fn uniform_bound_holds_inside_its_range() {
    let s = MayerSeries::new(PairPotential::soft_core(1.0, 0.2).unwrap(), 1.0, 1, 0.05, 2, &quad()).unwrap();
    for pts in [vec![Point::ORIGIN], line(&[0.0, 0.9]), line(&[0.0, 1.6])] {
        let r = uniform_bound_report(&s, &pts).unwrap();
        assert!(r.pass, "{r:?}");
    }
    assert!(uniform_bound_report(&s.with_activity(0.2).unwrap(), &[Point::ORIGIN]).is_err());
}

#[test]
fn first_coefficient_approaches_minus_two() {
    let c = coeff_limit_check(1, &[Point::ORIGIN], &[0.2, 0.1], 1.0, &quad()).unwrap();
    assert!((c.limit + 2.0).abs() < 1e-12, "{}", c.limit);
    assert!(c.gaps_decrease());
    for r in &c.rows {
        // the soft core is weaker than the hard one
        assert!(r.gap > 0.0 && r.quad_error < 1e-6, "{r:?}");
    }
}

#[test]
fn separated_pair_has_no_gap_at_leading_order() {
    let c = coeff_limit_check(1, &line(&[0.0, 1.5]), &[0.2, 0.1], 1.0, &quad()).unwrap();
    assert!(c.rows.iter().all(|r| r.gap == 0.0));
    assert!(matches!(
        coeff_limit_check(1, &line(&[0.0, 0.5]), &[0.2], 1.0, &quad()),
        Err(Error::Domain(_))
    ));
}
