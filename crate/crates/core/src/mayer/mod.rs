//! Mayer coefficients, truncated activity series and the activity-density
//! relations.
//!
//! All bounds use `B = 0`: with `I = I_beta`,
//! `|c_{n,p}| <= I^{-(n-1)} (I e)^p`, the series in `z` converges for
//! `|z| < 1 / (I e)`, and `xi = 1 / (2 I e)` is admissible.

pub mod engine;

pub use engine::CoeffEngine;

use crate::error::{Error, Result};
use crate::evaluator::{Correlations, Level};
use crate::integrate::{integrate_cluster_many, nested_gl, ClusterDomain, Proposal, QuadSpec};
use crate::point::Point;
use crate::potential::{PairPotential, PotentialKind};
use serde::Serialize;
use std::f64::consts::E;
use std::fmt::Write as _;
use std::sync::Arc;

/// Default truncation order of the activity series.
pub const DEFAULT_P_MAX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub truncation_order: usize,
    pub quad_error: f64,
}

impl SeriesValue {
    pub fn uncertainty(&self) -> f64 {
        self.tail_bound + self.quad_error
    }

    /// Outside the convergence radius the tail is infinite.
    pub fn flagged(&self) -> bool {
        !self.tail_bound.is_finite()
    }
}

/// `I^{-(n-1)} (I e)^p`, written as `I^{p-n+1} e^p` so that `I = 0` is
/// harmless. Zero below the leading order.
pub fn coeff_bound(n: usize, p: usize, i_beta: f64) -> f64 {
    if p + 1 < n {
        return 0.0;
    }
    i_beta.powi((p + 1 - n) as i32) * E.powi(p as i32)
}

/// `sum_{p > P} |z|^{p+1} coeff_bound(n, p)` in closed form; infinite at or
/// beyond the radius `1 / (I e)`.
pub fn series_tail(n: usize, z: f64, order: usize, i_beta: f64) -> f64 {
    let az = z.abs();
    if az == 0.0 {
        return 0.0;
    }
    let x = az * i_beta * E;
    let p0 = (order + 1).max(n.saturating_sub(1));
    let first = az.powi(p0 as i32 + 1) * coeff_bound(n, p0, i_beta);
    if x >= 1.0 {
        return if first == 0.0 && i_beta == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    first / (1.0 - x)
}

/// `1 / (I e)`.
pub fn activity_radius(i_beta: f64) -> f64 {
    1.0 / (i_beta * E)
}

/// `1 / (2 I e)`.
pub fn xi_admissible(i_beta: f64) -> f64 {
    1.0 / (2.0 * i_beta * E)
}

/// Truncated `rho_n(config)` at activity `z`.
pub fn rho_series(
    config: &[Point],
    z: f64,
    order: usize,
    beta: f64,
    nu: usize,
    pot: PairPotential,
    quad: &QuadSpec,
) -> Result<SeriesValue> {
    crate::evaluator::MayerSeries::new(pot, beta, nu, z, order, quad)?.rho_series(config)
}

/// Spatially constant coefficients `c_{1,p}`, `p <= order`, each with its
/// quadrature error.
///
/// Hard rods in one dimension use the closed form
/// `c_{1,p} = (-1)^p (p+1)^p d^p / p!` from `rho = R/(1+Rd)`, `z = R e^{Rd}`.
pub fn density_coefficients(
    pot: PairPotential,
    beta: f64,
    nu: usize,
    order: usize,
    quad: &QuadSpec,
) -> Result<Vec<(f64, f64)>> {
    if let PotentialKind::HardRod { d } = pot.kind() {
        if nu != 1 {
            return Err(Error::Unsupported(
                "hard-core density coefficients outside one dimension".into(),
            ));
        }
        return Ok((0..=order).map(|p| (hard_rod_c1(p, d), 0.0)).collect());
    }
    let fine = CoeffEngine::new(pot, beta, nu, order, &Level::Fine.spec(quad))?;
    let coarse = CoeffEngine::new(pot, beta, nu, order, &Level::Coarse.spec(quad))?;
    let o = [Point::ORIGIN];
    (0..=order)
        .map(|p| {
            let f = fine.coeff(p, &o)?;
            let c = coarse.coeff(p, &o)?;
            Ok((f, (f - c).abs()))
        })
        .collect()
}

/// `c^{(0)}_{1,p} = (-1)^p (p+1)^p d^p / p!`.
pub fn hard_rod_c1(p: usize, d: f64) -> f64 {
    let fact: f64 = (1..=p).map(|i| i as f64).product();
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * ((p + 1) as f64).powi(p as i32) * d.powi(p as i32) / fact
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inversion {
    pub z: f64,
    /// `rho(z) - rho_target` for the truncated series.
    pub residual: f64,
    /// Series tail plus quadrature error of `rho(z)`.
    pub uncertainty: f64,
    pub steps: usize,
}

/// Solves `sum_{p <= P} c_{1,p} z^{p+1} = rho_target` by Newton's method
/// seeded at `z = rho_target`.
pub fn invert_activity(
    rho_target: f64,
    beta: f64,
    nu: usize,
    pot: PairPotential,
    order: usize,
    quad: &QuadSpec,
) -> Result<Inversion> {
    let coeffs = density_coefficients(pot, beta, nu, order, quad)?;
    let i_beta = {
        let i = pot.i_beta(beta, nu, quad)?;
        i.value + i.error_estimate
    };
    invert_with(rho_target, &coeffs, i_beta)
}

/// Newton inversion with precomputed coefficients.
pub fn invert_with(rho_target: f64, coeffs: &[(f64, f64)], i_beta: f64) -> Result<Inversion> {
    if !rho_target.is_finite() {
        return crate::error::domain("target density must be finite");
    }
    let order = coeffs.len().saturating_sub(1);
    let eval = |z: f64| {
        let (mut v, mut dv, mut q) = (0.0, 0.0, 0.0);
        let mut zp = 1.0;
        for (p, &(c, e)) in coeffs.iter().enumerate() {
            dv += (p + 1) as f64 * c * zp;
            zp *= z;
            v += c * zp;
            q += e * zp.abs();
        }
        (v, dv, q)
    };
    if rho_target == 0.0 {
        return Ok(Inversion {
            z: 0.0,
            residual: 0.0,
            uncertainty: 0.0,
            steps: 0,
        });
    }
    let mut z = rho_target;
    for step in 1..=64 {
        let (v, dv, _) = eval(z);
        if dv == 0.0 || !dv.is_finite() {
            break;
        }
        let dz = (v - rho_target) / dv;
        z -= dz;
        let (v, _, q) = eval(z);
        let uncertainty = series_tail(1, z, order, i_beta) + q;
        let residual = v - rho_target;
        if dz.abs() < 1e-12 * z.abs().max(1.0)
            && residual.abs() <= uncertainty.max(8.0 * f64::EPSILON * rho_target.abs())
        {
            return Ok(Inversion {
                z,
                residual,
                uncertainty,
                steps: step,
            });
        }
    }
    Err(Error::NoConvergence { steps: 64, last: z })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivityEstimate {
    pub z: f64,
    pub denominator: f64,
    /// Bound on `|z - z_true|` from tails and quadrature.
    pub uncertainty: f64,
    /// Bound on the denominator error.
    pub denominator_uncertainty: f64,
}

/// `z = rho / [1 + sum_{k=1}^{k_max} (-1)^k / k! int prod f(y_j) rho_k(y)]`.
///
/// The neglected terms `k > k_max` are bounded by `(I xi)^k / k!`.
pub fn activity_from_state(
    evaluator: &dyn Correlations,
    beta: f64,
    pot: PairPotential,
    k_max: usize,
    quad: &QuadSpec,
) -> Result<ActivityEstimate> {
    let nu = evaluator.nu();
    let i = pot.i_beta(beta, nu, quad)?;
    let i_beta = i.value + i.error_estimate;
    let origin = [Point::ORIGIN];

    let denominator_at = |level: Level| -> Result<(f64, f64)> {
        let spec = level.spec(quad);
        let mut den = 1.0;
        let mut tails = 0.0;
        let mut fact = 1.0;
        for k in 1..=k_max {
            fact *= k as f64;
            let (integral, tail) = mayer_moment(evaluator, beta, &pot, k, level, &spec)?;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            den += sign * integral / fact;
            tails += i_beta.powi(k as i32) / fact * tail;
        }
        Ok((den, tails))
    };
    let (den, tails) = denominator_at(Level::Fine)?;
    let (den_coarse, _) = denominator_at(Level::Coarse)?;
    let rho = evaluator.rho(&origin, Level::Fine)?;
    let rho_coarse = evaluator.rho(&origin, Level::Coarse)?;

    let xi = evaluator.xi();
    let mut k_tail = 0.0;
    let complete = evaluator.graded() && evaluator.max_order().is_some_and(|m| k_max >= m);
    if !complete {
        let ix = i_beta * xi;
        let mut term: f64 = (1..=k_max).fold(1.0, |t, k| t * ix / k as f64);
        for k in k_max + 1..k_max + 200 {
            term *= ix / k as f64;
            k_tail += term;
            if term < 1e-18 * k_tail {
                break;
            }
        }
    }
    let den_err = tails + k_tail + (den - den_coarse).abs();
    if den <= den_err {
        return Err(Error::NonPositiveDenominator {
            value: den,
            uncertainty: den_err,
        });
    }
    let rho_err = rho.tail + (rho.value - rho_coarse.value).abs();
    let z = rho.value / den;
    let uncertainty = (rho_err + z.abs() * den_err) / (den - den_err);
    Ok(ActivityEstimate {
        z,
        denominator: den,
        uncertainty,
        denominator_uncertainty: den_err,
    })
}

/// `int prod_{j<=k} f(y_j) rho_k(y_1..y_k) dy` around the origin, with the
/// evaluator's tail for `rho_k`.
fn mayer_moment(
    evaluator: &dyn Correlations,
    beta: f64,
    pot: &PairPotential,
    k: usize,
    level: Level,
    spec: &QuadSpec,
) -> Result<(f64, f64)> {
    let radius = pot.effective_radius(beta);
    if radius == 0.0 {
        return Ok((0.0, 0.0));
    }
    let nu = evaluator.nu();
    let err = std::cell::RefCell::new(None);
    let tail = std::cell::Cell::new(0.0f64);
    let g = |ys: &[Point]| -> f64 {
        let mut w = 1.0;
        for y in ys {
            w *= pot.mayer_radial(beta, y.norm());
            if w == 0.0 {
                return 0.0;
            }
        }
        match evaluator.rho(ys, level) {
            Ok(e) => {
                tail.set(tail.get().max(e.tail));
                w * e.value
            }
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let mut domain = ClusterDomain::ball(nu, Point::ORIGIN, radius);
    domain.kinks = pot.knot_radii(beta);
    domain.symmetric = true;
    domain.label = k as u64;
    let value = if nu == 1 {
        nested_gl(k, &g, &domain, spec.panels).0
    } else {
        domain.proposal = Some(Arc::new(Proposal::from_radial(nu, radius, |r| {
            pot.mayer_radial(beta, r)
        })));
        integrate_cluster_many(k, g, &domain, spec)?.value
    };
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok((value, tail.get()))
}

/// CSV rows `n,p,q2..qn,value,bound` of coefficients at the given
/// configurations (coordinates relative to `q1`, first axis only).
pub fn coeff_csv(engine: &CoeffEngine, i_beta: f64, rows: &[(usize, Vec<Point>)]) -> Result<String> {
    let width = rows.iter().map(|(_, c)| c.len()).max().unwrap_or(1);
    let mut out = String::new();
    out.push_str("n,p");
    for j in 2..=width {
        let _ = write!(out, ",q{j}");
    }
    out.push_str(",value,bound\n");
    for (p, config) in rows {
        let n = config.len();
        let v = engine.coeff(*p, config)?;
        let _ = write!(out, "{n},{p}");
        for j in 1..width {
            match config.get(j) {
                Some(q) => {
                    let _ = write!(out, ",{:.16e}", q.x() - config[0].x());
                }
                None => out.push(','),
            }
        }
        let _ = writeln!(out, ",{:.16e},{:.16e}", v, coeff_bound(n, *p, i_beta));
    }
    Ok(out)
}
