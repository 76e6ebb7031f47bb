//! Exact correlation functions of one-dimensional hard rods (the Tonks gas)
//! and residual checks of the equations they solve.
//!
//! With `R = rho / (1 - rho d)`:
//!
//! ```text
//! rho_2(x) = rho sum_{k=1}^{[x/d]} R^k (x - kd)^{k-1} / (k-1)! exp(-(x - kd) R)
//! rho_n    = rho^{-(n-2)} prod_j rho_2(q_{j+1} - q_j)      (ordered q_1 < ... < q_n)
//! z        = R exp(R d)
//! ```
//!
//! Nothing here depends on the inverse temperature.

use crate::error::{domain, Result};
use crate::integrate::{integrate_radial, QuadSpec, Support};
use crate::residuals::{Equation, Location, ResidualReport};
use serde::{Deserialize, Serialize};

/// Relative slack under which a gap is treated as exact contact.
const CONTACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TonksParams {
    rho: f64,
    d: f64,
}

impl TonksParams {
    pub fn new(rho: f64, d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return domain(format!("rod diameter must be positive, got {d}"));
        }
        if !(rho.is_finite() && rho > 0.0 && rho * d < 1.0) {
            return domain(format!("need 0 < rho d < 1, got rho = {rho}, d = {d}"));
        }
        Ok(Self { rho, d })
    }

    /// Parameters at activity `z`: `R = W(z d) / d`, `rho = R / (1 + R d)`.
    pub fn from_activity(z: f64, d: f64) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return domain(format!("activity must be positive, got {z}"));
        }
        let r = lambert_w(z * d)? / d;
        Self::new(r / (1.0 + r * d), d)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `R = rho / (1 - rho d)`.
    pub fn r(&self) -> f64 {
        self.rho / (1.0 - self.rho * self.d)
    }

    /// Contact value `rho_2(d) = rho^2 / (1 - rho d)`.
    pub fn rho2_contact(&self) -> f64 {
        self.rho * self.rho / (1.0 - self.rho * self.d)
    }

    /// `z = R exp(R d)`.
    pub fn activity(&self) -> f64 {
        let r = self.r();
        r * (r * self.d).exp()
    }
}

/// `(R, rho_2(d), z)`.
pub fn tonks_r(params: &TonksParams) -> (f64, f64, f64) {
    (params.r(), params.rho2_contact(), params.activity())
}

/// Principal branch of Lambert's W on `[0, inf)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return domain(format!("lambert_w needs finite x >= 0, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < 1.0 { x } else { x.ln() - x.ln().ln().max(0.0) };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        // Halley step
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            return Ok(w);
        }
    }
    Ok(w)
}

/// Pair correlation at separation `x >= d`.
pub fn tonks_rho2(x: f64, params: &TonksParams) -> Result<f64> {
    let d = params.d;
    if !x.is_finite() {
        return domain("rho_2 at a non-finite separation");
    }
    if x < d * (1.0 - CONTACT_SLACK) {
        return domain(format!("separation {x} overlaps the core {d}"));
    }
    Ok(rho2_unchecked(x.max(d), params))
}

fn rho2_unchecked(x: f64, params: &TonksParams) -> f64 {
    let (rho, d, r) = (params.rho, params.d, params.r());
    let kmax = (x / d).floor() as usize;
    let (ln_rho, ln_r) = (rho.ln(), r.ln());
    let mut ln_fact = 0.0; // ln (k-1)!
    let mut sum = 0.0;
    for k in 1..=kmax {
        if k > 1 {
            ln_fact += ((k - 1) as f64).ln();
        }
        let u = x - k as f64 * d;
        if u < 0.0 {
            break;
        }
        if u == 0.0 {
            if k == 1 {
                sum += rho * r;
            }
            continue;
        }
        let ln_term = ln_rho + k as f64 * ln_r + (k - 1) as f64 * u.ln() - ln_fact - u * r;
        sum += ln_term.exp();
    }
    sum
}

/// Sorted copy of a configuration given by coordinates.
fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `rho_n` at any ordering of the points; overlaps are a domain error.
pub fn tonks_rhon(xs: &[f64], params: &TonksParams) -> Result<f64> {
    if xs.iter().any(|x| !x.is_finite()) {
        return domain("non-finite rod position");
    }
    let v = sorted(xs);
    for w in v.windows(2) {
        if w[1] - w[0] < params.d * (1.0 - CONTACT_SLACK) {
            return domain(format!("rods at {} and {} overlap", w[0], w[1]));
        }
    }
    Ok(rhon_closure(&v, params))
}

/// `rho_n` extended by zero to overlapping configurations; `xs` must be
/// sorted.
fn rhon_closure(xs: &[f64], params: &TonksParams) -> f64 {
    match xs.len() {
        0 => 1.0,
        1 => params.rho,
        n => {
            let mut prod = params.rho.powi(2 - n as i32);
            for w in xs.windows(2) {
                let gap = w[1] - w[0];
                if gap < params.d * (1.0 - CONTACT_SLACK) {
                    return 0.0;
                }
                prod *= rho2_unchecked(gap.max(params.d), params);
            }
            prod
        }
    }
}

/// `rho_n` extended by zero, for unsorted input.
pub fn tonks_density(xs: &[f64], params: &TonksParams) -> f64 {
    rhon_closure(&sorted(xs), params)
}

fn line_location(xs: &[f64]) -> Location {
    Location::points(crate::point::line(xs))
}

/// Residual of the hard-rod hierarchy
/// `d rho_n / d q_1 = rho_{n+1}(.., q_1 - d) - rho_{n+1}(.., q_1 + d)`,
/// each contact term vanishing when the added rod would overlap.
///
/// The derivative is a central difference of step `h`; the budget is the
/// difference between steps `h` and `2h` plus a rounding term.
pub fn hardrod_hierarchy_residual(xs: &[f64], params: &TonksParams, h: f64) -> Result<ResidualReport> {
    if xs.is_empty() {
        return domain("hierarchy needs at least one rod");
    }
    if !(h.is_finite() && h > 0.0) {
        return domain(format!("finite-difference step must be positive, got {h}"));
    }
    tonks_rhon(xs, params)?;
    let d = params.d;
    let q1 = xs[0];
    for &q in &xs[1..] {
        if ((q - q1).abs() - d).abs() <= 2.0 * h {
            return domain(format!(
                "rod at {q1} is within the difference stencil of contact with {q}; derivative is one-sided"
            ));
        }
    }
    let at = |x1: f64| {
        let mut v = xs.to_vec();
        v[0] = x1;
        tonks_density(&v, params)
    };
    let central = |s: f64| (at(q1 + s) - at(q1 - s)) / (2.0 * s);
    let d1 = central(h);
    let d2 = central(2.0 * h);
    let contact = |x_new: f64| {
        let mut v = xs.to_vec();
        v.push(x_new);
        tonks_density(&v, params)
    };
    let rhs = contact(q1 - d) - contact(q1 + d);
    let residual = d1 - rhs;
    let rho_n = at(q1);
    let fd = (d1 - d2).abs() + 10.0 * f64::EPSILON * rho_n / h;
    Ok(ResidualReport::new(
        Equation::HardRodHierarchy,
        xs.len(),
        line_location(xs),
        residual,
        0.0,
        0.0,
        fd,
    ))
}

/// Residual of
/// `rho_n = R [rho_{n-1}(q_2..) - int_{q_1}^{q_1+d} [qbar <= q_2 - d] rho_n(qbar, q_2, ..) dqbar]`
/// at an ordered configuration (`rho_0 = 1`).
pub fn extracted_constant_residual(xs: &[f64], params: &TonksParams) -> Result<ResidualReport> {
    if xs.is_empty() {
        return domain("need at least one rod");
    }
    let lhs = tonks_rhon(xs, params)?;
    let v = sorted(xs);
    let d = params.d;
    let q1 = v[0];
    let rest = &v[1..];
    let upper = match rest.first() {
        Some(&q2) => (q1 + d).min(q2 - d),
        None => q1 + d,
    };
    let quad = QuadSpec::default().with_tol(1e-15, 1e-14);
    let (integral, qerr) = if upper > q1 {
        let breaks: Vec<f64> = rest
            .first()
            .map(|&q2| (1..=4).map(|k| q2 - k as f64 * d).collect())
            .unwrap_or_default();
        let r = integrate_radial(
            |qb| {
                let mut buf = Vec::with_capacity(v.len());
                buf.push(qb);
                buf.extend_from_slice(rest);
                rhon_closure(&buf, params)
            },
            &Support::interval(q1, upper, &breaks),
            &quad,
        )?;
        (r.value, r.error_estimate)
    } else {
        (0.0, 0.0)
    };
    let rn1 = rhon_closure(rest, params);
    let r = params.r();
    let rhs = r * (rn1 - integral);
    let scale = lhs.abs() + r * (rn1.abs() + integral.abs());
    Ok(ResidualReport::new(
        Equation::ExtractedConstant,
        xs.len(),
        line_location(xs),
        lhs - rhs,
        0.0,
        r * qerr + 64.0 * f64::EPSILON * scale,
        0.0,
    ))
}

/// Intervals of `(lo, hi)` left after removing the open cores `(c - d, c + d)`.
fn allowed(lo: f64, hi: f64, centers: &[f64], d: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(lo, hi)];
    for &c in centers {
        let (a, b) = (c - d, c + d);
        out = out
            .into_iter()
            .flat_map(|(l, h)| {
                let mut parts = Vec::with_capacity(2);
                if a > l {
                    parts.push((l, a.min(h)));
                }
                if b < h {
                    parts.push((b.max(l), h));
                }
                parts
            })
            .filter(|(l, h)| h > l)
            .collect();
    }
    out
}

/// Bracket of the hard-core Kirkwood-Salsburg equation,
/// `rho_{n-1}(q_2..) + sum_{m=1}^{2} (-1)^m / m! int_{B_d(q_1)^m} rho_{n-1+m}(q_2.., y)`,
/// and its quadrature error.
///
/// In one dimension three rods cannot fit pairwise at distance `>= d`
/// inside an open interval of length `2d`, so the sum stops at `m = 2`.
pub fn hc_ks_bracket(xs: &[f64], params: &TonksParams) -> Result<(f64, f64)> {
    let d = params.d;
    let q1 = xs[0];
    let rest = sorted(&xs[1..]);
    let quad = QuadSpec::default().with_tol(1e-14, 1e-13);
    let mut knots: Vec<f64> = Vec::new();
    for &c in std::iter::once(&q1).chain(rest.iter()) {
        for j in -4i32..=4 {
            knots.push(c + j as f64 * d);
        }
    }
    let ball = allowed(q1 - d, q1 + d, &rest, d);
    let density = |ys: &[f64]| {
        let mut v = rest.clone();
        v.extend_from_slice(ys);
        tonks_density(&v, params)
    };

    let mut one = 0.0;
    let mut err = 0.0;
    for &(a, b) in &ball {
        let r = integrate_radial(|y| density(&[y]), &Support::interval(a, b, &knots), &quad)?;
        one += r.value;
        err += r.error_estimate;
    }

    // ordered pairs y1 < y2 with y2 - y1 >= d, both in the allowed set
    let mut two = 0.0;
    let inner_err = std::cell::Cell::new(0.0f64);
    for &(a, b) in &ball {
        let inner = |y1: f64| {
            let mut s = 0.0;
            for &(a2, b2) in &ball {
                let lo = a2.max(y1 + d);
                if lo < b2 {
                    if let Ok(r) = integrate_radial(|y2| density(&[y1, y2]), &Support::interval(lo, b2, &knots), &quad)
                    {
                        s += r.value;
                        inner_err.set(inner_err.get().max(r.error_estimate));
                    }
                }
            }
            s
        };
        let mut outer_knots = knots.clone();
        for &(a2, b2) in &ball {
            outer_knots.push(a2 - d);
            outer_knots.push(b2 - d);
        }
        let r = integrate_radial(inner, &Support::interval(a, b, &outer_knots), &quad)?;
        two += r.value;
        err += r.error_estimate;
    }
    // worst inner error over the outer range
    err += inner_err.get() * ball.iter().map(|(a, b)| b - a).sum::<f64>();

    let first = rhon_closure(&rest, params);
    Ok((first - one + two, err))
}

/// Residual of the hard-core Kirkwood-Salsburg equation at activity
/// `z = R exp(R d)`.
pub fn hc_ks_residual(xs: &[f64], params: &TonksParams) -> Result<ResidualReport> {
    hc_ks_residual_at(xs, params, params.activity())
}

/// [`hc_ks_residual`] with the activity supplied by the caller.
pub fn hc_ks_residual_at(xs: &[f64], params: &TonksParams, z: f64) -> Result<ResidualReport> {
    if xs.is_empty() {
        return domain("need at least one rod");
    }
    if !z.is_finite() {
        return domain("activity must be finite");
    }
    let lhs = tonks_rhon(xs, params)?;
    let (bracket, err) = hc_ks_bracket(xs, params)?;
    let scale = lhs.abs() + z * bracket.abs();
    Ok(ResidualReport::new(
        Equation::HardCoreKs,
        xs.len(),
        line_location(xs),
        lhs - z * bracket,
        0.0,
        z * err + 64.0 * f64::EPSILON * scale,
        0.0,
    ))
}

/// Activity obtained by solving the `n = 1` hard-core equation for `z`.
pub fn hc_ks_activity(params: &TonksParams) -> Result<f64> {
    let (bracket, _) = hc_ks_bracket(&[0.0], params)?;
    Ok(params.rho / bracket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p02() -> TonksParams {
        TonksParams::new(0.2, 1.0).unwrap()
    }

    #[test]
    fn closed_forms_at_rho_02() {
        let (r, c, z) = tonks_r(&p02());
        assert!((r - 0.25).abs() < 1e-15);
        assert!((c - 0.05).abs() < 1e-15);
        assert!((z - 0.25 * 0.25f64.exp()).abs() < 1e-15);
        assert!((z - 0.3210064).abs() < 1e-7);
        assert!((r - (0.2 + c)).abs() < 1e-15);
    }

    #[test]
    fn ideal_gas_limit() {
        let p = TonksParams::new(1e-9, 1.0).unwrap();
        let (r, _, z) = tonks_r(&p);
        assert!((r / 1e-9 - 1.0).abs() < 1e-8);
        assert!((z / 1e-9 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_close_packing() {
        assert!(TonksParams::new(1.0, 1.0).is_err());
        assert!(TonksParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn rho2_examples() {
        let p = p02();
        assert!((tonks_rho2(1.0, &p).unwrap() - 0.05).abs() < 1e-16);
        let v = tonks_rho2(1.5, &p).unwrap();
        assert!((v - 0.05 * (-0.125f64).exp()).abs() < 1e-16);
        assert!((v - 0.0441248).abs() < 1e-7);
        assert!((tonks_rho2(50.0, &p).unwrap() - 0.04).abs() < 1e-10);
        assert!(tonks_rho2(0.9, &p).is_err());
    }

    #[test]
    fn rho2_continuous_at_knots() {
        let p = p02();
        for k in 2..=4 {
            let x = k as f64;
            let left = tonks_rho2(x * (1.0 - 1e-15), &p).unwrap();
            let right = tonks_rho2(x * (1.0 + 1e-15), &p).unwrap();
            assert!((left - right).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn rhon_examples() {
        let p = p02();
        let v = tonks_rhon(&[0.0, 1.5, 3.0], &p).unwrap();
        let one = 0.05 * (-0.125f64).exp();
        assert!((v - one * one / 0.2).abs() < 1e-16);
        assert!((v - 0.0097350).abs() < 1e-7);
        assert_eq!(tonks_rhon(&[0.0, 1.5], &p).unwrap(), tonks_rho2(1.5, &p).unwrap());
        assert_eq!(tonks_rhon(&[3.0], &p).unwrap(), 0.2);
        let far = tonks_rhon(&[0.0, 50.0, 100.0], &p).unwrap();
        assert!((far - 0.008).abs() < 1e-10);
        assert!(tonks_rhon(&[0.0, 0.5], &p).is_err());
    }

    #[test]
    fn lambert_w_inverts() {
        for x in [1e-12, 0.1, 0.3210064, 1.0, 10.0, 1e6] {
            let w = lambert_w(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-14 * x.max(1.0), "{x}");
        }
        assert!((lambert_w(0.1).unwrap() - 0.0912765).abs() < 1e-7);
        let p = TonksParams::from_activity(0.1, 1.0).unwrap();
        assert!((p.rho() - 0.0836419779).abs() < 1e-9);
        assert!((p.activity() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn hierarchy_examples() {
        let p = p02();
        let r = hardrod_hierarchy_residual(&[0.3], &p, 1e-5).unwrap();
        assert!(r.residual.abs() < 1e-12 && r.pass);
        let r = hardrod_hierarchy_residual(&[0.0, 1.5], &p, 1e-5).unwrap();
        assert!(r.residual.abs() <= 1e-8 && r.pass, "{r:?}");
        // analytic slope on (d, 2d)
        let rho2 = tonks_rho2(1.5, &p).unwrap();
        let rhs = tonks_rhon(&[-1.0, 0.0, 1.5], &p).unwrap();
        assert!((rhs - p.r() * rho2).abs() < 1e-16);
        let r = hardrod_hierarchy_residual(&[0.0, 1.5, 4.0], &p, 1e-5).unwrap();
        assert!(r.residual.abs() <= 1e-8 && r.pass, "{r:?}");
        assert!(hardrod_hierarchy_residual(&[0.0, 1.0], &p, 1e-5).is_err());
    }

    #[test]
    fn extracted_constant_examples() {
        let p = p02();
        for xs in [
            vec![0.0],
            vec![0.0, 1.0],
            vec![0.0, 3.0],
            vec![0.0, 1.2, 2.4],
            vec![0.0, 2.7, 3.9],
        ] {
            let r = extracted_constant_residual(&xs, &p).unwrap();
            assert!(r.residual.abs() <= 1e-10 && r.pass, "{xs:?} {r:?}");
        }
    }

    #[test]
    fn hc_ks_examples() {
        let p = p02();
        let (bracket, _) = hc_ks_bracket(&[0.0], &p).unwrap();
        assert!((bracket - 0.6230406).abs() < 1e-7, "{bracket}");
        for xs in [vec![0.0], vec![0.0, 1.5], vec![0.0, 1.3, 2.9], vec![0.7, -1.6]] {
            let r = hc_ks_residual(&xs, &p).unwrap();
            assert!(r.residual.abs() <= 1e-8 && r.pass, "{xs:?} {r:?}");
        }
    }

    #[test]
    fn virial_consistency() {
        for rho in [0.05, 0.1, 0.2] {
            let p = TonksParams::new(rho, 1.0).unwrap();
            let z = hc_ks_activity(&p).unwrap();
            assert!((z - p.activity()).abs() < 1e-8, "{rho}");
        }
    }

    #[test]
    fn cluster_decay_rate_is_positive() {
        // least-squares slope of ln |rho_2 - rho^2| on [2, 10]
        let p = p02();
        let pts: Vec<(f64, f64)> = (0..=32)
            .map(|i| 2.0 + 0.25 * i as f64)
            .map(|x| (x, (tonks_rho2(x, &p).unwrap() - 0.04).abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        assert!(sxy / sxx < 0.0);
    }

    proptest! {
        #[test]
        fn rhon_is_permutation_invariant(gaps in proptest::collection::vec(1.0f64..4.0, 1..4), shift in -5.0f64..5.0) {
            let p = p02();
            let mut xs = vec![shift];
            for g in gaps {
                let last = *xs.last().unwrap();
                xs.push(last + g);
            }
            let a = tonks_rhon(&xs, &p).unwrap();
            let mut rev = xs.clone();
            rev.reverse();
            let b = tonks_rhon(&rev, &p).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
