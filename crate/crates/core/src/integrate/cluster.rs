//! Integrals over clusters of `m` points `y_1, ..., y_m`, each confined to a
//! ball around an anchor.
//!
//! In one dimension the integral is a tensor product of fixed-order
//! Gauss-Legendre panels, split at every distance where the Mayer function
//! kinks. In two and three dimensions each point is drawn from a radial
//! proposal proportional to the Mayer function.

use super::rules::{gauss_legendre16, GL_ORDER};
use super::{segment_points, QuadResult, QuadSpec};
use crate::error::{Error, Result};
use crate::point::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::{Add, Mul};
use std::sync::Arc;

/// Values that can be accumulated by a quadrature rule.
pub trait Integrand: Copy + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn zero() -> Self;
    /// Largest absolute component.
    fn max_abs(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

/// Fixed-size vector integrand; lets one pass compute several integrals
/// sharing the same nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Many<const N: usize>(pub [f64; N]);

impl<const N: usize> Add for Many<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Many<N> {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= s;
        }
        self
    }
}

impl<const N: usize> Integrand for Many<N> {
    fn zero() -> Self {
        Many([0.0; N])
    }
    fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Integrand for Point {
    fn zero() -> Self {
        Point::ORIGIN
    }
    fn max_abs(&self) -> f64 {
        Point::max_abs(self)
    }
}

/// Radial importance density for Monte Carlo cluster integrals.
///
/// The radial CDF of `shell(r) w(r)` is tabulated at 1024 knots and
/// interpolated linearly, so the sampled radius is uniform inside each bin
/// and the density is known exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    nu: usize,
    radius: f64,
    cdf: Vec<f64>,
    /// Share of samples drawn uniformly from the ball, so the density never
    /// vanishes where the weight does.
    uniform_share: f64,
}

const PROPOSAL_KNOTS: usize = 1024;

impl Proposal {
    pub fn from_radial<W: Fn(f64) -> f64>(nu: usize, radius: f64, weight: W) -> Self {
        let (x, w) = gauss_legendre16();
        let h = radius / PROPOSAL_KNOTS as f64;
        let mut cdf = Vec::with_capacity(PROPOSAL_KNOTS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..PROPOSAL_KNOTS {
            let a = i as f64 * h;
            let mut bin = 0.0;
            for j in 0..GL_ORDER {
                let r = a + 0.5 * h * (x[j] + 1.0);
                bin += w[j] * weight(r).abs() * surface(nu, r);
            }
            acc += 0.5 * h * bin;
            cdf.push(acc);
        }
        let uniform_share = if acc > 0.0 && acc.is_finite() { 0.1 } else { 1.0 };
        if acc > 0.0 && acc.is_finite() {
            for c in cdf.iter_mut() {
                *c /= acc;
            }
        }
        Self {
            nu,
            radius,
            cdf,
            uniform_share,
        }
    }

    /// Uniform density on the ball.
    pub fn uniform(nu: usize, radius: f64) -> Self {
        Self::from_radial(nu, radius, |_| 0.0)
    }

    fn sample_radius<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        if rng.gen::<f64>() < self.uniform_share {
            return self.radius * u.powf(1.0 / self.nu as f64);
        }
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, PROPOSAL_KNOTS) - 1;
        let (lo, hi) = (self.cdf[i], self.cdf[i + 1]);
        let t = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        let h = self.radius / PROPOSAL_KNOTS as f64;
        (i as f64 + t) * h
    }

    fn sample<R: Rng>(&self, rng: &mut R, anchor: Point) -> Point {
        let r = self.sample_radius(rng);
        let dir = random_direction(self.nu, rng);
        anchor + dir * r
    }

    /// Density at offset `r` from the anchor.
    fn pdf(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let uni = 1.0 / crate::potential::ball_volume(self.nu, self.radius);
        let h = self.radius / PROPOSAL_KNOTS as f64;
        let i = ((r / h) as usize).min(PROPOSAL_KNOTS - 1);
        let radial = (self.cdf[i + 1] - self.cdf[i]) / h;
        let s = surface(self.nu, r);
        let mayer = if self.uniform_share < 1.0 && s > 0.0 {
            radial / s
        } else {
            0.0
        };
        self.uniform_share * uni + (1.0 - self.uniform_share) * mayer
    }
}

/// Surface measure of the sphere of radius `r` (2 in one dimension).
fn surface(nu: usize, r: f64) -> f64 {
    crate::potential::shell(nu, r)
}

fn random_direction<R: Rng>(nu: usize, rng: &mut R) -> Point {
    use std::f64::consts::PI;
    match nu {
        1 => Point::new1(if rng.gen::<bool>() { 1.0 } else { -1.0 }),
        2 => {
            let t = 2.0 * PI * rng.gen::<f64>();
            Point([t.cos(), t.sin(), 0.0])
        }
        _ => {
            let z = 2.0 * rng.gen::<f64>() - 1.0;
            let t = 2.0 * PI * rng.gen::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            Point([s * t.cos(), s * t.sin(), z])
        }
    }
}

/// Geometry of a cluster integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDomain {
    pub nu: usize,
    /// Every `y_j` is confined to the ball of `radius` around `anchor`.
    pub anchor: Point,
    pub radius: f64,
    /// Points the integrand couples to; kinks sit at `kinks` from each.
    pub fixed: Vec<Point>,
    pub kinks: Vec<f64>,
    /// The integrand is symmetric in the `y_j`, so one dimension integrates
    /// over `y_1 < ... < y_m` only and multiplies by `m!`.
    pub symmetric: bool,
    /// Monte Carlo importance density; uniform on the ball when absent.
    pub proposal: Option<Arc<Proposal>>,
    /// Distinguishes Monte Carlo streams that share a seed.
    pub label: u64,
}

impl ClusterDomain {
    pub fn ball(nu: usize, anchor: Point, radius: f64) -> Self {
        Self {
            nu,
            anchor,
            radius,
            fixed: Vec::new(),
            kinks: Vec::new(),
            symmetric: false,
            proposal: None,
            label: 0,
        }
    }
}

/// Cluster integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterResult<T> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl From<ClusterResult<f64>> for QuadResult {
    fn from(r: ClusterResult<f64>) -> Self {
        QuadResult {
            value: r.value,
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
            converged: r.converged,
        }
    }
}

/// Largest panel count tried by the doubling loop.
pub const MAX_PANELS: usize = 64;

/// `int g(y_1, ..., y_m) dy` over the cluster domain.
///
/// One dimension: panel counts double from `spec.panels` until two
/// successive estimates agree to tolerance; their difference is the error.
/// Two and three dimensions: `spec.samples` importance samples, with the
/// standard error as the estimate.
pub fn integrate_cluster<G>(m: usize, g: G, domain: &ClusterDomain, spec: &QuadSpec) -> Result<QuadResult>
where
    G: Fn(&[Point]) -> f64,
{
    integrate_cluster_many(m, g, domain, spec).map(Into::into)
}

pub fn integrate_cluster_many<T, G>(m: usize, g: G, domain: &ClusterDomain, spec: &QuadSpec) -> Result<ClusterResult<T>>
where
    T: Integrand,
    G: Fn(&[Point]) -> T,
{
    spec.validate()?;
    if domain.nu > 3 || domain.nu == 0 {
        return Err(Error::Unsupported(format!(
            "cluster integral in dimension {}",
            domain.nu
        )));
    }
    if m == 0 {
        return Ok(ClusterResult {
            value: g(&[]),
            error_estimate: 0.0,
            evaluations: 1,
            converged: true,
        });
    }
    if domain.radius <= 0.0 {
        return Ok(ClusterResult {
            value: T::zero(),
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    if domain.nu == 1 {
        let mut panels = spec.panels;
        let (mut prev, mut evals) = nested_gl(m, &g, domain, panels);
        loop {
            let next_panels = panels * 2;
            let (next, e) = nested_gl(m, &g, domain, next_panels);
            evals += e;
            let mut diff = next;
            diff = diff + prev * -1.0;
            let err = diff.max_abs();
            let converged = err <= spec.target(next.max_abs());
            if converged || next_panels >= MAX_PANELS.max(spec.panels) {
                return Ok(ClusterResult {
                    value: next,
                    error_estimate: err,
                    evaluations: evals,
                    converged,
                });
            }
            prev = next;
            panels = next_panels;
        }
    }
    monte_carlo(m, &g, domain, spec)
}

/// Fixed-panel nested Gauss-Legendre sum in one dimension. Returns the
/// estimate and the number of integrand evaluations.
pub fn nested_gl<T, G>(m: usize, g: &G, domain: &ClusterDomain, panels: usize) -> (T, usize)
where
    T: Integrand,
    G: Fn(&[Point]) -> T + ?Sized,
{
    let mut ys = Vec::with_capacity(m);
    let mut evals = 0;
    let mut v = nested_level(m, g, domain, panels.max(1), &mut ys, &mut evals);
    if domain.symmetric {
        v = v * factorial(m);
    }
    (v, evals)
}

fn nested_level<T, G>(m: usize, g: &G, dom: &ClusterDomain, panels: usize, ys: &mut Vec<Point>, evals: &mut usize) -> T
where
    T: Integrand,
    G: Fn(&[Point]) -> T + ?Sized,
{
    let c = dom.anchor.x();
    let mut lo = c - dom.radius;
    let hi = c + dom.radius;
    if dom.symmetric {
        if let Some(last) = ys.last() {
            lo = lo.max(last.x());
        }
    }
    if lo >= hi {
        return T::zero();
    }
    let centers = std::iter::once(c)
        .chain(dom.fixed.iter().map(Point::x))
        .chain(ys.iter().map(Point::x));
    let mut breaks = Vec::new();
    for p in centers {
        // inner limits cross kinks when y sits exactly on a center
        breaks.push(p);
        for &k in &dom.kinks {
            breaks.push(p - k);
            breaks.push(p + k);
        }
    }
    let pts = segment_points(lo, hi, breaks);
    let (x, w) = gauss_legendre16();
    let mut acc = T::zero();
    for seg in pts.windows(2) {
        let h = (seg[1] - seg[0]) / panels as f64;
        for k in 0..panels {
            let a = seg[0] + k as f64 * h;
            let half = 0.5 * h;
            for j in 0..GL_ORDER {
                let y = a + half * (x[j] + 1.0);
                ys.push(Point::new1(y));
                let v = if ys.len() == m {
                    *evals += 1;
                    g(ys)
                } else {
                    nested_level(m, g, dom, panels, ys, evals)
                };
                ys.pop();
                acc = acc + v * (w[j] * half);
            }
        }
    }
    acc
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

/// Deterministic RNG for a `(seed, label)` pair.
pub(crate) fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    // splitmix64 finaliser so that nearby labels give unrelated seeds
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

fn monte_carlo<T, G>(m: usize, g: &G, dom: &ClusterDomain, spec: &QuadSpec) -> Result<ClusterResult<T>>
where
    T: Integrand,
    G: Fn(&[Point]) -> T + ?Sized,
{
    let uniform;
    let proposal = match &dom.proposal {
        Some(p) => p,
        None => {
            uniform = Proposal::uniform(dom.nu, dom.radius);
            &uniform
        }
    };
    let mut rng = stream(spec.seed, dom.label);
    let n = spec.samples;
    let mut sum = T::zero();
    // second moment tracked on the largest component
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut ys = vec![Point::ORIGIN; m];
    for _ in 0..n {
        let mut density = 1.0;
        for y in ys.iter_mut() {
            *y = proposal.sample(&mut rng, dom.anchor);
            density *= proposal.pdf((*y - dom.anchor).norm());
        }
        let v = if density > 0.0 {
            g(&ys) * (1.0 / density)
        } else {
            T::zero()
        };
        let a = v.max_abs();
        sum = sum + v;
        s1 += a;
        s2 += a * a;
    }
    let nf = n as f64;
    let mean = sum * (1.0 / nf);
    let var = (s2 / nf - (s1 / nf).powi(2)).max(0.0) * nf / (nf - 1.0);
    let stderr = (var / nf).sqrt();
    if !stderr.is_finite() || !mean.max_abs().is_finite() {
        return Ok(ClusterResult {
            value: mean,
            error_estimate: f64::INFINITY,
            evaluations: n,
            converged: false,
        });
    }
    Ok(ClusterResult {
        value: mean,
        error_estimate: stderr,
        evaluations: n,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadSpec {
        QuadSpec::default().with_tol(1e-12, 1e-12)
    }

    fn ind(r: f64) -> f64 {
        if r < 1.0 {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn constant_over_ball() {
        let dom = ClusterDomain::ball(1, Point::new1(0.3), 1.7);
        let r = integrate_cluster(1, |_| 1.0, &dom, &spec()).unwrap();
        assert!((r.value - 3.4).abs() < 1e-13);
    }

    #[test]
    fn product_of_indicators() {
        let mut dom = ClusterDomain::ball(1, Point::ORIGIN, 1.0);
        dom.kinks = vec![1.0];
        let g = |y: &[Point]| ind(y[0].norm()) * ind(y[1].norm());
        let r = integrate_cluster(2, g, &dom, &spec()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_overlap() {
        let mut dom = ClusterDomain::ball(1, Point::ORIGIN, 1.0);
        dom.kinks = vec![1.0];
        let g = |y: &[Point]| ind(y[0].norm()) * ind(y[1].norm()) * ind((y[0] - y[1]).norm());
        let r = integrate_cluster(2, g, &dom, &spec()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12, "{}", r.value);
        dom.symmetric = true;
        let s = integrate_cluster(2, g, &dom, &spec()).unwrap();
        assert!((s.value - 3.0).abs() < 1e-12, "{}", s.value);
    }

    #[test]
    fn unsupported_dimension() {
        let dom = ClusterDomain::ball(4, Point::ORIGIN, 1.0);
        assert!(matches!(
            integrate_cluster(1, |_| 1.0, &dom, &spec()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn monte_carlo_disk_area() {
        let mut dom = ClusterDomain::ball(2, Point::ORIGIN, 1.0);
        dom.proposal = Some(Arc::new(Proposal::from_radial(2, 1.0, |r| 1.0 - r * r)));
        let s = QuadSpec::default().with_samples(20_000);
        let r = integrate_cluster(1, |_| 1.0, &dom, &s).unwrap();
        let truth = std::f64::consts::PI;
        assert!((r.value - truth).abs() <= 4.0 * r.error_estimate, "{r:?}");
    }

    #[test]
    fn monte_carlo_two_points_three_d() {
        // int_{|y1|,|y2|<1} 1 = (4 pi / 3)^2
        let mut dom = ClusterDomain::ball(3, Point::ORIGIN, 1.0);
        dom.proposal = Some(Arc::new(Proposal::from_radial(3, 1.0, |r| (-r * r).exp())));
        let s = QuadSpec::default().with_samples(40_000);
        let r = integrate_cluster(2, |_| 1.0, &dom, &s).unwrap();
        let truth = (4.0 * std::f64::consts::PI / 3.0).powi(2);
        assert!((r.value - truth).abs() <= 4.0 * r.error_estimate, "{r:?}");
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let mut dom = ClusterDomain::ball(3, Point::ORIGIN, 1.0);
        dom.proposal = Some(Arc::new(Proposal::from_radial(3, 1.0, |r| 1.0 - r)));
        dom.label = 17;
        let g = |y: &[Point]| (y[0] - y[1]).norm();
        let a = integrate_cluster(2, g, &dom, &spec()).unwrap();
        let b = integrate_cluster(2, g, &dom, &spec()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        dom.label = 18;
        let c = integrate_cluster(2, g, &dom, &spec()).unwrap();
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn vector_integrand_matches_scalars() {
        let mut dom = ClusterDomain::ball(1, Point::ORIGIN, 1.0);
        dom.kinks = vec![1.0];
        let g = |y: &[Point]| Many([y[0].x().powi(2), y[0].x().cos()]);
        let r = integrate_cluster_many(1, g, &dom, &spec()).unwrap();
        assert!((r.value.0[0] - 2.0 / 3.0).abs() < 1e-13);
        assert!((r.value.0[1] - 2.0 * 1f64.sin()).abs() < 1e-13);
    }
}
