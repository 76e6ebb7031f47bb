//! Quadrature engines with explicit error accounting.
//!
//! One-dimensional integrals go through [`integrate_radial`], an adaptive
//! Gauss-Kronrod scheme that splits at caller-supplied breakpoints. Cluster
//! integrals over several points go through [`cluster`]: nested
//! Gauss-Legendre panels in one dimension, importance-sampled Monte Carlo in
//! two and three.

pub mod cluster;
pub mod rules;

pub use cluster::{
    integrate_cluster, integrate_cluster_many, nested_gl, ClusterDomain, ClusterResult, Integrand, Many, Proposal,
};

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate, always >= 0.
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of adaptive subintervals; also caps panel doublings.
    pub max_depth: usize,
    /// Seed for every Monte Carlo estimate.
    pub seed: u64,
    /// Gauss-Legendre panels per knot segment in nested cluster integrals.
    pub panels: usize,
    /// Monte Carlo samples per cluster integral (nu >= 2).
    pub samples: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 2000,
            seed: 0x5eed,
            panels: 1,
            samples: 4096,
        }
    }
}

impl QuadSpec {
    pub fn with_tol(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return domain("quadrature tolerances must be positive");
        }
        if self.max_depth == 0 || self.panels == 0 || self.samples < 2 {
            return domain("max_depth and panels must be >= 1, samples >= 2");
        }
        Ok(())
    }

    pub(crate) fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Where a one-dimensional integrand lives.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// `[a, b]` with interior discontinuities or kinks at `breaks`.
    Interval { a: f64, b: f64, breaks: Vec<f64> },
    /// The whole real line, for integrands with known decay.
    Whole { breaks: Vec<f64> },
}

impl Support {
    pub fn interval(a: f64, b: f64, breaks: &[f64]) -> Self {
        Support::Interval {
            a,
            b,
            breaks: breaks.to_vec(),
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Sorted, deduplicated breakpoints strictly inside `(a, b)`, with the
/// endpoints prepended and appended.
pub(crate) fn segment_points(a: f64, b: f64, breaks: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(1.0);
    let eps = 1e-13 * scale;
    let mut pts: Vec<f64> = breaks.into_iter().filter(|&x| x > a + eps && x < b - eps).collect();
    pts.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(pts.len() + 2);
    out.push(a);
    for x in pts {
        if x - out[out.len() - 1] > eps {
            out.push(x);
        }
    }
    out.push(b);
    out
}

/// Adaptive Gauss-Kronrod integration of a scalar function.
///
/// Subdivides the panel with the largest error until the summed error
/// estimate falls below `max(abs_tol, rel_tol |I|)`. Running out of
/// `max_depth` panels returns the achieved result with `converged = false`.
pub fn integrate_radial<F: Fn(f64) -> f64>(f: F, support: &Support, spec: &QuadSpec) -> Result<QuadResult> {
    spec.validate()?;
    match support {
        Support::Interval { a, b, breaks } => {
            if !(a.is_finite() && b.is_finite()) {
                return domain("interval support needs finite endpoints");
            }
            if a == b {
                return Ok(QuadResult::exact(0.0));
            }
            let (lo, hi, sign) = if a < b { (*a, *b, 1.0) } else { (*b, *a, -1.0) };
            let pts = segment_points(lo, hi, breaks.iter().copied());
            let mut res = adaptive(&mut |x| f(x), &pts, spec);
            res.value *= sign;
            Ok(res)
        }
        Support::Whole { breaks } => {
            // x = t / (1 - t^2) maps (-1, 1) onto the real line
            let to_t = |x: f64| {
                if x == 0.0 {
                    0.0
                } else {
                    (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x)
                }
            };
            let pts = segment_points(-1.0, 1.0, breaks.iter().map(|&x| to_t(x)));
            let mut g = |t: f64| {
                let d = 1.0 - t * t;
                if d <= 0.0 {
                    return 0.0;
                }
                let x = t / d;
                let v = f(x) * (1.0 + t * t) / (d * d);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            Ok(adaptive(&mut g, &pts, spec))
        }
    }
}

fn adaptive<F: FnMut(f64) -> f64>(f: &mut F, pts: &[f64], spec: &QuadSpec) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in pts.windows(2) {
        let r = rules::gk21(f, w[0], w[1]);
        evaluations += 21;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: r.value,
            error: r.error,
        });
    }
    let totals = |heap: &BinaryHeap<Panel>| heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    loop {
        let (value, error) = totals(&heap);
        if error <= spec.target(value) || !error.is_finite() {
            return QuadResult {
                value,
                error_estimate: error,
                evaluations,
                converged: error.is_finite(),
            };
        }
        if heap.len() >= spec.max_depth {
            return QuadResult {
                value,
                error_estimate: error,
                evaluations,
                converged: false,
            };
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // cannot split further in floating point
            heap.push(worst);
            let (value, error) = totals(&heap);
            return QuadResult {
                value,
                error_estimate: error,
                evaluations,
                converged: false,
            };
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let r = rules::gk21(f, a, b);
            evaluations += 21;
            heap.push(Panel {
                a,
                b,
                value: r.value,
                error: r.error,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadSpec {
        QuadSpec::default().with_tol(1e-13, 1e-13)
    }

    #[test]
    fn indicator_with_breaks() {
        let f = |x: f64| if x.abs() < 1.0 { 1.0 } else { 0.0 };
        let r = integrate_radial(f, &Support::interval(-3.0, 3.0, &[-1.0, 1.0]), &spec()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_on_line() {
        let r = integrate_radial(|x: f64| (-x * x).exp(), &Support::Whole { breaks: vec![] }, &spec()).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-12, "{}", r.value);
        assert!((r.value - 1.7724539).abs() < 1e-7);
    }

    #[test]
    fn zero_integrand() {
        let r = integrate_radial(|_| 0.0, &Support::interval(0.0, 5.0, &[]), &spec()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.error_estimate, 0.0);
    }

    #[test]
    fn non_converged_is_flagged() {
        let tight = QuadSpec { max_depth: 3, ..spec() };
        let r = integrate_radial(
            |x: f64| x.abs().sqrt().recip(),
            &Support::interval(0.0, 1.0, &[]),
            &tight,
        )
        .unwrap();
        assert!(!r.converged);
        assert!(r.error_estimate > 0.0);
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let r = integrate_radial(|x: f64| x, &Support::interval(1.0, 0.0, &[]), &spec()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    /// Twenty integrands with closed forms; the error estimate must cover the
    /// true error up to a factor three.
    #[test]
    fn error_honesty() {
        type Case = (Box<dyn Fn(f64) -> f64>, Support, f64);
        let iv = |a: f64, b: f64| Support::interval(a, b, &[]);
        let cases: Vec<Case> = vec![
            (Box::new(|x: f64| x * x), iv(0.0, 1.0), 1.0 / 3.0),
            (Box::new(|x: f64| x.sin()), iv(0.0, PI), 2.0),
            (Box::new(|x: f64| x.exp()), iv(0.0, 1.0), 1f64.exp() - 1.0),
            (Box::new(|x: f64| 1.0 / (1.0 + x * x)), iv(0.0, 1.0), PI / 4.0),
            (Box::new(|x: f64| x.sqrt()), iv(0.0, 1.0), 2.0 / 3.0),
            (Box::new(|x: f64| x.ln()), iv(1.0, 2.0), 2f64.ln() * 2.0 - 1.0),
            (
                Box::new(|x: f64| (-x * x).exp()),
                Support::Whole { breaks: vec![] },
                PI.sqrt(),
            ),
            (
                Box::new(|x: f64| 1.0 / (1.0 + x * x)),
                Support::Whole { breaks: vec![] },
                PI,
            ),
            (Box::new(|x: f64| x.cos().powi(2)), iv(0.0, 2.0 * PI), PI),
            (Box::new(|x: f64| (10.0 * x).sin()), iv(0.0, PI), 0.0),
            (Box::new(|x: f64| x.abs()), Support::interval(-1.0, 1.0, &[0.0]), 1.0),
            (Box::new(|x: f64| x.abs()), iv(-1.0, 2.0), 2.5),
            (Box::new(|x: f64| (-x).exp()), iv(0.0, 40.0), 1.0 - (-40f64).exp()),
            (
                Box::new(|x: f64| x.powi(7) - 3.0 * x),
                iv(-2.0, 3.0),
                (3f64.powi(8) - 256.0) / 8.0 - 1.5 * (9.0 - 4.0),
            ),
            (Box::new(|x: f64| 1.0 / x), iv(1.0, 10.0), 10f64.ln()),
            (
                Box::new(|x: f64| (1.0 - x * x).max(0.0).sqrt()),
                iv(-1.0, 1.0),
                PI / 2.0,
            ),
            (
                Box::new(|x: f64| x * (-x * x).exp()),
                iv(0.0, 3.0),
                0.5 * (1.0 - (-9f64).exp()),
            ),
            (Box::new(|x: f64| if x < 0.3 { 1.0 } else { 2.0 }), iv(0.0, 1.0), 1.7),
            (Box::new(|x: f64| (x * x).cosh()), iv(0.0, 0.0), 0.0),
            (Box::new(|x: f64| 1.0 / x.sqrt()), iv(0.0, 1.0), 2.0),
        ];
        let spec = QuadSpec::default().with_tol(1e-10, 1e-10);
        for (i, (f, s, truth)) in cases.iter().enumerate() {
            let r = integrate_radial(f, s, &spec).unwrap();
            let err = (r.value - truth).abs();
            assert!(
                err <= 3.0 * r.error_estimate || err < 1e-15,
                "case {i}: value {} truth {truth} err {err:e} est {:e}",
                r.value,
                r.error_estimate
            );
        }
    }

    #[test]
    fn linearity() {
        let s = Support::interval(0.0, 2.0, &[]);
        let f = |x: f64| (x * 3.0).sin();
        let g = |x: f64| x.exp();
        let alpha = 2.5;
        let lhs = integrate_radial(|x| alpha * f(x) + g(x), &s, &spec()).unwrap();
        let rf = integrate_radial(f, &s, &spec()).unwrap();
        let rg = integrate_radial(g, &s, &spec()).unwrap();
        let rhs = alpha * rf.value + rg.value;
        let tol = lhs.error_estimate + alpha * rf.error_estimate + rg.error_estimate;
        assert!((lhs.value - rhs).abs() <= tol.max(1e-14));
    }
}
