//! Suppliers of correlation functions `rho_n` for the residual checks.
//!
//! Every supplier can answer at two quadrature resolutions. Residuals are
//! computed at both and their difference is charged to the quadrature
//! budget.

use crate::error::{Error, Result};
use crate::hardrod::{tonks_density, TonksParams};
use crate::integrate::QuadSpec;
use crate::mayer::{series_tail, CoeffEngine, SeriesValue};
use crate::point::Point;
use crate::potential::PairPotential;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Coarse,
    Fine,
}

impl Level {
    /// Panel multiplier for integrals computed at this level.
    pub fn panels(self, base: usize) -> usize {
        match self {
            Level::Coarse => base,
            Level::Fine => 2 * base,
        }
    }

    /// Monte Carlo seed offset for this level.
    pub fn seed(self, base: u64) -> u64 {
        match self {
            Level::Coarse => base,
            Level::Fine => base ^ 0x9E37_79B9_7F4A_7C15,
        }
    }

    pub fn spec(self, base: &QuadSpec) -> QuadSpec {
        base.with_panels(self.panels(base.panels))
            .with_seed(self.seed(base.seed))
    }
}

/// A correlation value with a rigorous bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    /// Truncation tail; infinite outside the convergence radius.
    pub tail: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, tail: 0.0 }
    }
}

pub trait Correlations: Sync {
    fn nu(&self) -> usize;

    /// `rho_n` at the given points.
    fn rho(&self, points: &[Point], level: Level) -> Result<Estimate>;

    /// `exp(beta W_{q1}(rest)) rho_n(q1, rest)`.
    fn rho_hat(&self, q1: Point, rest: &[Point], level: Level) -> Result<Estimate>;

    /// A constant with `rho_k <= xi^k` for the true correlation functions.
    fn xi(&self) -> f64;

    /// Bound on `sup |rho_k|`, valid for the supplied function and the
    /// exact one.
    fn rho_bound(&self, k: usize) -> f64 {
        self.xi().powi(k as i32)
    }

    /// `rho_n` keeping only activity powers `<= max_power`. The tail bounds
    /// what was dropped. Suppliers that are not power series return `rho`.
    fn rho_upto(&self, points: &[Point], level: Level, max_power: usize) -> Result<Estimate> {
        let _ = max_power;
        self.rho(points, level)
    }

    /// Bound on `sup |rho_hat_k|`.
    fn hat_bound(&self, k: usize) -> f64;

    /// Largest `n` with `rho_n` not identically zero, if finite.
    fn max_order(&self) -> Option<usize>;

    /// True for truncated series: `rho_n` is a polynomial in the activity,
    /// so identities that hold order by order hold exactly up to quadrature.
    fn graded(&self) -> bool;
}

/// Uncorrelated gas, `rho_n = rho^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealGas {
    pub rho: f64,
    pub nu: usize,
}

impl Correlations for IdealGas {
    fn nu(&self) -> usize {
        self.nu
    }
    fn rho(&self, points: &[Point], _: Level) -> Result<Estimate> {
        Ok(Estimate::exact(self.rho.powi(points.len() as i32)))
    }
    fn rho_hat(&self, _: Point, rest: &[Point], _: Level) -> Result<Estimate> {
        Ok(Estimate::exact(self.rho.powi(rest.len() as i32 + 1)))
    }
    fn xi(&self) -> f64 {
        self.rho
    }
    fn hat_bound(&self, k: usize) -> f64 {
        self.rho.powi(k as i32)
    }
    fn max_order(&self) -> Option<usize> {
        None
    }
    fn graded(&self) -> bool {
        false
    }
}

/// Exact hard-rod correlations, extended by zero to overlaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TonksGas {
    pub params: TonksParams,
}

impl Correlations for TonksGas {
    fn nu(&self) -> usize {
        1
    }
    fn rho(&self, points: &[Point], _: Level) -> Result<Estimate> {
        let xs: Vec<f64> = points.iter().map(Point::x).collect();
        Ok(Estimate::exact(tonks_density(&xs, &self.params)))
    }
    fn rho_hat(&self, _: Point, _: &[Point], _: Level) -> Result<Estimate> {
        Err(Error::Unsupported(
            "Boltzmann-reweighted correlations of hard rods".into(),
        ))
    }
    /// `rho_n <= rho R^{n-1} <= R^n`, since `rho_2` peaks at contact.
    fn xi(&self) -> f64 {
        self.params.r()
    }
    fn hat_bound(&self, _: usize) -> f64 {
        f64::INFINITY
    }
    fn max_order(&self) -> Option<usize> {
        None
    }
    fn graded(&self) -> bool {
        false
    }
}

/// Mayer series `rho_n = z sum_{p <= P} c_{n,p} z^p` with certified tails.
#[derive(Debug)]
pub struct MayerSeries {
    z: f64,
    order: usize,
    i_beta: f64,
    coarse: Arc<CoeffEngine>,
    fine: Arc<CoeffEngine>,
}

impl MayerSeries {
    pub fn new(pot: PairPotential, beta: f64, nu: usize, z: f64, order: usize, quad: &QuadSpec) -> Result<Self> {
        if !z.is_finite() {
            return crate::error::domain("activity must be finite");
        }
        let i = pot.i_beta(beta, nu, quad)?;
        Ok(Self {
            z,
            order,
            i_beta: i.value + i.error_estimate,
            coarse: Arc::new(CoeffEngine::new(pot, beta, nu, order, &Level::Coarse.spec(quad))?),
            fine: Arc::new(CoeffEngine::new(pot, beta, nu, order, &Level::Fine.spec(quad))?),
        })
    }

    /// The same series at another activity. Coefficient caches are shared.
    pub fn with_activity(&self, z: f64) -> Result<Self> {
        if !z.is_finite() {
            return crate::error::domain("activity must be finite");
        }
        Ok(Self {
            z,
            order: self.order,
            i_beta: self.i_beta,
            coarse: Arc::clone(&self.coarse),
            fine: Arc::clone(&self.fine),
        })
    }

    /// `c_{1,p}` for `p <= P` with the coarse/fine gap as error.
    pub fn density_coefficients(&self) -> Result<Vec<(f64, f64)>> {
        let o = [Point::ORIGIN];
        (0..=self.order)
            .map(|p| {
                let f = self.fine.coeff(p, &o)?;
                let c = self.coarse.coeff(p, &o)?;
                Ok((f, (f - c).abs()))
            })
            .collect()
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Upper value of `I_beta` used in every bound.
    pub fn i_beta(&self) -> f64 {
        self.i_beta
    }

    pub fn engine(&self, level: Level) -> &CoeffEngine {
        match level {
            Level::Coarse => &self.coarse,
            Level::Fine => &self.fine,
        }
    }

    pub fn potential(&self) -> &PairPotential {
        self.fine.potential()
    }

    pub fn beta(&self) -> f64 {
        self.fine.beta()
    }

    /// True when `|z|` is inside the radius where the tail bound holds.
    pub fn within_radius(&self) -> bool {
        self.z.abs() * self.i_beta * std::f64::consts::E < 1.0
    }

    fn sum<F: Fn(usize) -> Result<f64>>(&self, n: usize, coeff: F) -> Result<f64> {
        let mut v = 0.0;
        let mut zp = self.z;
        for p in 0..=self.order {
            if p + 1 >= n {
                v += zp * coeff(p)?;
            }
            zp *= self.z;
        }
        Ok(v)
    }

    /// Series value from the fine engine with the coarse/fine gap as its
    /// quadrature error.
    pub fn rho_series(&self, points: &[Point]) -> Result<SeriesValue> {
        let fine = self.rho(points, Level::Fine)?;
        let coarse = self.rho(points, Level::Coarse)?;
        Ok(SeriesValue {
            value: fine.value,
            tail_bound: fine.tail,
            truncation_order: self.order,
            quad_error: (fine.value - coarse.value).abs(),
        })
    }
}

impl Correlations for MayerSeries {
    fn nu(&self) -> usize {
        self.fine.nu()
    }

    fn rho(&self, points: &[Point], level: Level) -> Result<Estimate> {
        let n = points.len();
        let e = self.engine(level);
        Ok(Estimate {
            value: self.sum(n, |p| e.coeff(p, points))?,
            tail: series_tail(n, self.z, self.order, self.i_beta),
        })
    }

    fn rho_upto(&self, points: &[Point], level: Level, max_power: usize) -> Result<Estimate> {
        let n = points.len();
        if max_power > self.order {
            return self.rho(points, level);
        }
        if max_power < n {
            // nothing survives; the whole function is tail
            return Ok(Estimate {
                value: 0.0,
                tail: full_sum(n, self.z, self.i_beta),
            });
        }
        let e = self.engine(level);
        let mut v = 0.0;
        let mut zp = self.z.powi(n as i32);
        for p in n - 1..max_power {
            v += zp * e.coeff(p, points)?;
            zp *= self.z;
        }
        Ok(Estimate {
            value: v,
            tail: series_tail(n, self.z, max_power - 1, self.i_beta),
        })
    }

    fn rho_hat(&self, q1: Point, rest: &[Point], level: Level) -> Result<Estimate> {
        let n = rest.len() + 1;
        let e = self.engine(level);
        Ok(Estimate {
            value: self.sum(n, |p| e.coeff_hat(p, q1, rest))?,
            tail: series_tail(n, self.z, self.order, self.i_beta),
        })
    }

    /// From `|c_{n,p}| <= I^{-(n-1)} (I e)^p`, `p >= n-1`:
    /// `|rho_k| <= (|z| e)^k / (e (1 - |z| I e))`.
    fn xi(&self) -> f64 {
        let x = self.z.abs() * self.i_beta * std::f64::consts::E;
        if x >= 1.0 {
            return f64::INFINITY;
        }
        let c = 1.0 / (std::f64::consts::E * (1.0 - x));
        self.z.abs() * std::f64::consts::E * c.max(1.0)
    }

    /// `sum_{p >= k-1} |z|^{p+1} I^{p-k+1} e^p = (|z| e)^k / (e (1 - |z| I e))`;
    /// the hat coefficients obey the same bound.
    fn rho_bound(&self, k: usize) -> f64 {
        full_sum(k, self.z, self.i_beta)
    }

    fn hat_bound(&self, k: usize) -> f64 {
        self.rho_bound(k)
    }

    fn max_order(&self) -> Option<usize> {
        Some(self.order + 1)
    }

    fn graded(&self) -> bool {
        true
    }
}

fn full_sum(k: usize, z: f64, i_beta: f64) -> f64 {
    let x = z.abs() * i_beta * std::f64::consts::E;
    if x >= 1.0 {
        return f64::INFINITY;
    }
    (z.abs() * std::f64::consts::E).powi(k as i32) / (std::f64::consts::E * (1.0 - x))
}
