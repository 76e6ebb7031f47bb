//! Radial, nonnegative pair potentials and the integral constants built on
//! their Mayer functions.
//!
//! Every builtin potential is nonnegative, so the stability constant is
//! exactly zero and every bound in the crate is written with `B = 0`.

use crate::error::{domain, Error, Result};
use crate::integrate::{integrate_radial, QuadResult, QuadSpec, Support};
use crate::point::Point;
use serde::{Deserialize, Serialize};

/// Below this value of `beta * phi` a Gaussian bump is treated as zero when
/// choosing integration ranges.
pub const GAUSSIAN_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialKind {
    /// `A exp(-r^2 / sigma^2)`.
    GaussianBump { amplitude: f64, sigma: f64 },
    /// `(1 - r^2/d^2)^2 / epsilon` inside the core, zero outside.
    SoftCore { d: f64, epsilon: f64 },
    /// Infinite inside `|q| < d`, zero for `|q| >= d`.
    HardRod { d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialKind", into = "PotentialKind")]
pub struct PairPotential {
    kind: PotentialKind,
}

impl TryFrom<PotentialKind> for PairPotential {
    type Error = Error;
    fn try_from(kind: PotentialKind) -> Result<Self> {
        PairPotential::new(kind)
    }
}

impl From<PairPotential> for PotentialKind {
    fn from(p: PairPotential) -> Self {
        p.kind
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be finite and positive, got {v}"))
    }
}

impl PairPotential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        match kind {
            PotentialKind::GaussianBump { amplitude, sigma } => {
                // amplitude zero is the free gas; negative amplitudes are signed
                // potentials and are not admissible.
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return domain(format!(
                        "GaussianBump amplitude must be finite and >= 0, got {amplitude}"
                    ));
                }
                positive("GaussianBump sigma", sigma)?;
            }
            PotentialKind::SoftCore { d, epsilon } => {
                positive("SoftCore d", d)?;
                positive("SoftCore epsilon", epsilon)?;
            }
            PotentialKind::HardRod { d } => positive("HardRod d", d)?,
        }
        Ok(Self { kind })
    }

    pub fn gaussian_bump(amplitude: f64, sigma: f64) -> Result<Self> {
        Self::new(PotentialKind::GaussianBump { amplitude, sigma })
    }

    pub fn soft_core(d: f64, epsilon: f64) -> Result<Self> {
        Self::new(PotentialKind::SoftCore { d, epsilon })
    }

    pub fn hard_rod(d: f64) -> Result<Self> {
        Self::new(PotentialKind::HardRod { d })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.kind, PotentialKind::HardRod { .. })
    }

    /// Core diameter for the compactly supported kinds.
    pub fn diameter(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::SoftCore { d, .. } | PotentialKind::HardRod { d } => Some(d),
            PotentialKind::GaussianBump { .. } => None,
        }
    }

    /// Nominal support radius; infinite for the Gaussian bump.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            PotentialKind::GaussianBump { amplitude, .. } if amplitude == 0.0 => 0.0,
            PotentialKind::GaussianBump { .. } => f64::INFINITY,
            PotentialKind::SoftCore { d, .. } | PotentialKind::HardRod { d } => d,
        }
    }

    /// Radius beyond which the Mayer function at inverse temperature `beta`
    /// is zero or below the Gaussian cutoff.
    pub fn effective_radius(&self, beta: f64) -> f64 {
        match self.kind {
            PotentialKind::GaussianBump { amplitude, sigma } => {
                let peak = beta * amplitude;
                if peak <= GAUSSIAN_CUTOFF {
                    0.0
                } else {
                    sigma * (peak / GAUSSIAN_CUTOFF).ln().sqrt()
                }
            }
            _ => self.support_radius(),
        }
    }

    /// Radii where the Mayer function has a kink or a steep transition. Panel
    /// boundaries are placed at these distances from every known point.
    pub fn knot_radii(&self, beta: f64) -> Vec<f64> {
        match self.kind {
            PotentialKind::GaussianBump { .. } => Vec::new(),
            PotentialKind::HardRod { d } => vec![d],
            PotentialKind::SoftCore { d, epsilon } => {
                // beta*phi = 1 at this radius; the Mayer function switches off
                // over the shell between it and d.
                let s = (epsilon / beta).sqrt();
                if s < 1.0 {
                    vec![d * (1.0 - s).sqrt(), d]
                } else {
                    vec![d]
                }
            }
        }
    }

    /// `phi(r)` for a distance `r >= 0`.
    pub fn phi_radial(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::GaussianBump { amplitude, sigma } => amplitude * (-(r * r) / (sigma * sigma)).exp(),
            PotentialKind::SoftCore { d, epsilon } => {
                if r <= d {
                    let u = 1.0 - r * r / (d * d);
                    u * u / epsilon
                } else {
                    0.0
                }
            }
            PotentialKind::HardRod { d } => {
                if r < d {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    /// `d phi / d r`; not defined for hard rods.
    pub fn dphi_radial(&self, r: f64) -> Result<f64> {
        match self.kind {
            PotentialKind::GaussianBump { amplitude, sigma } => {
                let s2 = sigma * sigma;
                Ok(-2.0 * r / s2 * amplitude * (-(r * r) / s2).exp())
            }
            PotentialKind::SoftCore { d, epsilon } => {
                if r < d {
                    let d2 = d * d;
                    Ok(-4.0 * r / d2 * (1.0 - r * r / d2) / epsilon)
                } else {
                    Ok(0.0)
                }
            }
            PotentialKind::HardRod { .. } => Err(Error::Unsupported("differentiation of a hard-rod potential".into())),
        }
    }

    /// Mayer function `1 - exp(-beta phi(r))`.
    pub fn mayer_radial(&self, beta: f64, r: f64) -> f64 {
        match self.kind {
            PotentialKind::HardRod { d } => {
                if r < d {
                    1.0
                } else {
                    0.0
                }
            }
            _ => -(-beta * self.phi_radial(r)).exp_m1(),
        }
    }

    /// Radial derivative of the Mayer function, `beta phi'(r) exp(-beta phi(r))`.
    pub fn dmayer_radial(&self, beta: f64, r: f64) -> Result<f64> {
        let dphi = self.dphi_radial(r)?;
        Ok(beta * dphi * (-beta * self.phi_radial(r)).exp())
    }

    pub fn eval_phi(&self, q: Point) -> Result<f64> {
        if !q.is_finite() {
            return domain("potential evaluated at a non-finite point");
        }
        Ok(self.phi_radial(q.norm()))
    }

    pub fn mayer_f(&self, beta: f64, q: Point) -> Result<f64> {
        check_beta(beta)?;
        if !q.is_finite() {
            return domain("Mayer function evaluated at a non-finite point");
        }
        Ok(self.mayer_radial(beta, q.norm()))
    }

    /// `grad phi(q)`.
    pub fn grad_phi(&self, q: Point) -> Result<Point> {
        let r = q.norm();
        if r == 0.0 {
            // every builtin smooth potential is flat at the origin
            self.dphi_radial(0.0)?;
            return Ok(Point::ORIGIN);
        }
        Ok(q * (self.dphi_radial(r)? / r))
    }

    /// `grad (1 - exp(-beta phi(q)))`.
    pub fn grad_mayer(&self, beta: f64, q: Point) -> Result<Point> {
        check_beta(beta)?;
        if !q.is_finite() {
            return domain("Mayer gradient evaluated at a non-finite point");
        }
        let g = self.grad_phi(q)?;
        Ok(g * (beta * (-beta * self.phi_radial(q.norm())).exp()))
    }

    /// `W_q(others) = sum_i phi(q - q_i)`.
    pub fn w_energy(&self, q: Point, others: &[Point]) -> f64 {
        others.iter().map(|&o| self.phi_radial((q - o).norm())).sum()
    }

    /// `grad_q W_q(others)`.
    pub fn grad_w(&self, q: Point, others: &[Point]) -> Result<Point> {
        others
            .iter()
            .try_fold(Point::ORIGIN, |acc, &o| Ok(acc + self.grad_phi(q - o)?))
    }

    /// Total pair energy `sum_{i<j} phi(q_i - q_j)`.
    pub fn pair_energy(&self, config: &[Point]) -> f64 {
        let mut e = 0.0;
        for (i, &a) in config.iter().enumerate() {
            for &b in &config[i + 1..] {
                e += self.phi_radial((a - b).norm());
            }
        }
        e
    }

    /// `I_beta = int |1 - exp(-beta phi)| dx` over R^nu.
    pub fn i_beta(&self, beta: f64, nu: usize, quad: &QuadSpec) -> Result<QuadResult> {
        check_beta(beta)?;
        check_nu(nu)?;
        if let PotentialKind::HardRod { d } = self.kind {
            return Ok(QuadResult::exact(ball_volume(nu, d)));
        }
        let radius = self.effective_radius(beta);
        if radius == 0.0 {
            return Ok(QuadResult::exact(0.0));
        }
        let breaks = self.knot_radii(beta);
        let f = |r: f64| self.mayer_radial(beta, r).abs() * shell(nu, r);
        let mut res = integrate_radial(f, &Support::interval(0.0, radius, &breaks), quad)?;
        res.error_estimate += self.gaussian_tail(beta, nu, radius, quad)?;
        Ok(res)
    }

    /// `J_beta = int |grad(1 - exp(-beta phi))| dx` over R^nu.
    pub fn j_beta(&self, beta: f64, nu: usize, quad: &QuadSpec) -> Result<QuadResult> {
        check_beta(beta)?;
        check_nu(nu)?;
        if self.is_singular() {
            return Err(Error::Unsupported("J_beta of a hard-rod potential".into()));
        }
        let radius = self.effective_radius(beta);
        if radius == 0.0 {
            return Ok(QuadResult::exact(0.0));
        }
        let breaks = self.knot_radii(beta);
        let f = |r: f64| {
            self.dmayer_radial(beta, r)
                .map(|v| v.abs() * shell(nu, r))
                .unwrap_or(f64::NAN)
        };
        let res = integrate_radial(f, &Support::interval(0.0, radius, &breaks), quad)?;
        Ok(res)
    }

    /// Bound on the Mayer integral beyond the Gaussian cutoff radius, using
    /// `1 - exp(-x) <= x`.
    fn gaussian_tail(&self, beta: f64, nu: usize, radius: f64, quad: &QuadSpec) -> Result<f64> {
        match self.kind {
            PotentialKind::GaussianBump { sigma, .. } => {
                let f = |r: f64| beta * self.phi_radial(r) * shell(nu, r);
                let tail = integrate_radial(f, &Support::interval(radius, radius + 10.0 * sigma, &[]), quad)?;
                Ok(tail.value.abs() + tail.error_estimate)
            }
            _ => Ok(0.0),
        }
    }
}

/// Surface measure factor for radial integration in R^nu; the factor two in
/// one dimension accounts for both half-lines.
pub fn shell(nu: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    match nu {
        1 => 2.0,
        2 => 2.0 * PI * r,
        _ => 4.0 * PI * r * r,
    }
}

pub fn ball_volume(nu: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    match nu {
        1 => 2.0 * r,
        2 => PI * r * r,
        _ => 4.0 / 3.0 * PI * r * r * r,
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        domain(format!("beta must be finite and positive, got {beta}"))
    }
}

pub(crate) fn check_nu(nu: usize) -> Result<()> {
    if (1..=3).contains(&nu) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("dimension {nu} (only 1, 2, 3)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    Density(f64),
    Activity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoState {
    pub beta: f64,
    pub nu: usize,
    pub drive: Drive,
}

impl ThermoState {
    pub fn new(beta: f64, nu: usize, drive: Drive) -> Result<Self> {
        check_beta(beta)?;
        check_nu(nu)?;
        match drive {
            Drive::Density(v) | Drive::Activity(v) if !(v.is_finite() && v > 0.0) => {
                return domain(format!("density/activity must be positive, got {v}"))
            }
            _ => {}
        }
        Ok(Self { beta, nu, drive })
    }
}
