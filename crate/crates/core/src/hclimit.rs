//! Hard-core limit of the soft-core family in one dimension.
//!
//! The soft-core potentials converge to hard rods away from contact. This
//! module tabulates how the truncated pair function and the coefficients
//! approach the exact hard-rod values, and checks the bounds that hold
//! uniformly along the family.

use crate::error::{domain, Result};
use crate::evaluator::{Correlations, Level, MayerSeries};
use crate::hardrod::{tonks_rho2, TonksParams};
use crate::integrate::QuadSpec;
use crate::mayer::{invert_with, CoeffEngine};
use crate::point::{line, Point};
use crate::potential::{ball_volume, PairPotential};
use crate::residuals::{Equation, Location, ResidualReport};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// What is held fixed while the softness changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDrive {
    Activity(f64),
    Density(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub epsilons: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub drive: SweepDrive,
    pub order: usize,
    pub d: f64,
    pub beta: f64,
}

impl SweepPlan {
    /// Evenly spaced grid on `[x_min, x_max]`. The grid has to stay clear
    /// of contact, where the family does not converge.
    pub fn new(
        epsilons: Vec<f64>,
        x_min: f64,
        x_max: f64,
        points: usize,
        drive: SweepDrive,
        order: usize,
    ) -> Result<Self> {
        let x_grid = match points {
            0 => Vec::new(),
            1 => vec![x_min],
            _ => (0..points)
                .map(|i| x_min + (x_max - x_min) * i as f64 / (points - 1) as f64)
                .collect(),
        };
        let plan = Self {
            epsilons,
            x_grid,
            drive,
            order,
            d: 1.0,
            beta: 1.0,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Softness 0.2, 0.1, 0.05 on nine points of `[1.05, 3]` at `z = 0.05`.
    pub fn standard() -> Self {
        Self::new(vec![0.2, 0.1, 0.05], 1.05, 3.0, 9, SweepDrive::Activity(0.05), 4).expect("valid plan")
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return domain("softness values must be finite and positive");
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return domain("softness values must be strictly decreasing");
        }
        if !(self.d.is_finite() && self.d > 0.0 && self.beta.is_finite() && self.beta > 0.0) {
            return domain("diameter and beta must be positive");
        }
        if self.x_grid.iter().any(|x| !(x.is_finite() && *x > self.d)) {
            return domain(format!("grid points must lie beyond contact at {}", self.d));
        }
        match self.drive {
            SweepDrive::Activity(z) if !(z.is_finite() && z > 0.0) => domain("activity must be positive"),
            SweepDrive::Density(r) if !(r.is_finite() && r > 0.0 && r * self.d < 1.0) => {
                domain("density must lie in (0, 1/d)")
            }
            _ => Ok(()),
        }
    }

    fn hard_params(&self, z: f64) -> Result<TonksParams> {
        match self.drive {
            SweepDrive::Activity(_) => TonksParams::from_activity(z, self.d),
            SweepDrive::Density(rho) => TonksParams::new(rho, self.d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub x: f64,
    pub z: f64,
    pub rho2_eps: f64,
    pub rho2_hard: f64,
    pub abs_error: f64,
    pub budget: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub z: f64,
    pub sup_error: f64,
    /// Largest row budget.
    pub budget: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub fixed_density: bool,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<EpsilonSummary>,
    /// Least-squares slope of `log sup_error` against `log epsilon`.
    pub empirical_rate: Option<f64>,
}

impl Sweep {
    /// `sup_error` never grows by more than the two budgets involved.
    pub fn nonincreasing(&self) -> bool {
        self.summary
            .windows(2)
            .all(|w| w[1].sup_error <= w[0].sup_error + w[0].budget + w[1].budget)
    }

    pub fn any_flagged(&self) -> bool {
        self.summary.iter().any(|s| s.flagged)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("# reduced units, d = 1\n");
        if self.fixed_density {
            out.push_str("epsilon,z,x,rho2_eps,rho2_hard,abs_error,budget\n");
        } else {
            out.push_str("epsilon,x,rho2_eps,rho2_hard,abs_error,budget\n");
        }
        for r in &self.rows {
            let _ = write!(out, "{:.16e},", r.epsilon);
            if self.fixed_density {
                let _ = write!(out, "{:.16e},", r.z);
            }
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.x, r.rho2_eps, r.rho2_hard, r.abs_error, r.budget
            );
        }
        out
    }
}

/// Tabulates `rho_2` of each soft-core member against the hard-rod pair
/// function on the plan's grid.
pub fn limit_sweep(plan: &SweepPlan, quad: &QuadSpec) -> Result<Sweep> {
    Ok(limit_sweep_with_series(plan, quad)?.0)
}

/// [`limit_sweep`] together with the series built for each softness, whose
/// coefficient caches can be reused for further checks.
pub fn limit_sweep_with_series(plan: &SweepPlan, quad: &QuadSpec) -> Result<(Sweep, Vec<MayerSeries>)> {
    plan.validate()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut built = Vec::with_capacity(plan.epsilons.len());
    for &eps in &plan.epsilons {
        let pot = PairPotential::soft_core(plan.d, eps)?;
        let (series, z_err) = match plan.drive {
            SweepDrive::Activity(z) => (MayerSeries::new(pot, plan.beta, 1, z, plan.order, quad)?, 0.0),
            SweepDrive::Density(rho) => {
                let base = MayerSeries::new(pot, plan.beta, 1, rho, plan.order, quad)?;
                let inv = invert_with(rho, &base.density_coefficients()?, base.i_beta())?;
                // d rho / dz is close to one at small activity; the inversion
                // uncertainty is a density error, so rescale by the slope
                let slope = 1.0 - 2.0 * base.i_beta() * inv.z;
                let z_err = if slope > 0.0 {
                    inv.uncertainty / slope
                } else {
                    f64::INFINITY
                };
                (base.with_activity(inv.z)?, z_err)
            }
        };
        let z = series.z();
        let hard = plan.hard_params(z)?;
        let flagged_series = !series.within_radius();
        let mut sup = 0.0f64;
        let mut worst_budget = 0.0f64;
        for &x in &plan.x_grid {
            let v = series.rho_series(&line(&[0.0, x]))?;
            let exact = tonks_rho2(x, &hard)?;
            // rho_2 is close to z^2, so a shift dz moves it by about 2 rho_2 dz / z
            let drive_err = if z_err > 0.0 {
                2.0 * v.value.abs() * z_err / z
            } else {
                0.0
            };
            let budget = v.uncertainty() + drive_err;
            let row = SweepRow {
                epsilon: eps,
                x,
                z,
                rho2_eps: v.value,
                rho2_hard: exact,
                abs_error: (v.value - exact).abs(),
                budget,
                flagged: flagged_series || v.flagged() || !budget.is_finite(),
            };
            sup = sup.max(row.abs_error);
            worst_budget = worst_budget.max(budget);
            rows.push(row);
        }
        summary.push(EpsilonSummary {
            epsilon: eps,
            z,
            sup_error: sup,
            budget: worst_budget,
            flagged: flagged_series || !worst_budget.is_finite(),
        });
        built.push(series);
    }
    let empirical_rate = log_slope(&summary);
    let sweep = Sweep {
        fixed_density: matches!(plan.drive, SweepDrive::Density(_)),
        rows,
        summary,
        empirical_rate,
    };
    Ok((sweep, built))
}

fn log_slope(summary: &[EpsilonSummary]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = summary
        .iter()
        .filter(|s| s.sup_error > 0.0)
        .map(|s| (s.epsilon.ln(), s.sup_error.ln()))
        .collect();
    linear_fit(&pts).map(|(_, slope, _)| slope)
}

/// Least-squares line through `(x, y)`: `(intercept, slope, largest |residual|)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let worst = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Some((intercept, slope, worst))
}

fn pair_sum(pot: &PairPotential, config: &[Point]) -> f64 {
    pot.pair_energy(config)
}

/// Alternating-bound check `rho_n < z^n exp(-beta sum_{i<j} phi)` at a
/// positive activity, together with the sign pattern
/// `(-1)^{p-n+1} c_{n,p} >= 0`.
///
/// The residual is the amount by which the series value plus its tail and
/// quadrature error reaches the bound, plus any sign violation beyond the
/// quadrature gap. A pass certifies the inequality. The tail bound carries
/// no Boltzmann factor, so deep inside the core it can exceed the margin
/// and the check cannot certify there.
pub fn groeneveld_report(series: &MayerSeries, config: &[Point]) -> Result<ResidualReport> {
    let z = series.z();
    if !(z > 0.0) {
        return domain("the alternating bound needs a positive activity");
    }
    let n = config.len();
    let pot = *series.potential();
    let bound = z.powi(n as i32) * (-series.beta() * pair_sum(&pot, config)).exp();
    let v = series.rho_series(config)?;
    let mut sign_violation = 0.0;
    for p in n.saturating_sub(1)..=series.order() {
        let f = series.engine(Level::Fine).coeff(p, config)?;
        let c = series.engine(Level::Coarse).coeff(p, config)?;
        let s = if (p + 1 - n).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign_violation += (-(s * f) - (f - c).abs()).max(0.0);
    }
    Ok(ResidualReport::new(
        Equation::Groeneveld,
        n,
        Location::points(config.to_vec()),
        (v.value + v.uncertainty() - bound).max(0.0) + sign_violation,
        0.0,
        0.0,
        0.0,
    ))
}

/// [`groeneveld_report`] for `SoftCore(d = 1, epsilon)` at unit `beta`.
pub fn groeneveld_check(
    config: &[Point],
    epsilon: f64,
    z: f64,
    order: usize,
    quad: &QuadSpec,
) -> Result<ResidualReport> {
    let series = MayerSeries::new(PairPotential::soft_core(1.0, epsilon)?, 1.0, 1, z, order, quad)?;
    groeneveld_report(&series, config)
}

/// `1 / (2 e sup_eps I_eps)`. The soft-core Mayer integrals increase to the
/// hard-core volume, which is therefore the supremum.
pub fn uniform_xi(nu: usize, d: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::E * ball_volume(nu, d))
}

/// Uniform bound `rho_n <= (2 xi)^n exp(-beta sum_{i<j} phi)` with `xi`
/// from [`uniform_xi`], certified with the series value plus its
/// uncertainty. Requires `z <= 2 xi`.
pub fn uniform_bound_report(series: &MayerSeries, config: &[Point]) -> Result<ResidualReport> {
    let pot = *series.potential();
    let d = pot.diameter().unwrap_or(0.0);
    let xi = uniform_xi(series.nu(), d);
    if series.z().abs() > 2.0 * xi {
        return domain(format!(
            "activity {} exceeds the uniform range {}",
            series.z(),
            2.0 * xi
        ));
    }
    let n = config.len();
    let bound = (2.0 * xi).powi(n as i32) * (-series.beta() * pair_sum(&pot, config)).exp();
    let v = series.rho_series(config)?;
    Ok(ResidualReport::new(
        Equation::UniformBound,
        n,
        Location::points(config.to_vec()),
        (v.value.abs() + v.uncertainty() - bound).max(0.0),
        0.0,
        0.0,
        0.0,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffLimitRow {
    pub epsilon: f64,
    pub value: f64,
    pub quad_error: f64,
    pub limit: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffLimit {
    pub n: usize,
    pub p: usize,
    pub rows: Vec<CoeffLimitRow>,
    pub limit: f64,
    /// Value at zero softness of the least-squares line through the rows.
    pub extrapolated: Option<f64>,
    /// Largest deviation of the rows from that line.
    pub fit_residual: Option<f64>,
}

impl CoeffLimit {
    /// `|gap|` strictly decreases along the softness sequence.
    pub fn gaps_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs())
    }

    /// The hard-core coefficient lies within three fit residuals of the
    /// linear extrapolation.
    pub fn extrapolation_consistent(&self) -> Option<bool> {
        Some((self.extrapolated? - self.limit).abs() <= 3.0 * self.fit_residual?)
    }
}

/// `c_{n,p}` of each soft-core member against the hard-core coefficient at
/// the same configuration. The hard-core value comes from the recursion
/// with hard rods, whose integrals over unions of intervals are exact.
pub fn coeff_limit_check(p: usize, config: &[Point], epsilons: &[f64], d: f64, quad: &QuadSpec) -> Result<CoeffLimit> {
    let n = config.len();
    if n == 0 {
        return domain("configuration must contain at least one point");
    }
    for (i, a) in config.iter().enumerate() {
        for b in &config[i + 1..] {
            if (a.x() - b.x()).abs() <= d {
                return domain("configuration must keep every pair farther apart than the diameter");
            }
        }
    }
    let hard = CoeffEngine::new(PairPotential::hard_rod(d)?, 1.0, 1, p, &Level::Fine.spec(quad))?;
    let limit = hard.coeff(p, config)?;
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let pot = PairPotential::soft_core(d, eps)?;
        let fine = CoeffEngine::new(pot, 1.0, 1, p, &Level::Fine.spec(quad))?;
        let coarse = CoeffEngine::new(pot, 1.0, 1, p, &Level::Coarse.spec(quad))?;
        let value = fine.coeff(p, config)?;
        rows.push(CoeffLimitRow {
            epsilon: eps,
            value,
            quad_error: (value - coarse.coeff(p, config)?).abs(),
            limit,
            gap: value - limit,
        });
    }
    let fit = linear_fit(&rows.iter().map(|r| (r.epsilon, r.value)).collect::<Vec<_>>());
    Ok(CoeffLimit {
        n,
        p,
        rows,
        limit,
        extrapolated: fit.map(|f| f.0),
        fit_residual: fit.map(|f| f.2),
    })
}

#[cfg(test)]
mod tests;
