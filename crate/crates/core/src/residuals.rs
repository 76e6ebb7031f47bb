//! Residual certificates for the equations a family of correlation
//! functions should satisfy.
//!
//! Each check evaluates `LHS - RHS` at a coarse and a fine quadrature level.
//! The reported residual is the fine one; the budget adds the truncation
//! tail, the coarse/fine gap and, where derivatives enter, a
//! finite-difference term. Budgets are worst-case sums.

use crate::error::{domain, Error, Result};
use crate::evaluator::{Correlations, Level};
use crate::integrate::{integrate_cluster_many, nested_gl, ClusterDomain, Integrand, Proposal, QuadSpec};
use crate::point::{Configuration, Point};
use crate::potential::PairPotential;
use serde::Serialize;
use std::cell::RefCell;
use std::sync::Arc;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Equation {
    #[serde(rename = "KS")]
    Ks,
    #[serde(rename = "KS_symmetric")]
    KsSymmetric,
    #[serde(rename = "BBGKY_positional")]
    BbgkyPositional,
    #[serde(rename = "Bogolyubov")]
    Bogolyubov,
    #[serde(rename = "cluster_gap")]
    ClusterGap,
    #[serde(rename = "tail_bound")]
    TailBound,
    #[serde(rename = "groeneveld")]
    Groeneveld,
    #[serde(rename = "hardrod_hierarchy")]
    HardRodHierarchy,
    #[serde(rename = "extracted_constant")]
    ExtractedConstant,
    #[serde(rename = "hardcore_KS")]
    HardCoreKs,
    #[serde(rename = "uniform_bound")]
    UniformBound,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Location {
    pub points: Configuration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momenta: Option<Configuration>,
}

impl Location {
    pub fn points(points: Configuration) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Components {
    pub tail: f64,
    pub quad: f64,
    pub fd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equation: Equation,
    pub n: usize,
    pub location: Location,
    pub residual: f64,
    pub budget: f64,
    pub pass: bool,
    pub components: Components,
}

impl ResidualReport {
    pub fn new(equation: Equation, n: usize, location: Location, residual: f64, tail: f64, quad: f64, fd: f64) -> Self {
        // adding zero clears negative zeros from the serialized components
        let (tail, quad, fd) = (tail + 0.0, quad + 0.0, fd + 0.0);
        let budget = (tail + quad + fd).max(f64::MIN_POSITIVE);
        Self {
            equation,
            n,
            location,
            residual,
            budget,
            pass: residual.is_finite() && residual.abs() <= budget,
            components: Components { tail, quad, fd },
        }
    }
}

/// Rounding allowance for a sum whose terms have total magnitude `scale`.
fn rounding(scale: f64) -> f64 {
    256.0 * f64::EPSILON * scale
}

/// Shared geometry for integrals over `y` near a point.
struct Ctx<'a> {
    pot: &'a PairPotential,
    beta: f64,
    nu: usize,
    quad: &'a QuadSpec,
    radius: f64,
    kinks: Vec<f64>,
    proposal: Option<Arc<Proposal>>,
}

impl<'a> Ctx<'a> {
    fn new(pot: &'a PairPotential, beta: f64, nu: usize, quad: &'a QuadSpec) -> Result<Self> {
        crate::potential::check_beta(beta)?;
        crate::potential::check_nu(nu)?;
        let radius = pot.effective_radius(beta);
        let proposal = (nu > 1 && radius > 0.0)
            .then(|| Arc::new(Proposal::from_radial(nu, radius, |r| pot.mayer_radial(beta, r))));
        Ok(Self {
            pot,
            beta,
            nu,
            quad,
            radius,
            kinks: pot.knot_radii(beta),
            proposal,
        })
    }

    fn i_beta(&self) -> Result<f64> {
        let i = self.pot.i_beta(self.beta, self.nu, self.quad)?;
        Ok(i.value + i.error_estimate)
    }

    /// `int g(y_1..y_k) dy` with every `y_j` in the interaction ball of
    /// `anchor`; `g` must be symmetric in the `y_j`.
    fn integrate<T: Integrand>(
        &self,
        k: usize,
        anchor: Point,
        fixed: &[Point],
        level: Level,
        label: u64,
        g: impl Fn(&[Point]) -> Result<T>,
    ) -> Result<T> {
        if k == 0 {
            return g(&[]);
        }
        if self.radius == 0.0 {
            return Ok(T::zero());
        }
        let err = RefCell::new(None);
        let h = |ys: &[Point]| match g(ys) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                T::zero()
            }
        };
        let mut dom = ClusterDomain::ball(self.nu, anchor, self.radius);
        dom.fixed = fixed.to_vec();
        dom.kinks = self.kinks.clone();
        dom.symmetric = true;
        dom.proposal = self.proposal.clone();
        dom.label = label;
        let spec = level.spec(self.quad);
        let v = if self.nu == 1 {
            nested_gl(k, &h, &dom, spec.panels).0
        } else {
            integrate_cluster_many(k, h, &dom, &spec)?.value
        };
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    fn mayer_product(&self, a: Point, ys: &[Point]) -> f64 {
        ys.iter()
            .map(|y| self.pot.mayer_radial(self.beta, (a - *y).norm()))
            .product()
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn concat(a: &[Point], b: &[Point]) -> Vec<Point> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn check_config(config: &[Point], nu: usize) -> Result<()> {
    if config.is_empty() {
        return domain("configuration must contain at least one point");
    }
    if config.iter().any(|q| !q.is_finite()) {
        return domain("configuration contains a non-finite coordinate");
    }
    if config.iter().any(|q| q.0[nu..].iter().any(|&c| c != 0.0)) {
        return domain(format!("configuration has coordinates beyond dimension {nu}"));
    }
    Ok(())
}

/// Number of `m`-terms worth evaluating: beyond the evaluator's last
/// nonzero order every term vanishes.
fn terms_needed(evaluator: &dyn Correlations, base: usize, requested: usize) -> usize {
    match evaluator.max_order() {
        Some(m) if evaluator.graded() => requested.min(m.saturating_sub(base)),
        _ => requested,
    }
}

/// `sum_{m > m_used} (I xi)^m / m!` times `xi^base`, or the same with the
/// evaluator's order-wise bounds.
fn dropped_terms(
    evaluator: &dyn Correlations,
    i_beta: f64,
    base: usize,
    m_used: usize,
    hat: bool,
    finite: bool,
) -> f64 {
    let bound = |k: usize| {
        if hat {
            evaluator.hat_bound(k)
        } else {
            evaluator.rho_bound(k)
        }
    };
    if let (true, true, Some(m)) = (finite, evaluator.graded(), evaluator.max_order()) {
        // truncated functions vanish beyond order m; what is left out of the
        // identity is the finite set m_used < j <= m - base
        return (m_used + 1..=m.saturating_sub(base))
            .map(|j| i_beta.powi(j as i32) / factorial(j) * bound(base + j))
            .sum();
    }
    let mut total = 0.0;
    let mut coef = (1..=m_used).fold(1.0, |c, j| c * i_beta / j as f64);
    for j in m_used + 1..m_used + 400 {
        coef *= i_beta / j as f64;
        let term = coef * bound(base + j);
        if !term.is_finite() {
            return f64::INFINITY;
        }
        total += term;
        if term <= 1e-18 * total || term == 0.0 {
            break;
        }
    }
    total
}

/// Kirkwood-Salsburg residual
/// `rho_n - z exp(-beta W_{q1}) [rho_{n-1}(q2..) + sum_m (-1)^m/m! int prod f(q1 - y) rho_{n-1+m}(q2.., y)]`.
#[allow(clippy::too_many_arguments)]
pub fn ks_residual(
    config: &[Point],
    z: f64,
    evaluator: &dyn Correlations,
    beta: f64,
    pot: &PairPotential,
    m_max: usize,
    quad: &QuadSpec,
) -> Result<ResidualReport> {
    let nu = evaluator.nu();
    check_config(config, nu)?;
    let n = config.len();
    if let Some(m) = evaluator.max_order() {
        if n > m {
            return Err(Error::InsufficientDepth {
                required: n,
                available: m,
            });
        }
    }
    let ctx = Ctx::new(pot, beta, nu, quad)?;
    let i_beta = ctx.i_beta()?;
    let (q1, rest) = config.split_first().expect("nonempty");
    let boltz = (-beta * pot.w_energy(*q1, rest)).exp();
    // A truncated series enters the right side one order lower, so both
    // sides are polynomials of the same degree in z.
    let cap = evaluator.max_order().filter(|_| evaluator.graded()).map(|m| m - 1);
    let rhs_rho = |pts: &[Point], level: Level| match cap {
        Some(c) => evaluator.rho_upto(pts, level, c),
        None => evaluator.rho(pts, level),
    };
    let m_used = match cap {
        Some(c) => m_max.min(c.saturating_sub(n - 1)),
        None => m_max,
    };

    let at = |level: Level| -> Result<(f64, f64, f64)> {
        let lhs = evaluator.rho(config, level)?;
        let first = if n == 1 {
            crate::evaluator::Estimate::exact(1.0)
        } else {
            rhs_rho(rest, level)?
        };
        let mut bracket = first.value;
        let mut scale = first.value.abs();
        let mut tails = first.tail;
        for m in 1..=m_used {
            let tail = std::cell::Cell::new(0.0f64);
            let v: f64 = ctx.integrate(m, *q1, rest, level, m as u64, |ys| {
                let w = ctx.mayer_product(*q1, ys);
                if w == 0.0 {
                    return Ok(0.0);
                }
                let e = rhs_rho(&concat(rest, ys), level)?;
                tail.set(tail.get().max(e.tail));
                Ok(w * e.value)
            })?;
            let term = sign(m) * v / factorial(m);
            bracket += term;
            scale += term.abs();
            tails += i_beta.powi(m as i32) / factorial(m) * tail.get();
        }
        let rhs = z * boltz * bracket;
        let tail = lhs.tail + z.abs() * boltz * tails;
        Ok((lhs.value - rhs, tail, lhs.value.abs() + z.abs() * boltz * scale))
    };
    let (fine, tail, scale) = at(Level::Fine)?;
    let (coarse, _, _) = at(Level::Coarse)?;
    let dropped = z.abs() * boltz * dropped_terms(evaluator, i_beta, n - 1, m_used, false, false);
    Ok(ResidualReport::new(
        Equation::Ks,
        n,
        Location::points(config.to_vec()),
        fine,
        tail + dropped,
        (fine - coarse).abs() + rounding(scale),
        0.0,
    ))
}

/// Residual of the generalized equation with a free point `q0`:
///
/// ```text
/// E sum_k (-1)^k/k! int prod f(q0 - y) rho_hat_{n+k}(q1; q2.., y)
///   - E sum_k (-1)^k/k! int prod f(q1 - y) rho_hat_{n+k}(q0; q2.., y),
/// E = exp(-beta (W_{q0} + W_{q1})(q2..))
/// ```
///
/// For a truncated series both sums are polynomials in `z` that agree
/// order by order, so no truncation tail enters when `k_max` reaches the
/// last nonzero order.
#[allow(clippy::too_many_arguments)]
pub fn ks_symmetric_residual(
    config: &[Point],
    q0: Point,
    evaluator: &dyn Correlations,
    beta: f64,
    pot: &PairPotential,
    k_max: usize,
    quad: &QuadSpec,
) -> Result<ResidualReport> {
    let nu = evaluator.nu();
    check_config(config, nu)?;
    check_config(&[q0], nu)?;
    let n = config.len();
    let ctx = Ctx::new(pot, beta, nu, quad)?;
    let i_beta = ctx.i_beta()?;
    let (q1, rest) = config.split_first().expect("nonempty");
    let e = (-beta * (pot.w_energy(q0, rest) + pot.w_energy(*q1, rest))).exp();
    let k_used = terms_needed(evaluator, n, k_max);

    // sum over k of int prod f(a - y) rho_hat_{n+k}(b; rest, y)
    let side = |a: Point, b: Point, level: Level| -> Result<(f64, f64, f64)> {
        let (mut value, mut tails, mut scale) = (0.0, 0.0, 0.0);
        for k in 0..=k_used {
            let tail = std::cell::Cell::new(0.0f64);
            let v: f64 = ctx.integrate(k, a, &concat(&[b], rest), level, 1000 + k as u64, |ys| {
                let w = ctx.mayer_product(a, ys);
                if w == 0.0 {
                    return Ok(0.0);
                }
                let h = evaluator.rho_hat(b, &concat(rest, ys), level)?;
                tail.set(tail.get().max(h.tail));
                Ok(w * h.value)
            })?;
            let term = sign(k) * v / factorial(k);
            value += term;
            scale += term.abs();
            tails += i_beta.powi(k as i32) / factorial(k) * tail.get();
        }
        Ok((value, tails, scale))
    };
    let at = |level: Level| -> Result<(f64, f64, f64)> {
        let (l, lt, ls) = side(q0, *q1, level)?;
        let (r, rt, rs) = side(*q1, q0, level)?;
        Ok((e * (l - r), e * (lt + rt), e * (ls + rs)))
    };
    let (fine, tails, scale) = at(Level::Fine)?;
    let (coarse, _, _) = at(Level::Coarse)?;
    let tail = if evaluator.graded() {
        // the truncated sums agree order by order
        2.0 * e * dropped_terms(evaluator, i_beta, n, k_used, true, true)
    } else {
        tails + 2.0 * e * dropped_terms(evaluator, i_beta, n, k_used, true, true)
    };
    let location = Location {
        points: config.to_vec(),
        q0: Some(q0),
        momenta: None,
    };
    Ok(ResidualReport::new(
        Equation::KsSymmetric,
        n,
        location,
        fine,
        tail,
        (fine - coarse).abs() + rounding(scale),
        0.0,
    ))
}

/// Pieces of the positional hierarchy for particle `i`.
#[derive(Debug, Clone, Copy)]
struct Positional {
    /// `grad_{q_i} rho_n` by central differences at `h`.
    grad: Point,
    /// The same at `2h`.
    grad_2h: Point,
    /// `grad_{q_i} W_{q_i}(others) rho_n`.
    force: Point,
    /// `int grad phi(q_i - y) rho_{n+1}(.., y) dy`.
    integral: Point,
    rho_n: f64,
    /// Largest `|rho_{n+1}|` seen under the integral, for rounding.
    scale: f64,
}

fn positional(
    ctx: &Ctx,
    evaluator: &dyn Correlations,
    config: &[Point],
    i: usize,
    h: f64,
    level: Level,
) -> Result<Positional> {
    let qi = config[i];
    let others: Vec<Point> = config
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &q)| q)
        .collect();
    let rho_at = |q: Point| -> Result<f64> {
        let mut c = config.to_vec();
        c[i] = q;
        Ok(evaluator.rho(&c, level)?.value)
    };
    let mut grad = Point::ORIGIN;
    let mut grad_2h = Point::ORIGIN;
    for a in 0..ctx.nu {
        let e = Point::axis(a);
        grad.0[a] = (rho_at(qi + e * h)? - rho_at(qi - e * h)?) / (2.0 * h);
        grad_2h.0[a] = (rho_at(qi + e * (2.0 * h))? - rho_at(qi - e * (2.0 * h))?) / (4.0 * h);
    }
    let rho_n = rho_at(qi)?;
    let force = ctx.pot.grad_w(qi, &others)? * rho_n;
    let scale = std::cell::Cell::new(0.0f64);
    let integral: Point = ctx.integrate(1, qi, &others, level, 2000 + i as u64, |ys| {
        let g = ctx.pot.grad_phi(qi - ys[0])?;
        if g == Point::ORIGIN {
            return Ok(Point::ORIGIN);
        }
        let v = evaluator.rho(&concat(config, ys), level)?.value;
        scale.set(scale.get().max((g * v).max_abs()));
        Ok(g * v)
    })?;
    Ok(Positional {
        grad,
        grad_2h,
        force,
        integral,
        rho_n,
        scale: scale.get(),
    })
}

/// Residual vector of the positional hierarchy and its finite-difference
/// allowance, for particle `i`.
fn bbgky_vector(ctx: &Ctx, p: &Positional, h: f64) -> (Point, f64, f64) {
    let r = p.grad + (p.force + p.integral) * ctx.beta;
    let fd = (p.grad - p.grad_2h).max_abs() + 10.0 * f64::EPSILON * p.rho_n.abs() / h;
    let scale = p.grad.max_abs() + ctx.beta * (p.force.max_abs() + p.integral.max_abs() + p.scale * ctx.radius);
    (r, fd, scale)
}

fn check_step(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        domain(format!("finite-difference step must be positive, got {h}"))
    }
}

fn check_distinct(config: &[Point]) -> Result<()> {
    for (i, a) in config.iter().enumerate() {
        for b in &config[i + 1..] {
            if a == b {
                return domain("configuration has coincident points");
            }
        }
    }
    Ok(())
}

/// Positional hierarchy residual
/// `grad_{q1} rho_n + beta [grad W_{q1} rho_n + int grad phi(q1 - y) rho_{n+1}(.., y) dy]`,
/// reported in max-norm.
pub fn bbgky_residual(
    config: &[Point],
    evaluator: &dyn Correlations,
    beta: f64,
    pot: &PairPotential,
    h: f64,
    quad: &QuadSpec,
) -> Result<ResidualReport> {
    let nu = evaluator.nu();
    check_config(config, nu)?;
    check_distinct(config)?;
    check_step(h)?;
    if pot.is_singular() {
        return Err(Error::Unsupported("positional hierarchy of hard rods".into()));
    }
    let ctx = Ctx::new(pot, beta, nu, quad)?;
    let fine = positional(&ctx, evaluator, config, 0, h, Level::Fine)?;
    let coarse = positional(&ctx, evaluator, config, 0, h, Level::Coarse)?;
    let (rf, fd, scale) = bbgky_vector(&ctx, &fine, h);
    let (rc, _, _) = bbgky_vector(&ctx, &coarse, h);
    let residual = signed_max(rf);
    Ok(ResidualReport::new(
        Equation::BbgkyPositional,
        config.len(),
        Location::points(config.to_vec()),
        residual,
        // homogeneous in the activity: truncated series satisfy it order by
        // order, exact evaluators carry no tail
        0.0,
        (rf - rc).max_abs() + rounding(scale),
        fd,
    ))
}

/// Component of largest magnitude, with its sign.
fn signed_max(p: Point) -> f64 {
    p.0.iter().fold(0.0f64, |m, &v| if v.abs() > m.abs() { v } else { m })
}

/// Maxwellian weight `prod_i exp(-beta p_i^2 / 2) / (2 pi / beta)^{nu/2}`.
pub fn maxwellian(momenta: &[Point], beta: f64, nu: usize) -> f64 {
    let norm = (2.0 * std::f64::consts::PI / beta).powf(nu as f64 / 2.0);
    momenta.iter().map(|p| (-beta * p.dot(p) / 2.0).exp() / norm).product()
}

/// Residual of the stationary Bogolyubov equation for the Maxwellian
/// extension `rho_bar_n = prod M(p_i) rho_n`:
///
/// ```text
/// sum_i [p_i . grad_{q_i} rho_bar - grad_{q_i} W_{q_i} . grad_{p_i} rho_bar]
///   - sum_i int grad phi(q_i - xi) . grad_{p_i} rho_bar_{n+1}(.., xi, pi) dxi dpi
/// ```
///
/// Momentum derivatives are analytic, `grad_{p_i} rho_bar = -beta p_i rho_bar`,
/// and the `pi` integral of the Maxwellian is one.
#[allow(clippy::too_many_arguments)]
pub fn bogolyubov_residual(
    config: &[Point],
    momenta: &[Point],
    evaluator: &dyn Correlations,
    beta: f64,
    pot: &PairPotential,
    h: f64,
    quad: &QuadSpec,
) -> Result<ResidualReport> {
    let mut v = bogolyubov_residuals(config, &[momenta.to_vec()], evaluator, beta, pot, h, quad)?;
    Ok(v.remove(0))
}

/// [`bogolyubov_residual`] at several momentum assignments over one spatial
/// configuration; the positional pieces are shared.
#[allow(clippy::too_many_arguments)]
pub fn bogolyubov_residuals(
    config: &[Point],
    momenta: &[Configuration],
    evaluator: &dyn Correlations,
    beta: f64,
    pot: &PairPotential,
    h: f64,
    quad: &QuadSpec,
) -> Result<Vec<ResidualReport>> {
    let nu = evaluator.nu();
    check_config(config, nu)?;
    check_distinct(config)?;
    check_step(h)?;
    for ps in momenta {
        if ps.len() != config.len() || ps.iter().any(|p| !p.is_finite()) {
            return domain("need one finite momentum per particle");
        }
        check_config(ps, nu).or_else(|_| domain("momenta must be finite and live in the configuration dimension"))?;
    }
    if pot.is_singular() {
        return Err(Error::Unsupported("Bogolyubov equation for hard rods".into()));
    }
    let ctx = Ctx::new(pot, beta, nu, quad)?;
    let pieces = |level: Level| -> Result<Vec<Positional>> {
        (0..config.len())
            .map(|i| positional(&ctx, evaluator, config, i, h, level))
            .collect()
    };
    let fine = pieces(Level::Fine)?;
    let coarse = pieces(Level::Coarse)?;
    let assemble = |ps: &[Point], parts: &[Positional]| -> (f64, f64, f64) {
        let m = maxwellian(ps, beta, nu);
        let (mut lhs, mut rhs, mut fd, mut scale) = (0.0, 0.0, 0.0, 0.0);
        for (p, t) in ps.iter().zip(parts) {
            // grad_{p_i} of the Maxwellian factor
            let dp = *p * (-beta * m);
            lhs += p.dot(&t.grad) * m - t.force.dot(&dp);
            rhs += t.integral.dot(&dp);
            let (_, f, s) = bbgky_vector(&ctx, t, h);
            fd += p.max_abs() * nu as f64 * m * f;
            scale += p.max_abs() * nu as f64 * m * s;
        }
        (lhs - rhs, fd, scale)
    };
    Ok(momenta
        .iter()
        .map(|ps| {
            let (f, fd, scale) = assemble(ps, &fine);
            let (c, _, _) = assemble(ps, &coarse);
            let location = Location {
                points: config.to_vec(),
                q0: None,
                momenta: Some(ps.clone()),
            };
            ResidualReport::new(
                Equation::Bogolyubov,
                config.len(),
                location,
                f,
                0.0,
                (f - c).abs() + rounding(scale),
                fd,
            )
        })
        .collect())
}

/// Remainder bound after `N` integrations by parts,
/// `|q1 - q0| (3 I)^N J xi^{n+1+N} / N!`.
pub fn iteration_tail(big_n: usize, n: usize, q0: Point, q1: Point, i_beta: f64, j_beta: f64, xi: f64) -> f64 {
    let mut v = (q1 - q0).norm() * j_beta * xi.powi((n + 1) as i32);
    for k in 1..=big_n {
        v *= 3.0 * i_beta * xi / k as f64;
    }
    v
}

/// Smallest `N` whose remainder bound drops below `target`.
pub fn iteration_depth(
    target: f64,
    n: usize,
    q0: Point,
    q1: Point,
    i_beta: f64,
    j_beta: f64,
    xi: f64,
) -> Option<usize> {
    (0..10_000).find(|&k| iteration_tail(k, n, q0, q1, i_beta, j_beta, xi) < target)
}

/// Canonical cluster of `n` points spaced by `spacing` along the first
/// axis, starting at `start`.
pub fn canonical_cluster(n: usize, start: f64, spacing: f64) -> Configuration {
    (0..n).map(|i| Point::new1(start + i as f64 * spacing)).collect()
}

/// `|rho_{nA+nB}(A, B + s) - rho_{nA}(A) rho_{nB}(B + s)|` with `s` the gap
/// between the last point of `A` and the first of `B`.
pub fn cluster_gap(n_a: usize, n_b: usize, s: f64, spacing: f64, evaluator: &dyn Correlations) -> Result<f64> {
    Ok(cluster_gap_report(n_a, n_b, s, spacing, evaluator)?.residual.abs())
}

/// Cluster gap with the budget implied by the evaluator's tails.
pub fn cluster_gap_report(
    n_a: usize,
    n_b: usize,
    s: f64,
    spacing: f64,
    evaluator: &dyn Correlations,
) -> Result<ResidualReport> {
    if n_a == 0 || n_b == 0 {
        return domain("clusters must be nonempty");
    }
    let a = canonical_cluster(n_a, 0.0, spacing);
    let b_start = (n_a - 1) as f64 * spacing + s;
    let b = canonical_cluster(n_b, b_start, spacing);
    let ab = concat(&a, &b);
    let at = |level: Level| -> Result<(f64, f64, f64)> {
        let joint = evaluator.rho(&ab, level)?;
        let ra = evaluator.rho(&a, level)?;
        let rb = evaluator.rho(&b, level)?;
        let tail = joint.tail + ra.value.abs() * rb.tail + rb.value.abs() * ra.tail + ra.tail * rb.tail;
        Ok((
            joint.value - ra.value * rb.value,
            tail,
            joint.value.abs() + (ra.value * rb.value).abs(),
        ))
    };
    let (fine, tail, scale) = at(Level::Fine)?;
    let (coarse, _, _) = at(Level::Coarse)?;
    Ok(ResidualReport::new(
        Equation::ClusterGap,
        n_a + n_b,
        Location::points(ab),
        fine.abs(),
        tail,
        (fine - coarse).abs() + rounding(scale),
        0.0,
    ))
}

/// Uniform coefficient bound at one configuration: the residual is the
/// largest excess `|c_{n,p}| - I^{-(n-1)} (I e)^p` over `p <= P`.
pub fn coefficient_bound_report(series: &crate::evaluator::MayerSeries, config: &[Point]) -> Result<ResidualReport> {
    let n = config.len();
    let mut excess = f64::NEG_INFINITY;
    let mut quad = 0.0f64;
    for p in 0..=series.order() {
        let f = series.engine(Level::Fine).coeff(p, config)?;
        let c = series.engine(Level::Coarse).coeff(p, config)?;
        let bound = crate::mayer::coeff_bound(n, p, series.i_beta());
        excess = excess.max(f.abs() - bound);
        quad = quad.max((f - c).abs());
    }
    Ok(ResidualReport::new(
        Equation::TailBound,
        n,
        Location::points(config.to_vec()),
        excess.max(0.0),
        0.0,
        quad,
        0.0,
    ))
}

#[cfg(test)]
mod tests;
