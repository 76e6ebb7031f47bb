//! Command-line front end. Every run is described by one TOML file; the
//! process takes a subcommand and the path to that file and nothing else.
//!
//! Exit codes: 0 everything passed, 1 a certificate failed, 2 the config
//! or the computation could not be set up, 3 finished with flagged rows.

use crate::error::{Error, Result};
use crate::evaluator::MayerSeries;
use crate::hardrod::{
    extracted_constant_residual, hardrod_hierarchy_residual, hc_ks_activity, hc_ks_residual_at, tonks_density,
    TonksParams,
};
use crate::hclimit::{groeneveld_report, limit_sweep, SweepDrive, SweepPlan};
use crate::integrate::QuadSpec;
use crate::mayer::{activity_radius, coeff_bound, invert_with, series_tail, xi_admissible};
use crate::point::{Configuration, Point};
use crate::potential::{Drive, PairPotential, PotentialKind, ThermoState};
use crate::residuals::{
    bbgky_residual, bogolyubov_residual, coefficient_bound_report, ks_residual, ks_symmetric_residual, ResidualReport,
    DEFAULT_FD_STEP,
};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt::Write;
use std::path::PathBuf;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "KSBBGKY_THREADS";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PairPotential,
    pub thermo: ThermoBlock,
    #[serde(default)]
    pub quad: QuadSpec,
    #[serde(default)]
    pub mayer: MayerBlock,
    pub tabulate: Option<GridBlock>,
    pub hclimit: Option<HclimitBlock>,
    pub residuals: Option<ResidualsBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoBlock {
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one_usize")]
    pub nu: usize,
    pub drive: Drive,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MayerBlock {
    /// Truncation order of the activity series.
    pub p_max: usize,
    /// Order kept in activity-from-state expansions.
    pub k_max: usize,
}

impl Default for MayerBlock {
    fn default() -> Self {
        Self { p_max: 4, k_max: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HclimitBlock {
    pub epsilons: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub drive: SweepDrive,
}

impl Default for HclimitBlock {
    fn default() -> Self {
        Self {
            epsilons: vec![0.2, 0.1, 0.05],
            x_min: 1.05,
            x_max: 3.0,
            points: 9,
            drive: SweepDrive::Activity(0.05),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Hard-rod hierarchy, extracted constant and hard-core KS.
    Tonks,
    Ks,
    KsSymmetric,
    Bbgky,
    Bogolyubov,
    Groeneveld,
    Coefficients,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualsBlock {
    pub suites: Vec<Suite>,
    /// Random configurations per particle number.
    pub configs: usize,
    pub n: Vec<usize>,
    /// Activity used on the right-hand side of the KS equations. Defaults
    /// to the activity of the state being checked.
    pub activity: Option<f64>,
    pub m_max: usize,
    pub k_max: usize,
    pub fd_step: f64,
}

impl Default for ResidualsBlock {
    fn default() -> Self {
        Self {
            suites: vec![],
            configs: 4,
            n: vec![1, 2],
            activity: None,
            m_max: 2,
            k_max: 2,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ThermoState::new(self.thermo.beta, self.thermo.nu, self.thermo.drive).map_err(config)?;
        let q = &self.quad;
        if !(q.abs_tol > 0.0 && q.rel_tol > 0.0 && q.max_depth > 0 && q.panels > 0 && q.samples > 0) {
            return Err(Error::Config("quadrature tolerances and sizes must be positive".into()));
        }
        if let Some(g) = &self.tabulate {
            if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_max >= g.x_min && g.points > 0) {
                return Err(Error::Config(
                    "tabulate grid needs x_min <= x_max and points > 0".into(),
                ));
            }
        }
        if let Some(r) = &self.residuals {
            if !(r.fd_step.is_finite() && r.fd_step > 0.0) {
                return Err(Error::Config("fd_step must be positive".into()));
            }
            if r.n.contains(&0) {
                return Err(Error::Config("particle numbers must be positive".into()));
            }
            if let Some(z) = r.activity {
                if !(z.is_finite() && z > 0.0) {
                    return Err(Error::Config("activity override must be positive".into()));
                }
            }
        }
        if let Some(h) = &self.hclimit {
            self.plan(h).map_err(config)?;
        }
        Ok(())
    }

    fn plan(&self, h: &HclimitBlock) -> Result<SweepPlan> {
        let mut plan = SweepPlan::new(
            h.epsilons.clone(),
            h.x_min,
            h.x_max,
            h.points,
            h.drive,
            self.mayer.p_max,
        )?;
        plan.beta = self.thermo.beta;
        plan.validate()?;
        Ok(plan)
    }

    fn is_tonks(&self) -> bool {
        matches!(self.potential.kind(), PotentialKind::HardRod { .. }) && self.thermo.nu == 1
    }

    fn tonks_params(&self) -> Result<TonksParams> {
        let d = self.potential.diameter().unwrap_or(1.0);
        match self.thermo.drive {
            Drive::Density(rho) => TonksParams::new(rho, d),
            Drive::Activity(z) => TonksParams::from_activity(z, d),
        }
    }

    /// The truncated series at the configured state. A density drive is
    /// turned into an activity by inverting the series itself; the second
    /// value is the resulting activity uncertainty.
    fn series(&self) -> Result<(MayerSeries, f64)> {
        let t = &self.thermo;
        match t.drive {
            Drive::Activity(z) => Ok((
                MayerSeries::new(self.potential, t.beta, t.nu, z, self.mayer.p_max, &self.quad)?,
                0.0,
            )),
            Drive::Density(rho) => {
                let base = MayerSeries::new(self.potential, t.beta, t.nu, rho, self.mayer.p_max, &self.quad)?;
                let inv = invert_with(rho, &base.density_coefficients()?, base.i_beta())?;
                let slope = 1.0 - 2.0 * base.i_beta() * inv.z;
                let z_err = if slope > 0.0 {
                    inv.uncertainty / slope
                } else {
                    f64::INFINITY
                };
                Ok((base.with_activity(inv.z)?, z_err))
            }
        }
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Text produced by a command and its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub code: i32,
}

#[derive(Debug, Parser)]
#[command(
    name = "ksbbgky",
    version,
    about = "Mayer-series correlation functions with residual certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    /// Pair function on a grid, as CSV.
    Tabulate,
    /// Residual reports of the selected suites, as JSON.
    Certify,
    /// Activity for a given density.
    Invert,
    /// Closed-form hard-rod quantities.
    Hardrod,
    /// Soft-core to hard-core convergence sweep, as CSV.
    Hclimit,
    /// Integral constants, radii and tail bounds.
    Bounds,
}

#[derive(Debug, clap::Args)]
struct WithConfig {
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    Tabulate(WithConfig),
    Certify(WithConfig),
    Invert(WithConfig),
    Hardrod(WithConfig),
    Hclimit(WithConfig),
    Bounds(WithConfig),
}

/// Parses `args` (program name first), runs the command and returns
/// `(stdout, stderr, exit code)`.
pub fn run<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            return if code == EXIT_PASS {
                (e.to_string(), String::new(), code)
            } else {
                (String::new(), e.to_string(), code)
            };
        }
    };
    let (kind, path) = match cli.command {
        Command::Tabulate(a) => (CommandKind::Tabulate, a.config),
        Command::Certify(a) => (CommandKind::Certify, a.config),
        Command::Invert(a) => (CommandKind::Invert, a.config),
        Command::Hardrod(a) => (CommandKind::Hardrod, a.config),
        Command::Hclimit(a) => (CommandKind::Hclimit, a.config),
        Command::Bounds(a) => (CommandKind::Bounds, a.config),
    };
    let result = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        .and_then(|text| RunConfig::parse(&text))
        .and_then(|cfg| run_config(kind, &cfg));
    match result {
        Ok(out) => (out.stdout, String::new(), out.code),
        Err(e) => (String::new(), format!("error: {e}\n"), EXIT_CONFIG),
    }
}

/// Runs one command inside a pool sized by [`THREADS_VAR`].
pub fn run_config(kind: CommandKind, cfg: &RunConfig) -> Result<Output> {
    let pool = thread_pool()?;
    pool.install(|| match kind {
        CommandKind::Tabulate => cmd_tabulate(cfg),
        CommandKind::Certify => cmd_certify(cfg),
        CommandKind::Invert => cmd_invert(cfg),
        CommandKind::Hardrod => cmd_hardrod(cfg),
        CommandKind::Hclimit => cmd_hclimit(cfg),
        CommandKind::Bounds => cmd_bounds(cfg),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    pool_from(std::env::var(THREADS_VAR).ok())
}

fn pool_from(threads: Option<String>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(v) = threads {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_VAR} must be positive")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

fn header(cfg: &RunConfig) -> String {
    let d = cfg.potential.diameter().map_or("1".to_string(), |d| format!("{d}"));
    format!(
        "# reduced units, d = {d}\n# potential = {}\n# beta = {}, nu = {}, drive = {}\n",
        serde_json::to_string(&cfg.potential).unwrap_or_default(),
        cfg.thermo.beta,
        cfg.thermo.nu,
        serde_json::to_string(&cfg.thermo.drive).unwrap_or_default(),
    )
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn grid(g: &GridBlock) -> Vec<f64> {
    if g.points == 1 {
        return vec![g.x_min];
    }
    (0..g.points)
        .map(|i| g.x_min + (g.x_max - g.x_min) * i as f64 / (g.points - 1) as f64)
        .collect()
}

/// `rho_2(0, x e_1)` on the `[tabulate]` grid. Hard rods in one dimension
/// use the exact Tonks pair function, everything else the Mayer series.
pub fn cmd_tabulate(cfg: &RunConfig) -> Result<Output> {
    let g = cfg
        .tabulate
        .ok_or_else(|| Error::Config("tabulate needs a [tabulate] grid".into()))?;
    let xs = grid(&g);
    let mut out = header(cfg);
    let mut flagged = false;
    if cfg.is_tonks() {
        let params = cfg.tonks_params()?;
        let _ = writeln!(out, "# exact hard-rod pair function, z = {}", sci(params.activity()));
        out.push_str("x,rho2,uncertainty,flagged\n");
        let vals: Vec<f64> = xs.par_iter().map(|&x| tonks_density(&[0.0, x], &params)).collect();
        for (x, v) in xs.iter().zip(vals) {
            let _ = writeln!(out, "{},{},{},false", sci(*x), sci(v), sci(0.0));
        }
    } else {
        let (series, z_err) = cfg.series()?;
        let z = series.z();
        let _ = writeln!(out, "# Mayer series, order {}, z = {}", series.order(), sci(z));
        out.push_str("x,rho2,uncertainty,flagged\n");
        let vals: Vec<_> = xs
            .par_iter()
            .map(|&x| series.rho_series(&[Point::ORIGIN, Point::new1(x)]))
            .collect::<Result<_>>()?;
        for (x, v) in xs.iter().zip(vals) {
            let drive_err = if z_err > 0.0 {
                2.0 * v.value.abs() * z_err / z
            } else {
                0.0
            };
            let unc = v.uncertainty() + drive_err;
            let f = v.flagged() || !series.within_radius() || !unc.is_finite();
            flagged |= f;
            let _ = writeln!(out, "{},{},{},{}", sci(*x), sci(v.value), sci(unc), f);
        }
    }
    Ok(Output {
        stdout: out,
        code: if flagged { EXIT_FLAGGED } else { EXIT_PASS },
    })
}

enum Job {
    Hierarchy(Vec<f64>),
    Constant(Vec<f64>),
    HardCoreKs(Vec<f64>),
    Ks(Configuration),
    KsSymmetric(Configuration, Point),
    Bbgky(Configuration),
    Bogolyubov(Configuration, Configuration),
    Groeneveld(Configuration),
    Coefficients(Configuration),
}

fn random_point(rng: &mut ChaCha8Rng, nu: usize, half: f64) -> Point {
    let c: Vec<f64> = (0..nu).map(|_| rng.gen_range(-half..half)).collect();
    Point::from_slice(&c)
}

/// Rods at pairwise distance beyond the diameter.
fn random_rods(rng: &mut ChaCha8Rng, n: usize, d: f64) -> Vec<f64> {
    let mut x = rng.gen_range(-1.0..1.0);
    let mut xs = vec![x];
    for _ in 1..n {
        x += d * (1.0 + rng.gen_range(0.1..1.0));
        xs.push(x);
    }
    xs
}

fn build_jobs(cfg: &RunConfig, r: &ResidualsBlock) -> Vec<Job> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.quad.seed);
    let nu = cfg.thermo.nu;
    let d = cfg.potential.diameter().unwrap_or(1.0);
    let mut jobs = Vec::new();
    for suite in &r.suites {
        for &n in &r.n {
            for _ in 0..r.configs {
                match suite {
                    Suite::Tonks => {
                        let xs = random_rods(&mut rng, n, d);
                        jobs.push(Job::Hierarchy(xs.clone()));
                        jobs.push(Job::Constant(xs.clone()));
                        jobs.push(Job::HardCoreKs(xs));
                    }
                    _ => {
                        let config: Configuration = (0..n).map(|_| random_point(&mut rng, nu, 1.5)).collect();
                        jobs.push(match suite {
                            Suite::Ks => Job::Ks(config),
                            Suite::KsSymmetric => Job::KsSymmetric(config, random_point(&mut rng, nu, 5.0)),
                            Suite::Bbgky => Job::Bbgky(config),
                            Suite::Bogolyubov => {
                                let p = (0..n).map(|_| random_point(&mut rng, nu, 2.0)).collect();
                                Job::Bogolyubov(config, p)
                            }
                            Suite::Groeneveld => Job::Groeneveld(config),
                            _ => Job::Coefficients(config),
                        });
                    }
                }
            }
        }
    }
    jobs
}

/// Runs the `[residuals]` suites and reports every residual as JSON.
pub fn cmd_certify(cfg: &RunConfig) -> Result<Output> {
    let r = cfg
        .residuals
        .clone()
        .ok_or_else(|| Error::Config("certify needs a [residuals] block".into()))?;
    if r.suites.is_empty() {
        return Err(Error::Config("no residual suites selected".into()));
    }
    let tonks = r.suites.contains(&Suite::Tonks);
    let mayer = r.suites.iter().any(|s| *s != Suite::Tonks);
    if tonks && !cfg.is_tonks() {
        return Err(Error::Config("the tonks suite needs hard rods in one dimension".into()));
    }
    let params = if tonks { Some(cfg.tonks_params()?) } else { None };
    let series = if mayer { Some(cfg.series()?.0) } else { None };
    let jobs = build_jobs(cfg, &r);
    let (beta, pot, quad) = (cfg.thermo.beta, &cfg.potential, &cfg.quad);
    let eval = |job: &Job| -> Result<ResidualReport> {
        let p = || params.as_ref().expect("tonks parameters");
        let s = || series.as_ref().expect("series");
        match job {
            Job::Hierarchy(xs) => hardrod_hierarchy_residual(xs, p(), r.fd_step),
            Job::Constant(xs) => extracted_constant_residual(xs, p()),
            Job::HardCoreKs(xs) => hc_ks_residual_at(xs, p(), r.activity.unwrap_or_else(|| p().activity())),
            Job::Ks(c) => ks_residual(c, r.activity.unwrap_or_else(|| s().z()), s(), beta, pot, r.m_max, quad),
            Job::KsSymmetric(c, q0) => ks_symmetric_residual(c, *q0, s(), beta, pot, r.k_max, quad),
            Job::Bbgky(c) => bbgky_residual(c, s(), beta, pot, r.fd_step, quad),
            Job::Bogolyubov(c, m) => bogolyubov_residual(c, m, s(), beta, pot, r.fd_step, quad),
            Job::Groeneveld(c) => groeneveld_report(s(), c),
            Job::Coefficients(c) => coefficient_bound_report(s(), c),
        }
    };
    let reports: Vec<ResidualReport> = jobs.par_iter().map(eval).collect::<Result<_>>()?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    let doc = json!({
        "reports": reports,
        "summary": { "total": reports.len(), "failed": failed },
    });
    Ok(Output {
        stdout: pretty(&doc),
        code: if failed > 0 { EXIT_FAIL } else { EXIT_PASS },
    })
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Activity for a density drive, or density for an activity drive.
pub fn cmd_invert(cfg: &RunConfig) -> Result<Output> {
    let t = &cfg.thermo;
    let base = MayerSeries::new(cfg.potential, t.beta, t.nu, 0.0, cfg.mayer.p_max, &cfg.quad)?;
    let (doc, flagged) = match t.drive {
        Drive::Density(rho) => {
            let inv = invert_with(rho, &base.density_coefficients()?, base.i_beta())?;
            let s = base.with_activity(inv.z)?;
            let mut doc = json!({
                "rho": rho,
                "z": inv.z,
                "residual": inv.residual,
                "uncertainty": inv.uncertainty,
                "steps": inv.steps,
                "order": cfg.mayer.p_max,
            });
            if cfg.is_tonks() {
                doc["exact_z"] = json!(cfg.tonks_params()?.activity());
            }
            (doc, !s.within_radius() || !inv.uncertainty.is_finite())
        }
        Drive::Activity(z) => {
            let s = base.with_activity(z)?;
            let v = s.rho_series(&[Point::ORIGIN])?;
            let doc = json!({
                "z": z,
                "rho": v.value,
                "uncertainty": v.uncertainty(),
                "order": cfg.mayer.p_max,
            });
            (doc, v.flagged())
        }
    };
    Ok(Output {
        stdout: pretty(&doc),
        code: if flagged { EXIT_FLAGGED } else { EXIT_PASS },
    })
}

/// Closed-form quantities of the hard-rod gas at the configured state.
pub fn cmd_hardrod(cfg: &RunConfig) -> Result<Output> {
    if !cfg.is_tonks() {
        return Err(Error::Config(
            "hardrod needs a hard_rod potential in one dimension".into(),
        ));
    }
    let p = cfg.tonks_params()?;
    let doc = json!({
        "d": p.d(),
        "rho": p.rho(),
        "R": p.r(),
        "rho2_contact": p.rho2_contact(),
        "z": p.activity(),
        "z_from_hardcore_ks": hc_ks_activity(&p)?,
    });
    Ok(Output {
        stdout: pretty(&doc),
        code: EXIT_PASS,
    })
}

/// Soft-core convergence sweep as CSV, followed by a `# summary` line
/// holding the per-softness table and the fitted rate as JSON.
pub fn cmd_hclimit(cfg: &RunConfig) -> Result<Output> {
    let block = cfg.hclimit.clone().unwrap_or_default();
    let plan = cfg.plan(&block).map_err(config)?;
    let sweep = limit_sweep(&plan, &cfg.quad)?;
    let mut out = sweep.csv();
    let summary = json!({
        "per_epsilon": sweep.summary,
        "empirical_rate": sweep.empirical_rate,
        "nonincreasing": sweep.nonincreasing(),
    });
    let _ = writeln!(out, "# summary {summary}");
    let code = if sweep.any_flagged() {
        EXIT_FLAGGED
    } else if !sweep.nonincreasing() {
        EXIT_FAIL
    } else {
        EXIT_PASS
    };
    Ok(Output { stdout: out, code })
}

/// Integral constants, convergence radius, admissible range and the
/// coefficient and tail bounds up to the configured order.
pub fn cmd_bounds(cfg: &RunConfig) -> Result<Output> {
    let t = &cfg.thermo;
    let i = cfg.potential.i_beta(t.beta, t.nu, &cfg.quad)?;
    let j = cfg.potential.j_beta(t.beta, t.nu, &cfg.quad)?;
    let (series, _) = cfg.series()?;
    let iu = series.i_beta();
    let z = series.z();
    let tails: Vec<_> = (0..=cfg.mayer.p_max)
        .map(|p| json!({ "order": p, "tail": series_tail(1, z, p, iu) }))
        .collect();
    let coeffs: Vec<_> = (1..=3)
        .flat_map(|n| (0..=cfg.mayer.p_max).map(move |p| json!({ "n": n, "p": p, "bound": coeff_bound(n, p, iu) })))
        .collect();
    let doc = json!({
        "i_beta": { "value": i.value, "error": i.error_estimate },
        "j_beta": { "value": j.value, "error": j.error_estimate },
        "activity_radius": activity_radius(iu),
        "xi_admissible": xi_admissible(iu),
        "z": z,
        "within_radius": series.within_radius(),
        "tails": tails,
        "coefficient_bounds": coeffs,
    });
    Ok(Output {
        stdout: pretty(&doc),
        code: if series.within_radius() {
            EXIT_PASS
        } else {
            EXIT_FLAGGED
        },
    })
}

#[cfg(test)]
mod tests;
