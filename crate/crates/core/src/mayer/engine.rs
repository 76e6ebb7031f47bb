//! Memoized evaluation of the Mayer coefficients `c_{n,p}` by the
//! recursion
//!
//! ```text
//! c_{n,0}   = [n = 1]
//! c_{n,p+1} = exp(-beta W_{q1}(q2..qn)) * ( [n > 1] c_{n-1,p}(q2..qn)
//!             + sum_{k=1}^{p-n+2} (-1)^k / k! int prod_j f(q1 - y_j) c_{n-1+k,p}(q2..qn, y1..yk) dy )
//! ```
//!
//! The bracket on the right is the "hat" coefficient `c_hat_{n,p+1}(q1; q2..qn)`,
//! the coefficient of `exp(beta W_{q1}) rho_n`. It is exposed separately
//! because it stays finite where the Boltzmann factor underflows.

use crate::error::{Error, Result};
use crate::integrate::{integrate_cluster_many, nested_gl, ClusterDomain, Proposal, QuadSpec};
use crate::point::Point;
use crate::potential::{PairPotential, PotentialKind};
use dashmap::DashMap;
use std::cell::RefCell;
use std::sync::Arc;

/// Entries kept in the coefficient cache; later results are computed but
/// not stored.
const CACHE_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    n: u32,
    p: u32,
    bits: Box<[u64]>,
}

/// Evaluates `c_{n,p}` for one potential, temperature and quadrature
/// resolution.
#[derive(Debug)]
pub struct CoeffEngine {
    pot: PairPotential,
    beta: f64,
    nu: usize,
    p_max: usize,
    /// Gauss-Legendre panels per segment (nu = 1).
    panels: usize,
    /// Samples per nested Monte Carlo integral (nu >= 2).
    samples: usize,
    seed: u64,
    radius: f64,
    kinks: Vec<f64>,
    proposal: Option<Arc<Proposal>>,
    cache: DashMap<Key, f64>,
}

impl CoeffEngine {
    pub fn new(pot: PairPotential, beta: f64, nu: usize, p_max: usize, quad: &QuadSpec) -> Result<Self> {
        crate::potential::check_beta(beta)?;
        crate::potential::check_nu(nu)?;
        quad.validate()?;
        let kinks = match pot.kind() {
            PotentialKind::HardRod { .. } if nu != 1 => {
                return Err(Error::Unsupported(
                    "hard-core coefficients outside one dimension".into(),
                ));
            }
            // hard-core coefficients are polynomials between the points where
            // some distance is a multiple of d, so splitting there makes the
            // Gauss-Legendre panels exact
            PotentialKind::HardRod { d } => (1..=p_max + 2).map(|k| k as f64 * d).collect(),
            _ => pot.knot_radii(beta),
        };
        let radius = pot.effective_radius(beta);
        let proposal = (nu > 1 && radius > 0.0)
            .then(|| Arc::new(Proposal::from_radial(nu, radius, |r| pot.mayer_radial(beta, r))));
        Ok(Self {
            pot,
            beta,
            nu,
            p_max,
            panels: quad.panels,
            samples: quad.samples,
            seed: quad.seed,
            radius,
            kinks,
            proposal,
            cache: DashMap::new(),
        })
    }

    pub fn potential(&self) -> &PairPotential {
        &self.pot
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// `c_{n,p}(config)` with `n = config.len()`.
    pub fn coeff(&self, p: usize, config: &[Point]) -> Result<f64> {
        let n = config.len();
        self.check(n, p)?;
        if p + 1 < n {
            return Ok(0.0);
        }
        if p + 1 == n {
            return Ok((-self.beta * self.pot.pair_energy(config)).exp());
        }
        let canon = canonical(config);
        let key = Key {
            n: n as u32,
            p: p as u32,
            bits: canon
                .iter()
                .flat_map(|q| q.0[..self.nu].iter().map(|v| v.to_bits()))
                .collect(),
        };
        if let Some(v) = self.cache.get(&key) {
            return Ok(*v);
        }
        let (q1, rest) = canon.split_first().expect("n >= 1");
        let w = self.pot.w_energy(*q1, rest);
        let v = if w.is_finite() {
            (-self.beta * w).exp() * self.hat(p, *q1, rest)?
        } else {
            0.0
        };
        if self.cache.len() < CACHE_LIMIT {
            self.cache.insert(key, v);
        }
        Ok(v)
    }

    /// `c_hat_{n,p}(q1; rest) = exp(beta W_{q1}(rest)) c_{n,p}(q1, rest)`,
    /// computed directly from the bracket of the recursion.
    pub fn coeff_hat(&self, p: usize, q1: Point, rest: &[Point]) -> Result<f64> {
        let n = rest.len() + 1;
        self.check(n, p)?;
        if p + 1 < n {
            return Ok(0.0);
        }
        if p == 0 {
            return Ok(1.0);
        }
        if p + 1 == n {
            // leading order: only the q2..qn Boltzmann factor survives
            return Ok((-self.beta * self.pot.pair_energy(rest)).exp());
        }
        self.hat(p, q1, rest)
    }

    fn check(&self, n: usize, p: usize) -> Result<()> {
        if n == 0 {
            return crate::error::domain("coefficients need at least one point");
        }
        if p > self.p_max {
            return crate::error::domain(format!(
                "series order {p} exceeds the configured maximum {}",
                self.p_max
            ));
        }
        Ok(())
    }

    /// Bracket of the recursion for order `p >= 1`.
    fn hat(&self, p: usize, q1: Point, rest: &[Point]) -> Result<f64> {
        let n = rest.len() + 1;
        let prev = p - 1;
        let mut acc = if n > 1 { self.coeff(prev, rest)? } else { 0.0 };
        let k_max = (prev + 2).saturating_sub(n);
        for k in 1..=k_max {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let integral = self.cluster_integral(k, prev, q1, rest)? * sign;
            acc += integral / crate::integrate::cluster::factorial(k);
        }
        Ok(acc)
    }

    /// `int prod_j f(q1 - y_j) c_{n-1+k,p}(rest, y_1..y_k) dy`.
    fn cluster_integral(&self, k: usize, p: usize, q1: Point, rest: &[Point]) -> Result<f64> {
        if self.radius == 0.0 {
            return Ok(0.0);
        }
        let err: RefCell<Option<Error>> = RefCell::new(None);
        let buf = RefCell::new(Vec::with_capacity(rest.len() + k));
        let g = |ys: &[Point]| -> f64 {
            let mut weight = 1.0;
            for y in ys {
                weight *= self.pot.mayer_radial(self.beta, (q1 - *y).norm());
                if weight == 0.0 {
                    return 0.0;
                }
            }
            let mut b = buf.borrow_mut();
            b.clear();
            b.extend_from_slice(rest);
            b.extend_from_slice(ys);
            match self.coeff(p, &b) {
                Ok(c) => weight * c,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let domain = ClusterDomain {
            nu: self.nu,
            anchor: q1,
            radius: self.radius,
            fixed: rest.to_vec(),
            kinks: self.kinks.clone(),
            symmetric: true,
            proposal: self.proposal.clone(),
            label: label(k, p, q1, rest),
        };
        let value = if self.nu == 1 {
            nested_gl(k, &g, &domain, self.panels).0
        } else {
            // inner estimates are independent per outer sample, so the
            // outer standard error already carries the nested noise
            let spec = QuadSpec::default().with_seed(self.seed).with_samples(self.samples);
            integrate_cluster_many(k, g, &domain, &spec)?.value
        };
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(value)
    }
}

/// Sorted copy of the configuration translated so the first point is at
/// the origin. Coefficients are symmetric and translation invariant, so the
/// canonical form carries the same value.
pub(crate) fn canonical(config: &[Point]) -> Vec<Point> {
    let mut v = config.to_vec();
    v.sort_by(|a, b| {
        a.0[0]
            .total_cmp(&b.0[0])
            .then(a.0[1].total_cmp(&b.0[1]))
            .then(a.0[2].total_cmp(&b.0[2]))
    });
    let o = v[0];
    for q in v.iter_mut() {
        *q = *q - o;
    }
    v
}

fn label(k: usize, p: usize, q1: Point, rest: &[Point]) -> u64 {
    // FNV-1a over the bit patterns; stable across builds
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        h ^= v;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    eat(k as u64);
    eat(p as u64);
    for q in std::iter::once(&q1).chain(rest) {
        for c in q.0 {
            eat(c.to_bits());
        }
    }
    h
}
