//! Multivariate normal draws, optionally truncated to an open box.

use crate::error::{Error, Result};
use crate::model::Interval;
use crate::special::norm_cdf;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

const MIN_MARGINAL_MASS: f64 = 1e-12;
const REJECTION_PROBE: usize = 1000;
const MIN_ACCEPTANCE: f64 = 0.01;
const GIBBS_BURN_IN: usize = 50;
const GIBBS_THIN: usize = 5;

/// Standard normal conditioned on `(a, b)`.
pub fn std_truncated_normal<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    if b <= -0.5 {
        return -std_truncated_normal(rng, -b, -a);
    }
    if a >= 0.5 {
        if (b - a) * a < 1.0 {
            return uniform_rejection(rng, a, b);
        }
        // exponential proposal with the optimal rate
        let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = rng.sample(Exp1);
            let z = a + e / alpha;
            if z >= b {
                continue;
            }
            let u: f64 = rng.random();
            if u <= (-0.5 * (z - alpha).powi(2)).exp() {
                return z;
            }
        }
    }
    if b - a < 2.5 {
        return uniform_rejection(rng, a, b);
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z > a && z < b {
            return z;
        }
    }
}

fn uniform_rejection<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let floor = if a > 0.0 {
        a * a
    } else if b < 0.0 {
        b * b
    } else {
        0.0
    };
    loop {
        let u: f64 = rng.random();
        let z = a + (b - a) * u;
        if z <= a || z >= b {
            continue;
        }
        let v: f64 = rng.random();
        if v <= (0.5 * (floor - z * z)).exp() {
            return z;
        }
    }
}

/// N(mean, sd²) conditioned on the interval.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, iv: Interval) -> f64 {
    if iv.is_unbounded() {
        let z: f64 = rng.sample(StandardNormal);
        return mean + sd * z;
    }
    let a = (iv.lower - mean) / sd;
    let b = (iv.upper - mean) / sd;
    let v = mean + sd * std_truncated_normal(rng, a, b);
    // guard against rounding onto the boundary
    v.clamp(next_up(iv.lower), next_down(iv.upper))
}

fn next_up(v: f64) -> f64 {
    if v.is_infinite() {
        v
    } else {
        let step = v.abs().max(f64::MIN_POSITIVE) * f64::EPSILON;
        v + step
    }
}

fn next_down(v: f64) -> f64 {
    -next_up(-v)
}

/// Mass of N(mean, sd²) inside the interval.
pub fn interval_mass(mean: f64, sd: f64, iv: Interval) -> f64 {
    let a = (iv.lower - mean) / sd;
    let b = (iv.upper - mean) / sd;
    if a > 0.0 {
        norm_cdf(-a) - norm_cdf(-b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

/// Draws from N(mean, cov) restricted to the box `domain`.
pub struct TruncatedMvn<'a> {
    mean: &'a DVector<f64>,
    cov: &'a DMatrix<f64>,
    domain: &'a [Interval],
}

impl<'a> TruncatedMvn<'a> {
    pub fn new(mean: &'a DVector<f64>, cov: &'a DMatrix<f64>, domain: &'a [Interval]) -> Self {
        Self { mean, cov, domain }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<DVector<f64>>> {
        let p = self.mean.len();
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("posterior covariance".into()))?;
        let l = chol.l();
        let bounded = self.domain.iter().any(|iv| !iv.is_unbounded());
        if !bounded {
            return Ok((0..n).map(|_| self.draw(rng, &l, p)).collect());
        }

        let tiny: Vec<usize> = (0..p)
            .filter(|&i| {
                !self.domain[i].is_unbounded()
                    && interval_mass(self.mean[i], self.cov[(i, i)].sqrt(), self.domain[i])
                        < MIN_MARGINAL_MASS
            })
            .collect();
        if !tiny.is_empty() {
            return Err(Error::NegligibleTruncationMass { coords: tiny });
        }

        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        let cap = REJECTION_PROBE.max(100 * n);
        while out.len() < n && attempts < cap {
            attempts += 1;
            let th = self.draw(rng, &l, p);
            if self.inside(&th) {
                out.push(th);
            }
            if attempts == REJECTION_PROBE && (out.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
                break;
            }
        }
        if out.len() < n {
            log::debug!(
                "truncated sampling: acceptance {}/{attempts}, switching to Gibbs",
                out.len()
            );
            let remaining = n - out.len();
            out.extend(self.gibbs(rng, remaining, &chol)?);
        }
        Ok(out)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, l: &DMatrix<f64>, p: usize) -> DVector<f64> {
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        self.mean + l * z
    }

    fn inside(&self, th: &DVector<f64>) -> bool {
        self.domain.iter().zip(th.iter()).all(|(iv, v)| iv.contains(*v))
    }

    fn gibbs<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    ) -> Result<Vec<DVector<f64>>> {
        let p = self.mean.len();
        let prec = chol.inverse();
        let mut th = DVector::from_fn(p, |i, _| start_point(self.mean[i], self.cov[(i, i)].sqrt(), self.domain[i]));
        let mut out = Vec::with_capacity(n);
        let mut sweep = 0usize;
        while out.len() < n {
            for i in 0..p {
                let pii = prec[(i, i)];
                let mut shift = 0.0;
                for j in 0..p {
                    if j != i {
                        shift += prec[(i, j)] * (th[j] - self.mean[j]);
                    }
                }
                let cm = self.mean[i] - shift / pii;
                th[i] = truncated_normal(rng, cm, (1.0 / pii).sqrt(), self.domain[i]);
            }
            sweep += 1;
            if sweep > GIBBS_BURN_IN && (sweep - GIBBS_BURN_IN).is_multiple_of(GIBBS_THIN) {
                out.push(th.clone());
            }
        }
        Ok(out)
    }
}

fn start_point(mean: f64, sd: f64, iv: Interval) -> f64 {
    if iv.contains(mean) {
        return mean;
    }
    match (iv.lower.is_finite(), iv.upper.is_finite()) {
        (true, true) => 0.5 * (iv.lower + iv.upper),
        (true, false) => iv.lower + sd.clamp(1e-300, 1.0),
        (false, true) => iv.upper - sd.clamp(1e-300, 1.0),
        (false, false) => mean,
    }
}
