//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use dsm_bocd::bocd::Likelihood;
use dsm_bocd::model::{DataSupport, ExpFamily, Interval};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Every model identifier the invariants are exercised on.
pub const MODEL_MATRIX: &[&str] = &[
    "gaussian",
    "gaussian_known_var:1.7",
    "exponential",
    "gamma",
    "diag_gaussian:2",
    "product:exponential,gaussian",
    "product:gamma,gaussian_known_var:0.5",
];

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn support_blocks(s: &DataSupport, out: &mut Vec<bool>, dim: usize) {
    match s {
        DataSupport::AllReals => out.extend(std::iter::repeat_n(false, dim)),
        DataSupport::PositiveOrthant => out.extend(std::iter::repeat_n(true, dim)),
        DataSupport::Product(blocks) => {
            for (d, b) in blocks {
                support_blocks(b, out, *d);
            }
        }
    }
}

/// Per-coordinate flag: true when the coordinate must be positive.
pub fn positive_coords(model: &dyn ExpFamily) -> Vec<bool> {
    let mut out = Vec::new();
    support_blocks(&model.data_support(), &mut out, model.data_dim());
    out
}

/// A random interior point of the model's data support.
pub fn random_point(model: &dyn ExpFamily, rng: &mut ChaCha8Rng) -> Vec<f64> {
    positive_coords(model)
        .into_iter()
        .map(|pos| if pos { (0.7 * normal(rng)).exp() } else { 1.5 * normal(rng) })
        .collect()
}

/// A random interior point of an interval product.
pub fn random_in(domain: &[Interval], rng: &mut ChaCha8Rng) -> Vec<f64> {
    domain
        .iter()
        .map(|iv| {
            if iv.lower.is_finite() {
                iv.lower + (0.5 * normal(rng)).exp()
            } else {
                normal(rng)
            }
        })
        .collect()
}

/// Joint mass of every final run length plus log-evidence and the best
/// changepoint configuration, by enumerating all `2^T` indicator vectors.
pub struct Enumeration {
    pub log_joint: Vec<(usize, f64)>,
    pub log_evidence: f64,
    pub map_changepoints: Vec<usize>,
}

pub fn enumerate<L: Likelihood>(lik: &L, data: &[Vec<f64>], h: f64) -> Enumeration {
    let t_max = data.len();
    assert!(t_max <= 16);
    let mut by_r: Vec<Vec<f64>> = vec![Vec::new(); t_max + 1];
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mask in 0u32..(1 << t_max) {
        let mut lp = 0.0;
        let mut post = lik.prior().clone();
        let mut start: Option<usize> = None;
        let mut ok = true;
        for (i, x) in data.iter().enumerate() {
            let t = i + 1;
            let cp = mask & (1 << i) != 0;
            if cp {
                post = lik.prior().clone();
                start = Some(t);
                lp += h.ln();
            } else {
                lp += (1.0 - h).ln();
            }
            let r = match start {
                Some(s) => t - s,
                None => t,
            };
            let prep = lik.prepare(x).unwrap();
            // the filter keys the changepoint branch by r=0 and growth by the new run length
            let v = lik.log_predictive(&post, &prep, t, r).unwrap();
            if !v.is_finite() {
                ok = false;
                break;
            }
            lp += v;
            lik.update(&mut post, &prep).unwrap();
        }
        if !ok {
            continue;
        }
        let r_final = match start {
            Some(s) => t_max - s,
            None => t_max,
        };
        by_r[r_final].push(lp);
        if lp > best.0 {
            let cps: Vec<usize> = (2..=t_max).filter(|&t| mask & (1 << (t - 1)) != 0).collect();
            best = (lp, cps);
        }
    }
    let lse = |v: &[f64]| {
        let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            m
        } else {
            m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
        }
    };
    let log_joint: Vec<(usize, f64)> = by_r
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty())
        .map(|(r, v)| (r, lse(v)))
        .collect();
    let all: Vec<f64> = log_joint.iter().map(|p| p.1).collect();
    Enumeration { log_evidence: lse(&all), log_joint, map_changepoints: best.1 }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
