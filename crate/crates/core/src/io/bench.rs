//! Wall-time scaling of detector configurations.

use super::config::{AnchorPolicy, DetectorConfig, DetectorKind, DiffusionKind, OmegaPolicy};
use super::generate::{Dist, Segment, StreamSpec};
use crate::baseline::StandardBayesPosterior;
use crate::bocd::PredictiveMode;
use crate::detector::run_detector;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// A named detector whose config depends on the data dimension.
#[derive(Clone)]
pub struct BenchCase {
    pub name: String,
    pub make: fn(usize) -> DetectorConfig,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BenchRow {
    pub case: String,
    pub d: usize,
    pub t: usize,
    pub seconds: f64,
    pub median_step_nanos: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SlopeFit {
    pub case: String,
    pub d: usize,
    /// Least-squares slope of log(time) against log(T).
    pub slope: f64,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub slopes: Vec<SlopeFit>,
}

/// Gaussian stream with mean and scale changing halfway through.
pub fn bench_stream(t: usize, d: usize, seed: u64) -> StreamSpec {
    let dims = |mean, sd| vec![Dist::Gaussian { mean, sd }; d];
    let half = (t / 2).max(1) + 1;
    let mut segments = vec![Segment { start: 1, dims: dims(0.0, 1.0) }];
    if half <= t {
        segments.push(Segment { start: half, dims: dims(2.0, 1.5) });
    }
    StreamSpec { length: t, segments, contamination: None, seed }
}

pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

pub fn bench_complexity(cases: &[BenchCase], t_grid: &[usize], d_grid: &[usize], seed: u64) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for case in cases {
        for &d in d_grid {
            let cfg = (case.make)(d);
            let mut points = Vec::new();
            for &t in t_grid {
                let data = bench_stream(t, d, seed).generate()?.data;
                let run = run_detector(&cfg, &data)?;
                if let Some(e) = run.result.error {
                    return Err(Error::InvalidArgument(format!("bench case {} failed: {e}", case.name)));
                }
                let mut steps = run.result.per_step_nanos.clone();
                steps.sort_unstable();
                let seconds = run.result.total_ms / 1e3;
                points.push((t as f64, seconds));
                report.rows.push(BenchRow {
                    case: case.name.clone(),
                    d,
                    t,
                    seconds,
                    median_step_nanos: steps.get(steps.len() / 2).copied().unwrap_or(0),
                });
            }
            if let Some(slope) = log_log_slope(&points) {
                report.slopes.push(SlopeFit { case: case.name.clone(), d, slope });
            }
        }
    }
    Ok(report)
}

fn known_var_dm(_d: usize) -> DetectorConfig {
    DetectorConfig {
        model: "gaussian_known_var:1".into(),
        prior_mean: vec![0.0],
        prior_cov_diag: vec![4.0],
        diffusion: DiffusionKind::Robust,
        anchor: AnchorPolicy::Explicit(vec![1.0]),
        omega: OmegaPolicy::Fixed(0.5),
        predictive: PredictiveMode::ClosedForm,
        ..Default::default()
    }
}

fn known_var_standard(_d: usize) -> DetectorConfig {
    DetectorConfig {
        detector: DetectorKind::Standard,
        baseline: Some(StandardBayesPosterior::normal_known_variance(0.0, 4.0, 1.0).expect("valid")),
        ..Default::default()
    }
}

fn known_var_unpruned(d: usize) -> DetectorConfig {
    DetectorConfig { prune: None, ..known_var_dm(d) }
}

fn diag_dm(d: usize) -> DetectorConfig {
    let mut mean = Vec::new();
    for _ in 0..d {
        mean.extend([0.0, 1.0]);
    }
    DetectorConfig {
        model: format!("diag_gaussian:{d}"),
        prior_mean: mean,
        prior_cov_diag: vec![2.0; 2 * d],
        anchor: AnchorPolicy::PrefixMle,
        omega: OmegaPolicy::Fixed(0.05),
        predictive: PredictiveMode::MonteCarlo { samples: 100 },
        ..Default::default()
    }
}

fn diag_standard(d: usize) -> DetectorConfig {
    DetectorConfig {
        detector: DetectorKind::Standard,
        baseline: Some(
            StandardBayesPosterior::normal_inverse_wishart(DVector::zeros(d), 1.0, d as f64, DMatrix::identity(d, d))
                .expect("valid"),
        ),
        ..Default::default()
    }
}

fn case(name: &str, make: fn(usize) -> DetectorConfig) -> BenchCase {
    BenchCase { name: name.into(), make }
}

/// Named grids: `complexity`, `dimension`, `unpruned`, `quick`.
pub fn suite(name: &str) -> Result<(Vec<BenchCase>, Vec<usize>, Vec<usize>)> {
    Ok(match name {
        "complexity" => (
            vec![case("dm_known_var", known_var_dm), case("standard_known_var", known_var_standard), case("dm_diag_gaussian_mc", diag_dm)],
            vec![100, 1000, 10_000, 20_000],
            vec![1],
        ),
        "dimension" => (
            vec![case("dm_diag_gaussian_mc", diag_dm), case("standard_niw", diag_standard)],
            vec![1000],
            vec![1, 2, 4, 8],
        ),
        "unpruned" => (vec![case("dm_known_var_unpruned", known_var_unpruned)], vec![250, 500, 1000, 2000], vec![1]),
        "quick" => (vec![case("dm_known_var", known_var_dm), case("standard_known_var", known_var_standard)], vec![100, 1000], vec![1]),
        _ => return Err(Error::Config(format!("unknown bench suite `{name}`"))),
    })
}
