//! Synthetic piecewise-stationary streams with optional ε-contamination.

use crate::error::{Error, Result};
use crate::series::Series;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dist {
    Gaussian { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    /// Point mass.
    Constant { value: f64 },
}

impl Dist {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Dist::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Dist::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Dist::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Dist::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid distribution {self:?}")))
        }
    }

    /// Draws are on (0, ∞) for these kinds.
    pub fn is_positive(&self) -> bool {
        match *self {
            Dist::Exponential { .. } | Dist::Gamma { .. } => true,
            Dist::Constant { value } => value > 0.0,
            Dist::Gaussian { .. } => false,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Gaussian { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            Dist::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            Dist::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("validated").sample(rng),
            Dist::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// First time index of the segment (1-based).
    pub start: usize,
    /// One distribution per dimension.
    pub dims: Vec<Dist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    pub rate: f64,
    /// Replacement for a contaminated row, one distribution per dimension.
    pub outlier: Vec<Dist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub length: usize,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub contamination: Option<Contamination>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub data: Series,
    /// Segment starts after the first, i.e. the true changepoints.
    pub changepoints: Vec<usize>,
    /// 1-based indices of contaminated rows.
    pub contaminated: Vec<usize>,
}

impl StreamSpec {
    pub fn dim(&self) -> usize {
        self.segments.first().map(|s| s.dims.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.length == 0 || self.segments.is_empty() || d == 0 {
            return Err(Error::InvalidArgument("stream needs a positive length and at least one segment".into()));
        }
        if self.segments[0].start != 1 {
            return Err(Error::InvalidArgument("the first segment must start at t = 1".into()));
        }
        for w in self.segments.windows(2) {
            if w[1].start <= w[0].start {
                return Err(Error::InvalidArgument("segment starts must be strictly increasing".into()));
            }
        }
        if self.segments.last().map(|s| s.start > self.length).unwrap_or(true) {
            return Err(Error::InvalidArgument("every segment must start within the stream".into()));
        }
        for seg in &self.segments {
            if seg.dims.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: seg.dims.len() });
            }
            seg.dims.iter().try_for_each(Dist::validate)?;
        }
        if let Some(c) = &self.contamination {
            if !(0.0..1.0).contains(&c.rate) {
                return Err(Error::InvalidArgument(format!("contamination rate must be in [0, 1), got {}", c.rate)));
            }
            if c.outlier.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.outlier.len() });
            }
            c.outlier.iter().try_for_each(Dist::validate)?;
            // a positive-support dimension must stay positive under contamination
            for (j, dist) in c.outlier.iter().enumerate() {
                let positive = self.segments.iter().all(|s| s.dims[j].is_positive());
                if positive && !dist.is_positive() {
                    return Err(Error::InvalidArgument(format!(
                        "outlier distribution for dimension {j} leaves the positive support of the clean data"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn generate(&self) -> Result<GeneratedStream> {
        self.validate()?;
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut values = Vec::with_capacity(self.length * d);
        let mut contaminated = Vec::new();
        let mut seg = 0;
        for t in 1..=self.length {
            while seg + 1 < self.segments.len() && self.segments[seg + 1].start <= t {
                seg += 1;
            }
            let dims = match &self.contamination {
                Some(c) if c.rate > 0.0 && rng.random::<f64>() < c.rate => {
                    contaminated.push(t);
                    &c.outlier
                }
                _ => &self.segments[seg].dims,
            };
            for dist in dims {
                values.push(dist.sample(&mut rng));
            }
        }
        Ok(GeneratedStream {
            data: Series::new(d, values)?,
            changepoints: self.segments.iter().skip(1).map(|s| s.start).collect(),
            contaminated,
        })
    }

    /// Two-dimensional exponential × Gaussian stream of length 1000 with
    /// changepoints at 250 and 750.
    pub fn synthetic_preset(seed: u64) -> Self {
        let seg = |start, rate, mean, sd| Segment {
            start,
            dims: vec![Dist::Exponential { rate }, Dist::Gaussian { mean, sd }],
        };
        Self {
            length: 1000,
            segments: vec![seg(1, 1.0, 0.0, 1.0), seg(250, 0.2, 3.0, 1.0), seg(750, 1.0, 0.0, 1.0)],
            contamination: None,
            seed,
        }
    }

    /// 500 draws from 0.95·N(0, 1) + 0.05·δ₁₀.
    pub fn contamination_preset(seed: u64) -> Self {
        Self {
            length: 500,
            segments: vec![Segment { start: 1, dims: vec![Dist::Gaussian { mean: 0.0, sd: 1.0 }] }],
            contamination: Some(Contamination { rate: 0.05, outlier: vec![Dist::Constant { value: 10.0 }] }),
            seed,
        }
    }

    /// Gaussian stream with a single shift of mean and scale at `change`.
    pub fn single_change_preset(length: usize, change: usize, seed: u64) -> Self {
        Self {
            length,
            segments: vec![
                Segment { start: 1, dims: vec![Dist::Gaussian { mean: 0.0, sd: 1.0 }] },
                Segment { start: change, dims: vec![Dist::Gaussian { mean: 3.0, sd: 1.0 }] },
            ],
            contamination: None,
            seed,
        }
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "synthetic" => Ok(Self::synthetic_preset(seed)),
            "contamination" => Ok(Self::contamination_preset(seed)),
            "single_change" => Ok(Self::single_change_preset(300, 151, seed)),
            _ => Err(Error::Config(format!("unknown stream preset `{name}`"))),
        }
    }
}
