use super::gaussian::check_nonempty;
use super::{DataSupport, ExpFamily, Interval, SuffStatDerivatives};
use crate::error::{Error, Result};
use crate::series::Series;
use crate::special::{ln_norm_cdf, ln_partial_moment};
use nalgebra::{DMatrix, DVector};

/// Exponential distribution with rate θ > 0, `r(x) = −x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl ExpFamily for Exponential {
    fn id(&self) -> String {
        "exponential".into()
    }
    fn data_dim(&self) -> usize {
        1
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn param_domain(&self) -> Vec<Interval> {
        vec![Interval::POSITIVE]
    }
    fn data_support(&self) -> DataSupport {
        DataSupport::PositiveOrthant
    }

    fn suff_stat_unchecked(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, -x[0])
    }

    fn base_measure_unchecked(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn derivatives_unchecked(&self, _x: &[f64]) -> SuffStatDerivatives {
        SuffStatDerivatives {
            jacobian: DMatrix::from_element(1, 1, -1.0),
            second_diag: DMatrix::zeros(1, 1),
            base_grad: DVector::zeros(1),
            base_second_diag: DVector::zeros(1),
        }
    }

    fn log_normalizer(&self, theta: &[f64]) -> f64 {
        -theta[0].ln()
    }

    fn mle(&self, data: &Series) -> Result<DVector<f64>> {
        check_nonempty(data)?;
        let mean = data.values().iter().sum::<f64>() / data.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::DegenerateData("non-positive sample mean".into()));
        }
        Ok(DVector::from_element(1, 1.0 / mean))
    }

    /// `∫₀^∞ θe^{−θx} N(θ; m, v) dθ / Φ(m/√v)`.
    fn closed_form_log_predictive(
        &self,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        x: &[f64],
    ) -> Option<f64> {
        let (m, v, x) = (mean[0], cov[(0, 0)], x[0]);
        let s = v.sqrt();
        let shifted = m - v * x;
        Some(-m * x + 0.5 * v * x * x + s.ln() + ln_partial_moment(shifted / s) - ln_norm_cdf(m / s))
    }
}
