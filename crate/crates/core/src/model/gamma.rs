use super::gaussian::check_nonempty;
use super::{DataSupport, ExpFamily, Interval, SuffStatDerivatives};
use crate::error::{Error, Result};
use crate::series::Series;
use crate::special::{digamma, ln_gamma, trigamma};
use nalgebra::{DMatrix, DVector};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

/// Gamma distribution, θ = (shape − 1, rate), `r(x) = (log x, −x)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gamma;

impl ExpFamily for Gamma {
    fn id(&self) -> String {
        "gamma".into()
    }
    fn data_dim(&self) -> usize {
        1
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn param_domain(&self) -> Vec<Interval> {
        vec![Interval::greater_than(-1.0), Interval::POSITIVE]
    }
    fn data_support(&self) -> DataSupport {
        DataSupport::PositiveOrthant
    }

    fn suff_stat_unchecked(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![x[0].ln(), -x[0]])
    }

    fn base_measure_unchecked(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn derivatives_unchecked(&self, x: &[f64]) -> SuffStatDerivatives {
        let x = x[0];
        SuffStatDerivatives {
            jacobian: DMatrix::from_row_slice(1, 2, &[1.0 / x, -1.0]),
            second_diag: DMatrix::from_row_slice(1, 2, &[-1.0 / (x * x), 0.0]),
            base_grad: DVector::zeros(1),
            base_second_diag: DVector::zeros(1),
        }
    }

    fn log_normalizer(&self, theta: &[f64]) -> f64 {
        let shape = theta[0] + 1.0;
        ln_gamma(shape) - shape * theta[1].ln()
    }

    /// Newton's method on the shape α solving `log α − ψ(α) = log x̄ − mean(log x)`.
    fn mle(&self, data: &Series) -> Result<DVector<f64>> {
        check_nonempty(data)?;
        if let Some(bad) = data.values().iter().find(|v| !(**v > 0.0)) {
            return Err(Error::OutsideSupport {
                x: vec![*bad],
                support: DataSupport::PositiveOrthant.to_string(),
            });
        }
        let n = data.len() as f64;
        let mean = data.values().iter().sum::<f64>() / n;
        let mean_log = data.values().iter().map(|v| v.ln()).sum::<f64>() / n;
        let s = mean.ln() - mean_log;
        if !(s > 1e-14) {
            return Err(Error::DegenerateData("constant sample has no gamma MLE".into()));
        }
        let mut alpha = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let f = alpha.ln() - digamma(alpha) - s;
            let df = 1.0 / alpha - trigamma(alpha);
            let mut next = alpha - f / df;
            if !(next > 0.0) {
                next = alpha / 2.0;
            }
            let delta = (next - alpha).abs();
            alpha = next;
            if delta <= NEWTON_TOL * alpha.max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("gamma MLE: Newton did not converge in {NEWTON_MAX_ITER} iterations");
        }
        Ok(DVector::from_vec(vec![alpha - 1.0, alpha / mean]))
    }
}
