use super::{DataSupport, ExpFamily, Gaussian, Interval, ModelRef, SuffStatDerivatives};
use crate::error::{Error, Result};
use crate::series::Series;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Independent product of models; data and parameters are concatenated in
/// factor order and all derivative blocks are block-diagonal.
#[derive(Debug, Clone)]
pub struct Product {
    factors: Vec<ModelRef>,
    // (data offset, param offset) for each factor
    offsets: Vec<(usize, usize)>,
    data_dim: usize,
    param_dim: usize,
    label: Option<String>,
}

impl Product {
    pub fn new(factors: Vec<ModelRef>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("product model needs at least one factor".into()));
        }
        let mut offsets = Vec::with_capacity(factors.len());
        let (mut d, mut p) = (0, 0);
        for f in &factors {
            offsets.push((d, p));
            d += f.data_dim();
            p += f.param_dim();
        }
        Ok(Self {
            factors,
            offsets,
            data_dim: d,
            param_dim: p,
            label: None,
        })
    }

    /// Diagonal-covariance Gaussian in `d` dimensions.
    pub fn diag_gaussian(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("diag_gaussian needs d >= 1".into()));
        }
        let mut prod = Self::new((0..d).map(|_| Arc::new(Gaussian) as ModelRef).collect())?;
        prod.label = Some(format!("diag_gaussian:{d}"));
        Ok(prod)
    }

    pub fn factors(&self) -> &[ModelRef] {
        &self.factors
    }

    fn blocks(&self) -> impl Iterator<Item = (&ModelRef, usize, usize)> + '_ {
        self.factors
            .iter()
            .zip(&self.offsets)
            .map(|(f, &(d, p))| (f, d, p))
    }
}

impl ExpFamily for Product {
    fn id(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        let ids: Vec<String> = self.factors.iter().map(|f| f.id()).collect();
        format!("product:{}", ids.join(","))
    }

    fn data_dim(&self) -> usize {
        self.data_dim
    }

    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn param_domain(&self) -> Vec<Interval> {
        self.factors.iter().flat_map(|f| f.param_domain()).collect()
    }

    fn data_support(&self) -> DataSupport {
        DataSupport::Product(
            self.factors
                .iter()
                .map(|f| (f.data_dim(), f.data_support()))
                .collect(),
        )
    }

    fn suff_stat_unchecked(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.param_dim);
        for (f, d0, p0) in self.blocks() {
            let r = f.suff_stat_unchecked(&x[d0..d0 + f.data_dim()]);
            out.rows_mut(p0, f.param_dim()).copy_from(&r);
        }
        out
    }

    fn base_measure_unchecked(&self, x: &[f64]) -> f64 {
        self.blocks()
            .map(|(f, d0, _)| f.base_measure_unchecked(&x[d0..d0 + f.data_dim()]))
            .sum()
    }

    fn derivatives_unchecked(&self, x: &[f64]) -> SuffStatDerivatives {
        let mut out = SuffStatDerivatives::zeros(self.data_dim, self.param_dim);
        for (f, d0, p0) in self.blocks() {
            let (fd, fp) = (f.data_dim(), f.param_dim());
            let part = f.derivatives_unchecked(&x[d0..d0 + fd]);
            out.jacobian.view_mut((d0, p0), (fd, fp)).copy_from(&part.jacobian);
            out.second_diag.view_mut((d0, p0), (fd, fp)).copy_from(&part.second_diag);
            out.base_grad.rows_mut(d0, fd).copy_from(&part.base_grad);
            out.base_second_diag.rows_mut(d0, fd).copy_from(&part.base_second_diag);
        }
        out
    }

    fn log_normalizer(&self, theta: &[f64]) -> f64 {
        self.blocks()
            .map(|(f, _, p0)| f.log_normalizer(&theta[p0..p0 + f.param_dim()]))
            .sum()
    }

    fn mle(&self, data: &Series) -> Result<DVector<f64>> {
        if data.dim() != self.data_dim {
            return Err(Error::DimensionMismatch {
                expected: self.data_dim,
                got: data.dim(),
            });
        }
        let mut out = DVector::zeros(self.param_dim);
        for (f, d0, p0) in self.blocks() {
            let theta = f.mle(&data.columns(d0, f.data_dim()))?;
            out.rows_mut(p0, f.param_dim()).copy_from(&theta);
        }
        Ok(out)
    }

    /// Available when every factor has one and the covariance has no
    /// cross-factor entries, so the predictive factorises.
    fn closed_form_log_predictive(
        &self,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        x: &[f64],
    ) -> Option<f64> {
        for (f, _, p0) in self.blocks() {
            let fp = f.param_dim();
            for i in p0..p0 + fp {
                for j in 0..self.param_dim {
                    if (j < p0 || j >= p0 + fp) && cov[(i, j)] != 0.0 {
                        return None;
                    }
                }
            }
        }
        let mut total = 0.0;
        for (f, d0, p0) in self.blocks() {
            let (fd, fp) = (f.data_dim(), f.param_dim());
            let m = mean.rows(p0, fp).into_owned();
            let c = cov.view((p0, p0), (fp, fp)).into_owned();
            total += f.closed_form_log_predictive(&m, &c, &x[d0..d0 + fd])?;
        }
        Some(total)
    }
}
