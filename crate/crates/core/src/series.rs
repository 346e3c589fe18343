use crate::error::{Error, Result};

/// A row-major T×d block of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    dim: usize,
    values: Vec<f64>,
}

impl Series {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("series dimension must be positive".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: values.len() % dim,
            });
        }
        Ok(Self { dim, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(dim, values)
    }

    pub fn univariate(values: Vec<f64>) -> Self {
        Self { dim: 1, values }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row `t`, zero-based.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The first `n` rows (or all of them if fewer exist).
    pub fn prefix(&self, n: usize) -> Series {
        let n = n.min(self.len());
        Series {
            dim: self.dim,
            values: self.values[..n * self.dim].to_vec(),
        }
    }

    /// Columns `start..start + width` as a new series.
    pub fn columns(&self, start: usize, width: usize) -> Series {
        let mut values = Vec::with_capacity(self.len() * width);
        for row in self.rows() {
            values.extend_from_slice(&row[start..start + width]);
        }
        Series {
            dim: width,
            values,
        }
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        self.values.extend_from_slice(row);
        Ok(())
    }
}
