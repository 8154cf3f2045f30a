use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, ThinSvd};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

/// The n × p design matrix X, with lazily computed spectral data.
///
/// Cheap to clone: the entries and caches are shared.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    x: DMatrix<f64>,
    col_sq_norms: Vec<f64>,
    sigma_max_sq: OnceLock<f64>,
    svd: OnceLock<ThinSvd>,
}

impl PartialEq for DesignMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.inner.x == other.inner.x
    }
}

impl DesignMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::arg("design matrix must have at least one row and one column"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("design matrix has non-finite entries"));
        }
        let col_sq_norms = x.column_iter().map(|c| c.norm_squared()).collect();
        Ok(DesignMatrix {
            inner: Arc::new(Inner {
                x,
                col_sq_norms,
                sigma_max_sq: OnceLock::new(),
                svd: OnceLock::new(),
            }),
        })
    }

    /// Builds from row-major entries.
    pub fn from_row_slice(n: usize, p: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * p {
            return Err(Error::dim("design entries", n * p, entries.len()));
        }
        Self::new(DMatrix::from_row_slice(n, p, entries))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is valid")
    }

    /// √n · I_n, whose columns have squared norm n.
    pub fn scaled_identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n) * (n as f64).sqrt()).expect("identity is valid")
    }

    pub fn n(&self) -> usize {
        self.inner.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.inner.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner.x
    }

    pub fn col_sq_norm(&self, j: usize) -> f64 {
        self.inner.col_sq_norms[j]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.inner.x.as_slice()[j * n..(j + 1) * n]
    }

    /// Xv
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.p());
        let mut out = vec![0.0; self.n()];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                for (o, xij) in out.iter_mut().zip(self.column(j)) {
                    *o += xij * vj;
                }
            }
        }
        out
    }

    /// Xᵀw
    pub fn apply_t(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.n());
        (0..self.p()).map(|j| dot(self.column(j), w)).collect()
    }

    /// σ_max(X)², by power iteration (computed once).
    pub fn sigma_max_sq(&self) -> f64 {
        *self
            .inner
            .sigma_max_sq
            .get_or_init(|| linalg::sigma_max_sq(&self.inner.x, POWER_TOL, POWER_MAX_ITER))
    }

    /// Thin SVD truncated at numerical rank (computed once).
    pub fn svd(&self) -> &ThinSvd {
        self.inner.svd.get_or_init(|| ThinSvd::new(&self.inner.x))
    }

    pub fn rank(&self) -> usize {
        self.svd().rank()
    }

    /// Columns `cols` as a new n × |cols| matrix.
    pub fn select_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        self.inner.x.select_columns(cols)
    }

    pub fn to_dvector(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_and_transpose() {
        let x = DesignMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(x.apply(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(x.apply_t(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(x.column(1), &[2.0, 5.0]);
        assert_eq!(x.col_sq_norm(2), 45.0);
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(DesignMatrix::new(DMatrix::zeros(0, 2)).is_err());
        assert!(DesignMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn scaled_identity_spectrum() {
        let x = DesignMatrix::scaled_identity(4);
        assert!((x.sigma_max_sq() - 4.0).abs() < 1e-9);
        assert_eq!(x.rank(), 4);
    }
}
