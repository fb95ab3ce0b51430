//! Forward operators: diagonal spectra and dense matrices.
//!
//! The operator 2-norm and the smallest eigenvalue of `A*A` are computed once
//! at construction and never mutated, so a `LinearOperator` can be shared
//! freely between threads.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, check_finite, Error, Result};

/// Largest input dimension for which the dense `sigma_min` is computed by a
/// full SVD.
pub const MAX_SVD_DIM: usize = 2000;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `A e_i = λ_i e_i`, with `λ` strictly positive and nonincreasing.
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    kind: OperatorKind,
    norm: f64,
    sigma_min: Option<f64>,
}

impl LinearOperator {
    pub fn diagonal(eigenvalues: DVector<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidInput("diagonal operator needs at least one eigenvalue".into()));
        }
        check_finite("eigenvalues", eigenvalues.as_slice())?;
        if eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidInput("eigenvalues must be strictly positive".into()));
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("eigenvalues must be nonincreasing".into()));
        }
        let norm = eigenvalues.max();
        let min = eigenvalues.min();
        Ok(Self {
            kind: OperatorKind::Diagonal(eigenvalues),
            norm,
            sigma_min: Some(min * min),
        })
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::InvalidInput("dense operator needs at least one entry".into()));
        }
        check_finite("matrix", matrix.as_slice())?;
        let norm = power_iteration_norm(&matrix);
        let sigma_min = (matrix.ncols() <= MAX_SVD_DIM).then(|| dense_sigma_min(&matrix));
        Ok(Self {
            kind: OperatorKind::Dense(matrix),
            norm,
            sigma_min,
        })
    }

    /// Overrides the cached smallest eigenvalue of `A*A`, e.g. for dense
    /// operators too large for a full SVD.
    pub fn with_sigma_min(mut self, sigma_min: f64) -> Result<Self> {
        if !(sigma_min.is_finite() && sigma_min >= 0.0) {
            return Err(Error::InvalidInput("sigma_min must be finite and nonnegative".into()));
        }
        self.sigma_min = Some(sigma_min);
        Ok(self)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn eigenvalues(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            OperatorKind::Diagonal(l) => Some(l),
            OperatorKind::Dense(_) => None,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.kind {
            OperatorKind::Diagonal(l) => l.len(),
            OperatorKind::Dense(m) => m.ncols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match &self.kind {
            OperatorKind::Diagonal(l) => l.len(),
            OperatorKind::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(match &self.kind {
            OperatorKind::Diagonal(l) => l.component_mul(x),
            OperatorKind::Dense(m) => m * x,
        })
    }

    pub fn adjoint_apply(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.output_dim(), p.len())?;
        Ok(match &self.kind {
            OperatorKind::Diagonal(l) => l.component_mul(p),
            OperatorKind::Dense(m) => m.tr_mul(p),
        })
    }

    /// The operator 2-norm `‖A‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Smallest eigenvalue of `A*A`.
    pub fn sigma_min(&self) -> Result<f64> {
        self.sigma_min.ok_or(Error::SigmaMinUnavailable { cols: self.input_dim() })
    }

    /// Returns `c·A`; cached quantities are rescaled exactly rather than
    /// recomputed.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        let kind = match &self.kind {
            OperatorKind::Diagonal(l) => OperatorKind::Diagonal(l * c),
            OperatorKind::Dense(m) => OperatorKind::Dense(m * c),
        };
        Ok(Self {
            kind,
            norm: self.norm * c,
            sigma_min: self.sigma_min.map(|s| s * c * c),
        })
    }
}

pub fn apply(a: &LinearOperator, x: &DVector<f64>) -> Result<DVector<f64>> {
    a.apply(x)
}

pub fn adjoint_apply(a: &LinearOperator, p: &DVector<f64>) -> Result<DVector<f64>> {
    a.adjoint_apply(p)
}

pub fn operator_norm(a: &LinearOperator) -> f64 {
    a.norm()
}

pub fn sigma_min(a: &LinearOperator) -> Result<f64> {
    a.sigma_min()
}

/// Power iteration on `A*A`; returns the square root of the dominant
/// eigenvalue.
fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    // Fixed, non-symmetric start so the iterate is not orthogonal to the
    // dominant singular vector for structured matrices.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (0.618_033_988_749_895 * (i as f64 + 1.0)).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let av = m * &v;
        let next = av.norm_squared();
        let w = m.tr_mul(&av);
        let wn = w.norm();
        if wn == 0.0 || next == 0.0 {
            return 0.0;
        }
        v = w / wn;
        if (next - estimate).abs() <= POWER_TOL * next {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.sqrt()
}

fn dense_sigma_min(m: &DMatrix<f64>) -> f64 {
    if m.nrows() < m.ncols() {
        // A*A is rank deficient.
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let s = sv.min();
    s * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn diagonal_apply_is_componentwise() {
        let a = LinearOperator::diagonal(dvector![2.0, 1.0]).unwrap();
        assert_eq!(a.apply(&dvector![1.0, 1.0]).unwrap(), dvector![2.0, 1.0]);
        assert_eq!(a.adjoint_apply(&dvector![1.0, 1.0]).unwrap(), dvector![2.0, 1.0]);
    }

    #[test]
    fn polynomial_spectrum_apply() {
        let l = DVector::from_fn(3, |i, _| 1.0 / ((i + 1) as f64).powi(4));
        let a = LinearOperator::diagonal(l).unwrap();
        let out = a.apply(&dvector![1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(out[0], 1.0);
        assert_relative_eq!(out[1], 1.0 / 16.0);
        assert_relative_eq!(out[2], 1.0 / 81.0);
    }

    #[test]
    fn dense_apply_and_transpose() {
        let a = LinearOperator::dense(dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap();
        assert_eq!(a.apply(&dvector![3.0, 5.0]).unwrap(), dvector![3.0, 0.0]);
        let b = LinearOperator::dense(dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap();
        assert_eq!(b.adjoint_apply(&dvector![1.0, 0.0]).unwrap(), dvector![0.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = LinearOperator::dense(DMatrix::zeros(2, 3)).unwrap();
        assert!(matches!(a.apply(&dvector![1.0, 2.0]), Err(Error::DimensionMismatch { expected: 3, got: 2 })));
        assert!(a.adjoint_apply(&dvector![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn norms_and_sigma_min() {
        let a = LinearOperator::diagonal(dvector![3.0, 1.0, 0.5]).unwrap();
        assert_eq!(a.norm(), 3.0);
        assert_eq!(a.sigma_min().unwrap(), 0.25);

        let b = LinearOperator::dense(dmatrix![0.0, 2.0; 0.0, 0.0]).unwrap();
        assert_relative_eq!(b.norm(), 2.0, max_relative = 1e-12);
        assert_eq!(b.sigma_min().unwrap(), 0.0);

        let id = LinearOperator::dense(DMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(id.sigma_min().unwrap(), 1.0, max_relative = 1e-12);

        let l = DVector::from_fn(20, |i, _| 1.0 / ((i + 1) as f64).powi(4));
        let c = LinearOperator::diagonal(l).unwrap();
        assert_relative_eq!(c.sigma_min().unwrap(), 20f64.powi(-8), max_relative = 1e-12);
    }

    #[test]
    fn zero_operator_has_zero_norm() {
        let a = LinearOperator::dense(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(a.norm(), 0.0);
    }

    #[test]
    fn diagonal_validation() {
        assert!(LinearOperator::diagonal(dvector![1.0, 2.0]).is_err());
        assert!(LinearOperator::diagonal(dvector![1.0, 0.0]).is_err());
        assert!(LinearOperator::diagonal(dvector![1.0, f64::NAN]).is_err());
        assert!(LinearOperator::dense(dmatrix![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn large_dense_needs_explicit_sigma_min() {
        let a = LinearOperator::dense(DMatrix::from_element(1, MAX_SVD_DIM + 1, 1e-3)).unwrap();
        assert!(matches!(a.sigma_min(), Err(Error::SigmaMinUnavailable { .. })));
        let a = a.with_sigma_min(1e-6).unwrap();
        assert_eq!(a.sigma_min().unwrap(), 1e-6);
    }

    #[test]
    fn scaling_rescales_caches() {
        let a = LinearOperator::diagonal(dvector![2.0, 1.0]).unwrap().scaled(0.5).unwrap();
        assert_eq!(a.eigenvalues().unwrap(), &dvector![1.0, 0.5]);
        assert_eq!(a.norm(), 1.0);
        assert_eq!(a.sigma_min().unwrap(), 0.25);
    }
}
