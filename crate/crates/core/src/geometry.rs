//! Distance and energy under a constant Riemannian metric `M`.
//!
//! With `M` constant the geodesic between two points is the straight
//! segment, so the distance reduces to the weighted norm `‖s₁ − s₂‖_M`,
//! evaluated as `‖Lᵀ(s₁ − s₂)‖₂` with `M = L Lᵀ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct MetricSpaceView {
    metric: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    factor: DMatrix<f64>,
}

impl MetricSpaceView {
    pub fn new(metric: DMatrix<f64>) -> Result<Self> {
        if !metric.is_square() || metric.is_empty() {
            return Err(Error::Shape(format!("metric must be square and non-empty, got {:?}", metric.shape())));
        }
        if !linalg::is_finite_matrix(&metric) {
            return Err(Error::NonFinite("metric has non-finite entries".into()));
        }
        let cholesky = linalg::cholesky(&metric)?;
        let factor = cholesky.l();
        Ok(MetricSpaceView { metric, cholesky, factor })
    }

    /// Euclidean metric of the given dimension.
    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is positive definite")
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.cholesky
    }

    /// Lower-triangular `L` with `M = L Lᵀ`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// `‖v‖_M`.
    pub fn norm(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!("vector of length {} under a {}-dim metric", v.len(), self.dim())));
        }
        Ok(self.factor.tr_mul(v).norm())
    }

    pub fn distance(&self, s1: &DVector<f64>, s2: &DVector<f64>) -> Result<f64> {
        if s1.len() != s2.len() {
            return Err(Error::Shape(format!("points of length {} and {}", s1.len(), s2.len())));
        }
        self.norm(&(s1 - s2))
    }

    /// `E(s₁, s₂) = d(s₁, s₂)²`.
    pub fn energy(&self, s1: &DVector<f64>, s2: &DVector<f64>) -> Result<f64> {
        self.distance(s1, s2).map(|d| d * d)
    }
}
