//! Sparse and dense linear algebra: CSR matrices, LU factorizations,
//! right-preconditioned GMRES and space-time block vectors.

mod block;
mod dense;
mod gmres;
mod lu;
mod sparse;

pub use block::{BlockLayout, Field};
pub use dense::{DenseLu, DenseMatrix};
pub use gmres::{gmres, GmresConfig, GmresOutcome, Identity, LinearOperator};
pub use lu::{reverse_cuthill_mckee, SparseLu};
pub use sparse::CsrMatrix;

/// Pivots smaller than this fraction of the largest matrix entry are treated
/// as zero.
pub const SINGULAR_RTOL: f64 = 1e-14;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is numerically singular (pivot row {row})")]
    Singular { row: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("Krylov breakdown at iteration {iteration}: non-finite values")]
    Breakdown { iteration: usize },
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}
