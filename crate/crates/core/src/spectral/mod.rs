//! Lowest eigenpairs of the grid Hamiltonian, a dense oracle, and
//! degeneracy-safe projections onto eigenvalue windows.

mod dense;
mod lanczos;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::hamiltonian::SparseOperator;

pub use dense::{dense_eigen_oracle, dense_eigenpairs, DENSE_LIMIT};
pub use lanczos::{lowest_eigenpairs_with, LanczosOptions, Target};

/// Largest number of eigenpairs a single request may ask for.
pub const MAX_PAIRS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("no convergence after {iterations} operator applications")]
    NoConvergence { iterations: usize },
    #[error("dense solve limited to {DENSE_LIMIT} rows, got {0}")]
    TooLarge(usize),
    #[error("no eigenvalue in window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("target vector is zero")]
    ZeroTarget,
    #[error("vector length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// A symmetric operator that can be applied to vectors.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Upper bound on the spectral radius.
    fn norm_estimate(&self) -> f64;
}

impl SymmetricOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y).expect("lengths checked by the solver");
    }

    fn norm_estimate(&self) -> f64 {
        SparseOperator::norm_estimate(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit 2-norm.
    pub vector: Vec<f64>,
    /// `‖A v − λ v‖₂`
    pub residual: f64,
}

/// The `k` lowest eigenpairs with residuals below `tol · ‖A‖_est`.
pub fn lowest_eigenpairs(
    a: &SparseOperator,
    k: usize,
    tol: f64,
) -> Result<Vec<EigenPair>, SpectralError> {
    lowest_eigenpairs_with(
        a,
        Target::Count(k),
        &LanczosOptions {
            tol,
            ..LanczosOptions::default()
        },
    )
}

/// Values closer than `1e-6 (1 + |λ|)` to their neighbour are one cluster.
pub fn cluster_tolerance(value: f64) -> f64 {
    1e-6 * (1.0 + value.abs())
}

/// A run of numerically degenerate eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub value: f64,
    pub start: usize,
    pub len: usize,
}

/// Groups ascending eigenvalues into degenerate clusters.
pub fn clusters(values: &[f64]) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if (v - values[i - 1]).abs() <= cluster_tolerance(v) => {
                c.value = (c.value * c.len as f64 + v) / (c.len + 1) as f64;
                c.len += 1;
            }
            _ => out.push(Cluster {
                value: v,
                start: i,
                len: 1,
            }),
        }
    }
    out
}

/// `‖P t‖ / ‖t‖` where `P` projects onto the eigenvectors whose values lie
/// in `[lo, hi]`. The eigenvectors must be orthonormal.
pub fn subspace_overlap(
    target: &[f64],
    pairs: &[EigenPair],
    window: (f64, f64),
) -> Result<f64, SpectralError> {
    let (lo, hi) = window;
    let norm = dot(target, target).sqrt();
    if norm == 0.0 {
        return Err(SpectralError::ZeroTarget);
    }
    let mut proj2 = 0.0;
    let mut any = false;
    for p in pairs.iter().filter(|p| lo <= p.value && p.value <= hi) {
        if p.vector.len() != target.len() {
            return Err(SpectralError::DimensionMismatch {
                expected: target.len(),
                got: p.vector.len(),
            });
        }
        any = true;
        let c = dot(&p.vector, target);
        proj2 += c * c;
    }
    if !any {
        return Err(SpectralError::EmptyWindow { lo, hi });
    }
    Ok(((proj2).sqrt() / norm).min(1.0))
}

/// Deterministic dot product with four partial sums.
/// Eigenvalues of a symmetric matrix, ascending, with eigenvectors as the
/// matching columns.
// nalgebra's SymmetricEigen can swap the values of a nearly decoupled 2×2
// block without rotating its vectors, so this goes through faer
pub(crate) fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mat = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = mat
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigendecomposition of a finite matrix");
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let vectors = DMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
    (order.iter().map(|&i| values[i]).collect(), vectors)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(value: f64, vector: Vec<f64>) -> EigenPair {
        EigenPair {
            value,
            vector,
            residual: 0.0,
        }
    }

    #[test]
    fn clustering() {
        let c = clusters(&[0.0, 1.0, 1.0 + 1e-9, 2.0, 2.0, 2.0 + 1e-7, 3.5]);
        let lens: Vec<usize> = c.iter().map(|c| c.len).collect();
        assert_eq!(lens, vec![1, 2, 3, 1]);
        assert_eq!(c[2].start, 3);
    }

    #[test]
    fn overlap_basics() {
        let pairs = vec![pair(1.0, vec![1.0, 0.0, 0.0]), pair(2.0, vec![0.0, 1.0, 0.0])];
        assert_eq!(subspace_overlap(&[3.0, 0.0, 0.0], &pairs, (0.5, 1.5)).unwrap(), 1.0);
        assert_eq!(subspace_overlap(&[0.0, 0.0, 2.0], &pairs, (0.0, 3.0)).unwrap(), 0.0);
        let o = subspace_overlap(&[1.0, 1.0, 0.0], &pairs, (1.5, 2.5)).unwrap();
        assert!((o - 0.5_f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            subspace_overlap(&[1.0, 0.0, 0.0], &pairs, (5.0, 6.0)),
            Err(SpectralError::EmptyWindow { lo: 5.0, hi: 6.0 })
        );
        assert_eq!(
            subspace_overlap(&[0.0; 3], &pairs, (0.0, 3.0)),
            Err(SpectralError::ZeroTarget)
        );
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (0..7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 91.0);
    }
}
