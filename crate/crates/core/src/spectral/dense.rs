use super::{symmetric_eigen, EigenPair, SpectralError};
use crate::hamiltonian::SparseOperator;

/// Largest operator handed to the dense solver.
pub const DENSE_LIMIT: usize = 3000;

/// All eigenvalues of `a`, ascending, by full symmetric decomposition.
pub fn dense_eigen_oracle(a: &SparseOperator) -> Result<Vec<f64>, SpectralError> {
    Ok(dense_eigenpairs(a)?.into_iter().map(|p| p.value).collect())
}

/// All eigenpairs of `a`, ascending.
pub fn dense_eigenpairs(a: &SparseOperator) -> Result<Vec<EigenPair>, SpectralError> {
    let m = a.dimension();
    if m > DENSE_LIMIT {
        return Err(SpectralError::TooLarge(m));
    }
    let (values, vectors) = symmetric_eigen(a.to_dense());
    Ok((0..m)
        .map(|i| {
            let vector: Vec<f64> = vectors.column(i).iter().copied().collect();
            let value = values[i];
            let av = a.matvec(&vector).expect("square operator");
            let residual = av
                .iter()
                .zip(&vector)
                .map(|(y, x)| (y - value * x).powi(2))
                .sum::<f64>()
                .sqrt();
            EigenPair {
                value,
                vector,
                residual,
            }
        })
        .collect())
}
