//! Construction and numerical verification of multidimensional
//! quasi-exactly solvable potentials with two known eigenstates.

pub mod expr;
pub mod generators;
pub mod hamiltonian;
pub mod model;
pub mod sampling;
pub mod spectral;
pub mod verify;

use thiserror::Error;

/// Top-level error for operations that cross module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] expr::ParseError),
    #[error(transparent)]
    Generator(#[from] generators::GeneratorError),
    #[error(transparent)]
    Eval(#[from] expr::EvalError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Grid(#[from] hamiltonian::GridError),
}
