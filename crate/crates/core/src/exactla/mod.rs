//! Scalar fields and the linear algebra kernels everything else is built on.
//!
//! Exact work happens in [`Matrix`] over a [`Field`] (rationals or a prime
//! field). Floating point matrices are plain `nalgebra::DMatrix<f64>` and go
//! through [`numeric`]; there is no float `Field`, so exact-only kernels
//! cannot be called on floats by construction.

pub mod bareiss;
pub mod field;
pub mod matrix;
pub mod numeric;

pub use field::{Field, FieldDesc, PrimeField, Rationals};
pub use matrix::Matrix;
pub use numeric::{nullspace_numeric, rank_numeric, DEFAULT_TOL};

pub fn rank_exact<F: Field>(m: &Matrix<F>) -> usize {
    m.rank()
}
