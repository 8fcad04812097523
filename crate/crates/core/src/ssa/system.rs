//! From epoch cumulants to the polynomial system whose k-plane solutions are
//! the candidate stationary subspaces.
//!
//! For epochs `0..=s`, the `i`-th difference forms are the linear form with
//! coefficients `mu_i - mu_0` and the quadric with Gram matrix
//! `Sigma_i - Sigma_0`. A row basis `P` spans a stationary subspace exactly
//! when all of them vanish on its row span.

use nalgebra::{DMatrix, DVector};

use super::EpochCumulants;
use crate::error::{Error, Result};
use crate::exactla::numeric::{nullspace_numeric, rank_numeric, DEFAULT_TOL};

/// Relative threshold under which a difference form counts as zero.
pub const DROP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default)]
pub struct DifferenceSystem {
    pub linear_forms: Vec<DVector<f64>>,
    pub quadrics: Vec<DMatrix<f64>>,
    /// Epoch indices `i` (1-based) whose linear difference was dropped.
    pub dropped_linear: Vec<usize>,
    /// Epoch indices `i` (1-based) whose quadric difference was dropped.
    pub dropped_quadrics: Vec<usize>,
}

impl DifferenceSystem {
    pub fn is_degenerate(&self) -> bool {
        self.linear_forms.is_empty() && self.quadrics.is_empty()
    }
}

pub fn difference_system(epochs: &[EpochCumulants]) -> Result<DifferenceSystem> {
    if epochs.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 epochs, got {}",
            epochs.len()
        )));
    }
    let dim = epochs[0].dim();
    if let Some(i) = epochs.iter().position(|e| e.dim() != dim) {
        return Err(Error::invalid(format!(
            "epoch {i} has dimension {}, expected {dim}",
            epochs[i].dim()
        )));
    }
    let base = &epochs[0];
    let lin: Vec<DVector<f64>> = epochs[1..].iter().map(|e| &e.mean - &base.mean).collect();
    let quad: Vec<DMatrix<f64>> = epochs[1..]
        .iter()
        .map(|e| &e.covariance - &base.covariance)
        .collect();
    let scale = lin
        .iter()
        .map(|v| v.amax())
        .chain(quad.iter().map(|m| m.amax()))
        .fold(0.0, f64::max);
    let cutoff = DROP_TOL * scale;
    let mut out = DifferenceSystem::default();
    for (i, (l, q)) in lin.into_iter().zip(quad).enumerate() {
        if scale > 0.0 && l.amax() > cutoff {
            out.linear_forms.push(l);
        } else {
            out.dropped_linear.push(i + 1);
        }
        if scale > 0.0 && q.amax() > cutoff {
            out.quadrics.push(q);
        } else {
            out.dropped_quadrics.push(i + 1);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ReducedSystem {
    /// `N^T G N` for each quadric `G`.
    pub quadrics: Vec<DMatrix<f64>>,
    /// `(n+1) x m` matrix with orthonormal columns spanning the common kernel
    /// of the linear forms. A reduced plane `W` maps back to `W N^T`.
    pub embedding: DMatrix<f64>,
    pub linear_rank: usize,
}

impl ReducedSystem {
    /// Projective dimension of the reduced ambient space.
    pub fn ambient_n(&self) -> usize {
        self.embedding.ncols() - 1
    }

    pub fn lift(&self, reduced_basis: &DMatrix<f64>) -> DMatrix<f64> {
        reduced_basis * self.embedding.transpose()
    }
}

/// Restricts the quadrics to the common kernel of the linear forms, dropping
/// any that vanish there up to `tol` relative to their norm.
pub fn reduce_ambient(
    dim: usize,
    linear_forms: &[DVector<f64>],
    quadrics: &[DMatrix<f64>],
    k: usize,
    tol: f64,
) -> Result<ReducedSystem> {
    if let Some(bad) = linear_forms.iter().position(|l| l.len() != dim) {
        return Err(Error::invalid(format!(
            "linear form {bad} has length {}, expected {dim}",
            linear_forms[bad].len()
        )));
    }
    if let Some(bad) = quadrics.iter().position(|q| q.shape() != (dim, dim)) {
        return Err(Error::invalid(format!("quadric {bad} is not {dim}x{dim}")));
    }
    let (embedding, linear_rank) = if linear_forms.is_empty() {
        (DMatrix::identity(dim, dim), 0)
    } else {
        let a = DMatrix::from_fn(linear_forms.len(), dim, |r, c| linear_forms[r][c]);
        let rank = rank_numeric(&a, tol)?;
        (nullspace_numeric(&a, tol)?.transpose(), rank)
    };
    if embedding.ncols() < k + 1 {
        return Err(Error::Infeasible(format!(
            "linear constraints leave a {}-dimensional space, too small for a {k}-plane",
            embedding.ncols()
        )));
    }
    let quadrics = quadrics
        .iter()
        .map(|g| (embedding.transpose() * g * &embedding, g.norm()))
        .filter(|(r, norm)| r.norm() > tol * norm)
        .map(|(r, _)| r)
        .collect();
    Ok(ReducedSystem {
        quadrics,
        embedding,
        linear_rank,
    })
}

pub fn reduce_ambient_default(
    dim: usize,
    linear_forms: &[DVector<f64>],
    quadrics: &[DMatrix<f64>],
    k: usize,
) -> Result<ReducedSystem> {
    reduce_ambient(dim, linear_forms, quadrics, k, DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(mean: &[f64], cov_diag: &[f64]) -> EpochCumulants {
        EpochCumulants::new(
            DVector::from_row_slice(mean),
            DMatrix::from_diagonal(&DVector::from_row_slice(cov_diag)),
        )
        .unwrap()
    }

    #[test]
    fn quadrics_vanishing_on_the_kernel_are_dropped() {
        let l = DVector::from_row_slice(&[0.0, 0.0, 1.0]);
        let vanishing = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.0, 0.0, 1.0]));
        let kept = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -1.0, 0.0]));
        let red = reduce_ambient_default(3, &[l], &[vanishing, kept], 1).unwrap();
        assert_eq!(red.quadrics.len(), 1);
        assert_eq!(red.ambient_n(), 1);
    }

    #[test]
    fn identical_epochs_are_degenerate() {
        let e = epoch(&[1.0, 2.0], &[1.0, 1.0]);
        let sys = difference_system(&[e.clone(), e]).unwrap();
        assert!(sys.is_degenerate());
        assert_eq!(sys.dropped_linear, vec![1]);
        assert_eq!(sys.dropped_quadrics, vec![1]);
    }

    #[test]
    fn three_epochs_give_two_of_each() {
        let sys = difference_system(&[
            epoch(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]),
            epoch(&[1.0, 0.0, 0.0], &[2.0, 1.0, 1.0]),
            epoch(&[0.0, 1.0, 0.0], &[1.0, 3.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(sys.linear_forms.len(), 2);
        assert_eq!(sys.quadrics.len(), 2);
        assert!(difference_system(&[epoch(&[0.0], &[1.0])]).is_err());
    }

    #[test]
    fn reduction_drops_by_linear_rank() {
        let q = vec![DMatrix::<f64>::identity(5, 5)];
        let r = reduce_ambient_default(5, &[], &q, 1).unwrap();
        assert_eq!(r.ambient_n(), 4);
        assert_eq!(r.quadrics[0], q[0]);

        let lin = vec![
            DVector::from_row_slice(&[1.0, 0.0, 0.0, 0.0, 0.0]),
            DVector::from_row_slice(&[0.0, 1.0, 1.0, 0.0, 0.0]),
        ];
        let r = reduce_ambient_default(5, &lin, &q, 1).unwrap();
        assert_eq!((r.ambient_n(), r.linear_rank), (2, 2));

        let dependent = vec![lin[0].clone(), lin[0].clone() * 3.0];
        let r = reduce_ambient_default(5, &dependent, &q, 1).unwrap();
        assert_eq!(r.ambient_n(), 3);

        let many: Vec<_> = (0..4)
            .map(|i| DVector::from_fn(5, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        assert!(matches!(
            reduce_ambient_default(5, &many, &q, 1),
            Err(Error::Infeasible(_))
        ));
    }
}
