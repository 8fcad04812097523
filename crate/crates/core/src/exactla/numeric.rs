//! Floating point counterparts of the exact kernels, backed by nalgebra's SVD.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("matrix has non-finite entries".into()))
    }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol * sigma_max`.
pub fn rank_numeric(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    check_finite(m)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return Ok(0) };
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > tol * smax).count())
}

/// Orthonormal basis (as rows) of the right null space: right singular
/// vectors whose singular value is at most `tol * sigma_max`.
pub fn nullspace_numeric(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_finite(m)?;
    let n = m.ncols();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    // Pad to at least n rows so the SVD returns a full set of right vectors.
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..n)
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= tol * smax)
        .collect();
    Ok(DMatrix::from_fn(keep.len(), n, |r, c| v_t[(keep[r], c)]))
}

/// Rows orthonormalized by a thin QR of the transpose.
pub fn orthonormalize_rows(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_finite(m)?;
    let qr = m.transpose().qr();
    let r = qr.r();
    let smax = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .fold(0.0, f64::max);
    if (0..r.nrows().min(r.ncols())).any(|i| r[(i, i)].abs() <= 1e-12 * smax.max(1e-300))
        || smax == 0.0
    {
        return Err(Error::Numeric("rank-deficient basis".into()));
    }
    Ok(qr.q().transpose())
}
