use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EpochCumulants;
use crate::dims;
use crate::error::{Error, Result};
use crate::exactla::Rationals;
use crate::forms::random_rank_r_vanishing_quadric;
use crate::grass::{FloatPlane, Plane};

/// Minimum eigenvalue enforced on every generated covariance.
pub const MIN_EIGENVALUE: f64 = 0.01;
/// Tolerance of the instance invariants on population data.
pub const INVARIANT_TOL: f64 = 1e-10;

/// Epoch cumulants together with the stationary subspace they were built
/// around, when it is known.
#[derive(Clone, Debug)]
pub struct SsaInstance {
    pub epochs: Vec<EpochCumulants>,
    pub ground_truth: Option<FloatPlane>,
    pub rank_constraint: Option<usize>,
}

impl SsaInstance {
    pub fn new(
        epochs: Vec<EpochCumulants>,
        ground_truth: Option<FloatPlane>,
        rank_constraint: Option<usize>,
    ) -> Result<Self> {
        if epochs.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 epochs, got {}",
                epochs.len()
            )));
        }
        let dim = epochs[0].dim();
        if epochs.iter().any(|e| e.dim() != dim) {
            return Err(Error::invalid("epochs have different dimensions"));
        }
        if let Some(p) = &ground_truth {
            if p.n() + 1 != dim {
                return Err(Error::invalid(format!(
                    "ground truth lives in P^{}, epochs in P^{}",
                    p.n(),
                    dim - 1
                )));
            }
        }
        Ok(SsaInstance {
            epochs,
            ground_truth,
            rank_constraint,
        })
    }

    /// Ambient projective dimension `n`.
    pub fn n(&self) -> usize {
        self.epochs[0].dim() - 1
    }

    /// Number of differences `s`.
    pub fn s(&self) -> usize {
        self.epochs.len() - 1
    }

    pub fn k(&self) -> Option<usize> {
        self.ground_truth.as_ref().map(FloatPlane::k)
    }

    /// Largest violation of `P (mu_i - mu_0) = 0` and `P (Sigma_i - Sigma_0) P^T = 0`,
    /// relative to the size of the data. Zero without ground truth.
    pub fn invariant_residual(&self) -> f64 {
        let Some(p) = &self.ground_truth else {
            return 0.0;
        };
        let b = p.basis();
        let e0 = &self.epochs[0];
        let scale = self
            .epochs
            .iter()
            .map(|e| e.mean.amax().max(e.covariance.amax()))
            .fold(1.0, f64::max);
        let mut worst: f64 = 0.0;
        for e in &self.epochs[1..] {
            worst = worst.max((b * (&e.mean - &e0.mean)).amax());
            worst = worst.max((b * (&e.covariance - &e0.covariance) * b.transpose()).amax());
        }
        worst / scale
    }

    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let r = self.invariant_residual();
        if r > tol {
            return Err(Error::ContractViolation(format!(
                "ground truth is not stationary: residual {r:e} exceeds {tol:e}"
            )));
        }
        let min_eig = self
            .epochs
            .iter()
            .map(EpochCumulants::min_eigenvalue)
            .fold(f64::INFINITY, f64::min);
        let scale = self
            .epochs
            .iter()
            .map(|e| e.covariance.amax())
            .fold(1.0, f64::max);
        if min_eig < -tol * scale {
            return Err(Error::ContractViolation(format!(
                "covariance is not PSD (eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }

    /// The same instance after the change of coordinates `x -> Q x`.
    pub fn transform(&self, q: &DMatrix<f64>) -> Result<SsaInstance> {
        let dim = self.n() + 1;
        if q.shape() != (dim, dim) {
            return Err(Error::invalid(format!("transform must be {dim}x{dim}")));
        }
        let epochs = self
            .epochs
            .iter()
            .map(|e| {
                let c = q * &e.covariance * q.transpose();
                EpochCumulants::new(q * &e.mean, (&c + c.transpose()) * 0.5)
            })
            .collect::<Result<Vec<_>>>()?;
        let qinv = q
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("transform is singular"))?;
        let ground_truth = match &self.ground_truth {
            Some(p) => Some(FloatPlane::new(&(p.basis() * qinv))?),
            None => None,
        };
        SsaInstance::new(epochs, ground_truth, self.rank_constraint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceOptions {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub rank_r: Option<usize>,
    /// Whether the means also move off the stationary subspace. Without it
    /// the difference system is made of quadrics only.
    pub mean_shift: bool,
}

impl InstanceOptions {
    pub fn new(n: usize, k: usize, s: usize) -> Self {
        InstanceOptions {
            n,
            k,
            s,
            rank_r: None,
            mean_shift: true,
        }
    }

    pub fn rank(mut self, r: usize) -> Self {
        self.rank_r = Some(r);
        self
    }

    pub fn mean_shift(mut self, on: bool) -> Self {
        self.mean_shift = on;
        self
    }
}

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Largest `c` in `(0, 1]` with `lambda_min(base + c d) >= MIN_EIGENVALUE`,
/// assuming `base` already satisfies it.
fn shrink_factor(base: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    if min_eigenvalue(&(base + d)) >= MIN_EIGENVALUE {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_eigenvalue(&(base + d * mid)) >= MIN_EIGENVALUE {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Symmetric `D` with zero top-left `(k+1)x(k+1)` block, in coordinates
/// where the stationary subspace is `span(e_0..e_k)`.
fn adapted_difference<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rank_r: Option<usize>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let dim = n + 1;
    match rank_r {
        None => {
            let mut d = gaussian(dim, dim, rng);
            d = (&d + d.transpose()) * std::f64::consts::FRAC_1_SQRT_2;
            d.view_mut((0, 0), (k + 1, k + 1)).fill(0.0);
            Ok(d)
        }
        Some(r) => {
            let q = Rationals;
            let plane = Plane::coordinate(&q, n, k)?;
            let g = random_rank_r_vanishing_quadric(&q, n, r, &plane, 9, rng)?;
            let d = g.matrix().to_f64();
            let s = d.amax();
            Ok(if s > 0.0 { d / s } else { d })
        }
    }
}

/// Random population instance with a planted stationary k-plane.
pub fn generate_instance<R: Rng + ?Sized>(
    opts: &InstanceOptions,
    rng: &mut R,
) -> Result<SsaInstance> {
    let InstanceOptions {
        n,
        k,
        s,
        rank_r,
        mean_shift,
    } = *opts;
    if k >= n {
        return Err(Error::invalid(format!("need 0 <= k < n, got n={n}, k={k}")));
    }
    if s == 0 {
        return Err(Error::invalid("need s >= 1 epoch differences, got s = 0"));
    }
    if let Some(r) = rank_r {
        dims::require_rank_regime(k as i64, r as i64)?;
        if r > n + 1 {
            return Err(Error::invalid(format!(
                "rank r = {r} exceeds n+1 = {}",
                n + 1
            )));
        }
    }
    let dim = n + 1;
    let u = random_orthogonal(dim, rng);
    let ut = u.transpose();
    let a = gaussian(dim, dim, rng);
    let sigma0 = &a * a.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.5;
    let mu0 = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));

    let mut epochs = vec![EpochCumulants::new(mu0.clone(), sigma0.clone())?];
    for _ in 0..s {
        let d = &ut * adapted_difference(n, k, rank_r, rng)? * &u;
        let d = (&d + d.transpose()) * 0.5;
        let c = shrink_factor(&sigma0, &d);
        let sigma = &sigma0 + d * c;
        let mut shift = DVector::zeros(dim);
        if mean_shift {
            for j in k + 1..dim {
                shift[j] = StandardNormal.sample(rng);
            }
        }
        epochs.push(EpochCumulants::new(
            &mu0 + &ut * shift,
            (&sigma + sigma.transpose()) * 0.5,
        )?);
    }
    let truth = FloatPlane::new(&u.rows(0, k + 1).into_owned())?;
    let inst = SsaInstance::new(epochs, Some(truth), rank_r)?;
    inst.check_invariants(INVARIANT_TOL)?;
    Ok(inst)
}

/// `m` observations per epoch, Gaussian with the epoch's mean and covariance.
pub fn sample_epochs<R: Rng + ?Sized>(
    inst: &SsaInstance,
    m: usize,
    rng: &mut R,
) -> Result<Vec<DMatrix<f64>>> {
    inst.epochs
        .iter()
        .map(|e| {
            let l = e
                .covariance
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?
                .l();
            let z = gaussian(m, e.dim(), rng);
            let mut x = z * l.transpose();
            for mut row in x.row_iter_mut() {
                row += e.mean.transpose();
            }
            Ok(x)
        })
        .collect()
}
