//! Numerical recovery of a stationary subspace by minimizing
//! `L(W) = sum_i ||W G_i W^T||_F^2 + sum_i ||W l_i||^2`
//! over matrices with orthonormal rows.
//!
//! The objective only depends on the row span of `W`, so the minimizers
//! form whole orbits under `W -> O W`; restarts are compared by
//! [`subspace_distance`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{difference_system, reduce_ambient_default, EpochCumulants};
use crate::error::{Error, Result};
use crate::exactla::numeric::orthonormalize_rows;
use crate::grass::{subspace_distance, FloatPlane};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Chordal distance under which two solutions are merged.
    pub cluster_radius: f64,
    /// Residual threshold, relative to the objective's scale.
    pub residual_tol: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            restarts: 50,
            max_iter: 10_000,
            grad_tol: 1e-10,
            cluster_radius: 1e-4,
            residual_tol: 1e-12,
        }
    }
}

/// The objective, normalized so that the squared norms of its data sum to 1.
#[derive(Clone, Debug)]
pub struct Objective {
    grams: Vec<DMatrix<f64>>,
    linear: Vec<DVector<f64>>,
    dim: usize,
    scale: f64,
}

impl Objective {
    pub fn new(linear_forms: &[DVector<f64>], quadrics: &[DMatrix<f64>]) -> Result<Self> {
        let dim = match (quadrics.first(), linear_forms.first()) {
            (Some(g), _) => g.nrows(),
            (None, Some(l)) => l.len(),
            (None, None) => {
                return Err(Error::invalid(
                    "objective is identically zero: no forms given",
                ))
            }
        };
        if quadrics.iter().any(|g| g.shape() != (dim, dim))
            || linear_forms.iter().any(|l| l.len() != dim)
        {
            return Err(Error::invalid("forms have inconsistent dimensions"));
        }
        if quadrics
            .iter()
            .flat_map(|g| g.iter())
            .chain(linear_forms.iter().flat_map(|l| l.iter()))
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numeric("forms contain non-finite values".into()));
        }
        let scale: f64 = quadrics.iter().map(|g| g.norm_squared()).sum::<f64>()
            + linear_forms.iter().map(|l| l.norm_squared()).sum::<f64>();
        if scale == 0.0 {
            return Err(Error::invalid(
                "objective is identically zero: all forms vanish",
            ));
        }
        let c = scale.sqrt();
        Ok(Objective {
            grams: quadrics
                .iter()
                .map(|g| (g + g.transpose()) * (0.5 / c))
                .collect(),
            linear: linear_forms.iter().map(|l| l / c).collect(),
            dim,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sum of squared Frobenius norms of the raw forms.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn value(&self, w: &DMatrix<f64>) -> f64 {
        let q: f64 = self
            .grams
            .iter()
            .map(|g| (w * g * w.transpose()).norm_squared())
            .sum();
        let l: f64 = self.linear.iter().map(|l| (w * l).norm_squared()).sum();
        q + l
    }

    /// Euclidean gradient `4 (W G W^T) W G + 2 (W l) l^T`.
    pub fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(w.nrows(), w.ncols());
        for g in &self.grams {
            let wg = w * g;
            e += (&wg * w.transpose()) * &wg * 4.0;
        }
        for l in &self.linear {
            e += (w * l) * l.transpose() * 2.0;
        }
        e
    }

    /// Projection of the Euclidean gradient onto the tangent space of the
    /// Stiefel manifold at `W`: `E - sym(E W^T) W`.
    pub fn riemannian_gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let e = self.gradient(w);
        let ewt = &e * w.transpose();
        let sym = (&ewt + ewt.transpose()) * 0.5;
        e - sym * w
    }
}

/// Relative error between the analytic directional derivative of `obj`
/// at `w` along `dir` and a central finite difference with step `h`.
pub fn gradient_check(obj: &Objective, w: &DMatrix<f64>, dir: &DMatrix<f64>, h: f64) -> f64 {
    let analytic = obj.gradient(w).dot(dir);
    let numeric = (obj.value(&(w + dir * h)) - obj.value(&(w - dir * h))) / (2.0 * h);
    let denom = analytic.abs().max(numeric.abs()).max(f64::MIN_POSITIVE);
    (analytic - numeric).abs() / denom
}

pub fn random_stiefel<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
        if let Ok(w) = orthonormalize_rows(&g) {
            return w;
        }
    }
}

#[derive(Clone, Debug)]
struct Descent {
    w: DMatrix<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

fn descend(obj: &Objective, start: DMatrix<f64>, opts: &RecoveryOptions) -> Descent {
    const ARMIJO: f64 = 1e-4;
    let mut w = start;
    let mut f = obj.value(&w);
    let mut g = obj.riemannian_gradient(&w);
    let mut step = 1.0;
    let mut it = 0;
    let mut converged = false;
    while it < opts.max_iter {
        let gn2 = g.norm_squared();
        if gn2.sqrt() <= opts.grad_tol || f == 0.0 {
            converged = true;
            break;
        }
        let mut a = step;
        let mut accepted = None;
        for _ in 0..80 {
            if let Ok(cand) = orthonormalize_rows(&(&w - &g * a)) {
                let fc = obj.value(&cand);
                if fc <= f - ARMIJO * a * gn2 {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            a *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        let g_new = obj.riemannian_gradient(&cand);
        // Barzilai-Borwein guess for the next trial step.
        let s = &cand - &w;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        step = if sy > 0.0 {
            (s.norm_squared() / sy).clamp(1e-10, 1e10)
        } else {
            (a * 2.0).min(1e10)
        };
        w = cand;
        f = fc;
        g = g_new;
        it += 1;
    }
    let grad_norm = g.norm();
    converged |= grad_norm <= opts.grad_tol || f == 0.0;
    Descent {
        w,
        value: f,
        grad_norm,
        iterations: it,
        converged,
    }
}

#[derive(Clone, Debug)]
pub struct RecoveredPlane {
    pub plane: FloatPlane,
    /// Objective value at the representative, relative to the data scale.
    pub residual: f64,
    /// Number of restarts that landed in this cluster.
    pub hits: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDiagnostics {
    pub restarts: usize,
    /// Restarts that met the gradient tolerance.
    pub converged: usize,
    /// Converged restarts whose residual is below the threshold.
    pub accepted: usize,
    pub best_residual: f64,
    pub max_grad_norm: f64,
    pub total_iterations: usize,
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub planes: Vec<RecoveredPlane>,
    pub diagnostics: RecoveryDiagnostics,
}

fn run_restarts(
    obj: &Objective,
    rows: usize,
    seeds: &[u64],
    opts: &RecoveryOptions,
) -> Vec<Descent> {
    let one = |seed: &u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        descend(obj, random_stiefel(rows, obj.dim(), &mut rng), opts)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(one).collect()
    }
}

/// Multi-start recovery of the k-planes on which all forms vanish.
///
/// An empty list means no restart converged below the residual threshold;
/// the diagnostics say how close the runs came.
pub fn recover_subspace<R: Rng + ?Sized>(
    linear_forms: &[DVector<f64>],
    quadrics: &[DMatrix<f64>],
    k: usize,
    opts: &RecoveryOptions,
    rng: &mut R,
) -> Result<Recovery> {
    let obj = Objective::new(linear_forms, quadrics)?;
    if k + 1 > obj.dim() {
        return Err(Error::invalid(format!(
            "a {k}-plane does not fit in P^{}",
            obj.dim() - 1
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    let seeds: Vec<u64> = (0..opts.restarts).map(|_| rng.gen()).collect();
    let runs = run_restarts(&obj, k + 1, &seeds, opts);
    cluster_runs(&runs, obj.scale(), opts)
}

fn cluster_runs(runs: &[Descent], scale: f64, opts: &RecoveryOptions) -> Result<Recovery> {
    let mut diag = RecoveryDiagnostics {
        restarts: runs.len(),
        scale,
        best_residual: f64::INFINITY,
        ..Default::default()
    };
    let mut clusters: Vec<(usize, RecoveredPlane)> = Vec::new();
    for (idx, run) in runs.iter().enumerate() {
        diag.total_iterations += run.iterations;
        diag.best_residual = diag.best_residual.min(run.value);
        diag.max_grad_norm = diag.max_grad_norm.max(run.grad_norm);
        if !run.converged {
            continue;
        }
        diag.converged += 1;
        if run.value >= opts.residual_tol {
            continue;
        }
        diag.accepted += 1;
        let plane = FloatPlane::new(&run.w)?;
        let mut home = None;
        for (ci, (_, c)) in clusters.iter().enumerate() {
            if subspace_distance(&c.plane, &plane)?.chordal < opts.cluster_radius {
                home = Some(ci);
                break;
            }
        }
        match home {
            Some(ci) => {
                let c = &mut clusters[ci].1;
                c.hits += 1;
                if run.value < c.residual {
                    c.plane = plane;
                    c.residual = run.value;
                }
            }
            None => clusters.push((
                idx,
                RecoveredPlane {
                    plane,
                    residual: run.value,
                    hits: 1,
                },
            )),
        }
    }
    clusters.sort_by(|a, b| a.1.residual.total_cmp(&b.1.residual).then(a.0.cmp(&b.0)));
    Ok(Recovery {
        planes: clusters.into_iter().map(|(_, c)| c).collect(),
        diagnostics: diag,
    })
}

/// Epoch cumulants to candidate stationary subspaces: forms the difference
/// system, removes the linear forms by restricting to their kernel,
/// recovers in the reduced space and maps the answers back.
pub fn recover_from_epochs<R: Rng + ?Sized>(
    epochs: &[EpochCumulants],
    k: usize,
    opts: &RecoveryOptions,
    rng: &mut R,
) -> Result<Recovery> {
    let sys = difference_system(epochs)?;
    if sys.is_degenerate() {
        return Err(Error::invalid(
            "objective is identically zero: all epochs have equal cumulants",
        ));
    }
    let dim = epochs[0].dim();
    let red = reduce_ambient_default(dim, &sys.linear_forms, &sys.quadrics, k)?;
    if red.quadrics.is_empty() {
        // Every k-plane of the kernel is a solution.
        let obj = Objective::new(&sys.linear_forms, &sys.quadrics)?;
        let runs: Vec<Descent> = (0..opts.restarts)
            .map(|_| {
                let w = red.lift(&random_stiefel(k + 1, red.embedding.ncols(), rng));
                Descent {
                    value: obj.value(&w),
                    w,
                    grad_norm: 0.0,
                    iterations: 0,
                    converged: true,
                }
            })
            .collect();
        return cluster_runs(&runs, obj.scale(), opts);
    }
    let mut rec = recover_subspace(&[], &red.quadrics, k, opts, rng)?;
    for p in &mut rec.planes {
        p.plane = FloatPlane::new(&red.lift(p.plane.basis()))?;
    }
    Ok(rec)
}

/// Local descent from `start` (rows spanning a k-plane), for polishing an
/// estimate on new data. Fails when the descent does not converge.
pub fn refine(
    linear_forms: &[DVector<f64>],
    quadrics: &[DMatrix<f64>],
    start: &DMatrix<f64>,
    opts: &RecoveryOptions,
) -> Result<RecoveredPlane> {
    let obj = Objective::new(linear_forms, quadrics)?;
    if start.ncols() != obj.dim() {
        return Err(Error::invalid(format!(
            "start has {} columns, the forms need {}",
            start.ncols(),
            obj.dim()
        )));
    }
    let run = descend(&obj, orthonormalize_rows(start)?, opts);
    if !run.converged {
        return Err(Error::Numeric(format!(
            "descent stopped at gradient norm {:e}",
            run.grad_norm
        )));
    }
    Ok(RecoveredPlane {
        plane: FloatPlane::new(&run.w)?,
        residual: run.value,
        hits: 1,
    })
}

/// Recovery from estimated cumulants.
///
/// Sampling noise leaves no exact common zero, so the linear forms stay in
/// the objective instead of being eliminated and every converged restart is
/// accepted whatever its residual. Clusters come best first.
pub fn recover_from_estimates<R: Rng + ?Sized>(
    epochs: &[EpochCumulants],
    k: usize,
    opts: &RecoveryOptions,
    rng: &mut R,
) -> Result<Recovery> {
    let sys = difference_system(epochs)?;
    if sys.is_degenerate() {
        return Err(Error::invalid(
            "objective is identically zero: all epochs have equal cumulants",
        ));
    }
    let opts = RecoveryOptions {
        residual_tol: f64::INFINITY,
        ..*opts
    };
    recover_subspace(&sys.linear_forms, &sys.quadrics, k, &opts, rng)
}
