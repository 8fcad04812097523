//! Tangent spaces of Fano schemes and finite-field censuses of their points.
//!
//! The tangent space of `F_k(V(f))` at a plane `L0` is computed in the affine
//! chart centered at `L0` (see [`crate::grass::ChartPoint`]). A plane in the
//! chart is the row space of `B + X C`; expanding the restriction coefficients
//! of every form to first order in `X` gives one linear equation per
//! coefficient. For the column `X_{a,b}` the first-order term is
//! `t_a * (D_{c_b} f)(t B)`, the derivative of `f` along the `b`-th
//! complementary unit vector restricted to the plane and multiplied by `t_a`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dims::{self, FanoParams};
use crate::error::{Error, Result};
use crate::exactla::{Field, Matrix, PrimeField};
use crate::forms::{monomials, restrict_to_plane, GramMatrix, PolySystem};
use crate::grass::{intersection_dim, Plane, PlaneEnumerator};

#[derive(Clone, Debug)]
pub struct TangentSystem<F: Field> {
    pub n: usize,
    pub k: usize,
    pub degrees: Vec<u32>,
    pub base_plane: Plane<F>,
    /// `sum_i C(d_i + k, k)` rows, `(k+1)(n-k)` columns.
    pub matrix: Matrix<F>,
    /// `(a, b)` for column `X_{a,b}`, `0 <= a <= k < b <= n`.
    pub column_labels: Vec<(usize, usize)>,
}

impl<F: Field> TangentSystem<F> {
    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    pub fn tangent_dim(&self) -> usize {
        self.matrix.cols() - self.rank()
    }
}

fn check_contains<F: Field>(sys: &PolySystem<F>, plane: &Plane<F>) -> Result<()> {
    if sys.n() != plane.n() {
        return Err(Error::invalid(format!(
            "system lives in P^{}, plane in P^{}",
            sys.n(),
            plane.n()
        )));
    }
    for (i, f) in sys.forms().iter().enumerate() {
        let coeffs = restrict_to_plane(f, plane)?;
        if !coeffs.iter().all(|c| f.field().is_zero(c)) {
            return Err(Error::ContractViolation(format!(
                "form {i} does not vanish on the base plane"
            )));
        }
    }
    Ok(())
}

/// Linear system cutting out the tangent space of `F_k(V(sys))` at `base`.
pub fn tangent_system<F: Field>(sys: &PolySystem<F>, base: &Plane<F>) -> Result<TangentSystem<F>> {
    check_contains(sys, base)?;
    let fld = sys.field();
    let (n, k) = (base.n(), base.k());
    let complement = base.complement_columns();
    let column_labels: Vec<(usize, usize)> = (0..=k)
        .flat_map(|a| (0..n - k).map(move |b| (a, k + 1 + b)))
        .collect();
    let mut blocks: Vec<Matrix<F>> = Vec::new();
    for f in sys.forms() {
        let d = f.degree();
        let row_index: BTreeMap<Vec<u32>, usize> = monomials(k + 1, d)
            .into_iter()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();
        let mut block = Matrix::zeros(fld, row_index.len(), column_labels.len());
        for (b, &col) in complement.iter().enumerate() {
            let mut dir = vec![fld.zero(); n + 1];
            dir[col] = fld.one();
            let restricted = f.directional_derivative(&dir).substitute(base.basis())?;
            for a in 0..=k {
                let c = a * (n - k) + b;
                for (e, coeff) in restricted.terms() {
                    let mut shifted = e.clone();
                    shifted[a] += 1;
                    let r = row_index[&shifted];
                    let v = fld.add(block.get(r, c), coeff);
                    block.set(r, c, v);
                }
            }
        }
        blocks.push(block);
    }
    let matrix = blocks
        .into_iter()
        .reduce(|acc, b| acc.vstack(&b))
        .expect("a polynomial system has at least one form");
    Ok(TangentSystem {
        n,
        k,
        degrees: sys.degrees(),
        base_plane: base.clone(),
        matrix,
        column_labels,
    })
}

/// The quadric tangent equations assembled directly from Gram entries:
/// for `u <= k`, `sum_b q_{u,b} X_{u,b} = 0`; for `u < v <= k`,
/// `sum_b (q_{u,b} X_{v,b} + q_{v,b} X_{u,b}) = 0`, with `b` running over
/// `k+1..=n`. Coordinates are those adapted to `base`. Rows follow the
/// monomial order `t_u t_v`, so this equals half of [`tangent_system`].
pub fn quadric_tangent_equations<F: Field>(
    grams: &[GramMatrix<F>],
    base: &Plane<F>,
) -> Result<Matrix<F>> {
    let fld = base.field();
    let (n, k) = (base.n(), base.k());
    let frame = base.adapted_frame();
    let ncols = (k + 1) * (n - k);
    let col = |a: usize, b: usize| a * (n - k) + (b - k - 1);
    let mut rows: Vec<Vec<F::Elem>> = Vec::new();
    for g in grams {
        if g.n() != n {
            return Err(Error::invalid(format!(
                "quadric lives in P^{}, plane in P^{n}",
                g.n()
            )));
        }
        let q = g.conjugate(&frame);
        let q = q.matrix();
        if (0..=k).any(|u| (0..=k).any(|v| !fld.is_zero(q.get(u, v)))) {
            return Err(Error::ContractViolation(
                "quadric does not vanish on the base plane".into(),
            ));
        }
        for u in 0..=k {
            for v in u..=k {
                let mut row = vec![fld.zero(); ncols];
                for b in k + 1..=n {
                    if u == v {
                        row[col(u, b)] = q.get(u, b).clone();
                    } else {
                        row[col(v, b)] = fld.add(&row[col(v, b)], q.get(u, b));
                        row[col(u, b)] = fld.add(&row[col(u, b)], q.get(v, b));
                    }
                }
                rows.push(row);
            }
        }
    }
    let mut m = Matrix::from_rows(fld, rows);
    if m.rows() == 0 {
        m = Matrix::zeros(fld, 0, ncols);
    }
    Ok(m)
}

/// Dimension of the tangent space of `F_k(V(sys))` at `base`.
pub fn tangent_dim<F: Field>(sys: &PolySystem<F>, base: &Plane<F>) -> Result<usize> {
    Ok(tangent_system(sys, base)?.tangent_dim())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `delta < 0` and the tangent space at the fixed plane is zero: locally,
    /// the fixed plane is the only point of the Fano scheme.
    UniquePlaneCertifiedLocally,
    /// `delta >= 0` and the tangent space has dimension `delta`.
    ExpectedDimMet,
    /// Anything else; the instance is not generic.
    TangentExcess,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanoVerdict {
    pub delta: i128,
    pub tangent_dim: usize,
    pub classification: Classification,
}

pub fn verdict<F: Field>(sys: &PolySystem<F>, l_prime: &Plane<F>) -> Result<FanoVerdict> {
    let params = FanoParams::new(sys.n() as i64, l_prime.k() as i64, sys.multidegree()?)?;
    let delta = dims::delta(&params)?;
    let tangent_dim = tangent_dim(sys, l_prime)?;
    let classification = if delta < 0 && tangent_dim == 0 {
        Classification::UniquePlaneCertifiedLocally
    } else if delta >= 0 && tangent_dim as i128 == delta {
        Classification::ExpectedDimMet
    } else {
        Classification::TangentExcess
    };
    Ok(FanoVerdict {
        delta,
        tangent_dim,
        classification,
    })
}

/// Gram matrices as flat residue arrays, for the quadric fast path.
fn flat_grams(grams: &[GramMatrix<PrimeField>]) -> Vec<Vec<u64>> {
    grams
        .iter()
        .map(|g| {
            let m = g.matrix();
            (0..m.rows()).flat_map(|r| m.row(r).to_vec()).collect()
        })
        .collect()
}

/// Whether `B Q B^T = 0` for every Gram matrix (the restriction of a quadric to
/// a plane vanishes iff this product does, in odd characteristic).
fn quadrics_vanish(
    grams: &[Vec<u64>],
    basis: &[u64],
    rows: usize,
    cols: usize,
    p: u64,
    scratch: &mut [u64],
) -> bool {
    for q in grams {
        // scratch = B Q
        for a in 0..rows {
            for j in 0..cols {
                let mut acc = 0u64;
                for i in 0..cols {
                    let b = basis[a * cols + i];
                    if b != 0 {
                        acc = (acc + b * q[i * cols + j]) % p;
                    }
                }
                scratch[a * cols + j] = acc;
            }
        }
        for a in 0..rows {
            for c in a..rows {
                let mut acc = 0u64;
                for j in 0..cols {
                    acc = (acc + scratch[a * cols + j] * basis[c * cols + j]) % p;
                }
                if acc != 0 {
                    return false;
                }
            }
        }
    }
    true
}

/// All k-planes of `P^n(F_q)` on which every form of `sys` vanishes, in
/// enumeration order.
///
/// Quadric systems go through [`quadric_planes`], which only scans the points
/// of `P^n`; other systems scan the whole Grassmannian. `budget` caps the
/// number of candidates examined in either case.
pub fn fano_points_fq(
    sys: &PolySystem<PrimeField>,
    k: usize,
    budget: u128,
) -> Result<Vec<Plane<PrimeField>>> {
    if sys.degrees().iter().all(|&d| d == 2) {
        quadric_planes(sys, k, budget)
    } else {
        fano_points_fq_exhaustive(sys, k, budget)
    }
}

/// [`fano_points_fq`] by testing every k-plane of `P^n(F_q)`.
pub fn fano_points_fq_exhaustive(
    sys: &PolySystem<PrimeField>,
    k: usize,
    budget: u128,
) -> Result<Vec<Plane<PrimeField>>> {
    let n = sys.n();
    let field = *sys.field();
    let en = PlaneEnumerator::new(n, k, field.modulus(), budget)?;
    let (rows, cols) = (k + 1, n + 1);
    let hits = if sys.degrees().iter().all(|&d| d == 2) {
        let grams = flat_grams(&sys.grams()?);
        let p = field.modulus();
        en.filter_indices(|basis| {
            let mut scratch = vec![0u64; rows * cols];
            quadrics_vanish(&grams, basis, rows, cols, p, &mut scratch)
        })
    } else {
        en.filter_indices(|basis| {
            let m = Matrix::from_rows(&field, basis.chunks(cols).map(<[u64]>::to_vec).collect());
            let plane = crate::grass::canonicalize(&m).expect("enumerated bases are RREF");
            sys.forms().iter().all(|f| {
                restrict_to_plane(f, &plane)
                    .map(|c| c.iter().all(|v| *v == 0))
                    .unwrap_or(false)
            })
        })
    };
    Ok(hits.into_iter().map(|i| en.plane_at(i)).collect())
}

struct QuadricSearch {
    /// Normalized points on every quadric, in enumeration order.
    points: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    /// `polars[x][i] = x Q_i`, flattened.
    polars: Vec<Vec<u64>>,
    s: usize,
    cols: usize,
    p: u64,
    k: usize,
    budget: u128,
    visited: u128,
    found: Vec<Vec<usize>>,
}

impl QuadricSearch {
    fn orthogonal(&self, x: usize, y: usize) -> bool {
        let (c, p) = (self.cols, self.p);
        (0..self.s).all(|i| {
            let v = &self.polars[x][i * c..(i + 1) * c];
            v.iter()
                .zip(&self.points[y])
                .fold(0, |acc, (a, b)| (acc + a * b) % p)
                == 0
        })
    }

    /// Extends `chosen` by points with larger pivots that keep the rows in
    /// reduced echelon form and pairwise polar to each other.
    fn extend(&mut self, chosen: &mut Vec<usize>, start: usize) -> Result<()> {
        if chosen.len() == self.k + 1 {
            self.found.push(chosen.clone());
            return Ok(());
        }
        for y in start..self.points.len() {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::BudgetExceeded {
                    needed: self.visited,
                    budget: self.budget,
                });
            }
            let py = self.pivots[y];
            if let Some(&last) = chosen.last() {
                if py <= self.pivots[last] {
                    continue;
                }
            }
            let echelon = chosen
                .iter()
                .all(|&x| self.points[y][self.pivots[x]] == 0 && self.points[x][py] == 0);
            if echelon && chosen.iter().all(|&x| self.orthogonal(x, y)) {
                chosen.push(y);
                self.extend(chosen, y + 1)?;
                chosen.pop();
            }
        }
        Ok(())
    }
}

/// k-planes on an intersection of quadrics over `F_q`, `q` odd.
///
/// In odd characteristic `q` vanishes on `span(b_0..b_k)` exactly when every
/// `q(b_a)` and every polar value `b_a Q b_c^T` is zero. Each plane has a
/// unique reduced echelon basis whose rows are normalized points, so the
/// planes are the cliques of the polarity relation on the rational points of
/// the intersection whose rows are in echelon form, each found once.
pub fn quadric_planes(
    sys: &PolySystem<PrimeField>,
    k: usize,
    budget: u128,
) -> Result<Vec<Plane<PrimeField>>> {
    let n = sys.n();
    let field = *sys.field();
    let p = field.modulus();
    let cols = n + 1;
    if k > n {
        return Err(Error::invalid(format!("cannot fit a {k}-plane in P^{n}")));
    }
    let grams = flat_grams(&sys.grams()?);
    let en = PlaneEnumerator::new(n, 0, p, budget)?;
    let on_all = en.filter_indices(|x| {
        let mut scratch = vec![0u64; cols];
        quadrics_vanish(&grams, x, 1, cols, p, &mut scratch)
    });
    let mut points = Vec::with_capacity(on_all.len());
    let mut pivots = Vec::with_capacity(on_all.len());
    let mut buf = vec![0u64; cols];
    for &i in &on_all {
        let piv = en.fill_basis(i, &mut buf)[0];
        points.push(buf.clone());
        pivots.push(piv);
    }
    let polars = points
        .iter()
        .map(|x| {
            grams
                .iter()
                .flat_map(|q| {
                    (0..cols).map(move |j| {
                        (0..cols).fold(0, |acc, i| (acc + x[i] * q[i * cols + j]) % p)
                    })
                })
                .collect()
        })
        .collect();
    let mut search = QuadricSearch {
        points,
        pivots,
        polars,
        s: grams.len(),
        cols,
        p,
        k,
        budget: budget.saturating_sub(en.len()),
        visited: 0,
        found: Vec::new(),
    };
    search.extend(&mut Vec::new(), 0)?;
    let mut planes: Vec<Plane<PrimeField>> = search
        .found
        .iter()
        .map(|rows| {
            let m = Matrix::from_rows(
                &field,
                rows.iter().map(|&r| search.points[r].clone()).collect(),
            );
            crate::grass::canonicalize(&m).expect("echelon rows are independent")
        })
        .collect();
    planes.sort_by(|a, b| {
        a.pivots()
            .cmp(b.pivots())
            .then_with(|| a.basis().to_rows().cmp(&b.basis().to_rows()))
    });
    Ok(planes)
}

/// Partition of Fano points by `dim(L ∩ L')`, one bucket per `k'` in `[-1, k]`.
pub fn stratify(
    points: &[Plane<PrimeField>],
    l_prime: &Plane<PrimeField>,
) -> Result<BTreeMap<i64, usize>> {
    if !points.contains(l_prime) {
        return Err(Error::ContractViolation(
            "the fixed plane is not a point of the Fano scheme".into(),
        ));
    }
    let k = l_prime.k() as i64;
    let mut buckets: BTreeMap<i64, usize> = (-1..=k).map(|kp| (kp, 0)).collect();
    for p in points {
        *buckets.entry(intersection_dim(p, l_prime)?).or_insert(0) += 1;
    }
    Ok(buckets)
}

pub fn stratified_counts(
    sys: &PolySystem<PrimeField>,
    l_prime: &Plane<PrimeField>,
    budget: u128,
) -> Result<BTreeMap<i64, usize>> {
    let points = fano_points_fq(sys, l_prime.k(), budget)?;
    stratify(&points, l_prime)
}
