//! k-planes in projective space.
//!
//! Exact planes are stored by their reduced row echelon basis, so equality of
//! planes is equality of matrices. Float planes carry an orthonormal basis and
//! are compared through principal angles.

use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exactla::numeric::{orthonormalize_rows, singular_values};
use crate::exactla::{Field, Matrix, PrimeField};

/// Default cap on the number of planes an enumeration may visit.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Clone, PartialEq, Debug)]
pub struct Plane<F: Field> {
    n: usize,
    k: usize,
    basis: Matrix<F>,
    pivots: Vec<usize>,
}

impl<F: Field> Hash for Plane<F>
where
    F::Elem: Hash,
{
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.basis.hash(state);
    }
}

impl<F: Field> Eq for Plane<F> where F::Elem: Eq {}

impl<F: Field> Plane<F> {
    /// Ambient projective dimension.
    pub fn n(&self) -> usize {
        self.n
    }
    /// Projective dimension of the plane.
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn basis(&self) -> &Matrix<F> {
        &self.basis
    }
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }
    pub fn field(&self) -> &F {
        self.basis.field()
    }

    /// `span(e_0, ..., e_k)` in `P^n`.
    pub fn coordinate(field: &F, n: usize, k: usize) -> Result<Self> {
        if k >= n + 1 {
            return Err(Error::invalid(format!("cannot fit a {k}-plane in P^{n}")));
        }
        let mut b = Matrix::zeros(field, k + 1, n + 1);
        for i in 0..=k {
            b.set(i, i, field.one());
        }
        Ok(Plane {
            n,
            k,
            basis: b,
            pivots: (0..=k).collect(),
        })
    }

    /// Whether this is `span(e_0, ..., e_k)`.
    pub fn is_coordinate(&self) -> bool {
        self.pivots.iter().enumerate().all(|(i, &p)| i == p)
            && (0..=self.k).all(|r| {
                ((self.k + 1)..=self.n).all(|c| self.field().is_zero(self.basis.get(r, c)))
            })
    }

    /// Non-pivot columns, in increasing order. The unit vectors at these
    /// columns complete the basis to a basis of the ambient space.
    pub fn complement_columns(&self) -> Vec<usize> {
        (0..=self.n).filter(|c| !self.pivots.contains(c)).collect()
    }

    /// Square matrix whose first `k+1` rows are the basis and whose remaining
    /// rows are the complementary unit vectors. Always invertible.
    pub fn adapted_frame(&self) -> Matrix<F> {
        let f = self.field();
        let mut t = Matrix::zeros(f, self.n + 1, self.n + 1);
        for r in 0..=self.k {
            for c in 0..=self.n {
                t.set(r, c, self.basis.get(r, c).clone());
            }
        }
        for (i, c) in self.complement_columns().into_iter().enumerate() {
            t.set(self.k + 1 + i, c, f.one());
        }
        t
    }

    pub fn contains_vector(&self, v: &[F::Elem]) -> bool {
        let row = Matrix::from_rows(self.field(), vec![v.to_vec()]);
        self.basis.vstack(&row).rank() == self.k + 1
    }
}

/// Canonical representative of the row space of `m`.
pub fn canonicalize<F: Field>(m: &Matrix<F>) -> Result<Plane<F>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::invalid("a plane needs at least one basis row"));
    }
    let (r, pivots) = m.rref();
    if pivots.len() != m.rows() {
        return Err(Error::invalid(format!(
            "basis is rank-deficient: rank {} with {} rows",
            pivots.len(),
            m.rows()
        )));
    }
    Ok(Plane {
        n: m.cols() - 1,
        k: m.rows() - 1,
        basis: r,
        pivots,
    })
}

/// A point of the affine chart of the Grassmannian centered at `base`: the
/// plane spanned by the rows of `B + X C`, where `C` stacks the complementary
/// unit vectors of the base. Column `b` of `X` corresponds to label `k+1+b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint<F: Field> {
    pub base: Plane<F>,
    pub x: Matrix<F>,
}

pub fn chart_plane<F: Field>(c: &ChartPoint<F>) -> Result<Plane<F>> {
    let (n, k) = (c.base.n, c.base.k);
    if c.x.rows() != k + 1 || c.x.cols() != n - k {
        return Err(Error::invalid(format!(
            "chart coordinates must be {}x{}, got {}x{}",
            k + 1,
            n - k,
            c.x.rows(),
            c.x.cols()
        )));
    }
    let f = c.base.field();
    let mut w = c.base.basis.clone();
    for (b, col) in c.base.complement_columns().into_iter().enumerate() {
        for a in 0..=k {
            let v = f.add(w.get(a, col), c.x.get(a, b));
            w.set(a, col, v);
        }
    }
    canonicalize(&w)
}

/// Inverse of [`chart_plane`]; `None` when `plane` lies outside the chart.
pub fn chart_coordinates<F: Field>(base: &Plane<F>, plane: &Plane<F>) -> Option<Matrix<F>> {
    if base.n != plane.n || base.k != plane.k {
        return None;
    }
    let (n, k) = (base.n, base.k);
    let t_inv = base.adapted_frame().inverse()?;
    let y = plane.basis.mul(&t_inv);
    let head: Vec<usize> = (0..=k).collect();
    let tail: Vec<usize> = (k + 1..=n).collect();
    let y1 = y.submatrix(&head, &head);
    let y2 = y.submatrix(&head, &tail);
    Some(y1.inverse()?.mul(&y2))
}

/// Projective dimension of the intersection; `-1` when the planes are disjoint.
pub fn intersection_dim<F: Field>(l1: &Plane<F>, l2: &Plane<F>) -> Result<i64> {
    if l1.n != l2.n {
        return Err(Error::invalid(format!(
            "planes live in P^{} and P^{}",
            l1.n, l2.n
        )));
    }
    let r = l1.basis.vstack(&l2.basis).rank() as i64;
    Ok((l1.k as i64 + 1) + (l2.k as i64 + 1) - r - 1)
}

/// A plane drawn from a generic-looking integer matrix (entries in
/// `[-bound, bound]`), resampled until the matrix has full rank.
pub fn random_plane<F: Field, R: Rng + ?Sized>(
    field: &F,
    n: usize,
    k: usize,
    bound: i64,
    rng: &mut R,
) -> Result<Plane<F>> {
    if k > n {
        return Err(Error::invalid(format!("cannot fit a {k}-plane in P^{n}")));
    }
    for _ in 0..1000 {
        let rows: Vec<Vec<i64>> = (0..=k)
            .map(|_| (0..=n).map(|_| rng.gen_range(-bound..=bound)).collect())
            .collect();
        if let Ok(p) = canonicalize(&Matrix::from_i64_rows(field, &rows)) {
            return Ok(p);
        }
    }
    Err(Error::Numeric("could not draw a full-rank basis".into()))
}

/// Number of `(k+1)`-dimensional subspaces of `F_q^{n+1}`, saturating at
/// `u128::MAX`.
pub fn gaussian_binomial(n_plus_1: u32, k_plus_1: u32, q: u64) -> u128 {
    if k_plus_1 > n_plus_1 {
        return 0;
    }
    // [N, K]_q = [N-1, K-1]_q + q^K [N-1, K]_q, tabulated.
    let (nn, kk) = (n_plus_1 as usize, k_plus_1 as usize);
    let mut row = vec![0u128; kk + 1];
    row[0] = 1;
    for big_n in 1..=nn {
        for small_k in (1..=kk.min(big_n)).rev() {
            let qk = (q as u128).checked_pow(small_k as u32);
            let term = qk.and_then(|p| p.checked_mul(row[small_k]));
            row[small_k] = term
                .and_then(|t| t.checked_add(row[small_k - 1]))
                .unwrap_or(u128::MAX);
        }
    }
    row[kk]
}

struct Block {
    pivots: Vec<usize>,
    /// (row, column) of each free entry, in lexicographic order.
    free: Vec<(usize, usize)>,
    offset: u128,
    count: u128,
}

/// Indexed enumeration of all k-planes of `P^n(F_q)`.
///
/// Planes are ordered by pivot set (lexicographically) and then by their free
/// entries read row by row as base-q digits. `plane_at` is a pure function of
/// the index, so disjoint index ranges can be processed independently.
pub struct PlaneEnumerator {
    field: PrimeField,
    n: usize,
    k: usize,
    blocks: Vec<Block>,
    total: u128,
}

impl PlaneEnumerator {
    pub fn new(n: usize, k: usize, q: u64, budget: u128) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if k > n {
            return Err(Error::invalid(format!("cannot fit a {k}-plane in P^{n}")));
        }
        let expected = gaussian_binomial(n as u32 + 1, k as u32 + 1, q);
        if expected > budget {
            return Err(Error::BudgetExceeded {
                needed: expected,
                budget,
            });
        }
        let mut blocks = Vec::new();
        let mut offset = 0u128;
        for pivots in combinations(n + 1, k + 1) {
            let free: Vec<(usize, usize)> = pivots
                .iter()
                .enumerate()
                .flat_map(|(row, &p)| {
                    ((p + 1)..=n)
                        .filter(|c| !pivots.contains(c))
                        .map(move |c| (row, c))
                })
                .collect();
            let count = (q as u128).pow(free.len() as u32);
            blocks.push(Block {
                pivots,
                free,
                offset,
                count,
            });
            offset += count;
        }
        debug_assert_eq!(offset, expected);
        Ok(PlaneEnumerator {
            field,
            n,
            k,
            blocks,
            total: offset,
        })
    }

    pub fn len(&self) -> u128 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// Writes the RREF basis of plane `idx` into `buf` (row-major,
    /// `(k+1) x (n+1)`) and returns its pivot columns.
    pub fn fill_basis(&self, idx: u128, buf: &mut [u64]) -> &[usize] {
        let bi = self.blocks.partition_point(|b| b.offset + b.count <= idx);
        let block = &self.blocks[bi];
        let cols = self.n + 1;
        buf.iter_mut().for_each(|v| *v = 0);
        for (row, &p) in block.pivots.iter().enumerate() {
            buf[row * cols + p] = 1;
        }
        let q = self.field.modulus() as u128;
        let mut rest = idx - block.offset;
        for &(row, c) in block.free.iter().rev() {
            buf[row * cols + c] = (rest % q) as u64;
            rest /= q;
        }
        &block.pivots
    }

    pub fn plane_at(&self, idx: u128) -> Plane<PrimeField> {
        let cols = self.n + 1;
        let mut buf = vec![0u64; (self.k + 1) * cols];
        let pivots = self.fill_basis(idx, &mut buf).to_vec();
        let rows = buf.chunks(cols).map(<[u64]>::to_vec).collect();
        Plane {
            n: self.n,
            k: self.k,
            basis: Matrix::from_rows(&self.field, rows),
            pivots,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Plane<PrimeField>> + '_ {
        (0..self.total).map(move |i| self.plane_at(i))
    }

    /// Indices `i` (in increasing order) whose basis satisfies `keep`.
    /// Runs in parallel over contiguous chunks when the `parallel` feature is
    /// on; the result does not depend on the partition.
    pub fn filter_indices<P>(&self, keep: P) -> Vec<u128>
    where
        P: Fn(&[u64]) -> bool + Sync,
    {
        const CHUNK: u128 = 1 << 14;
        let chunks = self.total.div_ceil(CHUNK);
        let scan = |c: u128| {
            let mut buf = vec![0u64; (self.k + 1) * (self.n + 1)];
            let end = ((c + 1) * CHUNK).min(self.total);
            let mut hits = Vec::new();
            for i in c * CHUNK..end {
                self.fill_basis(i, &mut buf);
                if keep(&buf) {
                    hits.push(i);
                }
            }
            hits
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let per: Vec<Vec<u128>> = (0..chunks as u64)
                .into_par_iter()
                .map(|c| scan(c as u128))
                .collect();
            per.into_iter().flatten().collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..chunks).flat_map(scan).collect()
        }
    }
}

/// `size`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..size).collect();
    if size > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..size).rev().find(|&i| cur[i] < n - size + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Every k-plane of `P^n(F_q)`, in enumeration order.
pub fn enumerate_planes(
    n: usize,
    k: usize,
    q: u64,
    budget: u128,
) -> Result<Vec<Plane<PrimeField>>> {
    Ok(PlaneEnumerator::new(n, k, q, budget)?.iter().collect())
}

/// A real plane, kept as an orthonormal row basis.
#[derive(Clone, Debug)]
pub struct FloatPlane {
    basis: DMatrix<f64>,
}

impl FloatPlane {
    pub fn new(basis: &DMatrix<f64>) -> Result<Self> {
        Ok(FloatPlane {
            basis: orthonormalize_rows(basis)?,
        })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.ncols() - 1
    }

    pub fn k(&self) -> usize {
        self.basis.nrows() - 1
    }

    pub fn projector(&self) -> DMatrix<f64> {
        self.basis.transpose() * &self.basis
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceDistance {
    /// `||P_1 - P_2||_F / sqrt(2)` for the orthogonal projectors.
    pub chordal: f64,
    pub max_principal_angle: f64,
}

pub fn subspace_distance(l1: &FloatPlane, l2: &FloatPlane) -> Result<SubspaceDistance> {
    if l1.basis.shape() != l2.basis.shape() {
        return Err(Error::invalid(format!(
            "plane shapes differ: {:?} vs {:?}",
            l1.basis.shape(),
            l2.basis.shape()
        )));
    }
    let p1 = l1.projector();
    let chordal = (&p1 - l2.projector()).norm() / std::f64::consts::SQRT_2;
    // Small angles come from sines, large ones from cosines; each is well
    // conditioned in its own range.
    let residual = (DMatrix::identity(p1.nrows(), p1.ncols()) - &p1) * l2.basis.transpose();
    let sin_max = singular_values(&residual)
        .first()
        .copied()
        .unwrap_or(0.0)
        .min(1.0);
    let max_principal_angle = if sin_max < std::f64::consts::FRAC_1_SQRT_2 {
        sin_max.asin()
    } else {
        let cos_min = singular_values(&(&l1.basis * l2.basis.transpose()))
            .last()
            .copied()
            .unwrap_or(0.0);
        cos_min.clamp(0.0, 1.0).acos()
    };
    Ok(SubspaceDistance {
        chordal,
        max_principal_angle,
    })
}
