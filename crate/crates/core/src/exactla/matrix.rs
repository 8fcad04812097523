use std::fmt;

use super::field::Field;

/// Dense row-major matrix over a [`Field`].
#[derive(Clone, PartialEq)]
pub struct Matrix<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Matrix {}x{} over {}",
            self.rows,
            self.cols,
            self.field.desc()
        )?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|e| self.field.format(e)).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<F: Field> std::hash::Hash for Matrix<F>
where
    F::Elem: std::hash::Hash,
{
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
        self.cols.hash(state);
        self.data.hash(state);
    }
}

impl<F: Field> Matrix<F> {
    pub fn zeros(field: &F, rows: usize, cols: usize) -> Self {
        Matrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: &F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// Panics when the rows are ragged.
    pub fn from_rows(field: &F, rows: Vec<Vec<F::Elem>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let nrows = rows.len();
        Matrix {
            field: field.clone(),
            rows: nrows,
            cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64_rows(field: &F, rows: &[Vec<i64>]) -> Self {
        Self::from_rows(
            field,
            rows.iter()
                .map(|r| r.iter().map(|&v| field.from_i64(v)).collect())
                .collect(),
        )
    }

    pub fn field(&self) -> &F {
        &self.field
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &F::Elem {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: F::Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[F::Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<F::Elem>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| self.field.is_zero(e))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let f = &self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if f.is_zero(a) {
                    continue;
                }
                for c in 0..other.cols {
                    let v = f.add(out.get(r, c), &f.mul(a, other.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let f = &self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f.add(a, b))
            .collect();
        Matrix {
            field: f.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: &F::Elem) -> Self {
        let f = &self.field;
        let data = self.data.iter().map(|a| f.mul(a, s)).collect();
        Matrix {
            field: f.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Rows `rs` and columns `cs`, in the given order.
    pub fn submatrix(&self, rs: &[usize], cs: &[usize]) -> Self {
        let rows = rs
            .iter()
            .map(|&r| cs.iter().map(|&c| self.get(r, c).clone()).collect())
            .collect();
        let mut m = Self::from_rows(&self.field, rows);
        m.cols = cs.len();
        m
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "column counts differ");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Matrix {
            field: self.field.clone(),
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let f = self.field.clone();
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut prow = 0;
        for c in 0..m.cols {
            if prow == m.rows {
                break;
            }
            let Some(r) = (prow..m.rows).find(|&r| !f.is_zero(m.get(r, c))) else {
                continue;
            };
            m.swap_rows(prow, r);
            let inv = f.inv(m.get(prow, c)).expect("nonzero pivot");
            for cc in c..m.cols {
                let v = f.mul(m.get(prow, cc), &inv);
                m.set(prow, cc, v);
            }
            for r in 0..m.rows {
                if r == prow || f.is_zero(m.get(r, c)) {
                    continue;
                }
                let factor = m.get(r, c).clone();
                for cc in c..m.cols {
                    let v = f.sub(m.get(r, cc), &f.mul(&factor, m.get(prow, cc)));
                    m.set(r, cc, v);
                }
            }
            pivots.push(c);
            prow += 1;
        }
        (m, pivots)
    }

    /// Rank over the field. Rationals use fraction-free elimination,
    /// prime fields modular elimination.
    pub fn rank(&self) -> usize {
        self.field.rank(self)
    }

    /// Basis of the right null space, one vector per row.
    pub fn nullspace(&self) -> Self {
        let f = &self.field;
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Self::zeros(f, free.len(), self.cols);
        for (i, &fc) in free.iter().enumerate() {
            out.set(i, fc, f.one());
            for (pr, &pc) in pivots.iter().enumerate() {
                out.set(i, pc, f.neg(r.get(pr, fc)));
            }
        }
        out
    }

    /// Determinant by elimination. Panics on non-square input.
    pub fn det(&self) -> F::Elem {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let f = self.field.clone();
        let mut m = self.clone();
        let mut det = f.one();
        for c in 0..m.cols {
            let Some(r) = (c..m.rows).find(|&r| !f.is_zero(m.get(r, c))) else {
                return f.zero();
            };
            if r != c {
                m.swap_rows(r, c);
                det = f.neg(&det);
            }
            let piv = m.get(c, c).clone();
            det = f.mul(&det, &piv);
            let inv = f.inv(&piv).expect("nonzero pivot");
            for rr in c + 1..m.rows {
                if f.is_zero(m.get(rr, c)) {
                    continue;
                }
                let factor = f.mul(m.get(rr, c), &inv);
                for cc in c..m.cols {
                    let v = f.sub(m.get(rr, cc), &f.mul(&factor, m.get(c, cc)));
                    m.set(rr, cc, v);
                }
            }
        }
        det
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let f = &self.field;
        let mut aug = Self::zeros(f, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, f.one());
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let cs: Vec<usize> = (n..2 * n).collect();
        let rs: Vec<usize> = (0..n).collect();
        Some(red.submatrix(&rs, &cs))
    }

    pub fn map_field<G: Field>(
        &self,
        g: &G,
        mut conv: impl FnMut(&F::Elem) -> G::Elem,
    ) -> Matrix<G> {
        Matrix {
            field: g.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut conv).collect(),
        }
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| {
            self.field.to_f64(self.get(r, c))
        })
    }
}

pub(crate) fn rank_by_elimination<F: Field>(m: &Matrix<F>) -> usize {
    let f = m.field().clone();
    let mut m = m.clone();
    let mut rank = 0;
    for c in 0..m.cols() {
        if rank == m.rows() {
            break;
        }
        let Some(r) = (rank..m.rows()).find(|&r| !f.is_zero(m.get(r, c))) else {
            continue;
        };
        m.swap_rows(rank, r);
        let inv = f.inv(m.get(rank, c)).expect("nonzero pivot");
        for rr in rank + 1..m.rows() {
            if f.is_zero(m.get(rr, c)) {
                continue;
            }
            let factor = f.mul(m.get(rr, c), &inv);
            for cc in c..m.cols() {
                let v = f.sub(m.get(rr, cc), &f.mul(&factor, m.get(rank, cc)));
                m.set(rr, cc, v);
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{PrimeField, Rationals};

    #[test]
    fn rank_examples() {
        let q = Rationals;
        assert_eq!(Matrix::identity(&q, 5).rank(), 5);
        assert_eq!(Matrix::zeros(&q, 3, 4).rank(), 0);
        assert_eq!(
            Matrix::from_i64_rows(&q, &[vec![1, 2], vec![2, 4]]).rank(),
            1
        );
    }

    #[test]
    fn rref_examples() {
        let q = Rationals;
        let (r, p) = Matrix::from_i64_rows(&q, &[vec![2, 0], vec![0, 2]]).rref();
        assert_eq!(r, Matrix::identity(&q, 2));
        assert_eq!(p, vec![0, 1]);

        let f3 = PrimeField::new(3).unwrap();
        let m = Matrix::from_i64_rows(&f3, &[vec![0, 1, 1]]);
        let (r, p) = m.rref();
        assert_eq!(r, m);
        assert_eq!(p, vec![1]);

        let (r, _) = Matrix::from_i64_rows(&q, &[vec![1, 1], vec![1, 1]]).rref();
        assert_eq!(r, Matrix::from_i64_rows(&q, &[vec![1, 1], vec![0, 0]]));
    }

    #[test]
    fn nullspace_examples() {
        let q = Rationals;
        assert_eq!(Matrix::identity(&q, 4).nullspace().rows(), 0);
        assert_eq!(Matrix::zeros(&q, 2, 3).nullspace().rows(), 3);
        let m = Matrix::from_i64_rows(&q, &[vec![1, 1, 0]]);
        let ns = m.nullspace();
        assert_eq!(ns.rows(), 2);
        assert!(m.mul(&ns.transpose()).is_zero());
    }

    #[test]
    fn det_and_inverse() {
        let q = Rationals;
        let m = Matrix::from_i64_rows(&q, &[vec![0, 1, 2], vec![1, 0, 3], vec![4, -3, 8]]);
        assert_eq!(m.det(), q.from_i64(-2));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(&q, 3));
        let sing = Matrix::from_i64_rows(&q, &[vec![1, 2], vec![2, 4]]);
        assert!(sing.inverse().is_none());
        assert_eq!(sing.det(), q.zero());
    }
}
