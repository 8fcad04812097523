//! Homogeneous forms, quadric Gram matrices and conditionally generic samplers.
//!
//! A [`Form`] is a homogeneous polynomial in `n+1` variables stored as a sparse
//! map from exponent vectors to coefficients. Quadrics additionally have a
//! [`GramMatrix`] view, `q(x) = x^T Q x`, so the coefficient of `x_u x_v` is
//! `2 q_{u,v}` off the diagonal and `q_{u,u}` on it.
//!
//! "Generic" is realized as uniformly random nonzero integers in a box
//! `[-bound, bound]`: the non-generic locus is a proper Zariski-closed set and
//! random integer draws miss it with overwhelming probability.

use std::collections::BTreeMap;

use rand::Rng;

use crate::dims::{self, MultiDegree};
use crate::error::{Error, Result};
use crate::exactla::{Field, Matrix, PrimeField, Rationals};
use crate::grass::Plane;

pub const DEFAULT_BOUND: i64 = 1000;
const MAX_RESAMPLES: usize = 100;

pub type Exponent = Vec<u32>;

/// Exponent vectors of degree `degree` in `nvars` variables, ordered with the
/// first exponent descending (for two variables: `t0^2, t0 t1, t1^2`).
pub fn monomials(nvars: usize, degree: u32) -> Vec<Exponent> {
    fn rec(nvars: usize, degree: u32, prefix: &mut Exponent, out: &mut Vec<Exponent>) {
        if nvars == 1 {
            prefix.push(degree);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=degree).rev() {
            prefix.push(e);
            rec(nvars - 1, degree - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars > 0 {
        rec(nvars, degree, &mut Vec::with_capacity(nvars), &mut out);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Form<F: Field> {
    field: F,
    nvars: usize,
    degree: u32,
    coeffs: BTreeMap<Exponent, F::Elem>,
}

impl<F: Field> Form<F> {
    pub fn zero(field: &F, n: usize, degree: u32) -> Self {
        Form {
            field: field.clone(),
            nvars: n + 1,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a form from `(exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms(
        field: &F,
        n: usize,
        degree: u32,
        terms: impl IntoIterator<Item = (Exponent, F::Elem)>,
    ) -> Result<Self> {
        let mut f = Self::zero(field, n, degree);
        for (e, c) in terms {
            if e.len() != n + 1 || e.iter().sum::<u32>() != degree {
                return Err(Error::invalid(format!(
                    "exponent {e:?} is not a degree-{degree} monomial in {} variables",
                    n + 1
                )));
            }
            f.add_term(e, &c);
        }
        Ok(f)
    }

    pub fn from_i64_terms(
        field: &F,
        n: usize,
        degree: u32,
        terms: &[(Exponent, i64)],
    ) -> Result<Self> {
        Self::from_terms(
            field,
            n,
            degree,
            terms.iter().map(|(e, c)| (e.clone(), field.from_i64(*c))),
        )
    }

    fn add_term(&mut self, e: Exponent, c: &F::Elem) {
        if self.field.is_zero(c) {
            return;
        }
        let f = &self.field;
        let v = match self.coeffs.get(&e) {
            Some(old) => f.add(old, c),
            None => c.clone(),
        };
        if f.is_zero(&v) {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, v);
        }
    }

    pub fn field(&self) -> &F {
        &self.field
    }
    /// Ambient projective dimension.
    pub fn n(&self) -> usize {
        self.nvars - 1
    }
    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &F::Elem)> {
        self.coeffs.iter()
    }
    pub fn coeff(&self, e: &[u32]) -> F::Elem {
        self.coeffs
            .get(e)
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn evaluate(&self, x: &[F::Elem]) -> F::Elem {
        let f = &self.field;
        self.coeffs.iter().fold(f.zero(), |acc, (e, c)| {
            let m = e.iter().zip(x).fold(c.clone(), |m, (&p, xi)| {
                (0..p).fold(m, |m, _| f.mul(&m, xi))
            });
            f.add(&acc, &m)
        })
    }

    /// `f(x B)` for a matrix `B` with `n+1` columns: a form in `B.rows()`
    /// variables obtained by substituting `x_j = sum_a t_a B[a][j]`.
    pub fn substitute(&self, b: &Matrix<F>) -> Result<Form<F>> {
        if b.cols() != self.nvars {
            return Err(Error::invalid(format!(
                "substitution matrix has {} columns, form has {} variables",
                b.cols(),
                self.nvars
            )));
        }
        let f = &self.field;
        let m = b.rows();
        let degree = self.degree as usize;
        // powers[j][p] = (sum_a B[a][j] t_a)^p
        let mut powers: Vec<Vec<Poly<F>>> = Vec::with_capacity(self.nvars);
        for j in 0..self.nvars {
            let lin: Poly<F> = (0..m)
                .filter(|&a| !f.is_zero(b.get(a, j)))
                .map(|a| {
                    let mut e = vec![0; m];
                    e[a] = 1;
                    (e, b.get(a, j).clone())
                })
                .collect();
            let mut pw = vec![unit_poly(f, m)];
            for p in 1..=degree {
                let next = poly_mul(f, &pw[p - 1], &lin);
                pw.push(next);
            }
            powers.push(pw);
        }
        let mut out = Form::zero(f, m.saturating_sub(1), self.degree);
        out.nvars = m;
        for (e, c) in &self.coeffs {
            let mut acc: Poly<F> = std::iter::once((vec![0; m], c.clone())).collect();
            for (j, &p) in e.iter().enumerate() {
                if p > 0 {
                    acc = poly_mul(f, &acc, &powers[j][p as usize]);
                }
            }
            for (te, tc) in acc {
                out.add_term(te, &tc);
            }
        }
        Ok(out)
    }

    /// Coefficients in the [`monomials`] order.
    pub fn coefficient_vector(&self) -> Vec<F::Elem> {
        monomials(self.nvars, self.degree)
            .iter()
            .map(|e| self.coeff(e))
            .collect()
    }

    /// Partial derivative with respect to `x_var`.
    pub fn derivative(&self, var: usize) -> Form<F> {
        let f = &self.field;
        let mut out = Form {
            field: f.clone(),
            nvars: self.nvars,
            degree: self.degree.saturating_sub(1),
            coeffs: BTreeMap::new(),
        };
        for (e, c) in &self.coeffs {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(e2, &f.mul(c, &f.from_i64(e[var] as i64)));
        }
        out
    }

    /// `sum_j v_j df/dx_j`.
    pub fn directional_derivative(&self, v: &[F::Elem]) -> Form<F> {
        let f = &self.field;
        let mut out = Form {
            field: f.clone(),
            nvars: self.nvars,
            degree: self.degree.saturating_sub(1),
            coeffs: BTreeMap::new(),
        };
        for (j, vj) in v.iter().enumerate() {
            if f.is_zero(vj) {
                continue;
            }
            for (e, c) in self.derivative(j).coeffs {
                out.add_term(e, &f.mul(&c, vj));
            }
        }
        out
    }

    pub fn map_field<G: Field>(
        &self,
        g: &G,
        mut conv: impl FnMut(&F::Elem) -> Option<G::Elem>,
    ) -> Option<Form<G>> {
        let mut out = Form {
            field: g.clone(),
            nvars: self.nvars,
            degree: self.degree,
            coeffs: BTreeMap::new(),
        };
        for (e, c) in &self.coeffs {
            out.add_term(e.clone(), &conv(c)?);
        }
        Some(out)
    }
}

impl Form<Rationals> {
    /// Image over `F_p`; `None` if a denominator is divisible by `p`.
    pub fn reduce_mod(&self, fp: &PrimeField) -> Option<Form<PrimeField>> {
        self.map_field(fp, |c| fp.reduce_rational(c))
    }
}

type Poly<F> = BTreeMap<Exponent, <F as Field>::Elem>;

fn unit_poly<F: Field>(f: &F, m: usize) -> Poly<F> {
    std::iter::once((vec![0; m], f.one())).collect()
}

fn poly_mul<F: Field>(f: &F, a: &Poly<F>, b: &Poly<F>) -> Poly<F> {
    let mut out: Poly<F> = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Exponent = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let v = f.mul(ca, cb);
            let slot = out.entry(e).or_insert_with(|| f.zero());
            *slot = f.add(slot, &v);
        }
    }
    out.retain(|_, v| !f.is_zero(v));
    out
}

/// Coefficients of `f(t B_L)` in the degree-d monomial basis of the `k+1`
/// plane parameters (see [`monomials`]). Zero exactly when `L ⊆ V(f)`.
pub fn restrict_to_plane<F: Field>(f: &Form<F>, plane: &Plane<F>) -> Result<Vec<F::Elem>> {
    if f.n() != plane.n() {
        return Err(Error::invalid(format!(
            "form lives in P^{}, plane in P^{}",
            f.n(),
            plane.n()
        )));
    }
    Ok(f.substitute(plane.basis())?.coefficient_vector())
}

pub fn vanishes_on<F: Field>(f: &Form<F>, plane: &Plane<F>) -> Result<bool> {
    Ok(restrict_to_plane(f, plane)?
        .iter()
        .all(|c| f.field().is_zero(c)))
}

/// Symmetric Gram matrix of a quadric.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<F: Field>(Matrix<F>);

impl<F: Field> GramMatrix<F> {
    pub fn new(q: Matrix<F>) -> Result<Self> {
        if !q.is_symmetric() {
            return Err(Error::invalid("Gram matrix must be square and symmetric"));
        }
        Ok(GramMatrix(q))
    }

    pub fn matrix(&self) -> &Matrix<F> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows() - 1
    }

    pub fn rank(&self) -> usize {
        self.0.rank()
    }

    /// `M Q M^T`: the Gram matrix of `q(x M)`.
    pub fn conjugate(&self, m: &Matrix<F>) -> GramMatrix<F> {
        GramMatrix(m.mul(&self.0).mul(&m.transpose()))
    }
}

fn require_odd_characteristic<F: Field>(f: &F) -> Result<()> {
    if f.characteristic() == 2 {
        Err(Error::invalid(
            "characteristic 2 breaks the quadric/Gram correspondence",
        ))
    } else {
        Ok(())
    }
}

pub fn gram_of<F: Field>(f: &Form<F>) -> Result<GramMatrix<F>> {
    if f.degree() != 2 {
        return Err(Error::invalid(format!(
            "Gram matrix needs a quadric, got degree {}",
            f.degree()
        )));
    }
    let fld = f.field();
    require_odd_characteristic(fld)?;
    let half = fld.inv(&fld.from_i64(2)).expect("odd characteristic");
    let mut q = Matrix::zeros(fld, f.nvars, f.nvars);
    for (e, c) in f.terms() {
        let idx: Vec<usize> = e
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| std::iter::repeat(i).take(p as usize))
            .collect();
        let (u, v) = (idx[0], idx[1]);
        if u == v {
            q.set(u, u, c.clone());
        } else {
            let h = fld.mul(c, &half);
            q.set(u, v, h.clone());
            q.set(v, u, h);
        }
    }
    Ok(GramMatrix(q))
}

pub fn form_of<F: Field>(g: &GramMatrix<F>) -> Result<Form<F>> {
    let q = g.matrix();
    let fld = q.field();
    require_odd_characteristic(fld)?;
    let two = fld.from_i64(2);
    let n = q.rows() - 1;
    let mut out = Form::zero(fld, n, 2);
    for u in 0..=n {
        for v in u..=n {
            let mut e = vec![0; n + 1];
            e[u] += 1;
            e[v] += 1;
            let c = if u == v {
                q.get(u, u).clone()
            } else {
                fld.mul(&two, q.get(u, v))
            };
            out.add_term(e, &c);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem<F: Field> {
    forms: Vec<Form<F>>,
}

impl<F: Field> PolySystem<F> {
    pub fn new(forms: Vec<Form<F>>) -> Result<Self> {
        let Some(first) = forms.first() else {
            return Err(Error::invalid(
                "a polynomial system needs at least one form",
            ));
        };
        let n = first.n();
        if let Some(bad) = forms.iter().position(|f| f.n() != n) {
            return Err(Error::invalid(format!(
                "form {bad} lives in P^{}, expected P^{n}",
                forms[bad].n()
            )));
        }
        Ok(PolySystem { forms })
    }

    pub fn forms(&self) -> &[Form<F>] {
        &self.forms
    }
    pub fn n(&self) -> usize {
        self.forms[0].n()
    }
    pub fn field(&self) -> &F {
        self.forms[0].field()
    }
    pub fn degrees(&self) -> Vec<u32> {
        self.forms.iter().map(Form::degree).collect()
    }
    pub fn multidegree(&self) -> Result<MultiDegree> {
        MultiDegree::new(self.degrees())
    }

    pub fn from_grams(grams: &[GramMatrix<F>]) -> Result<Self> {
        Self::new(grams.iter().map(form_of).collect::<Result<_>>()?)
    }

    /// Gram matrices, when every form is a quadric.
    pub fn grams(&self) -> Result<Vec<GramMatrix<F>>> {
        self.forms.iter().map(gram_of).collect()
    }
}

impl PolySystem<Rationals> {
    pub fn reduce_mod(&self, fp: &PrimeField) -> Result<PolySystem<PrimeField>> {
        let forms = self
            .forms
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.reduce_mod(fp).ok_or_else(|| {
                    Error::invalid(format!(
                        "form {i} has a denominator divisible by {}",
                        fp.modulus()
                    ))
                })
            })
            .collect::<Result<_>>()?;
        PolySystem::new(forms)
    }
}

fn nonzero_in_box<R: Rng + ?Sized>(bound: i64, rng: &mut R) -> i64 {
    let v = rng.gen_range(1..=bound);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Inverse of the plane's adapted frame: `f(x M)` vanishes on the plane
/// whenever `f` vanishes on `span(e_0..e_k)`.
fn frame_inverse<F: Field>(plane: &Plane<F>) -> Option<Matrix<F>> {
    if plane.is_coordinate() {
        None
    } else {
        Some(
            plane
                .adapted_frame()
                .inverse()
                .expect("adapted frame is invertible"),
        )
    }
}

/// Random degree-`d` form in `P^n` vanishing on `plane`.
///
/// In coordinates adapted to the plane, every monomial that involves some
/// variable beyond the first `k+1` gets a random nonzero coefficient and the
/// `C(d+k, k)` monomials in the first `k+1` variables are left out.
pub fn random_vanishing_form<F: Field, R: Rng + ?Sized>(
    field: &F,
    n: usize,
    d: u32,
    plane: &Plane<F>,
    bound: i64,
    rng: &mut R,
) -> Result<Form<F>> {
    if d < 1 {
        return Err(Error::invalid("degree must be >= 1"));
    }
    if bound < 1 {
        return Err(Error::invalid("coefficient bound must be >= 1"));
    }
    if plane.n() != n {
        return Err(Error::invalid(format!(
            "plane lives in P^{}, expected P^{n}",
            plane.n()
        )));
    }
    let k = plane.k();
    let terms: Vec<(Exponent, F::Elem)> = monomials(n + 1, d)
        .into_iter()
        .filter(|e| e[k + 1..].iter().any(|&p| p > 0))
        .map(|e| (e, field.from_i64(nonzero_in_box(bound, rng))))
        .collect();
    let g = Form::from_terms(field, n, d, terms)?;
    match frame_inverse(plane) {
        None => Ok(g),
        Some(m) => g.substitute(&m),
    }
}

/// Fills the corner `r <= u <= v <= n` of a symmetric matrix so that the
/// result has rank exactly `r`.
///
/// Each corner entry is the unique value making the bordered minor with rows
/// `{0..r-1, u}` and columns `{0..r-1, v}` vanish. That minor is linear in
/// `q_{u,v}` with slope the leading `r x r` minor, so
/// `q_{u,v} = -det(Q_uv with q_uv = 0) / det(Q[0..r, 0..r])`. Corner entries of
/// `partial` are ignored.
pub fn complete_rank_r<F: Field>(partial: &Matrix<F>, r: usize) -> Result<GramMatrix<F>> {
    let f = partial.field();
    let size = partial.rows();
    if partial.cols() != size || r == 0 || r > size {
        return Err(Error::invalid(format!(
            "need a square matrix and 1 <= r <= {size}, got r = {r}"
        )));
    }
    let lead: Vec<usize> = (0..r).collect();
    let lead_minor = partial.submatrix(&lead, &lead).det();
    let Some(lead_inv) = f.inv(&lead_minor) else {
        return Err(Error::OutsideChart(format!(
            "leading {r}x{r} minor vanishes; resample the free entries"
        )));
    };
    let mut q = partial.clone();
    for u in 0..r {
        for v in 0..u {
            if q.get(u, v) != q.get(v, u) {
                return Err(Error::invalid(format!(
                    "free entries not symmetric at ({u},{v})"
                )));
            }
        }
        for v in r..size {
            if q.get(u, v) != q.get(v, u) {
                return Err(Error::invalid(format!(
                    "free entries not symmetric at ({u},{v})"
                )));
            }
        }
    }
    for u in r..size {
        for v in u..size {
            let mut rows = lead.clone();
            rows.push(u);
            let mut cols = lead.clone();
            cols.push(v);
            let mut bordered = partial.submatrix(&rows, &cols);
            bordered.set(r, r, f.zero());
            let value = f.neg(&f.mul(&bordered.det(), &lead_inv));
            q.set(u, v, value.clone());
            q.set(v, u, value);
        }
    }
    GramMatrix::new(q)
}

/// Random rank-`r` quadric vanishing on `plane`, requires `2k+2 <= r <= n+1`.
///
/// Built in coordinates adapted to the plane: zero top-left `(k+1)x(k+1)`
/// block, random free entries everywhere else outside the bottom-right
/// corner, the corner filled by [`complete_rank_r`]. The free block is
/// resampled while the leading `r x r` minor vanishes.
pub fn random_rank_r_vanishing_quadric<F: Field, R: Rng + ?Sized>(
    field: &F,
    n: usize,
    r: usize,
    plane: &Plane<F>,
    bound: i64,
    rng: &mut R,
) -> Result<GramMatrix<F>> {
    require_odd_characteristic(field)?;
    let k = plane.k();
    dims::require_rank_regime(k as i64, r as i64)?;
    if r > n + 1 {
        return Err(Error::invalid(format!(
            "rank r = {r} exceeds n+1 = {}",
            n + 1
        )));
    }
    if plane.n() != n {
        return Err(Error::invalid(format!(
            "plane lives in P^{}, expected P^{n}",
            plane.n()
        )));
    }
    for _ in 0..MAX_RESAMPLES {
        let mut q = Matrix::zeros(field, n + 1, n + 1);
        for u in 0..=n {
            for v in u..=n {
                let in_vanishing_block = v <= k;
                let in_corner = u >= r;
                if !in_vanishing_block && !in_corner {
                    let c = field.from_i64(nonzero_in_box(bound, rng));
                    q.set(u, v, c.clone());
                    q.set(v, u, c);
                }
            }
        }
        let g = match complete_rank_r(&q, r) {
            Ok(g) => g,
            Err(Error::OutsideChart(_)) => continue,
            Err(e) => return Err(e),
        };
        return Ok(match frame_inverse(plane) {
            None => g,
            Some(m) => g.conjugate(&m),
        });
    }
    Err(Error::OutsideChart(format!(
        "leading minor vanished in {MAX_RESAMPLES} draws"
    )))
}

/// Explicit member of the chart: `q_{u,v} = 1` iff `u + v = r - 1`. Its
/// leading `r x r` block is the anti-diagonal permutation, and for
/// `r >= 2k+2` its top-left `(k+1)x(k+1)` block is zero, so it vanishes on
/// `span(e_0..e_k)`.
pub fn witness_quadric<F: Field>(field: &F, n: usize, r: usize) -> Result<GramMatrix<F>> {
    if r == 0 || r > n + 1 {
        return Err(Error::invalid(format!("need 1 <= r <= n+1, got r = {r}")));
    }
    let mut q = Matrix::zeros(field, n + 1, n + 1);
    for u in 0..r {
        q.set(u, r - 1 - u, field.one());
    }
    GramMatrix::new(q)
}
