//! Expected dimensions of Fano schemes, their stratification by intersection
//! with a fixed plane, and the identifiability thresholds derived from them.
//!
//! All quantities are exact integers. Arithmetic is `i128` with checked
//! operations; leaving that range is an [`Error::Overflow`], never a wrap.
//!
//! Conventions: `n` is the projective dimension of the ambient space, `k` the
//! projective dimension of the planes, and a multidegree `(d_1, ..., d_s)`
//! lists the degrees of the defining forms. The binomial of a multidegree is
//! the sum of the per-form binomials, `C(d + k, k) = sum_i C(d_i + k, k)`,
//! which is the codimension of the space of tuples vanishing on a fixed
//! k-plane. By convention `C(r, -1) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Int = i128;

fn ck(v: Option<Int>) -> Result<Int> {
    v.ok_or(Error::Overflow("dimension arithmetic"))
}

/// `C(n, r)` with `C(n, r) = 0` for `r < 0` or `r > n`.
pub fn binomial(n: i64, r: i64) -> Result<Int> {
    if r < 0 || n < 0 || r > n {
        return Ok(0);
    }
    let r = r.min(n - r);
    let mut acc: Int = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = ck(acc.checked_mul((n - i) as Int))? / (i as Int + 1);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiDegree(Vec<u32>);

impl MultiDegree {
    /// Every degree must be at least 2.
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::invalid(
                "multidegree must contain at least one degree",
            ));
        }
        if let Some(d) = degrees.iter().find(|&&d| d < 2) {
            return Err(Error::invalid(format!(
                "every degree must be >= 2, got {d}"
            )));
        }
        Ok(MultiDegree(degrees))
    }

    /// `s` copies of degree 2.
    pub fn quadrics(s: usize) -> Result<Self> {
        Self::new(vec![2; s])
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The single quadric `(2)`, excluded from the identifiability predicates.
    pub fn is_single_quadric(&self) -> bool {
        self.0 == [2]
    }

    fn require_not_single_quadric(&self) -> Result<()> {
        if self.is_single_quadric() {
            Err(Error::UnsupportedRegime(
                "multidegree d = (2) (a single quadric) is excluded".into(),
            ))
        } else {
            Ok(())
        }
    }
}

impl std::fmt::Display for MultiDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `sum_i C(d_i + k, k)`, zero at `k = -1`.
pub fn multidegree_binom(d: &MultiDegree, k: i64) -> Result<Int> {
    if k < -1 {
        return Err(Error::invalid(format!("k must be >= -1, got {k}")));
    }
    d.0.iter().try_fold(0, |acc: Int, &di| {
        ck(acc.checked_add(binomial(di as i64 + k, k)?))
    })
}

/// Generalization of [`multidegree_binom`] to `C(d_i + a, b)` summed over `i`.
fn multi_binom(d: &MultiDegree, a: i64, b: i64) -> Result<Int> {
    d.0.iter().try_fold(0, |acc: Int, &di| {
        ck(acc.checked_add(binomial(di as i64 + a, b)?))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanoParams {
    pub n: i64,
    pub k: i64,
    pub d: MultiDegree,
}

impl FanoParams {
    pub fn new(n: i64, k: i64, d: MultiDegree) -> Result<Self> {
        if k < 0 || k >= n {
            return Err(Error::invalid(format!("need 0 <= k < n, got n={n}, k={k}")));
        }
        Ok(FanoParams { n, k, d })
    }

    pub fn s(&self) -> usize {
        self.d.len()
    }

    /// Dimension of the Grassmannian of k-planes in P^n.
    pub fn grassmannian_dim(&self) -> Result<Int> {
        ck(((self.k + 1) as Int).checked_mul((self.n - self.k) as Int))
    }
}

/// `delta(n, d, k) = (k+1)(n-k) - C(d+k, k)`.
pub fn delta(p: &FanoParams) -> Result<Int> {
    ck(p.grassmannian_dim()?
        .checked_sub(multidegree_binom(&p.d, p.k)?))
}

/// Expected dimension of the stratum of planes meeting the fixed plane in
/// projective dimension exactly `k_prime`:
/// `(k-k')(n-k+k'+1) + C(d+k', k') - C(d+k, k)`.
pub fn delta_strat(p: &FanoParams, k_prime: i64) -> Result<Int> {
    if k_prime < -1 || k_prime > p.k {
        return Err(Error::invalid(format!(
            "k' must lie in [-1, k] = [-1, {}], got {k_prime}",
            p.k
        )));
    }
    let (n, k) = (p.n as Int, p.k as Int);
    let kp = k_prime as Int;
    let lead = ck((k - kp).checked_mul(n - k + kp + 1))?;
    let binoms = ck(multidegree_binom(&p.d, k_prime)?.checked_sub(multidegree_binom(&p.d, p.k)?))?;
    ck(lead.checked_add(binoms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardDifference {
    pub k_prime: i64,
    /// First difference `delta_strat(k'+1) - delta_strat(k')`.
    pub first: Int,
    /// Second difference `first(k'+1) - first(k')`.
    pub second: Int,
}

/// Closed-form first difference `-2k' - n + 2k - 2 + C(d+k', k'+1)`.
pub fn first_difference(p: &FanoParams, k_prime: i64) -> Result<Int> {
    let lin = -2 * k_prime as Int - p.n as Int + 2 * p.k as Int - 2;
    ck(lin.checked_add(multi_binom(&p.d, k_prime, k_prime + 1)?))
}

/// Closed-form second difference `-2 + C(d+k', k'+2)`.
pub fn second_difference(p: &FanoParams, k_prime: i64) -> Result<Int> {
    ck(multi_binom(&p.d, k_prime, k_prime + 2)?.checked_sub(2))
}

/// Closed-form forward differences for every `k'` in `[-1, k-1]`.
///
/// The second difference is reported for the same `k'`; it only enters the
/// convexity argument for `k' <= k-2`.
pub fn forward_differences(p: &FanoParams) -> Result<Vec<ForwardDifference>> {
    p.d.require_not_single_quadric()?;
    (-1..p.k)
        .map(|kp| {
            Ok(ForwardDifference {
                k_prime: kp,
                first: first_difference(p, kp)?,
                second: second_difference(p, kp)?,
            })
        })
        .collect()
}

/// Codimension of a Schubert cell: the sum of the parts of `lambda`.
///
/// `lambda` must be non-increasing with parts in `[0, n-k]`.
pub fn schubert_codim(lambda: &[i64], n: i64, k: i64) -> Result<Int> {
    if lambda.len() as i64 > k + 1 {
        return Err(Error::invalid(format!(
            "partition has {} parts, at most k+1 = {} allowed",
            lambda.len(),
            k + 1
        )));
    }
    if let Some(bad) = lambda.iter().find(|&&l| l < 0 || l > n - k) {
        return Err(Error::invalid(format!(
            "part {bad} outside [0, n-k] = [0, {}]",
            n - k
        )));
    }
    if lambda.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid(format!(
            "partition {lambda:?} is not non-increasing"
        )));
    }
    Ok(lambda.iter().map(|&l| l as Int).sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratRow {
    pub k_prime: i64,
    pub expected_dim: Int,
    /// Nonzero parts only: `(n-2k+k')` repeated `k'+1` times.
    pub schubert_lambda: Vec<i64>,
    pub schubert_codim: Int,
    pub incidence_dim: Int,
    /// Dimension of the projective space of tuples vanishing on the fixed plane.
    pub vanishing_space_dim: Int,
    /// Set when `n < 2k - k'`: two k-planes meeting in a k'-plane do not fit.
    pub degenerate: bool,
}

/// One row per `k'` in `[-1, k]`.
pub fn stratification_table(p: &FanoParams) -> Result<Vec<StratRow>> {
    let (n, k) = (p.n, p.k);
    let ambient_binom = multi_binom(&p.d, n, n)?;
    let bk = multidegree_binom(&p.d, k)?;
    let vanishing_space_dim = ck(ck(ambient_binom.checked_sub(bk))?.checked_sub(1))?;
    (-1..=k)
        .map(|kp| {
            let part = n - 2 * k + kp;
            let reps = kp + 1;
            let degenerate = part < 0;
            let schubert_lambda: Vec<i64> = if part == 0 {
                Vec::new()
            } else {
                vec![part; reps as usize]
            };
            let schubert_codim = ck((reps as Int).checked_mul(part as Int))?;
            // (k+1)(n-k) - (k'+1)(n-2k+k') + C(d+n,n) - 2C(d+k,k) + C(d+k',k') - 1
            let incidence_dim =
                ck(p.grassmannian_dim()?.checked_sub(schubert_codim))? + ambient_binom - 2 * bk
                    + multidegree_binom(&p.d, kp)?
                    - 1;
            Ok(StratRow {
                k_prime: kp,
                expected_dim: delta_strat(p, kp)?,
                schubert_lambda,
                schubert_codim,
                incidence_dim,
                vanishing_space_dim,
                degenerate,
            })
        })
        .collect()
}

/// The fixed plane is the only k-plane on a conditionally generic
/// intersection exactly when `delta < 0`.
pub fn identifiable(p: &FanoParams) -> Result<bool> {
    p.d.require_not_single_quadric()?;
    Ok(delta(p)? < 0)
}

/// Quadric version of delta: `(k+1)(n-k) - s C(k+2, 2)`.
pub fn delta_quadrics(n: i64, s: i64, k: i64) -> Result<Int> {
    if k < 0 || k >= n {
        return Err(Error::invalid(format!("need 0 <= k < n, got n={n}, k={k}")));
    }
    let g = ck(((k + 1) as Int).checked_mul((n - k) as Int))?;
    ck(g.checked_sub(ck((s as Int).checked_mul(binomial(k + 2, 2)?))?))
}

/// Check for the rank-constrained regime `r >= 2k+2`.
pub fn require_rank_regime(k: i64, r: i64) -> Result<()> {
    if r < 2 * k + 2 {
        Err(Error::UnsupportedRegime(format!(
            "rank r = {r} violates the hypothesis r >= 2k+2 = {}",
            2 * k + 2
        )))
    } else {
        Ok(())
    }
}

/// Identifiability for `s` generic rank-`r` quadrics through a fixed k-plane.
pub fn identifiable_rank_constrained(n: i64, s: i64, k: i64, r: i64) -> Result<bool> {
    if s < 2 {
        return Err(Error::UnsupportedRegime(format!(
            "need s >= 2 quadrics (a single quadric is excluded), got s = {s}"
        )));
    }
    require_rank_regime(k, r)?;
    if r > n + 1 {
        return Err(Error::invalid(format!(
            "rank r = {r} exceeds n+1 = {}",
            n + 1
        )));
    }
    Ok(delta_quadrics(n, s, k)? < 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochThresholds {
    /// Smallest `s` with `(k+1)(n-k) - s C(k+2,2) < 0`.
    pub delta_based: i64,
    /// `ceil(2(n-k)/(k+1))`.
    pub sharp_closed_form: i64,
    /// `ceil((n+2)/k)`; `None` for `k = 0`.
    pub upper_bound: Option<i64>,
}

fn ceil_div(a: i64, b: i64) -> i64 {
    (a + b - 1).div_euclid(b)
}

/// Minimal numbers of covariance differences `s` for identifiability
/// according to the three available criteria. They need not agree; callers
/// should report all three.
pub fn min_epoch_differences(n: i64, k: i64) -> Result<EpochThresholds> {
    if k < 0 || k >= n {
        return Err(Error::invalid(format!("need 0 <= k < n, got n={n}, k={k}")));
    }
    let g = (k + 1) * (n - k);
    let c = (k + 2) * (k + 1) / 2;
    Ok(EpochThresholds {
        delta_based: g / c + 1,
        sharp_closed_form: ceil_div(2 * (n - k), k + 1),
        upper_bound: (k >= 1).then(|| ceil_div(n + 2, k)),
    })
}
