use serde::{Deserialize, Serialize};

use crate::dims::{self, Int};
use crate::error::{Error, Result};

/// Identifiability of a k-dimensional stationary subspace from `s` covariance
/// differences in `P^n`, together with the minimal `s` predicted by each of
/// the available criteria.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub n: i64,
    pub k: i64,
    pub s: i64,
    pub r: Option<i64>,
    pub delta: Int,
    /// `delta < 0` with at least two quadrics.
    pub identifiable: bool,
    /// `ceil(2(n-k)/(k+1))`.
    pub sharp_threshold: i64,
    /// `ceil((n+2)/k)`, absent for `k = 0`.
    pub upper_bound_threshold: Option<i64>,
    /// Smallest `s` with negative delta.
    pub delta_threshold: i64,
    /// Set when the delta threshold and the sharp closed form disagree.
    pub discrepancy_flag: bool,
}

/// Pass the effective `n` after any ambient reduction by linear forms.
///
/// A single quadric (`s = 1`) is reported as not identifiable whatever the
/// sign of delta: it lies outside the regime where delta decides.
pub fn identifiability_report(
    n: i64,
    k: i64,
    s: i64,
    r: Option<i64>,
) -> Result<IdentifiabilityReport> {
    if s < 1 {
        return Err(Error::invalid(format!(
            "need s >= 1 epoch differences, got s = {s}"
        )));
    }
    let delta = dims::delta_quadrics(n, s, k)?;
    if let Some(r) = r {
        dims::require_rank_regime(k, r)?;
        if r > n + 1 {
            return Err(Error::invalid(format!(
                "rank r = {r} exceeds n+1 = {}",
                n + 1
            )));
        }
    }
    let th = dims::min_epoch_differences(n, k)?;
    Ok(IdentifiabilityReport {
        n,
        k,
        s,
        r,
        delta,
        identifiable: s >= 2 && delta < 0,
        sharp_threshold: th.sharp_closed_form,
        upper_bound_threshold: th.upper_bound,
        delta_threshold: th.delta_based,
        discrepancy_flag: th.delta_based != th.sharp_closed_form,
    })
}
