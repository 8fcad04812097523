//! Stationary subspace analysis.
//!
//! Epochs `X_0, ..., X_s` of a multivariate signal share a stationary
//! subspace when some projection `P` makes all projected epochs equal in
//! distribution. Comparing the first two cumulants of each epoch against
//! epoch 0 yields linear and quadratic forms that must vanish on the row span
//! of `P`, which turns the search for `P` into a Fano scheme question.
//!
//! The numerical path works over the reals. The identifiability verdicts
//! are integer computations that do not depend on the field, so recovery
//! runs should be read as evidence about generic real data.

mod cumulants;
mod instance;
mod recover;
mod report;
mod system;

pub use cumulants::{estimate_cumulants, CovarianceDivisor, EpochCumulants};
pub use instance::{
    generate_instance, random_orthogonal, sample_epochs, InstanceOptions, SsaInstance,
    INVARIANT_TOL, MIN_EIGENVALUE,
};
pub use recover::{
    gradient_check, random_stiefel, recover_from_epochs, recover_from_estimates, recover_subspace,
    refine, Objective, RecoveredPlane, Recovery, RecoveryDiagnostics, RecoveryOptions,
};
pub use report::{identifiability_report, IdentifiabilityReport};
pub use system::{
    difference_system, reduce_ambient, reduce_ambient_default, DifferenceSystem, ReducedSystem,
    DROP_TOL,
};
