//! Fano schemes of k-planes on conditionally generic intersections of
//! hypersurfaces, and their use for identifiability in stationary subspace
//! analysis.
//!
//! - [`dims`]: expected dimensions, stratifications and thresholds.
//! - [`exactla`]: rational and prime-field linear algebra, float SVD helpers.
//! - [`forms`]: homogeneous forms, Gram matrices, conditional samplers.
//! - [`grass`]: planes, charts, finite-field enumeration, principal angles.
//! - [`fano`]: tangent-space certificates and finite-field censuses.
//! - [`ssa`]: cumulants, difference systems, reports and numerical recovery.
//! - [`io`]: the JSON instance format and epoch CSV files.

pub mod dims;
pub mod error;
pub mod exactla;
pub mod fano;
pub mod forms;
pub mod grass;
pub mod io;
pub mod ssa;

pub use error::{Error, Result};
