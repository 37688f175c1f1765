//! p-adic spectral computations: weight-space characters, locally analytic
//! induction with BGG operators, compact operator models, Fredholm series
//! and slope factorizations, and Čech/Kiehl glueing on Laurent covers.
//!
//! Every computation runs at a capped absolute precision fixed by a
//! [`padic::PadicContext`]; results carry the precision they can justify.

pub mod cech;
pub mod laind;
pub mod padic;
pub mod spectral;
pub mod weight;

use serde::{Deserialize, Serialize};

/// Coarse error classes shared by all modules, used by front-ends to pick
/// exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorClass {
    /// Inputs violate a documented precondition.
    Validation,
    /// The requested precision could not be certified.
    Precision,
    /// An internal consistency check failed.
    Invariant,
}
