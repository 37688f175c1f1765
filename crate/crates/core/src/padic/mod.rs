//! Exact arithmetic in a totally ramified extension K/ℚ_p at capped
//! absolute precision, together with truncated power series, dense
//! polynomials, Newton polygons, matrices and the 1-unit transcendental
//! kernels (Teichmüller lifts, log, exp, p-adic powers).

mod context;
mod kernels;
mod matrix;
mod newton;
mod poly;
pub(crate) mod residue;
mod scalar;
mod series;

pub use context::{PadicContext, GUARD_DIGITS};
pub use kernels::{exp_small, log_one_unit, one_unit_pow, teichmuller, teichmuller_decompose};
pub use matrix::{Matrix, RingElement};
pub use newton::{NewtonPolygon, NewtonSegment};
pub(crate) use newton::ratio_serde;
pub use poly::Poly;
pub use scalar::{ArithOp, PadicScalar, ScalarRecord};
pub use series::TruncatedSeries;

use thiserror::Error;

use crate::ErrorClass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("division by an element that is zero to precision")]
    DivisionByZeroToPrecision,
    #[error("operands live in different p-adic contexts")]
    ContextMismatch,
    #[error("residue class is zero mod p")]
    ZeroResidue,
    #[error("argument is not a 1-unit (v(s - 1) must be positive)")]
    NotOneUnit,
    #[error("exponent is not in the integral ℤ_p part of the field")]
    ExponentNotIntegral,
    #[error("argument outside the convergence domain of the series")]
    OutsideConvergenceDomain,
    #[error("constant term is not a unit")]
    NonUnitConstantTerm,
    #[error("all coefficients vanish to precision")]
    AllCoefficientsZero,
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("p = {p} with {digits} stored digits exceeds the 127-bit residue range")]
    PrecisionTooLarge { p: u64, digits: u32 },
    #[error("digit {0} is not below p")]
    InvalidDigit(u64),
    #[error("matrix is singular to precision")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("series variables differ")]
    VariableMismatch,
}

impl PadicError {
    pub fn class(&self) -> ErrorClass {
        match self {
            PadicError::PrecisionTooLarge { .. } | PadicError::DivisionByZeroToPrecision => {
                ErrorClass::Precision
            }
            PadicError::ContextMismatch
            | PadicError::DimensionMismatch(_)
            | PadicError::VariableMismatch
            | PadicError::SingularMatrix => ErrorClass::Invariant,
            _ => ErrorClass::Validation,
        }
    }
}
