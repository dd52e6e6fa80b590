//! Error types.

use crate::units::Unit;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Source and target units measure different dimensions.
    #[error("cannot convert {from} to {to}: dimensions differ")]
    DimensionMismatch {
        /// Unit of the input quantity.
        from: Unit,
        /// Requested unit.
        to: Unit,
    },
    /// A quantity carried a unit of the wrong dimension for its role.
    #[error("{what} must be {expected}, got a quantity in {got}")]
    WrongDimension {
        /// Role of the argument.
        what: &'static str,
        /// Expected dimension, in words.
        expected: &'static str,
        /// Unit actually supplied.
        got: Unit,
    },
    /// Unrecognized unit suffix.
    #[error("unknown unit `{0}`")]
    UnknownUnit(alloc::string::String),
    /// Could not parse a number with a unit suffix.
    #[error("cannot parse quantity `{0}`")]
    BadQuantity(alloc::string::String),
    /// An argument lies outside the domain of an operation.
    #[error("{what} out of domain: {value}")]
    Domain {
        /// Which argument.
        what: &'static str,
        /// Offending value.
        value: f64,
    },
    /// A pair with zero initial separation was propagated.
    #[error("singular input: zero initial pair separation")]
    SingularPair,
    /// `d(u sigma)/du` requested where sigma rounds to exactly one.
    #[error("map derivative undefined at sigma = 1 (u = {u})")]
    DerivativeUndefined {
        /// Dimensionless initial separation.
        u: f64,
    },
    /// The adaptive integrator could not make progress.
    #[error("integration failed: step size underflow at t = {reached}")]
    IntegrationFailed {
        /// Time reached before failure, in the integrator's units.
        reached: f64,
    },
    /// A bracketed root search failed to converge or lost its bracket.
    #[error("root search failed: {0}")]
    RootNotFound(&'static str),
    /// The grid is too coarse to resolve the detector kernel.
    #[error("grid spacing {spacing} exceeds resolution time {resolution}; refine the grid")]
    UnderResolved {
        /// Largest grid spacing.
        spacing: f64,
        /// Kernel width.
        resolution: f64,
    },
    /// Grid or histogram layout violates its invariants.
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    /// Inconsistent configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Library result alias.
pub type Result<T> = core::result::Result<T, Error>;
