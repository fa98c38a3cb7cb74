//! Error type shared by all subsystems.

use thiserror::Error;

/// Errors surfaced by lattice, quadric, relaxation, bound and oracle
/// operations. Variant names follow the per-operation error contracts.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProxError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("matrix has more than one nonpositive eigenvalue")]
    NotAQuadricOfInterest,
    #[error("set has a nontrivial lineality space")]
    AssumptionViolated(String),
    #[error("operation requires a different quadric class: {0}")]
    WrongQuadricClass(String),
    #[error("set is empty")]
    EmptySet,
    #[error("integer program infeasible: {0}")]
    InfeasibleSet(String),
    #[error("no integer point in the set")]
    InfeasibleIntegerSet,
    #[error("recession cone is not full-dimensional")]
    NoFullDimRecessionCone,
    #[error("set is bounded, contains no large balls")]
    NoLargeBalls,
    #[error("anchor point is not in the set (residual {0})")]
    InfeasibleAnchor(f64),
    #[error("regularizer does not dominate the quadratic form")]
    InvalidRegularizer,
    #[error("objective vector must be nonzero")]
    InvalidObjective,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("problem unbounded below")]
    Unbounded,
    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),
    #[error("cannot certify a finite enumeration box: {0}")]
    CannotCertifyBox(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, ProxError>;
