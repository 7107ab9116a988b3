use thiserror::Error;

use crate::graph::VertexId;

/// Errors raised by graph construction and the numerical routines built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-positive or non-finite {what}: {value}")]
    NonPositiveWeight { what: String, value: f64 },

    #[error("self-edge at vertex {0} is not allowed in a discrete graph")]
    SelfEdgeInDiscreteGraph(VertexId),

    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(VertexId, VertexId),

    #[error("duplicate vertex {0}")]
    DuplicateVertex(VertexId),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("no value supplied for edge {0}-{1}")]
    MissingEdgeValue(VertexId, VertexId),

    #[error("edge weight function does not match the graph: {0}")]
    InvalidWeightFunction(String),

    #[error("vertex {vertex} has measure {measure}; the operation requires m = 1")]
    NonUnitMeasure { vertex: VertexId, measure: f64 },

    #[error("jump size is unknown: the family carries no supremum bound for this weight")]
    UnboundedUnknown,

    #[error("the family carries no layer summary")]
    MissingLayerSummary,

    #[error("truncation set is empty")]
    EmptyTruncation,

    #[error("weighted degree bound is unknown for this family")]
    UnboundedDegreeUnknown,

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("lowest eigenvalue increased from {previous} to {current} at depth {depth}")]
    MonotonicityViolation {
        depth: usize,
        previous: f64,
        current: f64,
    },

    #[error("weight is not intrinsic at vertex {vertex}: sum b p^2 exceeds m by {excess:e}")]
    NotIntrinsic { vertex: VertexId, excess: f64 },

    #[error("jump size is infinite")]
    InfiniteJumpSize,

    #[error("metric graph model does not have finite intrinsic size")]
    InfiniteSizeModel,

    #[error("three-term recurrence overflowed at index {0}")]
    Overflow(usize),

    #[error("factorization does not reproduce the Jacobi {which} at index {index}: {expected} vs {found}")]
    FactorizationMismatch {
        which: &'static str,
        index: usize,
        expected: f64,
        found: f64,
    },

    #[error("Jacobi data carries no (m, l) factorization")]
    MissingFactorization,

    #[error("power-law exponent fit failed: {0}")]
    ExponentFitFailure(String),

    #[error("exponent must be positive and finite, got {0}")]
    InvalidExponent(f64),

    #[error("off-diagonal Jacobi entry b_{index} = {value} is not positive")]
    NonPositiveOffDiagonal { index: usize, value: f64 },

    #[error("graph is not an antitree: {0}")]
    NotAnAntitree(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of a numerical method, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. }
                | Error::MonotonicityViolation { .. }
                | Error::Overflow(_)
                | Error::ExponentFitFailure(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
