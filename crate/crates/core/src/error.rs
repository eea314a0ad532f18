use thiserror::Error;

use crate::chart::Chart;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {index} must be strictly positive, got {value}")]
    NonPositiveCoordinate { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("weight vector is empty")]
    EmptyWeightVector,

    #[error("weight vector is identically zero")]
    ZeroWeightVector,

    #[error("unsupported chart transform {from:?} -> {to:?}")]
    UnsupportedChartPair { from: Chart, to: Chart },

    #[error("expected a point in the {expected:?} chart, got {found:?}")]
    ChartMismatch { expected: Chart, found: Chart },

    #[error("argument must be nonzero")]
    ZeroArgument,

    #[error("point lies on the zero-cost hypersurface (|S| = {0:e})")]
    ZeroCostPoint(f64),

    #[error("metric is singular: {what} = {value:e}")]
    SingularMetric { what: &'static str, value: f64 },

    #[error("curvature is singular: {what} = {value:e}")]
    SingularLocus { what: &'static str, value: f64 },

    #[error("exponents a and b must both be nonzero")]
    ZeroExponent,

    #[error("a + b must be nonzero")]
    ZeroSum,

    #[error("q must be nonzero, got {0:e}")]
    ZeroQ(f64),

    #[error("stencil leaves the domain at coordinate {index} (value {value}, step {step})")]
    DomainViolation { index: usize, value: f64, step: f64 },

    #[error("invalid integration span [{0}, {1}]")]
    InvalidSpan(f64, f64),

    #[error("initial state is not admissible: {0}")]
    InadmissibleInitialState(String),

    #[error("trajectory samples carry no velocities")]
    MissingVelocities,

    #[error("flow blows up at tau* = {tau_star} (numeric halt at {tau_halt})")]
    BlowupTime { tau_star: f64, tau_halt: f64 },

    #[error("inputs must be strictly positive, got ({0}, {1})")]
    NonPositiveInput(f64, f64),

    #[error("direction is orthogonal to the weight vector; the remainder vanishes identically")]
    DegenerateDirection,

    #[error("value overflows double precision: {0}")]
    Overflow(&'static str),

    #[error("query parameter {0} lies outside the integrated span")]
    OutOfSpan(f64),

    #[error("right-hand side failed at parameter {param}: {source}")]
    RhsEvaluationFailure {
        param: f64,
        #[source]
        source: Box<GeoError>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = GeoError> = std::result::Result<T, E>;
