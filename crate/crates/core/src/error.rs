use thiserror::Error;

/// Errors raised by the solver modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("point {point:?} lies on or within {tolerance:e} of a corner of the half-ball; the map diverges there")]
    CornerPoint { point: Vec<f64>, tolerance: f64 },

    #[error("point {0:?} lies outside the closed half-ball")]
    OutsideHalfBall(Vec<f64>),

    #[error("degenerate bounds on axis {axis}: lo = {lo}, hi = {hi}")]
    DegenerateBounds { axis: usize, lo: f64, hi: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("coefficient not evaluable at node {node}: {what}")]
    NonEvaluable { node: usize, what: &'static str },

    #[error("boundary drift b^d = {value} is not positive at degenerate node {node}")]
    NonPositiveBoundaryDrift { node: usize, value: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("singular system at pivot {0}")]
    Singular(usize),

    #[error("missing constant: {0}")]
    MissingConstant(&'static str),

    #[error("obstacle exceeds Dirichlet data at node {node}: psi = {psi}, g = {g}")]
    Compatibility { node: usize, psi: f64, g: f64 },

    #[error("mollifier radius {delta} does not resolve grid spacing {spacing}")]
    KernelUnresolved { delta: f64, spacing: f64 },

    #[error("Newton iteration diverged at epsilon = {epsilon:e} (residual {residual:e})")]
    NewtonDivergence { epsilon: f64, residual: f64 },

    #[error("enumeration found no feasible active set")]
    NoFeasibleConfiguration,

    #[error("{0} unknowns exceed the enumeration cap")]
    TooManyUnknowns(usize),

    #[error("too few layers above the degenerate boundary: {0}")]
    TooFewLayers(usize),

    #[error("a seminorm needs at least two nodes")]
    SingleNode,

    #[error("maximum sweeps ({0}) exceeded")]
    MaxSweepsExceeded(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
