use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("evaluation point has a non-finite coordinate")]
    NonFinitePoint,
    #[error("affine rescale needs positive finite scales, got {0}")]
    NonPositiveScale(f64),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SosError {
    #[error("auxiliary degree must be even and at least 2, got {0}")]
    InvalidAuxDegree(u32),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("solver did not produce a usable point: {0}")]
    SolverFailed(String),
    #[error("solution shape does not match the program")]
    SolutionShape,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64, state: Vec<f64> },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64, state: Vec<f64> },
    #[error("empty averaging window")]
    EmptyWindow,
    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("converged orbit has symbols {found}, requested {requested}")]
    SymbolMismatch { requested: String, found: String },
    #[error("trajectory did not reach the requested section crossing")]
    MissingCrossing,
    #[error("crossing labels {crossings} disagree with loop labels {loops}")]
    AmbiguousSymbols { crossings: String, loops: String },
    #[error("orbit anchor does not cross the section transversally")]
    NotTransversal,
    #[error("step limit of {0} reached")]
    TooManySteps(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    #[error("threshold M must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(f64),
    #[error("grid resolution must be at least 2 on every axis")]
    Resolution,
    #[error("non-finite value of the sublevel function at a grid node")]
    NonFinite,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
