use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch at factor {factor}: expected {expected}, found {found}")]
    DimensionMismatch {
        factor: usize,
        expected: usize,
        found: usize,
    },

    #[error("operands live on different Hilbert spaces: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("operator is not Hermitian (max |M - M†| = {deviation:e}, scale {scale:e})")]
    NotHermitian { deviation: f64, scale: f64 },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("collapse channel {index} has negative rate {rate}")]
    NegativeRate { index: usize, rate: f64 },

    #[error("time grid must be ascending (index {index})")]
    UnorderedTimeGrid { index: usize },

    #[error("step size underflow at t = {time} ns (h = {step:e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("integrator exceeded {steps} steps before t = {time} ns")]
    StepLimit { time: f64, steps: usize },

    #[error(
        "steady state is not unique: smallest singular values {smallest:e} and {second:e} \
         (largest {largest:e})"
    )]
    DegenerateSteadyState {
        smallest: f64,
        second: f64,
        largest: f64,
    },

    #[error("linear solve failed: {0}")]
    SingularMatrix(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("geometry is not cross-phase pure: residual couplings g_A2 = {g_a2} GHz, g_B1 = {g_b1} GHz")]
    XpmImpure { g_a2: f64, g_b1: f64 },

    #[error("elimination requires {0}")]
    EliminationInvalid(String),

    #[error("stationary moment equations are singular at order {order}: resonant denominator {denominator} vanishes")]
    SingularMoments { order: usize, denominator: String },

    #[error("adiabatic conditions violated: r1 = {r1}, r2 = {r2}")]
    AdiabaticityViolated { r1: f64, r2: f64 },

    #[error("conditional-phase fit residual {residual:e} exceeds {threshold:e}; adiabatic elimination is not valid here")]
    OracleFit { residual: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
