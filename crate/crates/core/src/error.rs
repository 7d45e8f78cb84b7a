use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular to working precision (scaled pivot {pivot:e})")]
    SingularMatrix { pivot: f64 },

    #[error("denominator vanishes ({value:e})")]
    DenominatorVanishes { value: f64 },

    #[error("beta is not orthogonal to the parameter vector (dot = {dot:e})")]
    NotOrthogonal { dot: f64 },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("moments of inertia must be positive")]
    NonPositiveInertia,

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("elliptic modulus {k} outside [0, 1)")]
    ModulusOutOfRange { k: f64 },

    #[error("argument {value} outside the admissible range")]
    ArgumentOutOfRange { value: f64 },

    #[error("delta must satisfy delta1 < 0, delta2 > 0, delta3 < 0")]
    WrongSignPattern,

    #[error("initial data on or near the separatrix: {0}")]
    RegimeBoundary(String),

    #[error("inconsistent initial data: {0}")]
    InconsistentInitialData(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("singular Jacobian inside Newton iteration")]
    SingularJacobian,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
