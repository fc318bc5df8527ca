use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no minimal Green's function for mode ({k1},{k2}): discriminant {disc:.3e} <= 0")]
    Criticality { k1: u32, k2: u32, disc: f64 },

    #[error("mode sum tail {tail:.3e} exceeds tolerance {limit:.3e} (pair too close to the diagonal)")]
    TailNotConvergent { tail: f64, limit: f64 },

    #[error("operator is not weakly coercive: lambda {lambda} >= lambda* {lambda_star}")]
    NotCoercive { lambda: f64, lambda_star: f64 },

    #[error("inverse iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("Dirichlet eigenvalues failed to decrease at T = {t}: {previous} -> {current}")]
    MonotonicityViolation { t: f64, previous: f64, current: f64 },

    #[error("no positive Phi parameters fit the chain: {0}")]
    FitFailure(String),

    #[error("positivity cannot be certified: coefficient mass {mass} >= 1")]
    PositivityUnverifiable { mass: f64 },

    #[error("denominator {value:.3e} below positivity margin on level {level}")]
    DivisionUnstable { level: usize, value: f64 },

    #[error("representation needs negative coefficient ({0:.3e})")]
    NegativeCoefficient(f64),

    #[error("pencil at the tip is empty: omega {omega} >= 1/a = {limit}")]
    EmptyPencil { omega: f64, limit: f64 },

    #[error("norm diverges: {0}")]
    DivergentNorm(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("check failed: {0}")]
    CheckFailed(String),
}
