use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("tensor quantities are undefined at the zero vector")]
    ZeroVector,
    #[error("point {point:?} lies outside the chart domain")]
    OutsideChart { point: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{what} did not converge (residual {residual:.3e})")]
    NoConvergence { what: &'static str, residual: f64 },
    #[error("integrator step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: &'static str },
    #[error("geodesic left the chart at t = {t_exit} before reaching t = {t_target}")]
    OutsideDomain { t_exit: f64, t_target: f64 },
    #[error("reference vector field vanishes")]
    ZeroReference,
    #[error("flag is degenerate (denominator {denominator:.3e})")]
    DegenerateFlag { denominator: f64 },
    #[error("vector is not in the normal cone (residual {residual:.3e})")]
    NotNormal { residual: f64 },
    #[error("submanifold is only C1 at parameter {param:?}; curvature is undefined there")]
    NotC2 { param: Vec<f64> },
    #[error("operator is not self-adjoint (asymmetry {asymmetry:.3e})")]
    NotSelfAdjoint { asymmetry: f64 },
    #[error("target is unreachable: {0}")]
    Unreachable(String),
    #[error("point {point:?} lies outside the oracle box")]
    OutOfBox { point: Vec<f64> },
    #[error("differential vanishes at {point:?}")]
    SingularPoint { point: Vec<f64> },
    #[error("epsilon {epsilon} too large: {collisions} collisions, first pair {first:?}")]
    EpsilonTooLarge {
        epsilon: f64,
        collisions: usize,
        first: (Vec<f64>, Vec<f64>),
    },
    #[error("radius {radius} is not below the injectivity bound {bound}")]
    RadiusBeyondInjectivity { radius: f64, bound: f64 },
    #[error("sqrt(lambda) * r = {value} reaches the cotangent pole at pi")]
    PoleCrossing { value: f64 },
    #[error("radius {radius} is not below the injectivity radii at the center ({bound})")]
    RadiusTooLarge { radius: f64, bound: f64 },
    #[error("sphere conditions need a closed curve in the Euclidean plane: {0}")]
    NotPlanar(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
