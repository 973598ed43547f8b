use std::fmt;

use thiserror::Error;

/// Which scaling inequality a parameter set failed.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalingViolation {
    /// τ ≠ h^{2−α} beyond the relative tolerance.
    TimeStep {
        tau: f64,
        expected: f64,
    },
    /// h^{1−(α+β)} > 2/7.
    Cfl {
        value: f64,
    },
    AlphaNotPositive {
        alpha: f64,
    },
    BetaTooSmall {
        beta: f64,
    },
    AlphaPlusBeta {
        sum: f64,
    },
    NonPositiveSpacing {
        h: f64,
    },
    /// A stencil coefficient 1/7 ± (τ/2h)u would be negative.
    NegativeCoefficient {
        coefficient: f64,
    },
    /// Smooth-mode α outside (0, 1].
    SmoothAlpha {
        alpha: f64,
    },
}

impl fmt::Display for ScalingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingViolation::TimeStep { tau, expected } => {
                write!(f, "tau = h^(2-alpha) violated: tau = {tau:e}, h^(2-alpha) = {expected:e}")
            }
            ScalingViolation::Cfl { value } => {
                write!(f, "h^(1-(alpha+beta)) <= 2/7 violated: value {value}")
            }
            ScalingViolation::AlphaNotPositive { alpha } => write!(f, "alpha > 0 violated: alpha = {alpha}"),
            ScalingViolation::BetaTooSmall { beta } => write!(f, "beta > 1/2 violated: beta = {beta}"),
            ScalingViolation::AlphaPlusBeta { sum } => {
                write!(f, "alpha + beta < 1 violated: alpha + beta = {sum}")
            }
            ScalingViolation::NonPositiveSpacing { h } => write!(f, "h > 0 violated: h = {h}"),
            ScalingViolation::NegativeCoefficient { coefficient } => {
                write!(f, "stencil coefficient 1/7 - (tau/2h)|u| = {coefficient:e} is negative")
            }
            ScalingViolation::SmoothAlpha { alpha } => {
                write!(f, "smooth-mode alpha must lie in (0, 1]: alpha = {alpha}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("scaling condition violated: {0}")]
    Scaling(ScalingViolation),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { solver: &'static str, iterations: usize, residual: f64 },
    #[error("degenerate geometry at {count} point(s), first at {first:?}")]
    Degenerate { count: usize, first: [f64; 3] },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
