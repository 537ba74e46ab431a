use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is outside the supported range 1..=6")]
    UnsupportedDimension(usize),

    #[error("index tuple {indices:?} is not strictly increasing within 1..={n}")]
    InvalidIndexTuple { indices: Vec<usize>, n: usize },

    #[error("wedge product of degree {degree} exceeds dimension {n}")]
    DegreeOverflow { degree: usize, n: usize },

    #[error("expected a form of degree {expected}, found degree {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot contract a 0-form")]
    ContractScalar,

    #[error("exterior derivative of a top-degree form")]
    TopDegreeDerivative,

    #[error("random closed forms need degree at least 1")]
    ZeroDegreeClosedForm,

    #[error("quadrature has no nodes inside the domain")]
    EmptyQuadrature,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment table holds degrees up to {available}, but {needed} are required")]
    MomentTableTooSmall { needed: usize, available: usize },

    #[error("mollifier mass did not converge: levels differ by {difference:e}")]
    MomentNonConvergence { difference: f64 },

    #[error("ray is degenerate: x coincides with z")]
    DegenerateRay,

    #[error("point lies outside the domain")]
    PointOutsideDomain,

    #[error("volume ratio {0} must exceed 1")]
    VolumeRatioTooSmall(f64),

    #[error("no estimate is available for {0}")]
    NoEstimate(String),

    #[error("finite-difference step {h} is larger than {max} (1% of the diameter)")]
    StepTooLarge { h: f64, max: f64 },

    #[error("chain invariant violated: {0}")]
    ChainInvariant(String),

    #[error("input form is not closed: |du| reaches {0:e}")]
    NotClosed(f64),

    #[error("input form does not have vanishing trace: pairing {0:e}")]
    NonvanishingTrace(f64),

    #[error("top-degree input must integrate to zero, got {0:e}")]
    NonzeroIntegral(f64),

    #[error("ℓ-forms with ℓ = n are not supported with boundary conditions on a chain")]
    TopDegreeWithBoundary,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
