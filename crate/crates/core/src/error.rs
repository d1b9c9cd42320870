use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::manifold::ManifoldSpec;
use crate::region::ProjectionResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("tangent vectors are attached to different base points")]
    BasePointMismatch,

    #[error("manifold mismatch: {left} vs {right}")]
    ManifoldMismatch { left: ManifoldSpec, right: ManifoldSpec },

    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("coordinates are off the {manifold} embedding (defect {defect:e})")]
    NotOnManifold { manifold: ManifoldSpec, defect: f64 },

    #[error("vector is not tangent at its base point (defect {defect:e})")]
    NotTangent { defect: f64 },

    #[error("tangent norm {norm} reaches the injectivity bound {limit}")]
    BeyondInjectivityRadius { norm: f64, limit: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    EvalDomain(#[from] EvalError),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("constraint {constraint} failed the geodesic convexity spot check (violation {violation:e})")]
    NotGeodesicConvex { constraint: usize, violation: f64 },

    #[error("could only produce {got} of {wanted} interior samples")]
    SamplingExhausted { wanted: usize, got: usize },

    #[error("point at distance {distance} from the anchor exceeds the projection neighborhood {limit}")]
    OutsideProjectionNeighborhood { distance: f64, limit: f64 },

    #[error("projection failed its variational-inequality certificate (residual {:e})", best.vi_residual)]
    ProjectionNotCertified { best: Box<ProjectionResult> },

    #[error("projection coincides with the projected point")]
    DegenerateProjection,

    #[error("point is not a member of the set")]
    NotInSet,

    #[error("point lies in the set")]
    PointInSet,

    #[error("point is not on the boundary (max constraint {max_constraint:e})")]
    NotBoundaryPoint { max_constraint: f64 },

    #[error("supporting plane not certified after {steps} steps (sup {sup:e}, converged {converged})")]
    SupportNotCertified { steps: usize, sup: f64, converged: bool },

    #[error("nonnegative least squares stalled (residual {residual:e})")]
    NNLSStalled { coefficients: Vec<f64>, residual: f64 },

    #[error("numerical breakdown at iteration {iteration}: {what}")]
    NumericalBreakdown { iteration: usize, what: String },

    #[error("quasi-hyperplane direction must be nonzero")]
    DegenerateDirection,
}

impl Error {
    /// Stable machine-readable name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BasePointMismatch => "BasePointMismatch",
            Error::ManifoldMismatch { .. } => "ManifoldMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidManifold(_) => "InvalidManifold",
            Error::NotOnManifold { .. } => "NotOnManifold",
            Error::NotTangent { .. } => "NotTangent",
            Error::BeyondInjectivityRadius { .. } => "BeyondInjectivityRadius",
            Error::Parse(_) => "ParseError",
            Error::EvalDomain(_) => "EvalDomainError",
            Error::InvalidRegion(_) => "InvalidRegion",
            Error::NotGeodesicConvex { .. } => "NotGeodesicConvex",
            Error::SamplingExhausted { .. } => "SamplingExhausted",
            Error::OutsideProjectionNeighborhood { .. } => "OutsideProjectionNeighborhood",
            Error::ProjectionNotCertified { .. } => "ProjectionNotCertified",
            Error::DegenerateProjection => "DegenerateProjection",
            Error::NotInSet => "NotInSet",
            Error::PointInSet => "PointInSet",
            Error::NotBoundaryPoint { .. } => "NotBoundaryPoint",
            Error::SupportNotCertified { .. } => "SupportNotCertified",
            Error::NNLSStalled { .. } => "NNLSStalled",
            Error::NumericalBreakdown { .. } => "NumericalBreakdown",
            Error::DegenerateDirection => "DegenerateDirection",
        }
    }

    /// True for failures where the numerics could not certify an answer, as
    /// opposed to bad input.
    pub fn is_inconclusive(&self) -> bool {
        matches!(
            self,
            Error::SamplingExhausted { .. }
                | Error::ProjectionNotCertified { .. }
                | Error::SupportNotCertified { .. }
                | Error::NNLSStalled { .. }
                | Error::NumericalBreakdown { .. }
        )
    }
}
