use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("truncation order {order} cannot represent a leading power of {needed}")]
    Truncation { order: usize, needed: usize },

    #[error("users are not ordered by decreasing channel magnitude at index {index}")]
    Ordering { index: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("diversity estimation failed: {0}")]
    Estimation(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Non-fatal condition attached to a computed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// Central-limit approximation used with fewer than four branches.
    SmallBranchCount,
    /// Coherent half-width exceeds pi/4, so the pairwise pi/2 condition can fail.
    BoundNotGuaranteed,
    /// Series evaluated beyond its estimated validity radius.
    Extrapolated,
    /// Aperture too small for the full-diversity condition; beamwidth clamped.
    GeometryTooSmall,
    /// No angular spacing satisfies the ordering condition.
    NoFeasibleSpacing,
    /// No Monte Carlo draw landed in the requested range.
    NoSamples,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Warning::SmallBranchCount => "fewer than 4 branches for the CLT approximation",
            Warning::BoundNotGuaranteed => "half-width above pi/4; bound not guaranteed",
            Warning::Extrapolated => "evaluated beyond series validity radius",
            Warning::GeometryTooSmall => "aperture too small; beamwidth clamped to pi/2",
            Warning::NoFeasibleSpacing => "no feasible angular spacing",
            Warning::NoSamples => "no samples fell in the requested range",
        };
        f.write_str(s)
    }
}

/// A value together with an optional warning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flagged<V> {
    pub value: V,
    pub warning: Option<Warning>,
}

impl<V> Flagged<V> {
    pub fn clean(value: V) -> Self {
        Self { value, warning: None }
    }

    pub fn warn_if(value: V, cond: bool, warning: Warning) -> Self {
        Self {
            value,
            warning: cond.then_some(warning),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warning.is_none()
    }
}
