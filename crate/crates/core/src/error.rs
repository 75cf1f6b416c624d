use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the toolkit. Geometry and solver failures propagate
/// unchanged through the higher-level modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unresolved feature: {feature} spans {span:.6e} at h = {h:.6e}, below the 3-cell minimum")]
    UnresolvedFeature {
        feature: &'static str,
        span: f64,
        h: f64,
    },

    #[error("plate rasterizes to no cells")]
    EmptyPlate,

    #[error("plate leaves the domain interior ({outside} covering cells are not interior)")]
    PlateOutsideDomain { outside: usize },

    #[error("plate rasterization is not grid-connected ({components} components)")]
    PlateDisconnected { components: usize },

    #[error("curve escapes the domain ({outside} covering cells exterior)")]
    CurveEscapesDomain { outside: usize },

    #[error("constraint sets overlap on {overlap} cells")]
    PlatesOverlap { overlap: usize },

    #[error("linear system is singular: a free region touches no constraint")]
    Singular,

    #[error("solver did not converge within {max_iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        max_iterations: usize,
        residual: f64,
        /// Best iterate reached before giving up, free-cell ordering.
        best: Vec<f64>,
    },

    #[error("system too large for the dense oracle: {n} free cells (cap {cap})")]
    TooLarge { n: usize, cap: usize },

    #[error("no interior path joins the query points")]
    UnreachablePair,

    #[error("query point ({x:.6}, {y:.6}) is not an interior point of the mask")]
    PointNotInterior { x: f64, y: f64 },

    #[error("discrete energy diverges under refinement (ratio {ratio:.3})")]
    InfiniteEnergy { ratio: f64 },

    #[error("map input lies outside the source domain")]
    OutsideSource,

    #[error("polygon is self-intersecting")]
    SelfIntersecting,

    #[error("invalid {what}: {why}")]
    InvalidInput { what: &'static str, why: String },

    #[error("scene {path}: {message}")]
    Scene { path: String, message: String },
}

impl Error {
    pub fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            why: why.into(),
        }
    }

    /// Exit-code class used by the CLI: 2 for validation problems,
    /// 3 for numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NoConvergence { .. } | Error::InfiniteEnergy { .. }
        )
    }
}
