use thiserror::Error;

/// Everything that can go wrong across the library.
///
/// Variants split into two broad families: *validation* failures (bad
/// arguments, impossible geometry) and *numerical* failures (a run that
/// started out fine but could not be completed).  The CLI maps the former
/// to exit code 2 and the latter to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution: need at least {min} cells, got {got}")]
    InvalidResolution { min: usize, got: usize },

    #[error("unsupported dimension n = {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(u32),

    #[error("invalid exponent p = {0}: require p > 0")]
    InvalidExponent(f64),

    #[error("point {point} lies outside the domain (radius {radius})")]
    OutsideDomain { point: f64, radius: f64 },

    #[error("value vector has {got} entries, grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile geometry: {0}")]
    Geometry(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("time step underflow at t = {t:.6e} (dt = {dt:.6e}): solution stagnated before the stopping gap")]
    Stagnation { t: f64, dt: f64 },

    #[error("tridiagonal solve failed: {0}")]
    LinearSolve(String),

    #[error("touchdown-time fit failed: {0}")]
    Fit(String),

    #[error("upper bound inapplicable: mu = {mu} does not exceed threshold/r^2 = {threshold}")]
    BoundInapplicable { mu: f64, threshold: f64 },

    #[error("distance undefined: {0} set is empty")]
    EmptySet(&'static str),
}

impl Error {
    /// True for failures of a computation that was validly posed
    /// (as opposed to rejected inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Stagnation { .. } | Error::LinearSolve(_) | Error::Fit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
