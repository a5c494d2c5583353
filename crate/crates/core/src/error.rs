use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("site {site} is outside the ring 1..={sites}")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("{sites} sites exceed the configured maximum of {max}")]
    DimensionOverflow { sites: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix of dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("segment has {len} sites; at least 2 are required")]
    SegmentTooShort { len: usize },

    #[error("ground state is degenerate (gap {gap:e} below threshold {threshold:e})")]
    DegenerateGroundState { gap: f64, threshold: f64 },

    #[error("operators do not commute (relative commutator norm {residual:e})")]
    NonCommuting { residual: f64 },

    #[error("eigensolver did not converge")]
    EigenSolver,

    #[error("reference states are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("return probabilities cannot be normalized (total {total:e})")]
    DegenerateNormalization { total: f64 },

    #[error(
        "integration quality lost at t = {t}: trace deviation {trace_dev:e}, \
         minimum eigenvalue {min_eig:e}; reduce the step size"
    )]
    IntegrationQuality { t: f64, trace_dev: f64, min_eig: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
