use thiserror::Error;

/// Errors raised by the simulator.
///
/// `Truncation` is recoverable: sweeps log it, enlarge the Fock space and
/// retry rather than aborting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock truncation too small ({context}): field_dim={field_dim}, tail population {tail:.3e}")]
    Truncation {
        context: &'static str,
        field_dim: usize,
        tail: f64,
    },

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("dressing is degenerate: N^2 = {0:.3e}")]
    DegenerateDressing(f64),

    #[error("generator has more than one stationary state: {0}")]
    MultipleSteadyStates(String),

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration step limit {0} exceeded")]
    StepLimit(usize),

    #[error("Bessel order {0} outside supported range |n| <= 64")]
    BesselOrder(i32),

    #[error("phase-space grid too small: captured mass {mass:.6}; suggested extents x in [{x_min:.3}, {x_max:.3}], p in [{p_min:.3}, {p_max:.3}]")]
    GridTooSmall {
        mass: f64,
        x_min: f64,
        x_max: f64,
        p_min: f64,
        p_max: f64,
    },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_truncation(&self) -> bool {
        matches!(self, Error::Truncation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
