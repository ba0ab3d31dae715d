use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("point is {distance:e} away from the supporting subspace")]
    OffSubspace { distance: f64 },

    #[error("function is not differentiable at the queried point")]
    NotDifferentiable,

    #[error("no sign change: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    NoBracket { g_lo: f64, g_hi: f64 },

    #[error("request span has rank {rank}, more than the {capacity} dimensions available")]
    DimensionOverflow { rank: usize, capacity: usize },

    #[error("degenerate adversary state: algorithm and comparator coincide")]
    DegenerateState,

    #[error("adversary root not bracketed after widening to [{lo:e}, {hi:e}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("scaling fit needs positive data ({0})")]
    NonPositiveData(String),

    #[error("balanced step is ambiguous: hit {hit:e}, movement {movement:e}")]
    NumericalAmbiguity { hit: f64, movement: f64 },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
