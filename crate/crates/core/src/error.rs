//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: first sample has d={left}, second has d={right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("coordinate {coordinate} has zero pooled standard deviation")]
    DegenerateCoordinate { coordinate: usize },

    #[error("coincident observations: rows {i} and {j} are at zero distance (singular under this kernel; set a min-distance floor to clamp)")]
    SingularDistance { i: usize, j: usize },

    #[error("insufficient sample: need at least {required} observations per sample, got n={n}, m={m}")]
    InsufficientSample { required: usize, n: usize, m: usize },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("covariance matrix is not positive definite")]
    InvalidCovariance,

    #[error("too few permutations: {permutations} cannot resolve alpha={alpha}")]
    InsufficientPermutations { permutations: usize, alpha: f64 },

    #[error("degenerate bins: pooled quantile edge {index} collapses onto its neighbor; too many ties for {bins} bins")]
    DegenerateBins { index: usize, bins: usize },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },

    #[error("scenario config: {0}")]
    Scenario(String),

    #[error("no report for table cell: case {case_id}, method {method}")]
    MissingCell { case_id: u32, method: String },

    #[error("replication {replication}: {source}")]
    InReplication {
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by degenerate data rather than bad usage.
    pub fn is_data_degeneracy(&self) -> bool {
        match self {
            Error::SingularDistance { .. }
            | Error::DegenerateCoordinate { .. }
            | Error::DegenerateBins { .. } => true,
            Error::InReplication { source, .. } => source.is_data_degeneracy(),
            _ => false,
        }
    }
}
