//! Error taxonomy shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Invalid run configuration or mismatched grids/dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Parameter outside its admissible range (e.g. alpha <= 0, N <= 1).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Operation undefined for the given data (e.g. Ḣ⁻¹ of a nonzero-mean field).
    #[error("domain error: {0}")]
    Domain(String),

    /// Data violates a structural invariant (broken Hermitian symmetry, corrupt checkpoint).
    #[error("data integrity error: {0}")]
    Integrity(String),

    /// Requested window or index outside the available span.
    #[error("range error: {0}")]
    Range(String),

    /// A fit was refused (nonpositive values on the tail, degenerate pair).
    #[error("fit refused: {0}")]
    Fit(String),

    /// The solution left the finite regime; carries the time of detection and
    /// the scalar series recorded up to that point for diagnosis.
    #[error("blow-up detected at t = {time}: {detail}")]
    BlowUp {
        time: f64,
        detail: String,
        partial: Option<Box<crate::dynamics::Trajectory>>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for validation problems, 3 for blow-up.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } => 3,
            _ => 2,
        }
    }
}
