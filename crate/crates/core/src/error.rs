use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) is outside a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not symmetric (relative defect {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (nonpositive pivot at index {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is singular (zero pivot in column {0})")]
    Singular(usize),
    #[error("matrix is rank deficient (column {index} of the triangular factor vanishes)")]
    RankDeficient { index: usize },
    #[error("eigenvalue iteration did not converge for the active block {lo}..={hi}")]
    NoConvergence { lo: usize, hi: usize },
    #[error("dimension {size} exceeds the desk-scale cap {cap}: {hint}")]
    CapExceeded {
        size: usize,
        cap: usize,
        hint: &'static str,
    },
    #[error("{0}")]
    Factorization(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported MatrixMarket header: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {got}, expected {expected}"
        )));
    }
    Ok(())
}
