use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("element {element} has nonpositive signed area {area:e}")]
    DegenerateElement { element: usize, area: f64 },

    #[error("numerically singular pivot at index {pivot}")]
    SingularPivot { pivot: usize },

    #[error("linear solve inaccurate: backward error {backward_error:e}")]
    InaccurateSolve { backward_error: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
