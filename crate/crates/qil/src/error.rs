use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum QilError {
    #[error("empty data set")]
    EmptyData,

    #[error("invalid probability {0}, must lie in (0,1)")]
    InvalidProbability(f64),

    #[error("invalid statistic {0}, must be nonnegative and finite")]
    InvalidStatistic(f64),

    #[error("column {0} has zero sample variance")]
    DegenerateColumn(usize),

    #[error("model quantiles are not strictly increasing")]
    DegenerateQuantiles,

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("numerical error: {0}")]
    NumericalError(String),

    #[error("invalid precision matrix: {0}")]
    InvalidPrecision(String),

    #[error("scatter matrix is singular")]
    DegenerateScatter,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid number of draws {draws}, must lie in [0, {total}]")]
    InvalidDraws { draws: usize, total: usize },

    #[error("all importance weights are zero")]
    DegenerateWeights,

    #[error("optimizer failed to converge: {message}")]
    NoConvergence {
        message: String,
        /// Best iterate found before giving up, if any.
        best: Option<(Vec<f64>, f64)>,
    },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QilError>;
