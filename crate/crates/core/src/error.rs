use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },
    #[error("invalid labels: {0}")]
    Labels(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("too few rows: need at least {need}, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("group {group} has {size} member(s); at least 2 are required")]
    SmallGroup { group: i64, size: usize },
    #[error("unknown group id {0}")]
    UnknownGroup(i64),
    #[error("probabilities must lie in [0, 1]")]
    ProbabilityRange,
    #[error("every CCS restart produced a non-finite loss")]
    Diverged,
    #[error("input has rank zero (all rows are identical)")]
    RankZero,
    #[error("direction has zero norm")]
    ZeroDirection,
    #[error("labels are required but the dataset has none for key `{0}`")]
    MissingLabels(String),
    #[error("k = {k} exceeds the number of points n = {n}")]
    TooManyClusters { k: usize, n: usize },
    #[error("split leaves an empty side (n = {n}, ratio = {ratio})")]
    EmptySplit { n: usize, ratio: f64 },
}
