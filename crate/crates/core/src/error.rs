use alloc::string::String;

use crate::support::TermId;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("capacity exceeded: {what} needs {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("value {value} is outside the support of coordinate {coordinate}")]
    OutOfSupport { coordinate: usize, value: i64 },

    #[error("row {row}: value {value} is outside the support of coordinate {coordinate}")]
    DatumOutOfSupport { row: usize, coordinate: usize, value: i64 },

    #[error("state has {got} coordinates, expected {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid identifier: {0}")]
    InvalidId(String),

    #[error("invalid probability table: {0}")]
    InvalidPmf(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid weight scheme: {0}")]
    InvalidScheme(String),

    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("row {row} is not a one-hot vector")]
    NotOneHot { row: usize },

    #[error("empty data set")]
    EmptyData,

    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),

    #[error("datum {datum} has zero probability under term {term} for every starting point")]
    ZeroLikelihood { datum: usize, term: TermId },
}

pub type Result<T> = core::result::Result<T, Error>;
