use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid code spec: {0}")]
    SpecInvalid(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("insufficient rank: {rank} independent equations for {unknowns} unknowns")]
    InsufficientRank { rank: usize, unknowns: usize },
    #[error("known bits violate parity equation {row}")]
    Inconsistent { row: usize },
    #[error("symbol {0} already received")]
    Duplicate(usize),
    #[error("symbol index {0} is out of range")]
    SymbolOutOfRange(usize),
    #[error("curves are sampled on different grids")]
    GridMismatch,
    #[error("EXIT tunnel is closed even at sigma_n = {0}")]
    Infeasible(f64),
    #[error("no grid point admits a feasible degree distribution")]
    NoFeasible,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
