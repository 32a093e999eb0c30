use thiserror::Error;

use crate::instance::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("infeasible instance: only {reachable} colors reachable from the start vertex, target is {target}")]
    Infeasible { reachable: usize, target: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("brute-force size guard exceeded: {sequences} candidate sequences (limit {limit})")]
    SizeGuard { sequences: u128, limit: u128 },

    #[error("symbolic expansion guard exceeded: {0}")]
    ExpansionGuard(String),

    #[error("solution recovery failed: {0}")]
    RecoveryFailed(String),

    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),
}
