use std::path::PathBuf;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::NetworkParams;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The inner solution handed to the Jacobian is not a stationary point of
    /// its least-squares problem.
    #[error("inner solve is not stationary: gradient norm {residual:e} exceeds {limit:e}")]
    NotStationary { residual: f64, limit: f64 },

    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        /// Parameters at the end of the last epoch with finite costs.
        last_finite: Box<NetworkParams>,
    },

    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },

    #[error("row {row}, column `{column}`: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("no data rows")]
    NoData,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
