use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("control and target both refer to qubit {0}")]
    ControlIsTarget(usize),

    #[error("{kind} expects {expected} angle(s), got {got}")]
    AngleCount {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("parameter slot {slot} out of range for {n_params} parameters")]
    SlotOutOfRange { slot: usize, n_params: usize },

    #[error("input slot {slot} out of range for {n_inputs} inputs")]
    InputOutOfRange { slot: usize, n_inputs: usize },

    #[error("circuit still has unbound input slots")]
    UnboundInput,

    #[error("{0} gates cannot carry trainable parameter slots")]
    NonDifferentiable(&'static str),

    #[error("qubit count {0} outside supported range 1..=12")]
    QubitCount(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("label must be 0 or 1, got {0}")]
    Label(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            row,
            msg: msg.into(),
        }
    }

    /// Input and usage problems as opposed to numerical breakdowns.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::NoConvergence { .. })
    }
}
