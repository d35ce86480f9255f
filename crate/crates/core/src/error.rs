//! Error type shared by every module. Each error records the module and
//! operation it originated from so batch runs can report where they failed.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum ErrorKind {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cell {cell} is degenerate (zero volume)")]
    DegenerateCell { cell: usize },
    #[error("mesh is disconnected ({components} components)")]
    DisconnectedMesh { components: usize },
    #[error("facet shared by {count} cells")]
    NonManifold { count: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("material matrix of cell {cell} is not symmetric positive definite")]
    NotSpd { cell: usize },
    #[error("Cholesky factorization failed at dof {dof} (pivot {pivot:e})")]
    Cholesky { dof: usize, pivot: f64 },
    #[error(
        "no spectral gap: largest kernel eigenvalue {largest_kernel:e}, smallest retained {smallest_retained:e}"
    )]
    SpectralGap {
        largest_kernel: f64,
        smallest_retained: f64,
    },
    #[error("kernel dimension {found} does not match expected {expected}")]
    KernelMismatch { expected: usize, found: usize },
    #[error("harmonic dimension changed across levels: {0:?}")]
    UnstableHarmonicDim(Vec<usize>),
    #[error("harmonic basis required (expected dimension {0}) but not supplied")]
    HarmonicBasisRequired(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug)]
pub struct Error {
    pub module: &'static str,
    pub op: &'static str,
    pub kind: ErrorKind,
}

impl Error {
    pub fn new(module: &'static str, op: &'static str, kind: impl Into<ErrorKind>) -> Self {
        Self {
            module,
            op,
            kind: kind.into(),
        }
    }

    pub fn invalid(module: &'static str, op: &'static str, msg: impl Into<String>) -> Self {
        Self::new(module, op, ErrorKind::InvalidInput(msg.into()))
    }

    /// Exit code used by the batch runner: 4 for configuration or mesh
    /// problems, 3 for failures inside a computation.
    pub fn exit_code(&self) -> i32 {
        match (&self.kind, self.module) {
            (ErrorKind::Config(_), _)
            | (ErrorKind::Parse { .. }, _)
            | (ErrorKind::Io(_), _)
            | (ErrorKind::Json(_), _)
            | (ErrorKind::NotSpd { .. }, _)
            | (ErrorKind::DimensionMismatch { .. }, _) => 4,
            (_, "mesh") | (_, "cli") => 4,
            _ => 3,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}: {}", self.module, self.op, self.kind)
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        self.kind.source()
    }
}
