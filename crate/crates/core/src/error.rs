//! Error type shared across the crate.

use crate::mesh::MeshId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("field is bound to mesh {field:?}, expected mesh {mesh:?}")]
    MeshMismatch { mesh: MeshId, field: MeshId },

    #[error("field length {len} does not match mesh node count {nodes}")]
    FieldLength { len: usize, nodes: usize },

    #[error("field contains a non-finite value at node {node}")]
    NonFiniteField { node: usize },

    #[error("point #{index} ({x}, {y}) lies outside the meshed domain")]
    OutsideDomain { index: usize, x: f64, y: f64 },

    #[error("diffusivity must be strictly positive; node {node} has value {value}")]
    NonPositiveDiffusivity { node: usize, value: f64 },

    #[error("Cholesky factorization failed at row {row}: {detail}")]
    FactorizationFailed { row: usize, detail: String },

    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("eigensolver converged only {converged} of {requested} requested pairs")]
    EigenNotConverged { converged: usize, requested: usize },

    #[error("spectral range is empty: lambda_max {lambda_max} is below the fundamental eigenvalue {fundamental}")]
    EmptySpectralRange { lambda_max: f64, fundamental: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("chain aborted: {consecutive} consecutive forward-solve failures (budget {budget})")]
    PersistentSolveFailure { consecutive: usize, budget: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
