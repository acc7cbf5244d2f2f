//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("n*r must be even to pair half-edges (n={n}, r={r})")]
    OddPairingSum { n: usize, r: usize },

    #[error("degree r={r} out of range for n={n} nodes (need 3 <= r < n)")]
    InvalidDegree { n: usize, r: usize },

    #[error("no simple connected graph found after {restarts} pairing restarts")]
    GenerationFailed { restarts: usize },

    #[error("node index {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid edge ({u}, {v}): {reason}")]
    InvalidEdge { u: usize, v: usize, reason: &'static str },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("edge list line {line}: {msg}")]
    EdgeListFormat { line: usize, msg: String },

    #[error("node {0} is isolated; normalized Laplacian undefined")]
    IsolatedNode(usize),

    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },

    #[error("eigensolver failed to converge")]
    ConvergenceFailure,

    #[error("requested {need} eigenpairs but only {have} available")]
    InsufficientEigenpairs { need: usize, have: usize },

    #[error("diffusion time must be positive, got {0}")]
    InvalidTime(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distance {d} outside tabulated range [0, {d_max}]")]
    DistanceOutOfRange { d: usize, d_max: usize },

    #[error("anchor points are affinely dependent (sigma_min={sigma_min:.3e})")]
    AffineDependence { sigma_min: f64 },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("matrix is not orthogonal (deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error("eigenspace group index {index} out of range ({groups} groups)")]
    InvalidGroup { index: usize, groups: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
