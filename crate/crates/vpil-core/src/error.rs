//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VpilError {
    /// Grid construction rejected the requested geometry.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A parameter violated its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A field sample was NaN or infinite where finiteness is required.
    #[error("{context}: non-finite value encountered")]
    NonFinite { context: &'static str },

    /// Radial data does not decay at the outer boundary, so the free-space
    /// potential reconstruction would be unreliable.
    #[error("radial data not negligible at r_max: |f| = {value:.3e} exceeds threshold {threshold:.3e}")]
    TailNotNegligible { value: f64, threshold: f64 },

    /// The all-pairs convolution is only for small validation grids.
    #[error("direct summation refused: {points} points per axis exceeds the cap of {max}")]
    DirectSumTooLarge { points: usize, max: usize },

    /// A linear solve finished with a residual above tolerance.
    #[error("potential solve residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    /// An explicit step was asked to run past its stability bound.
    #[error("time step {dt:.6e} violates the {constraint} stability bound {bound:.6e}")]
    CflViolation {
        dt: f64,
        bound: f64,
        constraint: &'static str,
    },

    /// A running simulation hit a state it refuses to continue from; partial
    /// output up to this step is still valid.
    #[error("run aborted at step {step}: {reason}")]
    Abort { step: u64, reason: String },

    /// Configuration file syntax or schema problem.
    #[error("config: {0}")]
    Config(String),

    /// Snapshot file malformed or inconsistent with its header.
    #[error("snapshot: {0}")]
    Snapshot(String),

    /// A diagnostic received data it cannot interpret.
    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VpilError>;
