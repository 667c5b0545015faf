//! Load-achieving pilot sequence design for multi-cell massive MIMO networks.
//!
//! The crate covers the full pipeline from network configuration to pilot
//! books and SINR predictions:
//!
//! - [`netmodel`]: network configuration, user indexing, pilot books,
//!   SINR targets and power vectors.
//! - [`majorization`]: effective bandwidths, majorization tests,
//!   T-transform chains and orthogonal Schur-Horn factors.
//! - [`design_gwbe`]: the per-cell GWBE construction, target inflation to
//!   the load-region boundary, and the matching downlink power rule.
//! - [`design_baseline`]: WBE tight-frame and finite-orthogonal-set (FOS)
//!   baseline pilot designs.
//! - [`sinr_engine`]: closed-form finite-antenna and asymptotic SINR, and a
//!   Monte-Carlo link-level simulator that serves as an independent oracle.
//! - [`load_analysis`]: user-load bound, load-region membership, a spectral
//!   feasibility oracle for arbitrary pilot books, and the region sweeps.
//!
//! All quantities are linear (not dB). Pilot sequences are real-valued;
//! channels are complex. Everything is deterministic for a fixed seed.

pub mod design_baseline;
pub mod design_gwbe;
pub mod export;
pub mod load_analysis;
pub mod majorization;
pub mod netmodel;
pub mod sinr_engine;

pub use netmodel::{
    Antennas, DeltaVector, DesignKind, NetworkConfig, PilotBook, PowerAllocation, SinrTargets,
    UserId,
};

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing key `{0}` in config")]
    MissingKey(String),
    #[error("gain must be strictly positive ({0})")]
    NonPositiveGain(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("SINR target must be strictly positive and finite")]
    NonPositiveTarget,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("vector is not sorted in descending order")]
    NotSorted,
    #[error("tau out of range: {tau} not in 1..={k}")]
    TauOutOfRange { tau: usize, k: usize },
    #[error("majorization precondition violated")]
    MajorizationViolation,
    #[error("cell {cell}: effective-bandwidth budget {used} exceeds {budget}")]
    RegionViolation { cell: usize, used: f64, budget: f64 },
    #[error("cell {cell}: inflation would push the top effective bandwidth above 1/L")]
    MajorizationCapViolation { cell: usize },
    #[error("effective bandwidth too close to zero; construction would divide by ~0")]
    NumericalRankLoss,
    #[error("cannot build a tight frame from {n} sequences of length {tau}")]
    InfeasibleFrame { n: usize, tau: usize },
    #[error("explicit grouping leaves sequence {0} unused")]
    EmptyGroup(usize),
    #[error("downlink powers are unset")]
    UnsetPower,
    #[error("power iteration did not converge within {0} steps")]
    NonConvergence(usize),
    #[error("grid too fine: {0} points exceeds the 10^7 limit")]
    GridTooFine(usize),
    #[error("bisection bracket failure: still feasible at the upper probe {0}")]
    BracketFailure(f64),
    #[error("parse error: {0}")]
    ParseError(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
