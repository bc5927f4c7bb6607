//! Numerical toolkit for the partial-contractivity hierarchy of qubit maps
//! and the matching hierarchy of entangled states.
//!
//! A trace-preserving, hermiticity-preserving map is *k-partially
//! contractive* when `id ⊗ Φ` contracts the trace norm on every subspace
//! `B(H) ⊗ M` with `M` spanned by `k` linearly independent density
//! operators. Level 1 is the positive trace-preserving maps, level `d²` the
//! completely positive ones, and the levels in between grade "how positive"
//! a map is. This crate implements:
//!
//! * dense complex operator algebra, norms, and seeded sampling
//!   ([`operator`]);
//! * superoperator/Choi representations and the named map families used
//!   throughout ([`maps`]);
//! * positivity, k-positivity, Schwarz, and Kadison checks
//!   ([`positivity`]);
//! * contraction searches, canonicalization of density-operator triples,
//!   the covariant level-3 certification route, and hierarchy scans
//!   ([`contractivity`]);
//! * Schmidt-rank machinery, isotropic states, and entanglement
//!   classification against a bank of certified maps ([`entanglement`]);
//! * replayable JSON certificates, CSV sweeps, and the CLI plumbing
//!   ([`report`]).
//!
//! Every randomized search takes an explicit seed and produces byte-stable
//! results across runs and thread counts.

pub mod contractivity;
pub mod entanglement;
pub mod maps;
pub mod operator;
pub mod positivity;
pub mod report;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),
    #[error("map is not trace-preserving: {0}")]
    NotTracePreserving(String),
    #[error("map is not unital: {0}")]
    NotUnital(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("replay mismatch: {0}")]
    Replay(String),
}

pub type Result<T> = std::result::Result<T, Error>;
