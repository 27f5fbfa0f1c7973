//! Error type shared across the library.

use thiserror::Error;

/// Failure modes of the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input state violates the Heisenberg bound or another physicality
    /// constraint.
    #[error("nonphysical state: {0}")]
    NonPhysical(String),

    /// A plain argument error (negative time, bad truncation order, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mode transform handed to the symplectic lift is not unitary.
    #[error("mode transform is not unitary (max defect {0:.3e})")]
    NotUnitary(f64),

    /// The coupling prefactor vanishes, so the joint measurement carries no
    /// information about the drive (θ near a multiple of π).
    #[error("degenerate coupling: |F| = {0:.3e}, reconstruction is blind here")]
    DegenerateCoupling(f64),

    /// g²(0) is undefined for a drive with (numerically) zero photons.
    #[error("mean photon number {0:.3e} too small for second-order coherence")]
    ZeroMeanPhotonNumber(f64),

    /// Closed-form counting distributions exist only for coherent and thermal
    /// drives; other drives go through the Fock oracle.
    #[error("no closed-form count distribution for this drive")]
    UnsupportedDrive,

    /// The drive has no proper (non-negative) P-distribution to sample from.
    #[error("drive has an improper P-distribution; classical mixture sampling undefined")]
    ImproperP,

    /// Covariance estimation needs at least two shots.
    #[error("need at least 2 shots per configuration, got {0}")]
    InsufficientShots(usize),

    /// Population in a mode's top retained Fock level exceeds the tolerance.
    #[error("Fock truncation tail {population:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationTail { population: f64, tolerance: f64 },

    /// Per-mode truncation above the hard memory guard.
    #[error("Fock dimension {0} exceeds the guard (2 ..= 32)")]
    DimensionGuard(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
