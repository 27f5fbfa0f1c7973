//! Simulation of a resonantly driven quantum harmonic emitter and its
//! fluorescence field.
//!
//! The model couples a driving mode `a` to an emitter mode `b` and a
//! fluorescence mode `c` through a passive three-mode interaction. A single
//! measurement window of length `Δt` acts as the mode-mixing unitary whose
//! amplitude map is known in closed form, so Gaussian drive states propagate
//! exactly. Joint quadrature measurements on the emitter and its fluorescence
//! then probe the drive's quantum noise matrix relative to a coherent state,
//! giving a statistical null test of classicality.
//!
//! Module layout:
//!
//! * [`states`] — drive-state descriptions, quadrature moments, P-distribution
//!   moments, purity and squeezing indicators.
//! * [`dynamics`] — closed-form transfer amplitudes, the full 3×3 mode unitary,
//!   its symplectic lift and Gaussian propagation.
//! * [`measurement`] — joint outcome densities, emitter–fluorescence
//!   covariances, counting statistics, g²(0) and Mandel Q.
//! * [`nulltest`] — reconstruction of the drive covariance from measured
//!   correlations and the classicality verdict.
//! * [`sampler`] — deterministic Monte Carlo simulation of the measurement
//!   campaign.
//! * [`oracle`] — brute-force truncated Fock-space evolution used as ground
//!   truth for the closed forms.
//! * [`physrates`] — physical coupling-rate formulas for dipole, matter-wave
//!   and mass-quadrupole emitters.

pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod nulltest;
pub mod oracle;
pub mod physrates;
pub mod sampler;
pub mod states;

pub use error::{Error, Result};
