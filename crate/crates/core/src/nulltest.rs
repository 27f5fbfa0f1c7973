//! Inversion of the covariance map: reconstruct the drive's quantum noise
//! matrix from measured emitter–fluorescence covariances, attach
//! uncertainties, and render a classicality verdict.
//!
//! The estimator conventions here (z-scores against zero, inverse-variance
//! weighting of the two redundant `Cov(x,p)` estimates, first-order
//! perturbation for the eigenvalue uncertainty) are implementation choices;
//! the physics input is only the linear map between measured covariances and
//! drive noise entries.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Rates, PREFACTOR_FLOOR};
use crate::error::{Error, Result};
use crate::measurement::QuadratureCovariances;
use crate::states::VACUUM_VARIANCE;

/// Discovery-convention default for the coherence z-test.
pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;

/// Verdict margins use this many combined standard errors around the vacuum
/// variance, conservative against boundary roundoff.
pub const VERDICT_MARGIN_SIGMAS: f64 = 3.0;

/// Measured covariances with their standard errors, slot layout shared with
/// [`QuadratureCovariances`] (the stderr struct reuses the same field names;
/// entries are standard errors, not covariances).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCovariances {
    pub values: QuadratureCovariances,
    pub stderrs: QuadratureCovariances,
    pub shots_per_config: usize,
}

impl MeasuredCovariances {
    /// Wrap analytically known covariances (zero standard errors).
    pub fn exact(values: QuadratureCovariances) -> Self {
        MeasuredCovariances { values, stderrs: QuadratureCovariances::ZERO, shots_per_config: 0 }
    }

    fn validate(&self) -> Result<()> {
        for (v, s) in self.values.as_array().iter().zip(self.stderrs.as_array()) {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite covariance {v}")));
            }
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidInput(format!("standard errors must be ≥ 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Reconstructed drive covariance with per-entry standard errors and the
/// redundant `Cov(x,p)` estimates the map provides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveReconstruction {
    /// Row-major 2×2 `[[Var x, Cov], [Cov, Var p]]`.
    pub cov: [[f64; 2]; 2],
    /// Standard errors of the entries, same layout.
    pub stderr: [[f64; 2]; 2],
    /// `Cov(x,p)` estimated from the `(x_b, x_c)` configuration.
    pub cov_xp_from_xx: f64,
    /// `Cov(x,p)` estimated from the `(p_b, p_c)` configuration.
    pub cov_xp_from_pp: f64,
    /// Disagreement of the two estimates in combined standard errors.
    pub xp_discrepancy_sigmas: f64,
    /// Coupling prefactor `F` used for the inversion.
    pub prefactor: f64,
}

/// Classicality verdict of the null test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithCoherent,
    Nonclassical,
    ClassicalNoncoherent,
    Inconclusive,
}

/// Full output of the null test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullTestReport {
    pub reconstruction: DriveReconstruction,
    /// `1/√det(2V̂)` of the reconstructed covariance; `None` when the noisy
    /// estimate has a non-positive determinant.
    pub purity: Option<f64>,
    /// Signed `value/stderr` per configuration, slot order
    /// `[pb_xc, pb_pc, xb_xc, xb_pc]`.
    pub z_scores: [f64; 4],
    pub z_threshold: f64,
    pub min_eigenvalue: f64,
    pub min_eigenvalue_stderr: f64,
    pub verdict: Verdict,
}

fn ratio_or_limit(num: f64, denom: f64) -> f64 {
    if denom > 0.0 {
        num / denom
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY * num.signum()
    }
}

/// Invert the covariance map:
/// `Var(x) = 1/2 − 2·pb_xc/F`, `Var(p) = 1/2 + 2·xb_pc/F`,
/// `Cov(x,p) = 2·xb_xc/F = −2·pb_pc/F` (both estimates reported, combined by
/// inverse-variance weight). Standard errors scale by `2/|F|`.
pub fn reconstruct_drive_covariance(
    measured: &MeasuredCovariances,
    rates: &Rates,
    dt: f64,
) -> Result<DriveReconstruction> {
    measured.validate()?;
    let prefactor = dynamics::covariance_prefactor(rates, dt)?;
    if prefactor.abs() < PREFACTOR_FLOOR {
        return Err(Error::DegenerateCoupling(prefactor.abs()));
    }
    let scale = 2.0 / prefactor;
    let abs_scale = scale.abs();
    let v = &measured.values;
    let s = &measured.stderrs;

    let var_x = VACUUM_VARIANCE - scale * v.pb_xc;
    let var_p = VACUUM_VARIANCE + scale * v.xb_pc;
    let var_x_err = abs_scale * s.pb_xc;
    let var_p_err = abs_scale * s.xb_pc;

    let cov_from_xx = scale * v.xb_xc;
    let cov_from_pp = -scale * v.pb_pc;
    let err_from_xx = abs_scale * s.xb_xc;
    let err_from_pp = abs_scale * s.pb_pc;

    let (cov_xp, cov_xp_err) = match (err_from_xx > 0.0, err_from_pp > 0.0) {
        (true, true) => {
            let (w1, w2) = (err_from_xx.powi(-2), err_from_pp.powi(-2));
            ((w1 * cov_from_xx + w2 * cov_from_pp) / (w1 + w2), (w1 + w2).sqrt().recip())
        }
        (false, true) => (cov_from_xx, 0.0),
        (true, false) => (cov_from_pp, 0.0),
        (false, false) => (0.5 * (cov_from_xx + cov_from_pp), 0.0),
    };
    let xp_discrepancy_sigmas = ratio_or_limit(
        (cov_from_xx - cov_from_pp).abs(),
        (err_from_xx.powi(2) + err_from_pp.powi(2)).sqrt(),
    );

    Ok(DriveReconstruction {
        cov: [[var_x, cov_xp], [cov_xp, var_p]],
        stderr: [[var_x_err, cov_xp_err], [cov_xp_err, var_p_err]],
        cov_xp_from_xx: cov_from_xx,
        cov_xp_from_pp: cov_from_pp,
        xp_discrepancy_sigmas,
        prefactor,
    })
}

/// Smallest eigenvalue of the reconstructed covariance and its standard
/// error from first-order perturbation: `dλ = v₁²·dV₁₁ + 2v₁v₂·dV₁₂ + v₂²·dV₂₂`
/// with `v` the unit eigenvector.
fn min_eigenvalue_with_stderr(rec: &DriveReconstruction) -> (f64, f64) {
    let (a, b, c) = (rec.cov[0][0], rec.cov[1][1], rec.cov[0][1]);
    let half_trace = 0.5 * (a + b);
    let disc = (0.25 * (a - b).powi(2) + c * c).max(0.0).sqrt();
    let lambda = half_trace - disc;

    // Eigenvector for λ: pick the better-conditioned of the two rows.
    let (mut v1, mut v2) = if (a - lambda).abs() > (b - lambda).abs() {
        (c, lambda - a)
    } else {
        (lambda - b, c)
    };
    let norm = (v1 * v1 + v2 * v2).sqrt();
    if norm < 1e-300 {
        // Degenerate (diagonal with equal entries): eigenvector is any basis
        // direction.
        (v1, v2) = if a <= b { (1.0, 0.0) } else { (0.0, 1.0) };
    } else {
        v1 /= norm;
        v2 /= norm;
    }
    let (sa, sb, sc) = (rec.stderr[0][0], rec.stderr[1][1], rec.stderr[0][1]);
    let var = v1.powi(4) * sa * sa
        + 4.0 * v1 * v1 * v2 * v2 * sc * sc
        + v2.powi(4) * sb * sb;
    (lambda, var.sqrt())
}

/// Run the classicality null test at the given z threshold.
///
/// All four measured covariances are z-tested against zero: if every `|z|`
/// stays below the threshold the data are consistent with a coherent drive.
/// Otherwise the drive covariance is reconstructed and its smallest
/// eigenvalue compared against the vacuum variance with a
/// [`VERDICT_MARGIN_SIGMAS`]-wide margin.
pub fn null_test(
    measured: &MeasuredCovariances,
    rates: &Rates,
    dt: f64,
    z_threshold: f64,
) -> Result<NullTestReport> {
    if !z_threshold.is_finite() || z_threshold <= 0.0 {
        return Err(Error::InvalidInput(format!("z threshold must be > 0, got {z_threshold}")));
    }
    let reconstruction = reconstruct_drive_covariance(measured, rates, dt)?;

    let values = measured.values.as_array();
    let stderrs = measured.stderrs.as_array();
    let mut z_scores = [0.0; 4];
    for i in 0..4 {
        z_scores[i] = ratio_or_limit(values[i], stderrs[i]);
    }

    let (min_eigenvalue, min_eigenvalue_stderr) = min_eigenvalue_with_stderr(&reconstruction);

    let verdict = if z_scores.iter().all(|z| z.abs() < z_threshold) {
        Verdict::ConsistentWithCoherent
    } else {
        let margin = VERDICT_MARGIN_SIGMAS * min_eigenvalue_stderr;
        if min_eigenvalue < VACUUM_VARIANCE - margin {
            Verdict::Nonclassical
        } else if min_eigenvalue > VACUUM_VARIANCE + margin {
            Verdict::ClassicalNoncoherent
        } else {
            Verdict::Inconclusive
        }
    };

    let det = reconstruction.cov[0][0] * reconstruction.cov[1][1]
        - reconstruction.cov[0][1] * reconstruction.cov[1][0];
    let purity = if det > 0.0 { Some(1.0 / (4.0 * det).sqrt()) } else { None };

    Ok(NullTestReport {
        reconstruction,
        purity,
        z_scores,
        z_threshold,
        min_eigenvalue,
        min_eigenvalue_stderr,
        verdict,
    })
}
