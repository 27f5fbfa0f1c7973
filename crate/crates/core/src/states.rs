//! Drive-state representations and their Gaussian moments.
//!
//! Quadrature convention used throughout the crate: `x = (a + a†)/√2`,
//! `p = (a − a†)/(i√2)`, `ħ = 1`, so a coherent state has variance 1/2 in
//! both quadratures and mean `(√2 Re α, √2 Im α)`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variance of each quadrature in the vacuum / coherent state.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Slack on the Heisenberg bound `det(cov) ≥ 1/4`: reconstructions from
/// noisy data land arbitrarily close to the boundary, so roundoff must not
/// reject them.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

/// Margin below 1/2 before a quadrature variance counts as squeezed, so the
/// vacuum itself is never flagged through roundoff.
pub const SQUEEZING_TOLERANCE: f64 = 1e-9;

/// Quadrature mean vector of a coherent amplitude.
pub fn amplitude_to_mean(alpha: Complex64) -> Vector2<f64> {
    Vector2::new(std::f64::consts::SQRT_2 * alpha.re, std::f64::consts::SQRT_2 * alpha.im)
}

/// Inverse of [`amplitude_to_mean`].
pub fn mean_to_amplitude(mean: &Vector2<f64>) -> Complex64 {
    Complex64::new(mean.x / std::f64::consts::SQRT_2, mean.y / std::f64::consts::SQRT_2)
}

/// Description of the driving field's quantum state.
///
/// Every variant reduces to a Gaussian mean vector and 2×2 covariance matrix
/// through [`drive_moments`]. The serialized form is the canonical textual
/// representation used by CLI configs, e.g.
/// `{"type":"squeezed_thermal","n_th":0,"r":0.5,"phi":0,"delta":[0,0]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DriveState {
    /// Coherent state with complex amplitude `alpha = [re, im]`.
    Coherent { alpha: [f64; 2] },
    /// Thermal state with mean occupation `n_th ≥ 0`.
    Thermal { n_th: f64 },
    /// Displaced squeezed thermal state: occupation `n_th ≥ 0`, squeezing
    /// magnitude `r`, squeezing angle `phi` (radians), displacement
    /// `delta = [re, im]`.
    SqueezedThermal { n_th: f64, r: f64, phi: f64, delta: [f64; 2] },
    /// Raw Gaussian moments: quadrature mean `(x̄, p̄)` and symmetric 2×2
    /// covariance, row-major.
    GaussianMoments { mean: [f64; 2], cov: [[f64; 2]; 2] },
}

impl DriveState {
    pub fn coherent(alpha: Complex64) -> Self {
        DriveState::Coherent { alpha: [alpha.re, alpha.im] }
    }

    pub fn thermal(n_th: f64) -> Self {
        DriveState::Thermal { n_th }
    }

    pub fn squeezed_thermal(n_th: f64, r: f64, phi: f64, delta: Complex64) -> Self {
        DriveState::SqueezedThermal { n_th, r, phi, delta: [delta.re, delta.im] }
    }

    pub fn gaussian(mean: Vector2<f64>, cov: Matrix2<f64>) -> Self {
        DriveState::GaussianMoments {
            mean: [mean.x, mean.y],
            cov: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        }
    }
}

/// Second central moments of `Re α` and `Im α` under the Glauber-Sudarshan
/// P-distribution. Negative entries are legitimate and flag nonclassicality
/// (improper P).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PMoments {
    pub var_re: f64,
    pub var_im: f64,
    pub cov_re_im: f64,
}

impl PMoments {
    /// Forward map back to the quadrature covariance matrix
    /// (`Var x = 2 Var(Re α) + 1/2`, and so on).
    pub fn to_drive_covariance(&self) -> Matrix2<f64> {
        Matrix2::new(
            2.0 * self.var_re + VACUUM_VARIANCE,
            2.0 * self.cov_re_im,
            2.0 * self.cov_re_im,
            2.0 * self.var_im + VACUUM_VARIANCE,
        )
    }
}

/// Squeezing / purity summary of a drive covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalityIndicators {
    /// Smallest eigenvalue of the covariance matrix.
    pub min_quadrature_variance: f64,
    /// True when the smallest variance dips below the vacuum level.
    pub squeezed: bool,
    pub purity: f64,
}

fn check_finite(value: f64, name: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {value}")))
    }
}

/// Covariance matrix of a (possibly squeezed) thermal state:
/// `((2n̄+1)/2) · [[cosh2r − cosφ sinh2r, −sinφ sinh2r], [−sinφ sinh2r, cosh2r + cosφ sinh2r]]`.
pub fn gaussian_covariance(n_th: f64, r: f64, phi: f64) -> Result<Matrix2<f64>> {
    if n_th.is_nan() || n_th < 0.0 {
        return Err(Error::NonPhysical(format!("thermal occupation n_th = {n_th} < 0")));
    }
    check_finite(r, "squeezing magnitude r")?;
    check_finite(phi, "squeezing angle phi")?;
    let scale = (2.0 * n_th + 1.0) / 2.0;
    let ch = (2.0 * r).cosh();
    let sh = (2.0 * r).sinh();
    Ok(Matrix2::new(
        scale * (ch - phi.cos() * sh),
        scale * (-phi.sin() * sh),
        scale * (-phi.sin() * sh),
        scale * (ch + phi.cos() * sh),
    ))
}

/// Checks `cov + (i/2)Ω ⪰ 0`, which for a 2×2 symmetric matrix reduces to
/// `det ≥ 1/4` (with positive trace).
pub fn validate_covariance(cov: &Matrix2<f64>) -> Result<()> {
    let asym = (cov[(0, 1)] - cov[(1, 0)]).abs();
    if asym > 1e-12 {
        return Err(Error::NonPhysical(format!("covariance not symmetric (defect {asym:.3e})")));
    }
    let det = cov.determinant();
    if det < 0.25 - PHYSICALITY_TOLERANCE || cov.trace() <= 0.0 {
        return Err(Error::NonPhysical(format!(
            "covariance violates det ≥ 1/4 (det = {det:.6e})"
        )));
    }
    Ok(())
}

/// Reduce any drive description to its Gaussian quadrature moments.
pub fn drive_moments(drive: &DriveState) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let (mean, cov) = match drive {
        DriveState::Coherent { alpha } => {
            let alpha = Complex64::new(alpha[0], alpha[1]);
            (amplitude_to_mean(alpha), Matrix2::identity() * VACUUM_VARIANCE)
        }
        DriveState::Thermal { n_th } => {
            if n_th.is_nan() || *n_th < 0.0 {
                return Err(Error::NonPhysical(format!("thermal occupation n_th = {n_th} < 0")));
            }
            (Vector2::zeros(), Matrix2::identity() * (n_th + VACUUM_VARIANCE))
        }
        DriveState::SqueezedThermal { n_th, r, phi, delta } => {
            let delta = Complex64::new(delta[0], delta[1]);
            (amplitude_to_mean(delta), gaussian_covariance(*n_th, *r, *phi)?)
        }
        DriveState::GaussianMoments { mean, cov } => (
            Vector2::new(mean[0], mean[1]),
            Matrix2::new(cov[0][0], cov[0][1], cov[1][0], cov[1][1]),
        ),
    };
    validate_covariance(&cov)?;
    Ok((mean, cov))
}

/// Invert the drive covariance into P-distribution moments:
/// `Var(Re α) = (Var x − 1/2)/2`, `Var(Im α) = (Var p − 1/2)/2`,
/// `Cov(Re, Im) = Cov(x, p)/2`. Negative outputs flag nonclassicality.
pub fn p_moments_from_cov(cov: &Matrix2<f64>) -> PMoments {
    PMoments {
        var_re: (cov[(0, 0)] - VACUUM_VARIANCE) / 2.0,
        var_im: (cov[(1, 1)] - VACUUM_VARIANCE) / 2.0,
        cov_re_im: cov[(0, 1)] / 2.0,
    }
}

/// Purity `1/√det(2 cov)` of the Gaussian state with this covariance.
pub fn purity(cov: &Matrix2<f64>) -> Result<f64> {
    validate_covariance(cov)?;
    Ok(1.0 / (2.0 * cov).determinant().sqrt())
}

/// Smallest quadrature variance, squeezing flag and purity.
pub fn classicality_indicators(cov: &Matrix2<f64>) -> Result<ClassicalityIndicators> {
    let p = purity(cov)?;
    let min_var = min_eigenvalue_2x2(cov);
    Ok(ClassicalityIndicators {
        min_quadrature_variance: min_var,
        squeezed: min_var < VACUUM_VARIANCE - SQUEEZING_TOLERANCE,
        purity: p,
    })
}

/// Smaller eigenvalue of a symmetric 2×2 matrix, in closed form.
pub fn min_eigenvalue_2x2(m: &Matrix2<f64>) -> f64 {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let disc = (0.25 * (m[(0, 0)] - m[(1, 1)]).powi(2) + m[(0, 1)] * m[(1, 0)]).max(0.0);
    half_trace - disc.sqrt()
}
