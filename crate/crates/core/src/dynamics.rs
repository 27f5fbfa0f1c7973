//! Closed-form three-mode evolution over one measurement window.
//!
//! A window of length `Δt` mixes the drive mode `a`, the emitter mode `b`
//! and the fluorescence mode `c` through a passive unitary whose only
//! parameter is the angle `θ = √(Δt·γ)` with `γ = γ₀ + γ_s`. The amplitude
//! map is diagonalized by the rate-weighted normal modes
//! `f₊ = (√γ₀ a + √γ_s c)/√γ` and `f₋ = (√γ_s a − √γ₀ c)/√γ`: the `(f₊, b)`
//! pair undergoes a beamsplitter rotation by `θ` while `f₋` is a spectator.

use nalgebra::{Matrix2, Matrix3, Matrix6, Vector2, Vector6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{self, DriveState, VACUUM_VARIANCE};

/// Reconstruction is declared blind when the coupling prefactor falls below
/// this magnitude (θ at a multiple of π).
pub const PREFACTOR_FLOOR: f64 = 1e-9;

/// Coupling rates of the model, in inverse time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Drive–emitter coupling rate γ₀ (> 0).
    pub gamma0: f64,
    /// Emitter–fluorescence coupling rate γ_s (> 0).
    pub gamma_s: f64,
}

impl Rates {
    /// Both rates must be strictly positive: at γ₀ = 0 or γ_s = 0 the
    /// prefactor vanishes identically and the null-test pipeline is
    /// undefined. (The Fock oracle accepts zero rates separately.)
    pub fn new(gamma0: f64, gamma_s: f64) -> Result<Self> {
        if !gamma0.is_finite() || gamma0 <= 0.0 {
            return Err(Error::InvalidInput(format!("gamma0 must be > 0, got {gamma0}")));
        }
        if !gamma_s.is_finite() || gamma_s <= 0.0 {
            return Err(Error::InvalidInput(format!("gamma_s must be > 0, got {gamma_s}")));
        }
        Ok(Rates { gamma0, gamma_s })
    }

    /// Total rate γ = γ₀ + γ_s.
    pub fn gamma(&self) -> f64 {
        self.gamma0 + self.gamma_s
    }

    /// Mixing angle θ = √(Δt·γ).
    pub fn theta(&self, dt: f64) -> f64 {
        (dt * self.gamma()).sqrt()
    }

    /// Window length giving a requested mixing angle: Δt = θ²/γ.
    pub fn dt_for_theta(&self, theta: f64) -> Result<f64> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::InvalidInput(format!("theta must be ≥ 0, got {theta}")));
        }
        Ok(theta * theta / self.gamma())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::InvalidInput(format!("Δt must be ≥ 0, got {dt}")));
    }
    Ok(())
}

/// Coherent-amplitude scale factors for the three modes after one window.
///
/// A drive prepared in `|α⟩` ends in the product state
/// `|A_drive·α⟩_a ⊗ |A_emitter·α⟩_b ⊗ |A_fluorescence·α⟩_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferAmplitudes {
    pub drive: Complex64,
    pub emitter: Complex64,
    pub fluorescence: Complex64,
    /// Mixing angle θ = √(Δt·γ).
    pub theta: f64,
}

impl TransferAmplitudes {
    /// `|A_a|² + |A_b|² + |A_c|²`; equals 1 because the map is passive.
    pub fn norm_sum(&self) -> f64 {
        self.drive.norm_sqr() + self.emitter.norm_sqr() + self.fluorescence.norm_sqr()
    }
}

/// Amplitude scale factors of the three modes:
/// `A_a = (γ₀cosθ + γ_s)/γ`, `A_b = −i√(γ₀/γ)sinθ`,
/// `A_c = (√(γ₀γ_s)/γ)(cosθ − 1)`.
pub fn transfer_amplitudes(rates: &Rates, dt: f64) -> Result<TransferAmplitudes> {
    check_dt(dt)?;
    let gamma = rates.gamma();
    let theta = rates.theta(dt);
    let (sin, cos) = theta.sin_cos();
    Ok(TransferAmplitudes {
        drive: Complex64::new((rates.gamma0 * cos + rates.gamma_s) / gamma, 0.0),
        emitter: Complex64::new(0.0, -(rates.gamma0 / gamma).sqrt() * sin),
        fluorescence: Complex64::new(
            (rates.gamma0 * rates.gamma_s).sqrt() / gamma * (cos - 1.0),
            0.0,
        ),
        theta,
    })
}

/// Partial sums of the nested-commutator (Hadamard's lemma) series behind
/// the closed-form amplitudes.
///
/// The even series (drive and fluorescence coefficients) include terms
/// `k = 1 ..= k_max`, the odd series (emitter) terms `k = 0 ..= k_max`,
/// so all three are complete through order `θ^(2k_max+1)`. The truncation
/// error of each sum is bounded by the magnitude of its first omitted term
/// (alternating series with eventually decreasing terms):
/// `θ^(2k_max+2)/(2k_max+2)!` for the even series and
/// `θ^(2k_max+3)/(2k_max+3)!` for the odd one.
pub fn hadamard_partial_sums(
    rates: &Rates,
    dt: f64,
    k_max: usize,
) -> Result<(Complex64, Complex64, Complex64)> {
    check_dt(dt)?;
    if k_max < 1 {
        return Err(Error::InvalidInput(format!("k_max must be ≥ 1, got {k_max}")));
    }
    let gamma = rates.gamma();
    let theta = rates.theta(dt);
    let theta_sq = theta * theta;

    // term_even(k) = (−1)^k θ^{2k}/(2k)!, term_odd(k) = (−1)^k θ^{2k+1}/(2k+1)!
    let mut even_sum = 0.0; // Σ_{k=1..k_max} term_even(k)
    let mut odd_sum = theta; // Σ_{k=0..k_max} term_odd(k), seeded with k = 0
    let mut even_term = 1.0;
    let mut odd_term = theta;
    for k in 1..=k_max {
        let two_k = (2 * k) as f64;
        even_term *= -theta_sq / (two_k * (two_k - 1.0));
        even_sum += even_term;
        odd_term *= -theta_sq / ((two_k + 1.0) * two_k);
        odd_sum += odd_term;
    }

    let drive = Complex64::new(rates.gamma0 / gamma * even_sum + 1.0, 0.0);
    let emitter = Complex64::new(0.0, -(rates.gamma0 / gamma).sqrt() * odd_sum);
    let fluorescence =
        Complex64::new((rates.gamma0 * rates.gamma_s).sqrt() / gamma * even_sum, 0.0);
    Ok((drive, emitter, fluorescence))
}

/// Unitary mapping `(a, b, c)` onto the normal-mode basis `(f₊, b, f₋)`.
pub fn normal_mode_basis(rates: &Rates) -> Matrix3<Complex64> {
    let gamma = rates.gamma();
    let c0 = (rates.gamma0 / gamma).sqrt();
    let cs = (rates.gamma_s / gamma).sqrt();
    let re = |x: f64| Complex64::new(x, 0.0);
    Matrix3::new(
        re(c0),
        re(0.0),
        re(cs),
        re(0.0),
        re(1.0),
        re(0.0),
        re(cs),
        re(0.0),
        re(-c0),
    )
}

/// Full 3×3 mode unitary of one window, ordered basis `(a, b, c)`.
///
/// Symmetric, unitary, and its first row reproduces [`transfer_amplitudes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    pub matrix: Matrix3<Complex64>,
    pub theta: f64,
}

impl ModeTransform {
    /// `‖M M† − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.matrix * self.matrix.adjoint();
        let mut defect: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::ZERO };
                defect = defect.max((prod[(i, j)] - target).norm());
            }
        }
        defect
    }

    /// First row, as transfer amplitudes.
    pub fn amplitudes(&self) -> TransferAmplitudes {
        TransferAmplitudes {
            drive: self.matrix[(0, 0)],
            emitter: self.matrix[(0, 1)],
            fluorescence: self.matrix[(0, 2)],
            theta: self.theta,
        }
    }
}

/// Mode unitary from the explicit entry formulas.
pub fn mode_transform(rates: &Rates, dt: f64) -> Result<ModeTransform> {
    check_dt(dt)?;
    let gamma = rates.gamma();
    let theta = rates.theta(dt);
    let (sin, cos) = theta.sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);

    let m_ab = im(-(rates.gamma0 / gamma).sqrt() * sin);
    let m_bc = im(-(rates.gamma_s / gamma).sqrt() * sin);
    let m_ac = re((rates.gamma0 * rates.gamma_s).sqrt() / gamma * (cos - 1.0));
    let matrix = Matrix3::new(
        re((rates.gamma0 * cos + rates.gamma_s) / gamma),
        m_ab,
        m_ac,
        m_ab,
        re(cos),
        m_bc,
        m_ac,
        m_bc,
        re((rates.gamma_s * cos + rates.gamma0) / gamma),
    );
    Ok(ModeTransform { matrix, theta })
}

/// Same unitary assembled as `T† R(θ) T`: rotate the `(f₊, b)` pair, leave
/// `f₋` alone, and transform back. Independent derivation used to
/// cross-check [`mode_transform`].
pub fn mode_transform_via_normal_modes(rates: &Rates, dt: f64) -> Result<ModeTransform> {
    check_dt(dt)?;
    let theta = rates.theta(dt);
    let (sin, cos) = theta.sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    let rotation = Matrix3::new(
        re(cos),
        im(-sin),
        re(0.0),
        im(-sin),
        re(cos),
        re(0.0),
        re(0.0),
        re(0.0),
        re(1.0),
    );
    let t = normal_mode_basis(rates);
    Ok(ModeTransform { matrix: t.adjoint() * rotation * t, theta })
}

/// Real 6×6 quadrature map of a mode unitary, ordering
/// `(x_a, p_a, x_b, p_b, x_c, p_c)`.
///
/// Each complex entry `u + iv` becomes the block `[[u, −v], [v, u]]`, the
/// unique choice for which propagating a coherent mean reproduces the
/// amplitude map. Passive ⇒ the matrix is orthogonal as well as symplectic.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    pub matrix: Matrix6<f64>,
    pub theta: f64,
}

/// The 6×6 symplectic form Ω = ⊕³ [[0, 1], [−1, 0]].
pub fn omega6() -> Matrix6<f64> {
    let mut omega = Matrix6::zeros();
    for m in 0..3 {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

impl SymplecticTransform {
    /// `‖S Ω Sᵀ − Ω‖_max`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = omega6();
        (self.matrix * omega * self.matrix.transpose() - omega).abs().max()
    }

    /// `‖S Sᵀ − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.matrix * self.matrix.transpose() - Matrix6::identity()).abs().max()
    }
}

/// Lift a mode unitary to its quadrature representation.
pub fn symplectic_transform(transform: &ModeTransform) -> Result<SymplecticTransform> {
    let defect = transform.unitarity_defect();
    if defect > 1e-12 {
        return Err(Error::NotUnitary(defect));
    }
    let mut s = Matrix6::zeros();
    for row in 0..3 {
        for col in 0..3 {
            let entry = transform.matrix[(row, col)];
            s[(2 * row, 2 * col)] = entry.re;
            s[(2 * row, 2 * col + 1)] = -entry.im;
            s[(2 * row + 1, 2 * col)] = entry.im;
            s[(2 * row + 1, 2 * col + 1)] = entry.re;
        }
    }
    Ok(SymplecticTransform { matrix: s, theta: transform.theta })
}

/// Gaussian state of the three modes: 6-vector of quadrature means and
/// symmetric 6×6 covariance, ordering `(x_a, p_a, x_b, p_b, x_c, p_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussianState {
    pub mean: Vector6<f64>,
    pub cov: Matrix6<f64>,
}

impl JointGaussianState {
    /// Smallest eigenvalue of the Hermitian matrix `cov + (i/2)Ω`; physical
    /// states give ≥ 0 up to roundoff.
    pub fn physicality_margin(&self) -> f64 {
        // Hermitian H = A + iB with A = cov (symmetric), B = Ω/2
        // (antisymmetric) has the same spectrum as the real symmetric
        // embedding [[A, −B], [B, A]].
        let b = omega6() * 0.5;
        let mut embed = nalgebra::DMatrix::<f64>::zeros(12, 12);
        for i in 0..6 {
            for j in 0..6 {
                embed[(i, j)] = self.cov[(i, j)];
                embed[(i + 6, j + 6)] = self.cov[(i, j)];
                embed[(i, j + 6)] = -b[(i, j)];
                embed[(i + 6, j)] = b[(i, j)];
            }
        }
        let eigen = embed.symmetric_eigenvalues();
        eigen.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self) -> bool {
        self.physicality_margin() >= -crate::states::PHYSICALITY_TOLERANCE
    }

    /// Quadrature index of `(mode, quadrature)` with modes `0 = a`, `1 = b`,
    /// `2 = c` and quadratures `0 = x`, `1 = p`.
    pub fn index(mode: usize, quadrature: usize) -> usize {
        2 * mode + quadrature
    }
}

/// Propagate a Gaussian drive (emitter and fluorescence start in vacuum)
/// through one window: `mean → S·mean`, `cov → S·cov·Sᵀ`.
pub fn evolve_gaussian(drive: &DriveState, rates: &Rates, dt: f64) -> Result<JointGaussianState> {
    let (drive_mean, drive_cov) = states::drive_moments(drive)?;
    let s = symplectic_transform(&mode_transform(rates, dt)?)?;

    let mut mean = Vector6::zeros();
    mean[0] = drive_mean.x;
    mean[1] = drive_mean.y;

    let mut cov = Matrix6::identity() * VACUUM_VARIANCE;
    for i in 0..2 {
        for j in 0..2 {
            cov[(i, j)] = drive_cov[(i, j)];
        }
    }

    Ok(JointGaussianState { mean: s.matrix * mean, cov: s.matrix * cov * s.matrix.transpose() })
}

/// Coupling prefactor of the covariance map:
/// `F = (2γ₀√γ_s/(√γ·γ)) · sinθ · (cosθ − 1)`.
///
/// Every emitter–fluorescence covariance is `F/2` times a drive-noise
/// entry, so `F = 0` (θ at a multiple of π) is a measurement blind spot.
pub fn covariance_prefactor(rates: &Rates, dt: f64) -> Result<f64> {
    check_dt(dt)?;
    let gamma = rates.gamma();
    let theta = rates.theta(dt);
    let (sin, cos) = theta.sin_cos();
    Ok(2.0 * rates.gamma0 * rates.gamma_s.sqrt() / (gamma.sqrt() * gamma) * sin * (cos - 1.0))
}

/// Fifth-order short-time expansion of [`covariance_prefactor`]:
/// `F ≈ −γ₀√γ_s·[Δt^{3/2} − (γ/4)·Δt^{5/2}]`, first omitted term O(Δt^{7/2}).
pub fn covariance_prefactor_short_time(rates: &Rates, dt: f64) -> Result<f64> {
    check_dt(dt)?;
    Ok(-rates.gamma0
        * rates.gamma_s.sqrt()
        * (dt.powf(1.5) - dt.powf(2.5) * rates.gamma() / 4.0))
}

/// Quadrature mean of the drive propagated to the given (mode, quadrature)
/// slot: used by the sampler's mixture path where each P-sample stays an
/// exact coherent product state.
pub fn propagated_amplitudes(
    amps: &TransferAmplitudes,
    alpha: Complex64,
) -> [Complex64; 3] {
    [amps.drive * alpha, amps.emitter * alpha, amps.fluorescence * alpha]
}

/// Mean vector of the product coherent state reached from `|α⟩`.
pub fn propagated_mean(amps: &TransferAmplitudes, alpha: Complex64) -> Vector6<f64> {
    let betas = propagated_amplitudes(amps, alpha);
    let mut mean = Vector6::zeros();
    for (mode, beta) in betas.iter().enumerate() {
        let m = states::amplitude_to_mean(*beta);
        mean[2 * mode] = m.x;
        mean[2 * mode + 1] = m.y;
    }
    mean
}

/// Drive-block covariance of a joint state (top-left 2×2).
pub fn drive_block(state: &JointGaussianState) -> (Vector2<f64>, Matrix2<f64>) {
    (
        Vector2::new(state.mean[0], state.mean[1]),
        Matrix2::new(state.cov[(0, 0)], state.cov[(0, 1)], state.cov[(1, 0)], state.cov[(1, 1)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn rates_half() -> Rates {
        Rates::new(0.5, 0.5).unwrap()
    }

    fn dt_for(rates: &Rates, theta: f64) -> f64 {
        rates.dt_for_theta(theta).unwrap()
    }

    #[test]
    fn rates_reject_degenerate_couplings() {
        assert!(Rates::new(0.0, 0.5).is_err());
        assert!(Rates::new(0.5, 0.0).is_err());
        assert!(Rates::new(-1.0, 1.0).is_err());
        assert!(Rates::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn amplitudes_at_zero_time() {
        let a = transfer_amplitudes(&rates_half(), 0.0).unwrap();
        assert_eq!(a.drive, Complex64::new(1.0, 0.0));
        assert_eq!(a.emitter, Complex64::ZERO);
        assert_eq!(a.fluorescence, Complex64::ZERO);
    }

    #[test]
    fn amplitudes_at_quarter_and_half_period() {
        let r = rates_half();
        let a = transfer_amplitudes(&r, dt_for(&r, std::f64::consts::FRAC_PI_2)).unwrap();
        assert!((a.drive.re - 0.5).abs() < TOL);
        assert!((a.emitter - Complex64::new(0.0, -0.5f64.sqrt())).norm() < TOL);
        assert!((a.fluorescence.re + 0.5).abs() < TOL);

        let b = transfer_amplitudes(&r, dt_for(&r, std::f64::consts::PI)).unwrap();
        assert!(b.drive.norm() < TOL);
        assert!(b.emitter.norm() < TOL);
        assert!((b.fluorescence.re + 1.0).abs() < TOL, "complete transfer to fluorescence");
    }

    #[test]
    fn amplitudes_reject_negative_time() {
        assert!(matches!(
            transfer_amplitudes(&rates_half(), -1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn hadamard_series_converges_to_closed_form() {
        let r = rates_half();
        let dt = dt_for(&r, std::f64::consts::FRAC_PI_2);
        let (d, e, f) = hadamard_partial_sums(&r, dt, 30).unwrap();
        let a = transfer_amplitudes(&r, dt).unwrap();
        assert!((d - a.drive).norm() < TOL);
        assert!((e - a.emitter).norm() < TOL);
        assert!((f - a.fluorescence).norm() < TOL);
    }

    #[test]
    fn hadamard_series_trivial_and_invalid() {
        let r = rates_half();
        let (d, e, f) = hadamard_partial_sums(&r, 0.0, 1).unwrap();
        assert_eq!(d, Complex64::new(1.0, 0.0));
        assert_eq!(e, Complex64::ZERO);
        assert_eq!(f, Complex64::ZERO);
        assert!(hadamard_partial_sums(&r, 1.0, 0).is_err());
    }

    #[test]
    fn hadamard_series_alternating_remainder_bound() {
        let r = Rates::new(0.8, 0.3).unwrap();
        for &theta in &[0.7, 2.0, std::f64::consts::PI, 5.0] {
            let dt = dt_for(&r, theta);
            let exact = transfer_amplitudes(&r, dt).unwrap();
            for k in 4..12usize {
                let (d, e, f) = hadamard_partial_sums(&r, dt, k).unwrap();
                let next_even: f64 = theta.powi(2 * k as i32 + 2)
                    / (1..=(2 * k + 2)).map(|i| i as f64).product::<f64>();
                let next_odd: f64 = theta.powi(2 * k as i32 + 3)
                    / (1..=(2 * k + 3)).map(|i| i as f64).product::<f64>();
                assert!((d - exact.drive).norm() <= next_even + 1e-15);
                assert!((f - exact.fluorescence).norm() <= next_even + 1e-15);
                assert!((e - exact.emitter).norm() <= next_odd + 1e-15);
            }
        }
    }

    #[test]
    fn normal_modes_equal_rates() {
        let t = normal_mode_basis(&rates_half());
        let s = 0.5f64.sqrt();
        assert!((t[(0, 0)].re - s).abs() < TOL);
        assert!((t[(0, 2)].re - s).abs() < TOL);
        assert!((t[(2, 0)].re - s).abs() < TOL);
        assert!((t[(2, 2)].re + s).abs() < TOL);
    }

    #[test]
    fn normal_modes_unitary_and_drive_dominated_limit() {
        let r = Rates::new(3.2, 0.7).unwrap();
        let t = normal_mode_basis(&r);
        let prod = t * t.adjoint();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - Complex64::new(target, 0.0)).norm() < TOL);
            }
        }

        // γ₀ ≫ γ_s: f₊ → a, f₋ → −c up to O(√(γ_s/γ₀)).
        let skew = Rates::new(1.0, 1e-8).unwrap();
        let t = normal_mode_basis(&skew);
        assert!((t[(0, 0)].re - 1.0).abs() < 1e-7);
        assert!((t[(2, 2)].re + 1.0).abs() < 1e-7);
    }

    #[test]
    fn mode_transform_identity_at_zero_time() {
        let m = mode_transform(&rates_half(), 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((m.matrix[(i, j)] - Complex64::new(target, 0.0)).norm() < TOL);
            }
        }
    }

    #[test]
    fn mode_transform_row_a_and_emitter_block() {
        let r = rates_half();
        let m = mode_transform(&r, dt_for(&r, std::f64::consts::FRAC_PI_2)).unwrap();
        let a = m.amplitudes();
        let direct = transfer_amplitudes(&r, dt_for(&r, std::f64::consts::FRAC_PI_2)).unwrap();
        assert!((a.drive - direct.drive).norm() < TOL);
        assert!((a.emitter - direct.emitter).norm() < TOL);
        assert!((a.fluorescence - direct.fluorescence).norm() < TOL);

        assert!(m.matrix[(1, 1)].norm() < TOL);
        assert!((m.matrix[(1, 2)] - Complex64::new(0.0, -0.5f64.sqrt())).norm() < TOL);
        assert!((m.matrix[(2, 2)] - Complex64::new(0.5, 0.0)).norm() < TOL);
        assert!(m.unitarity_defect() < TOL);
    }

    #[test]
    fn mode_transform_matches_normal_mode_composition() {
        let cases = [(0.5, 0.5, 1.3), (2.0, 0.1, 0.4), (0.05, 4.0, 2.9)];
        for (g0, gs, theta) in cases {
            let r = Rates::new(g0, gs).unwrap();
            let dt = dt_for(&r, theta);
            let direct = mode_transform(&r, dt).unwrap();
            let composed = mode_transform_via_normal_modes(&r, dt).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((direct.matrix[(i, j)] - composed.matrix[(i, j)]).norm() < TOL);
                }
            }
        }
    }

    #[test]
    fn symplectic_identity_and_mean_propagation() {
        let r = rates_half();
        let s = symplectic_transform(&mode_transform(&r, 0.0).unwrap()).unwrap();
        assert!((s.matrix - Matrix6::identity()).abs().max() < TOL);

        let dt = dt_for(&r, std::f64::consts::FRAC_PI_2);
        let s = symplectic_transform(&mode_transform(&r, dt).unwrap()).unwrap();
        let mut mean = Vector6::zeros();
        mean[0] = std::f64::consts::SQRT_2; // Coherent(1)
        let out = s.matrix * mean;
        assert!(out[2].abs() < TOL, "x_b vanishes for a real drive amplitude");
        assert!((out[3] + 1.0).abs() < TOL, "p_b = −√2·|A_b| = −1");
    }

    #[test]
    fn symplectic_rejects_non_unitary_input() {
        let mut m = mode_transform(&rates_half(), 1.0).unwrap();
        m.matrix[(0, 0)] += Complex64::new(0.1, 0.0);
        assert!(matches!(symplectic_transform(&m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn evolve_gaussian_coherent_stays_vacuum_noise() {
        let r = Rates::new(1.1, 0.4).unwrap();
        let state = evolve_gaussian(
            &DriveState::coherent(Complex64::new(0.7, -0.2)),
            &r,
            0.8,
        )
        .unwrap();
        assert!((state.cov - Matrix6::identity() * 0.5).abs().max() < 1e-14);
        assert!(state.is_physical());
    }

    #[test]
    fn evolve_gaussian_zero_time_appends_vacua() {
        let state = evolve_gaussian(&DriveState::thermal(1.0), &rates_half(), 0.0).unwrap();
        let mut expected = Matrix6::identity() * 0.5;
        expected[(0, 0)] = 1.5;
        expected[(1, 1)] = 1.5;
        assert!((state.cov - expected).abs().max() < TOL);
        assert_eq!(state.mean, Vector6::zeros());
    }

    #[test]
    fn prefactor_reference_points() {
        let r = rates_half();
        assert_eq!(covariance_prefactor(&r, 0.0).unwrap(), 0.0);
        let quarter = covariance_prefactor(&r, dt_for(&r, std::f64::consts::FRAC_PI_2)).unwrap();
        assert!((quarter + 0.5f64.sqrt()).abs() < TOL);
        let blind = covariance_prefactor(&r, dt_for(&r, std::f64::consts::PI)).unwrap();
        assert!(blind.abs() < 1e-12, "θ = π is a blind spot");
    }

    #[test]
    fn short_time_prefactor_tracks_exact() {
        let r = rates_half();
        assert_eq!(covariance_prefactor_short_time(&r, 0.0).unwrap(), 0.0);
        let dt = 0.01 / r.gamma();
        let exact = covariance_prefactor(&r, dt).unwrap();
        let approx = covariance_prefactor_short_time(&r, dt).unwrap();
        assert!(((exact - approx) / exact).abs() < 1e-4);
    }

    #[test]
    fn periodicity_in_theta() {
        let r = Rates::new(0.9, 0.25).unwrap();
        let theta = 1.234;
        let m1 = mode_transform(&r, dt_for(&r, theta)).unwrap();
        let m2 = mode_transform(&r, dt_for(&r, theta + 2.0 * std::f64::consts::PI)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((m1.matrix[(i, j)] - m2.matrix[(i, j)]).norm() < 1e-12);
            }
        }
    }
}
