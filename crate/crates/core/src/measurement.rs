//! Analytic measurement statistics for one window: joint quadrature outcome
//! densities, the four emitter–fluorescence covariances, fluorescent counting
//! statistics, second-order coherence and Mandel Q of the drive.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, JointGaussianState, Rates};
use crate::error::{Error, Result};
use crate::states::{self, DriveState, VACUUM_VARIANCE};

/// Mean photon numbers below this are treated as zero for g²(0).
pub const PHOTON_NUMBER_TOLERANCE: f64 = 1e-12;

/// Which quadrature a homodyne-style measurement selects on a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }

    pub fn label(self) -> char {
        match self {
            Quadrature::X => 'x',
            Quadrature::P => 'p',
        }
    }
}

/// One joint measurement configuration: a single quadrature on the emitter
/// mode `b` and a single quadrature on the fluorescence mode `c`. `x_b` and
/// `p_b` are incompatible, so each shot realizes exactly one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadConfig {
    pub emitter: Quadrature,
    pub fluorescence: Quadrature,
}

impl QuadConfig {
    pub const fn new(emitter: Quadrature, fluorescence: Quadrature) -> Self {
        QuadConfig { emitter, fluorescence }
    }

    /// The four configurations entering the covariance map, in the slot
    /// order of [`QuadratureCovariances`]: `(p,x), (p,p), (x,x), (x,p)`.
    pub const fn canonical_four() -> [QuadConfig; 4] {
        [
            QuadConfig::new(Quadrature::P, Quadrature::X),
            QuadConfig::new(Quadrature::P, Quadrature::P),
            QuadConfig::new(Quadrature::X, Quadrature::X),
            QuadConfig::new(Quadrature::X, Quadrature::P),
        ]
    }

    /// Two-letter label, emitter quadrature first: `"px"`, `"pp"`, `"xx"`, `"xp"`.
    pub fn label(&self) -> String {
        format!("{}{}", self.emitter.label(), self.fluorescence.label())
    }

    pub fn parse(s: &str) -> Result<Self> {
        let quad = |c: char| match c {
            'x' => Ok(Quadrature::X),
            'p' => Ok(Quadrature::P),
            other => Err(Error::InvalidInput(format!("unknown quadrature '{other}'"))),
        };
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "configuration label must be two of x/p, got '{s}'"
            )));
        }
        Ok(QuadConfig::new(quad(chars[0])?, quad(chars[1])?))
    }
}

/// The four measurable emitter–fluorescence covariances `Cov(ℓ_b, j_c)`,
/// laid out as the matrix `[[pb_xc, pb_pc], [xb_xc, xb_pc]]`.
///
/// All four vanish identically for a coherent drive; that is the null test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureCovariances {
    pub pb_xc: f64,
    pub pb_pc: f64,
    pub xb_xc: f64,
    pub xb_pc: f64,
}

impl QuadratureCovariances {
    pub const ZERO: QuadratureCovariances =
        QuadratureCovariances { pb_xc: 0.0, pb_pc: 0.0, xb_xc: 0.0, xb_pc: 0.0 };

    /// Slot order `[pb_xc, pb_pc, xb_xc, xb_pc]`, matching
    /// [`QuadConfig::canonical_four`].
    pub fn as_array(&self) -> [f64; 4] {
        [self.pb_xc, self.pb_pc, self.xb_xc, self.xb_pc]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        QuadratureCovariances { pb_xc: a[0], pb_pc: a[1], xb_xc: a[2], xb_pc: a[3] }
    }

    pub fn get(&self, config: QuadConfig) -> f64 {
        match (config.emitter, config.fluorescence) {
            (Quadrature::P, Quadrature::X) => self.pb_xc,
            (Quadrature::P, Quadrature::P) => self.pb_pc,
            (Quadrature::X, Quadrature::X) => self.xb_xc,
            (Quadrature::X, Quadrature::P) => self.xb_pc,
        }
    }
}

/// Fluorescent counting statistics and the drive coherence numbers they
/// derive from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingStats {
    /// ⟨n_c⟩ = G·⟨n_a⟩.
    pub mean_nc: f64,
    /// Var(n_c) = G²(g²−1)⟨n_a⟩² + G⟨n_a⟩.
    pub var_nc: f64,
    /// Cov(n_b, n_c) = (γ₀²γ_s/γ³)·sin²θ·(cosθ−1)²·(g²−1)·⟨n_a⟩².
    pub cov_nb_nc: f64,
    pub g2_drive: f64,
    pub mandel_q_drive: f64,
    /// Attenuation factor G = (γ₀γ_s/γ²)(cosθ−1)².
    pub attenuation_g: f64,
}

/// Second-order coherence data of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveCoherence {
    pub g2: f64,
    pub mandel_q: f64,
    pub mean_photons: f64,
}

/// Bivariate Gaussian over the outcomes `(outcome_b, outcome_c)` of one
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointQuadraturePdf {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl JointQuadraturePdf {
    /// Probability density at `(outcome_b, outcome_c)`.
    pub fn density(&self, outcome_b: f64, outcome_c: f64) -> f64 {
        let det = self.cov.determinant();
        let d = Vector2::new(outcome_b - self.mean.x, outcome_c - self.mean.y);
        let inv = Matrix2::new(
            self.cov[(1, 1)],
            -self.cov[(0, 1)],
            -self.cov[(1, 0)],
            self.cov[(0, 0)],
        ) / det;
        (-0.5 * d.dot(&(inv * d))).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    }
}

/// Select the `(ℓ_b, j_c)` marginal of a joint Gaussian state.
pub fn pdf_from_joint_state(state: &JointGaussianState, config: QuadConfig) -> JointQuadraturePdf {
    let ib = JointGaussianState::index(1, config.emitter.offset());
    let ic = JointGaussianState::index(2, config.fluorescence.offset());
    JointQuadraturePdf {
        mean: Vector2::new(state.mean[ib], state.mean[ic]),
        cov: Matrix2::new(
            state.cov[(ib, ib)],
            state.cov[(ib, ic)],
            state.cov[(ic, ib)],
            state.cov[(ic, ic)],
        ),
    }
}

/// Outcome density of jointly measuring `ℓ` on the emitter and `j` on the
/// fluorescence. For a coherent drive this is a product of variance-1/2
/// Gaussians centered on the transferred amplitudes.
pub fn joint_quadrature_pdf(
    drive: &DriveState,
    rates: &Rates,
    dt: f64,
    config: QuadConfig,
) -> Result<JointQuadraturePdf> {
    let state = dynamics::evolve_gaussian(drive, rates, dt)?;
    Ok(pdf_from_joint_state(&state, config))
}

/// The four covariances from the closed-form map
/// `[[pb_xc, pb_pc], [xb_xc, xb_pc]] = (F/2)·[[−Var(x)+1/2, −Cov(x,p)], [Cov(x,p), Var(p)−1/2]]`.
pub fn emitter_fluorescence_covariances(
    drive: &DriveState,
    rates: &Rates,
    dt: f64,
) -> Result<QuadratureCovariances> {
    let (_, cov) = states::drive_moments(drive)?;
    let half_f = dynamics::covariance_prefactor(rates, dt)? / 2.0;
    Ok(QuadratureCovariances {
        pb_xc: half_f * (VACUUM_VARIANCE - cov[(0, 0)]),
        pb_pc: half_f * (-cov[(0, 1)]),
        xb_xc: half_f * cov[(0, 1)],
        xb_pc: half_f * (cov[(1, 1)] - VACUUM_VARIANCE),
    })
}

/// The same four covariances read off an evolved joint state — the
/// independent route used to cross-check the closed form.
pub fn covariances_from_joint_state(state: &JointGaussianState) -> QuadratureCovariances {
    let entry = |cfg: QuadConfig| {
        let ib = JointGaussianState::index(1, cfg.emitter.offset());
        let ic = JointGaussianState::index(2, cfg.fluorescence.offset());
        state.cov[(ib, ic)]
    };
    let [c0, c1, c2, c3] = QuadConfig::canonical_four();
    QuadratureCovariances {
        pb_xc: entry(c0),
        pb_pc: entry(c1),
        xb_xc: entry(c2),
        xb_pc: entry(c3),
    }
}

/// g²(0), Mandel Q and the mean photon number of the drive, from the
/// Gaussian moment (Wick) expansion of `⟨a†²a²⟩`:
///
/// with displacement `β`, thermal-like occupation `n = ⟨δa†δa⟩` and
/// anomalous moment `m = ⟨δa δa⟩`,
/// `⟨a†²a²⟩ = |β|⁴ + 4|β|²n + 2Re(m β̄²) + |m|² + 2n²`.
pub fn g2_and_q(drive: &DriveState) -> Result<DriveCoherence> {
    let (mean, cov) = states::drive_moments(drive)?;
    let beta = states::mean_to_amplitude(&mean);
    let occupation = (cov.trace() - 1.0) / 2.0;
    let anomalous = Complex64::new(
        (cov[(0, 0)] - cov[(1, 1)]) / 2.0,
        (cov[(0, 1)] + cov[(1, 0)]) / 2.0,
    );
    // mean photons ⟨n_a⟩ = (tr V + |μ|²)/2 − 1/2
    let mean_photons = beta.norm_sqr() + occupation;
    if mean_photons <= PHOTON_NUMBER_TOLERANCE {
        return Err(Error::ZeroMeanPhotonNumber(mean_photons));
    }
    let fourth = beta.norm_sqr().powi(2)
        + 4.0 * beta.norm_sqr() * occupation
        + 2.0 * (anomalous * beta.conj() * beta.conj()).re
        + anomalous.norm_sqr()
        + 2.0 * occupation * occupation;
    let g2 = fourth / (mean_photons * mean_photons);
    Ok(DriveCoherence { g2, mandel_q: (g2 - 1.0) * mean_photons, mean_photons })
}

/// Attenuation factor G = (γ₀γ_s/γ²)(cosθ − 1)² between drive photons and
/// mean fluorescent counts.
pub fn attenuation(rates: &Rates, dt: f64) -> Result<f64> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::InvalidInput(format!("Δt must be ≥ 0, got {dt}")));
    }
    let theta = rates.theta(dt);
    let gamma = rates.gamma();
    Ok(rates.gamma0 * rates.gamma_s / (gamma * gamma) * (theta.cos() - 1.0).powi(2))
}

/// Mean, variance and emitter-count covariance of the fluorescent counts.
pub fn counting_stats(drive: &DriveState, rates: &Rates, dt: f64) -> Result<CountingStats> {
    let coherence = g2_and_q(drive)?;
    let g = attenuation(rates, dt)?;
    let n_a = coherence.mean_photons;
    let excess = coherence.g2 - 1.0;
    let gamma = rates.gamma();
    let theta = rates.theta(dt);
    let cov_nb_nc = rates.gamma0.powi(2) * rates.gamma_s / gamma.powi(3)
        * theta.sin().powi(2)
        * (theta.cos() - 1.0).powi(2)
        * excess
        * n_a
        * n_a;
    Ok(CountingStats {
        mean_nc: g * n_a,
        var_nc: g * g * excess * n_a * n_a + g * n_a,
        cov_nb_nc,
        g2_drive: coherence.g2,
        mandel_q_drive: coherence.mandel_q,
        attenuation_g: g,
    })
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Probability of `n` fluorescent counts. Closed forms exist for the two
/// drives with proper Gaussian P-functions: a coherent drive stays Poisson
/// with mean `G|α|²`, a thermal drive stays thermal with mean `G·n̄`.
/// Nonclassical drives have no convergent P-integral here and go through
/// the Fock oracle instead.
pub fn fluorescence_count_pmf(
    drive: &DriveState,
    rates: &Rates,
    dt: f64,
    n: u64,
) -> Result<f64> {
    let g = attenuation(rates, dt)?;
    match drive {
        DriveState::Coherent { alpha } => {
            let mean = g * (alpha[0] * alpha[0] + alpha[1] * alpha[1]);
            if mean == 0.0 {
                return Ok(if n == 0 { 1.0 } else { 0.0 });
            }
            Ok((n as f64 * mean.ln() - mean - ln_factorial(n)).exp())
        }
        DriveState::Thermal { n_th } => {
            if n_th.is_nan() || *n_th < 0.0 {
                return Err(Error::NonPhysical(format!("thermal occupation n_th = {n_th} < 0")));
            }
            let mean = g * n_th;
            Ok(mean.powi(n as i32) / (1.0 + mean).powi(n as i32 + 1))
        }
        _ => Err(Error::UnsupportedDrive),
    }
}
