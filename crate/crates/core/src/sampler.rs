//! Monte Carlo simulation of the measurement campaign.
//!
//! Shots are drawn from the exact output Gaussian of one window rather than
//! by accept/reject on the outcome densities, so the sampler is both exact
//! and fast; the densities themselves are validated independently through
//! their normalization property and the classical-mixture path.
//!
//! Every random number comes from a counter-based stream keyed by
//! `(seed, stream, index)` (see [`rng`]), so sample sets are bit-identical
//! across runs, thread counts and generation order.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Rates};
use crate::error::{Error, Result};
use crate::measurement::{self, QuadConfig, QuadratureCovariances};
use crate::nulltest::MeasuredCovariances;
use crate::states::{self, DriveState, VACUUM_VARIANCE};

/// Deterministic counter-based random streams.
///
/// A stream is identified by `(seed, stream)`; within a stream, sample `i`
/// is a pure function of the counter `i` (splitmix64 finalizer applied to a
/// Weyl sequence), so any subset of samples can be generated in any order.
pub mod rng {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    const STREAM_SALT: u64 = 0x5851_F42D_4C95_7F2D;

    /// splitmix64 finalizer.
    pub fn mix64(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn stream_key(seed: u64, stream: u64) -> u64 {
        mix64(seed ^ mix64(stream ^ STREAM_SALT))
    }

    /// Uniform sample in the open interval (0, 1).
    fn to_unit(bits: u64) -> f64 {
        ((bits >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// `n`-th raw word of a stream.
    pub fn word(seed: u64, stream: u64, n: u64) -> u64 {
        mix64(stream_key(seed, stream).wrapping_add(n.wrapping_mul(GOLDEN)))
    }

    /// Two standard normal samples for `(seed, stream, index)` via
    /// Box-Muller on counters `2·index` and `2·index + 1`.
    pub fn normal_pair(seed: u64, stream: u64, index: u64) -> (f64, f64) {
        let u1 = to_unit(word(seed, stream, 2 * index));
        let u2 = to_unit(word(seed, stream, 2 * index + 1));
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }
}

/// Stream id used for drawing P-distribution samples in
/// [`classical_mixture_check`]; shot streams use the configuration index,
/// so this is kept far away from small integers.
pub const MIXTURE_STREAM: u64 = 0x4D49_5854;

/// Seed used by the CLI and the shipped test plans unless overridden.
pub const DEFAULT_SEED: u64 = 1;

/// A full description of one simulated measurement campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub drive: DriveState,
    pub rates: Rates,
    pub dt: f64,
    pub shots_per_config: usize,
    pub configs: Vec<QuadConfig>,
    pub seed: u64,
}

impl ExperimentPlan {
    /// Plan measuring the four canonical configurations.
    pub fn new(drive: DriveState, rates: Rates, dt: f64, shots_per_config: usize, seed: u64) -> Self {
        ExperimentPlan {
            drive,
            rates,
            dt,
            shots_per_config,
            configs: QuadConfig::canonical_four().to_vec(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_config < 2 {
            return Err(Error::InsufficientShots(self.shots_per_config));
        }
        if self.configs.is_empty() {
            return Err(Error::InvalidInput("configuration list is empty".into()));
        }
        for (i, a) in self.configs.iter().enumerate() {
            if self.configs[i + 1..].contains(a) {
                return Err(Error::InvalidInput(format!(
                    "duplicate configuration '{}'",
                    a.label()
                )));
            }
        }
        states::drive_moments(&self.drive)?;
        if !self.dt.is_finite() || self.dt < 0.0 {
            return Err(Error::InvalidInput(format!("Δt must be ≥ 0, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Outcomes of one configuration: `outcomes[i] = [outcome_b, outcome_c]`
/// for shot `i`, drawn from stream `(seed, stream)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSamples {
    pub config: QuadConfig,
    pub stream: u64,
    pub outcomes: Vec<[f64; 2]>,
}

/// All shots of a campaign plus the plan that generated them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub plan: ExperimentPlan,
    pub per_config: Vec<ConfigSamples>,
}

impl SampleSet {
    /// Export as CSV with columns `config,shot,outcome_b,outcome_c`.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "config,shot,outcome_b,outcome_c")?;
        for samples in &self.per_config {
            let label = samples.config.label();
            for (shot, pair) in samples.outcomes.iter().enumerate() {
                writeln!(out, "{label},{shot},{},{}", pair[0], pair[1])?;
            }
        }
        Ok(())
    }
}

/// Lower-triangular Cholesky factor of a 2×2 covariance.
fn cholesky2(cov: &nalgebra::Matrix2<f64>) -> (f64, f64, f64) {
    let l11 = cov[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { cov[(0, 1)] / l11 } else { 0.0 };
    let l22 = (cov[(1, 1)] - l21 * l21).max(0.0).sqrt();
    (l11, l21, l22)
}

/// Draw every shot of the plan from the exact per-configuration outcome
/// Gaussian. Shot `i` of configuration `k` depends only on
/// `(seed, k, i)`, never on generation order.
pub fn sample_shots(plan: &ExperimentPlan) -> Result<SampleSet> {
    plan.validate()?;
    let mut per_config = Vec::with_capacity(plan.configs.len());
    for (stream, config) in plan.configs.iter().enumerate() {
        let pdf = measurement::joint_quadrature_pdf(&plan.drive, &plan.rates, plan.dt, *config)?;
        let (l11, l21, l22) = cholesky2(&pdf.cov);
        let mut outcomes = Vec::with_capacity(plan.shots_per_config);
        for shot in 0..plan.shots_per_config {
            let (z1, z2) = rng::normal_pair(plan.seed, stream as u64, shot as u64);
            outcomes.push([
                pdf.mean.x + l11 * z1,
                pdf.mean.y + l21 * z1 + l22 * z2,
            ]);
        }
        per_config.push(ConfigSamples { config: *config, stream: stream as u64, outcomes });
    }
    Ok(SampleSet { plan: plan.clone(), per_config })
}

/// Unbiased sample covariance and its large-sample standard error
/// `√((m₂₂ − cov²)/N)`, where `m₂₂` is the second sample moment of the
/// centered products.
pub fn covariance_with_stderr(pairs: &[[f64; 2]]) -> Result<(f64, f64)> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InsufficientShots(n));
    }
    let nf = n as f64;
    let (mut mean_b, mut mean_c) = (0.0, 0.0);
    for p in pairs {
        mean_b += p[0];
        mean_c += p[1];
    }
    mean_b /= nf;
    mean_c /= nf;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for p in pairs {
        let prod = (p[0] - mean_b) * (p[1] - mean_c);
        sum += prod;
        sum_sq += prod * prod;
    }
    let cov = sum / (nf - 1.0);
    let m22 = sum_sq / nf;
    Ok((cov, ((m22 - cov * cov).max(0.0) / nf).sqrt()))
}

/// Estimate the four covariances from a sample set holding all four
/// canonical configurations.
pub fn estimate_covariances(samples: &SampleSet) -> Result<MeasuredCovariances> {
    let mut values = [0.0; 4];
    let mut stderrs = [0.0; 4];
    let mut shots = usize::MAX;
    for (slot, config) in QuadConfig::canonical_four().iter().enumerate() {
        let found = samples
            .per_config
            .iter()
            .find(|c| c.config == *config)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "sample set lacks configuration '{}' needed for covariance estimation",
                    config.label()
                ))
            })?;
        let (cov, stderr) = covariance_with_stderr(&found.outcomes)?;
        values[slot] = cov;
        stderrs[slot] = stderr;
        shots = shots.min(found.outcomes.len());
    }
    Ok(MeasuredCovariances {
        values: QuadratureCovariances::from_array(values),
        stderrs: QuadratureCovariances::from_array(stderrs),
        shots_per_config: shots,
    })
}

/// One configuration's entry in a [`MixtureCheckReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureCheckEntry {
    pub config: QuadConfig,
    pub estimate: f64,
    pub closed_form: f64,
    pub stderr: f64,
    pub deviation_sigmas: f64,
}

/// Agreement report of the classical-mixture path against the closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCheckReport {
    pub per_config: Vec<MixtureCheckEntry>,
    pub max_deviation_sigmas: f64,
    pub n_alpha: usize,
    pub shots_per_component: usize,
}

/// Two-path check for drives with a proper P-function: sample `α` from the
/// P-distribution, evolve each component exactly, and compare the mixture
/// covariance of the per-component outcome means against the closed form.
///
/// Within one component the joint state is a product of coherent states, so
/// its cross-covariance is exactly zero and the mixture covariance is the
/// covariance of the component means. `shots` models how well each center
/// would be known experimentally and only widens the attached standard
/// error (by `1/2·shots` per quadrature variance).
pub fn classical_mixture_check(
    drive: &DriveState,
    rates: &Rates,
    dt: f64,
    n_alpha: usize,
    shots: usize,
    seed: u64,
) -> Result<MixtureCheckReport> {
    if n_alpha < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 P-samples, got {n_alpha}")));
    }
    if shots < 1 {
        return Err(Error::InvalidInput("shots per component must be ≥ 1".into()));
    }
    let (center, sigma) = match drive {
        DriveState::Coherent { alpha } => (num_complex::Complex64::new(alpha[0], alpha[1]), 0.0),
        DriveState::Thermal { n_th } => {
            if n_th.is_nan() || *n_th < 0.0 {
                return Err(Error::NonPhysical(format!("thermal occupation n_th = {n_th} < 0")));
            }
            (num_complex::Complex64::ZERO, (n_th / 2.0).sqrt())
        }
        _ => return Err(Error::ImproperP),
    };

    let amps = dynamics::transfer_amplitudes(rates, dt)?;
    let closed = measurement::emitter_fluorescence_covariances(drive, rates, dt)?;
    let configs = QuadConfig::canonical_four();

    let mut centers: [Vec<[f64; 2]>; 4] = std::array::from_fn(|_| Vec::with_capacity(n_alpha));
    for k in 0..n_alpha {
        let (z_re, z_im) = rng::normal_pair(seed, MIXTURE_STREAM, k as u64);
        let alpha = center + num_complex::Complex64::new(sigma * z_re, sigma * z_im);
        let mean = dynamics::propagated_mean(&amps, alpha);
        for (slot, config) in configs.iter().enumerate() {
            let ib = 2 + if config.emitter == measurement::Quadrature::X { 0 } else { 1 };
            let ic = 4 + if config.fluorescence == measurement::Quadrature::X { 0 } else { 1 };
            centers[slot].push([mean[ib], mean[ic]]);
        }
    }

    let shot_noise = VACUUM_VARIANCE / shots as f64;
    let mut per_config = Vec::with_capacity(4);
    let mut max_dev: f64 = 0.0;
    for (slot, config) in configs.iter().enumerate() {
        let pairs = &centers[slot];
        let nf = n_alpha as f64;
        let (mut mean_b, mut mean_c) = (0.0, 0.0);
        for p in pairs {
            mean_b += p[0];
            mean_c += p[1];
        }
        mean_b /= nf;
        mean_c /= nf;
        let (mut var_b, mut var_c, mut cov) = (0.0, 0.0, 0.0);
        for p in pairs {
            let (db, dc) = (p[0] - mean_b, p[1] - mean_c);
            var_b += db * db;
            var_c += dc * dc;
            cov += db * dc;
        }
        var_b /= nf - 1.0;
        var_c /= nf - 1.0;
        cov /= nf - 1.0;

        let var_b_eff = var_b + shot_noise;
        let var_c_eff = var_c + shot_noise;
        let stderr = ((var_b_eff * var_c_eff + cov * cov) / nf).sqrt();
        let target = closed.get(*config);
        let deviation = if stderr > 0.0 {
            (cov - target).abs() / stderr
        } else if cov == target {
            0.0
        } else {
            f64::INFINITY
        };
        max_dev = max_dev.max(deviation);
        per_config.push(MixtureCheckEntry {
            config: *config,
            estimate: cov,
            closed_form: target,
            stderr,
            deviation_sigmas: deviation,
        });
    }

    Ok(MixtureCheckReport {
        per_config,
        max_deviation_sigmas: max_dev,
        n_alpha,
        shots_per_component: shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn rates_half() -> Rates {
        Rates::new(0.5, 0.5).unwrap()
    }

    fn quarter_dt() -> f64 {
        rates_half().dt_for_theta(std::f64::consts::FRAC_PI_2).unwrap()
    }

    #[test]
    fn plan_validation() {
        let mut plan = ExperimentPlan::new(
            DriveState::thermal(1.0),
            rates_half(),
            quarter_dt(),
            100,
            1,
        );
        assert!(plan.validate().is_ok());

        plan.shots_per_config = 1;
        assert!(matches!(plan.validate(), Err(Error::InsufficientShots(1))));
        plan.shots_per_config = 2;

        plan.configs = vec![];
        assert!(plan.validate().is_err());
        plan.configs = vec![QuadConfig::canonical_four()[0]; 2];
        assert!(plan.validate().is_err());
    }

    #[test]
    fn minimal_plan_produces_two_pairs_per_config() {
        let plan =
            ExperimentPlan::new(DriveState::thermal(0.5), rates_half(), quarter_dt(), 2, 7);
        let set = sample_shots(&plan).unwrap();
        assert_eq!(set.per_config.len(), 4);
        for c in &set.per_config {
            assert_eq!(c.outcomes.len(), 2);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_order_independent() {
        let plan = ExperimentPlan::new(
            DriveState::coherent(Complex64::new(0.4, -0.8)),
            rates_half(),
            quarter_dt(),
            64,
            123,
        );
        let a = sample_shots(&plan).unwrap();
        let b = sample_shots(&plan).unwrap();
        assert_eq!(a, b, "re-running the same plan must be bit-identical");

        // Chunked generation (as a parallel scheduler would do) assembles
        // to the same arrays because each shot only depends on its index.
        let pdf =
            measurement::joint_quadrature_pdf(&plan.drive, &plan.rates, plan.dt, plan.configs[0])
                .unwrap();
        let (l11, l21, l22) = super::cholesky2(&pdf.cov);
        let mut chunked = vec![[0.0; 2]; 64];
        for shot in (0..64).rev() {
            let (z1, z2) = rng::normal_pair(123, 0, shot as u64);
            chunked[shot] =
                [pdf.mean.x + l11 * z1, pdf.mean.y + l21 * z1 + l22 * z2];
        }
        assert_eq!(chunked, a.per_config[0].outcomes);
    }

    #[test]
    fn different_seeds_differ() {
        let mut plan =
            ExperimentPlan::new(DriveState::thermal(1.0), rates_half(), quarter_dt(), 16, 1);
        let a = sample_shots(&plan).unwrap();
        plan.seed = 2;
        let b = sample_shots(&plan).unwrap();
        assert_ne!(a.per_config[0].outcomes, b.per_config[0].outcomes);
    }

    #[test]
    fn vacuum_drive_sample_means_are_small() {
        // 5σ bound on the sample mean of 10⁵ variance-1/2 outcomes.
        let shots = 100_000;
        let plan = ExperimentPlan::new(
            DriveState::coherent(Complex64::ZERO),
            rates_half(),
            quarter_dt(),
            shots,
            1,
        );
        let set = sample_shots(&plan).unwrap();
        let bound = 5.0 * (0.5f64).sqrt() / (shots as f64).sqrt();
        for c in &set.per_config {
            let mean_b: f64 = c.outcomes.iter().map(|p| p[0]).sum::<f64>() / shots as f64;
            let mean_c: f64 = c.outcomes.iter().map(|p| p[1]).sum::<f64>() / shots as f64;
            assert!(mean_b.abs() < bound, "{} mean_b = {mean_b}", c.config.label());
            assert!(mean_c.abs() < bound, "{} mean_c = {mean_c}", c.config.label());
        }
    }

    #[test]
    fn constant_samples_give_zero_covariance_and_stderr() {
        let (cov, stderr) = covariance_with_stderr(&[[1.25, -0.5]; 10]).unwrap();
        assert_eq!(cov, 0.0);
        assert_eq!(stderr, 0.0);
        assert!(matches!(
            covariance_with_stderr(&[[0.0, 0.0]]),
            Err(Error::InsufficientShots(1))
        ));
    }

    #[test]
    fn estimate_requires_all_four_configs() {
        let mut plan =
            ExperimentPlan::new(DriveState::thermal(1.0), rates_half(), quarter_dt(), 16, 1);
        plan.configs.truncate(3);
        let set = sample_shots(&plan).unwrap();
        assert!(matches!(estimate_covariances(&set), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn csv_export_shape() {
        let plan =
            ExperimentPlan::new(DriveState::thermal(1.0), rates_half(), quarter_dt(), 3, 9);
        let set = sample_shots(&plan).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "config,shot,outcome_b,outcome_c");
        assert_eq!(lines.len(), 1 + 4 * 3);
        assert!(lines[1].starts_with("px,0,"));
    }

    #[test]
    fn mixture_check_coherent_is_exact() {
        let report = classical_mixture_check(
            &DriveState::coherent(Complex64::new(1.5, 0.5)),
            &rates_half(),
            quarter_dt(),
            100,
            10,
            42,
        )
        .unwrap();
        assert_eq!(report.max_deviation_sigmas, 0.0);
        for entry in &report.per_config {
            assert_eq!(entry.estimate, 0.0);
            assert_eq!(entry.closed_form, 0.0);
        }
    }

    #[test]
    fn mixture_check_thermal_agrees() {
        let report = classical_mixture_check(
            &DriveState::thermal(0.5),
            &rates_half(),
            quarter_dt(),
            10_000,
            100,
            1,
        )
        .unwrap();
        assert!(
            report.max_deviation_sigmas < 4.0,
            "two-path deviation {} σ",
            report.max_deviation_sigmas
        );
    }

    #[test]
    fn mixture_check_rejects_improper_p() {
        assert!(matches!(
            classical_mixture_check(
                &DriveState::squeezed_thermal(0.0, 0.5, 0.0, Complex64::ZERO),
                &rates_half(),
                quarter_dt(),
                100,
                10,
                1,
            ),
            Err(Error::ImproperP)
        ));
    }

    #[test]
    fn normal_pair_moments_sane() {
        // Quick sanity on the Box-Muller stream: mean ≈ 0, variance ≈ 1.
        let n = 200_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for i in 0..n {
            let (a, b) = rng::normal_pair(7, 3, i);
            sum += a + b;
            sum_sq += a * a + b * b;
        }
        let mean = sum / (2 * n) as f64;
        let var = sum_sq / (2 * n) as f64 - mean * mean;
        assert!(mean.abs() < 5.0 / ((2 * n) as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }
}
