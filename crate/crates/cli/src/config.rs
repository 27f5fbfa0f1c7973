//! Run configuration: a single JSON file describing the drive, the rates,
//! the window, and the sampling / oracle / output settings.

use std::path::Path;

use fluosim::dynamics::Rates;
use fluosim::measurement::QuadConfig;
use fluosim::sampler::DEFAULT_SEED;
use fluosim::states::DriveState;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub drive: DriveState,
    pub rates: RatesSection,
    pub time: TimeSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub nulltest: NulltestSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub gamma0: f64,
    pub gamma_s: f64,
}

/// Exactly one of `dt` / `theta` must be present (θ = √(Δt·γ) is the natural
/// sweep parameter, Δt the physical one).
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_configs")]
    pub configs: Vec<String>,
}

fn default_shots() -> usize {
    1_000_000
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_configs() -> Vec<String> {
    QuadConfig::canonical_four().iter().map(|c| c.label()).collect()
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { shots: default_shots(), seed: default_seed(), configs: default_configs() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_dim() -> usize {
    12
}

fn default_tail_tol() -> f64 {
    1e-10
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { dim: default_dim(), tail_tol: default_tail_tol() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Option<OutputFormat>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NulltestSection {
    #[serde(default = "default_z_threshold")]
    pub z_threshold: f64,
}

fn default_z_threshold() -> f64 {
    fluosim::nulltest::DEFAULT_Z_THRESHOLD
}

impl Default for NulltestSection {
    fn default() -> Self {
        NulltestSection { z_threshold: default_z_threshold() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!(
                "config '{}': {e} (line {}, column {})",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn rates(&self) -> Result<Rates, CliError> {
        Rates::new(self.rates.gamma0, self.rates.gamma_s)
            .map_err(|e| CliError::Config(format!("rates: {e}")))
    }

    /// Resolve the window length, honoring `--theta` / `--dt` overrides.
    pub fn resolve_dt(
        &self,
        rates: &Rates,
        theta_override: Option<f64>,
        dt_override: Option<f64>,
    ) -> Result<f64, CliError> {
        let (dt, theta) = match (dt_override, theta_override) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("pass only one of --dt / --theta".into()))
            }
            (Some(dt), None) => (Some(dt), None),
            (None, Some(theta)) => (None, Some(theta)),
            (None, None) => (self.time.dt, self.time.theta),
        };
        match (dt, theta) {
            (Some(dt), None) => {
                if !dt.is_finite() || dt < 0.0 {
                    return Err(CliError::Config(format!("time.dt must be ≥ 0, got {dt}")));
                }
                Ok(dt)
            }
            (None, Some(theta)) => rates
                .dt_for_theta(theta)
                .map_err(|e| CliError::Config(format!("time.theta: {e}"))),
            (None, None) => Err(CliError::Config("time: set exactly one of dt / theta".into())),
            (Some(_), Some(_)) => {
                Err(CliError::Config("time: set exactly one of dt / theta, not both".into()))
            }
        }
    }

    pub fn quad_configs(&self) -> Result<Vec<QuadConfig>, CliError> {
        self.sampling
            .configs
            .iter()
            .map(|label| {
                QuadConfig::parse(label)
                    .map_err(|e| CliError::Config(format!("sampling.configs: {e}")))
            })
            .collect()
    }
}
