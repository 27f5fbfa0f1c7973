//! `fluosim` — experiment runner for the emitter-fluorescence model.
//!
//! Subcommands: `evolve | covariance | nulltest | counting | sample |
//! oracle-check | rates`. Every command is deterministic given its config
//! (seeds included); records carry a `schema_version` field and serialize
//! with sorted keys so identical runs emit identical bytes.
//!
//! Exit codes: 0 success, 2 config error, 3 physics/domain error.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use fluosim::dynamics::{self, Rates};
use fluosim::measurement;
use fluosim::nulltest;
use fluosim::oracle::{self, FockConfig};
use fluosim::physrates;
use fluosim::sampler::{self, ExperimentPlan};
use fluosim::states::DriveState;

use config::{OutputFormat, RunConfig};
use output::SCHEMA_VERSION;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Physics(fluosim::Error),
}

impl From<fluosim::Error> for CliError {
    fn from(e: fluosim::Error) -> Self {
        CliError::Physics(e)
    }
}

#[derive(Parser)]
#[command(
    name = "fluosim",
    version,
    about = "Driven-emitter resonance fluorescence: dynamics, measurement statistics and classicality null tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer amplitudes and the joint Gaussian state after one window.
    Evolve(RunArgs),
    /// Analytic emitter-fluorescence covariances (the null-test observables).
    Covariance(RunArgs),
    /// Sample shots, estimate covariances, reconstruct the drive noise and
    /// render a classicality verdict.
    Nulltest(RunArgs),
    /// Fluorescent counting statistics, g²(0) and Mandel Q of the drive.
    Counting(RunArgs),
    /// Export per-shot samples (CSV by default).
    Sample(RunArgs),
    /// Brute-force Fock-space comparison against the closed forms.
    OracleCheck(RunArgs),
    /// Physical coupling-rate formulas (dipole, matterwave, quadrupole).
    Rates(RatesCommand),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write the record here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (overrides the config).
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Mixing angle θ = √(Δt·γ) (overrides the config's time section).
    #[arg(long)]
    theta: Option<f64>,
    /// Window length Δt (overrides the config's time section).
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
struct RatesCommand {
    #[command(subcommand)]
    kind: RatesKind,
}

#[derive(Subcommand)]
enum RatesKind {
    /// Dipole emission scaling ω³d²/(ε₀ħc³) (order of magnitude).
    Dipole {
        /// Angular frequency in rad/s (or ordinary frequency with --hz).
        #[arg(long)]
        omega: f64,
        /// Transition dipole moment in C·m.
        #[arg(long)]
        dipole_moment: f64,
        /// Interpret frequencies as ordinary frequencies in Hz.
        #[arg(long)]
        hz: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Matter-wave emission rate √(πΩ⁴/(2ω₀Δ))·e^(−2Δ/ω₀).
    Matterwave {
        /// Optical coupling rate Ω in rad/s (or Hz with --hz).
        #[arg(long)]
        rabi: f64,
        /// Trap frequency ω₀ in rad/s (or Hz with --hz).
        #[arg(long)]
        omega0: f64,
        /// Energy offset Δ in rad/s (or Hz with --hz).
        #[arg(long)]
        delta: f64,
        /// Interpret frequencies as ordinary frequencies in Hz.
        #[arg(long)]
        hz: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Gravitational quadrupole rate 8GML²ω⁴/(π⁴c⁵).
    Quadrupole {
        /// Resonator mass in kg.
        #[arg(long)]
        mass: f64,
        /// Resonator length in m.
        #[arg(long)]
        length: f64,
        /// Angular frequency in rad/s (or ordinary frequency with --hz).
        #[arg(long)]
        omega: f64,
        /// Interpret frequencies as ordinary frequencies in Hz.
        #[arg(long)]
        hz: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve(args) => run_record(&args, cmd_evolve),
        Command::Covariance(args) => run_record(&args, cmd_covariance),
        Command::Nulltest(args) => run_record(&args, cmd_nulltest),
        Command::Counting(args) => run_record(&args, cmd_counting),
        Command::Sample(args) => cmd_sample(&args),
        Command::OracleCheck(args) => run_record(&args, cmd_oracle_check),
        Command::Rates(cmd) => cmd_rates(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("config error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Physics(e)) => {
            eprintln!("physics error: {e}");
            ExitCode::from(3)
        }
    }
}

/// Shared scaffolding: load config, resolve overrides, run, emit.
fn run_record(
    args: &RunArgs,
    command: fn(&RunConfig, &Rates, f64) -> Result<Value, CliError>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.sampling.seed = seed;
    }
    let rates = cfg.rates()?;
    let dt = cfg.resolve_dt(&rates, args.theta, args.dt)?;
    let record = command(&cfg, &rates, dt)?;
    let format = args.format.or(cfg.output.format).unwrap_or(OutputFormat::Json);
    let text = output::render(&record, format);
    let path = args.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    output::write_output(&text, path.as_deref())
}

fn cmd_evolve(cfg: &RunConfig, rates: &Rates, dt: f64) -> Result<Value, CliError> {
    let amps = dynamics::transfer_amplitudes(rates, dt)?;
    let state = dynamics::evolve_gaussian(&cfg.drive, rates, dt)?;
    let mut cov_row_major = Vec::with_capacity(36);
    for i in 0..6 {
        for j in 0..6 {
            cov_row_major.push(state.cov[(i, j)]);
        }
    }
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "evolve",
        "gamma0": rates.gamma0,
        "gamma_s": rates.gamma_s,
        "dt": dt,
        "theta": amps.theta,
        "amp_drive_re": amps.drive.re,
        "amp_drive_im": amps.drive.im,
        "amp_emitter_re": amps.emitter.re,
        "amp_emitter_im": amps.emitter.im,
        "amp_fluorescence_re": amps.fluorescence.re,
        "amp_fluorescence_im": amps.fluorescence.im,
        "mean": state.mean.iter().copied().collect::<Vec<f64>>(),
        "cov": cov_row_major,
    }))
}

fn cmd_covariance(cfg: &RunConfig, rates: &Rates, dt: f64) -> Result<Value, CliError> {
    let cov = measurement::emitter_fluorescence_covariances(&cfg.drive, rates, dt)?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "covariance",
        "gamma0": rates.gamma0,
        "gamma_s": rates.gamma_s,
        "dt": dt,
        "theta": rates.theta(dt),
        "prefactor_f": dynamics::covariance_prefactor(rates, dt)?,
        "pb_xc": cov.pb_xc,
        "pb_pc": cov.pb_pc,
        "xb_xc": cov.xb_xc,
        "xb_pc": cov.xb_pc,
    }))
}

fn cmd_counting(cfg: &RunConfig, rates: &Rates, dt: f64) -> Result<Value, CliError> {
    let stats = measurement::counting_stats(&cfg.drive, rates, dt)?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "counting",
        "gamma0": rates.gamma0,
        "gamma_s": rates.gamma_s,
        "dt": dt,
        "theta": rates.theta(dt),
        "attenuation_g": stats.attenuation_g,
        "mean_nc": stats.mean_nc,
        "var_nc": stats.var_nc,
        "cov_nb_nc": stats.cov_nb_nc,
        "g2_drive": stats.g2_drive,
        "mandel_q_drive": stats.mandel_q_drive,
    }))
}

fn build_plan(cfg: &RunConfig, rates: &Rates, dt: f64) -> Result<ExperimentPlan, CliError> {
    Ok(ExperimentPlan {
        drive: cfg.drive.clone(),
        rates: *rates,
        dt,
        shots_per_config: cfg.sampling.shots,
        configs: cfg.quad_configs()?,
        seed: cfg.sampling.seed,
    })
}

fn cmd_nulltest(cfg: &RunConfig, rates: &Rates, dt: f64) -> Result<Value, CliError> {
    let plan = build_plan(cfg, rates, dt)?;
    let samples = sampler::sample_shots(&plan)?;
    let measured = sampler::estimate_covariances(&samples)?;
    let report = nulltest::null_test(&measured, rates, dt, cfg.nulltest.z_threshold)?;
    let rec = &report.reconstruction;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "nulltest",
        "gamma0": rates.gamma0,
        "gamma_s": rates.gamma_s,
        "dt": dt,
        "theta": rates.theta(dt),
        "shots_per_config": measured.shots_per_config,
        "seed": plan.seed,
        "z_threshold": report.z_threshold,
        "measured": measured.values.as_array().to_vec(),
        "measured_stderrs": measured.stderrs.as_array().to_vec(),
        "z_scores": report.z_scores.to_vec(),
        "reconstructed_cov": [rec.cov[0][0], rec.cov[0][1], rec.cov[1][0], rec.cov[1][1]],
        "cov_stderrs": [rec.stderr[0][0], rec.stderr[0][1], rec.stderr[1][0], rec.stderr[1][1]],
        "cov_xp_from_xx": rec.cov_xp_from_xx,
        "cov_xp_from_pp": rec.cov_xp_from_pp,
        "xp_discrepancy_sigmas": rec.xp_discrepancy_sigmas,
        "prefactor_f": rec.prefactor,
        "purity": report.purity,
        "min_eigenvalue": report.min_eigenvalue,
        "min_eigenvalue_stderr": report.min_eigenvalue_stderr,
        "verdict": report.verdict,
    }))
}

fn cmd_oracle_check(cfg: &RunConfig, rates: &Rates, dt: f64) -> Result<Value, CliError> {
    let alpha = match &cfg.drive {
        DriveState::Coherent { alpha } => Complex64::new(alpha[0], alpha[1]),
        _ => return Err(CliError::Physics(fluosim::Error::UnsupportedDrive)),
    };
    let fock = FockConfig { dim: cfg.oracle.dim, tail_tol: cfg.oracle.tail_tol };
    let report = oracle::compare_with_closed_form(alpha, rates, dt, &fock)?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "oracle_check",
        "gamma0": rates.gamma0,
        "gamma_s": rates.gamma_s,
        "dt": dt,
        "theta": rates.theta(dt),
        "dim": cfg.oracle.dim,
        "tail_tol": cfg.oracle.tail_tol,
        "dev_quadrature_mean": report.quadrature_mean,
        "dev_quadrature_cov": report.quadrature_cov,
        "dev_number_mean": report.number_mean,
        "dev_number_cov": report.number_cov,
        "dev_counting": report.counting,
        "max_deviation": report.max_deviation,
    }))
}

fn cmd_sample(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.sampling.seed = seed;
    }
    let rates = cfg.rates()?;
    let dt = cfg.resolve_dt(&rates, args.theta, args.dt)?;
    let plan = build_plan(&cfg, &rates, dt)?;
    let samples = sampler::sample_shots(&plan)?;

    // Shots default to CSV; JSON holds per-configuration arrays.
    let format = args.format.or(cfg.output.format).unwrap_or(OutputFormat::Csv);
    let text = match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            samples
                .write_csv(&mut buf)
                .map_err(|e| CliError::Config(format!("csv: {e}")))?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        OutputFormat::Json => {
            let mut record = serde_json::Map::new();
            record.insert("schema_version".into(), json!(SCHEMA_VERSION));
            record.insert("command".into(), json!("sample"));
            record.insert("seed".into(), json!(plan.seed));
            record.insert(
                "configs".into(),
                json!(plan.configs.iter().map(|c| c.label()).collect::<Vec<_>>()),
            );
            for per_config in &samples.per_config {
                let label = per_config.config.label();
                let b: Vec<f64> = per_config.outcomes.iter().map(|p| p[0]).collect();
                let c: Vec<f64> = per_config.outcomes.iter().map(|p| p[1]).collect();
                record.insert(format!("{label}_outcome_b"), json!(b));
                record.insert(format!("{label}_outcome_c"), json!(c));
            }
            output::render(&Value::Object(record), OutputFormat::Json)
        }
    };
    let path = args.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    output::write_output(&text, path.as_deref())
}

fn cmd_rates(command: RatesCommand) -> Result<(), CliError> {
    let angular = |value: f64, hz: bool| if hz { value * std::f64::consts::TAU } else { value };
    let (record, out, format) = match command.kind {
        RatesKind::Dipole { omega, dipole_moment, hz, out, format } => {
            let omega = angular(omega, hz);
            let rate = physrates::dipole_rate(omega, dipole_moment)?;
            (
                json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": "rates",
                    "kind": "dipole",
                    "omega_rad_per_s": omega,
                    "dipole_moment_c_m": dipole_moment,
                    "rate_per_s": rate,
                    "note": "scaling law without the 1/(3π) prefactor; order of magnitude",
                }),
                out,
                format,
            )
        }
        RatesKind::Matterwave { rabi, omega0, delta, hz, out, format } => {
            let (rabi, omega0, delta) =
                (angular(rabi, hz), angular(omega0, hz), angular(delta, hz));
            let rate = physrates::matterwave_rate(rabi, omega0, delta)?;
            (
                json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": "rates",
                    "kind": "matterwave",
                    "rabi_rad_per_s": rabi,
                    "omega0_rad_per_s": omega0,
                    "delta_rad_per_s": delta,
                    "rate_per_s": rate,
                }),
                out,
                format,
            )
        }
        RatesKind::Quadrupole { mass, length, omega, hz, out, format } => {
            let omega = angular(omega, hz);
            let rate = physrates::quadrupole_rate(mass, length, omega)?;
            (
                json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": "rates",
                    "kind": "quadrupole",
                    "mass_kg": mass,
                    "length_m": length,
                    "omega_rad_per_s": omega,
                    "rate_per_s": rate,
                }),
                out,
                format,
            )
        }
    };
    let text = output::render(&record, format.unwrap_or(OutputFormat::Json));
    output::write_output(&text, out.as_deref())
}
