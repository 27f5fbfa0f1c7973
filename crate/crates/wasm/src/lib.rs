//! Browser bindings for the interactive demo page.
//!
//! Three operations are exported, all returning JSON strings so the page
//! needs no binding glue beyond `JSON.parse`:
//!
//! * [`transfer_scan`] — amplitude weights and the coupling prefactor as a
//!   function of the mixing angle θ, for parameter-sweep plots;
//! * [`covariance_response`] — analytic emitter-fluorescence covariances,
//!   drive noise ellipse and classicality indicators at one working point;
//! * [`run_null_test`] — the full Monte Carlo pipeline: sample shots,
//!   estimate covariances, reconstruct the drive noise matrix, verdict.
//!
//! The inner `*_json` functions are plain Rust and compile (and are tested)
//! on any target; the `#[wasm_bindgen]` wrappers surface errors as thrown
//! JS exceptions.

use serde_json::json;
use wasm_bindgen::prelude::*;

use fluosim::dynamics::{self, Rates};
use fluosim::measurement;
use fluosim::nulltest;
use fluosim::sampler::{self, ExperimentPlan};
use fluosim::states::{self, DriveState};

fn parse_drive(drive_json: &str) -> Result<DriveState, String> {
    serde_json::from_str(drive_json).map_err(|e| format!("drive: {e}"))
}

fn parse_rates(gamma0: f64, gamma_s: f64) -> Result<Rates, String> {
    Rates::new(gamma0, gamma_s).map_err(|e| e.to_string())
}

pub fn transfer_scan_json(
    gamma0: f64,
    gamma_s: f64,
    theta_max: f64,
    points: usize,
) -> Result<String, String> {
    let rates = parse_rates(gamma0, gamma_s)?;
    if !theta_max.is_finite() || theta_max <= 0.0 {
        return Err(format!("theta_max must be > 0, got {theta_max}"));
    }
    if !(2..=100_000).contains(&points) {
        return Err(format!("points must be in 2..=100000, got {points}"));
    }
    let mut theta = Vec::with_capacity(points);
    let mut weight_drive = Vec::with_capacity(points);
    let mut weight_emitter = Vec::with_capacity(points);
    let mut weight_fluorescence = Vec::with_capacity(points);
    let mut prefactor = Vec::with_capacity(points);
    for i in 0..points {
        let t = theta_max * i as f64 / (points - 1) as f64;
        let dt = rates.dt_for_theta(t).map_err(|e| e.to_string())?;
        let amps = dynamics::transfer_amplitudes(&rates, dt).map_err(|e| e.to_string())?;
        theta.push(t);
        weight_drive.push(amps.drive.norm_sqr());
        weight_emitter.push(amps.emitter.norm_sqr());
        weight_fluorescence.push(amps.fluorescence.norm_sqr());
        prefactor.push(dynamics::covariance_prefactor(&rates, dt).map_err(|e| e.to_string())?);
    }
    Ok(json!({
        "theta": theta,
        "weight_drive": weight_drive,
        "weight_emitter": weight_emitter,
        "weight_fluorescence": weight_fluorescence,
        "prefactor": prefactor,
    })
    .to_string())
}

pub fn covariance_response_json(
    drive_json: &str,
    gamma0: f64,
    gamma_s: f64,
    theta: f64,
) -> Result<String, String> {
    let drive = parse_drive(drive_json)?;
    let rates = parse_rates(gamma0, gamma_s)?;
    let dt = rates.dt_for_theta(theta).map_err(|e| e.to_string())?;
    let cov = measurement::emitter_fluorescence_covariances(&drive, &rates, dt)
        .map_err(|e| e.to_string())?;
    let (mean, drive_cov) = states::drive_moments(&drive).map_err(|e| e.to_string())?;
    let indicators = states::classicality_indicators(&drive_cov).map_err(|e| e.to_string())?;
    let coherence = measurement::g2_and_q(&drive).ok();
    Ok(json!({
        "theta": theta,
        "prefactor": dynamics::covariance_prefactor(&rates, dt).map_err(|e| e.to_string())?,
        "pb_xc": cov.pb_xc,
        "pb_pc": cov.pb_pc,
        "xb_xc": cov.xb_xc,
        "xb_pc": cov.xb_pc,
        "drive_mean": [mean.x, mean.y],
        "drive_cov": [
            drive_cov[(0, 0)], drive_cov[(0, 1)],
            drive_cov[(1, 0)], drive_cov[(1, 1)],
        ],
        "min_quadrature_variance": indicators.min_quadrature_variance,
        "squeezed": indicators.squeezed,
        "purity": indicators.purity,
        "g2": coherence.map(|c| c.g2),
        "mandel_q": coherence.map(|c| c.mandel_q),
        "mean_photons": coherence.map(|c| c.mean_photons),
    })
    .to_string())
}

pub fn run_null_test_json(
    drive_json: &str,
    gamma0: f64,
    gamma_s: f64,
    theta: f64,
    shots: usize,
    seed: u64,
) -> Result<String, String> {
    let drive = parse_drive(drive_json)?;
    let rates = parse_rates(gamma0, gamma_s)?;
    if shots > 4_000_000 {
        return Err(format!("shots capped at 4e6 in the demo, got {shots}"));
    }
    let dt = rates.dt_for_theta(theta).map_err(|e| e.to_string())?;
    let plan = ExperimentPlan::new(drive, rates, dt, shots, seed);
    let samples = sampler::sample_shots(&plan).map_err(|e| e.to_string())?;
    let measured = sampler::estimate_covariances(&samples).map_err(|e| e.to_string())?;
    let report = nulltest::null_test(&measured, &rates, dt, nulltest::DEFAULT_Z_THRESHOLD)
        .map_err(|e| e.to_string())?;
    let rec = &report.reconstruction;
    Ok(json!({
        "theta": theta,
        "shots_per_config": shots,
        "seed": seed,
        "measured": measured.values.as_array().to_vec(),
        "measured_stderrs": measured.stderrs.as_array().to_vec(),
        "z_scores": report.z_scores.to_vec(),
        "z_threshold": report.z_threshold,
        "reconstructed_cov": [rec.cov[0][0], rec.cov[0][1], rec.cov[1][0], rec.cov[1][1]],
        "cov_stderrs": [rec.stderr[0][0], rec.stderr[0][1], rec.stderr[1][0], rec.stderr[1][1]],
        "purity": report.purity,
        "min_eigenvalue": report.min_eigenvalue,
        "verdict": report.verdict,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn transfer_scan(
    gamma0: f64,
    gamma_s: f64,
    theta_max: f64,
    points: usize,
) -> Result<String, JsError> {
    transfer_scan_json(gamma0, gamma_s, theta_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn covariance_response(
    drive_json: &str,
    gamma0: f64,
    gamma_s: f64,
    theta: f64,
) -> Result<String, JsError> {
    covariance_response_json(drive_json, gamma0, gamma_s, theta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_null_test(
    drive_json: &str,
    gamma0: f64,
    gamma_s: f64,
    theta: f64,
    shots: usize,
    seed: u64,
) -> Result<String, JsError> {
    run_null_test_json(drive_json, gamma0, gamma_s, theta, shots, seed)
        .map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn scan_covers_the_transfer_curve() {
        let text = transfer_scan_json(0.5, 0.5, std::f64::consts::PI, 101).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let drive = v["weight_drive"].as_array().unwrap();
        let fluor = v["weight_fluorescence"].as_array().unwrap();
        assert_eq!(drive.len(), 101);
        assert!((drive[0].as_f64().unwrap() - 1.0).abs() < 1e-12);
        // θ = π with equal rates: complete transfer into fluorescence.
        assert!((fluor[100].as_f64().unwrap() - 1.0).abs() < 1e-10);
        for i in 0..101 {
            let total = drive[i].as_f64().unwrap()
                + v["weight_emitter"][i].as_f64().unwrap()
                + fluor[i].as_f64().unwrap();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_response_squeezed_drive() {
        let drive = r#"{"type":"squeezed_thermal","n_th":0,"r":0.5,"phi":0,"delta":[0,0]}"#;
        let text =
            covariance_response_json(drive, 0.5, 0.5, std::f64::consts::FRAC_PI_2).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!((v["pb_xc"].as_f64().unwrap() + 0.1117441828).abs() < 1e-7);
        assert_eq!(v["squeezed"], true);
        assert!((v["purity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn null_test_pipeline_runs() {
        let drive = r#"{"type":"thermal","n_th":1.0}"#;
        let text =
            run_null_test_json(drive, 0.5, 0.5, std::f64::consts::FRAC_PI_2, 50_000, 1).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["verdict"], "classical_noncoherent");
        assert!((v["reconstructed_cov"][0].as_f64().unwrap() - 1.5).abs() < 0.1);
    }

    #[test]
    fn bad_inputs_are_reported() {
        assert!(parse_drive("{not json").is_err());
        assert!(transfer_scan_json(0.0, 0.5, 1.0, 10).is_err());
        assert!(transfer_scan_json(0.5, 0.5, 1.0, 1).is_err());
        let drive = r#"{"type":"thermal","n_th":-1.0}"#;
        assert!(covariance_response_json(drive, 0.5, 0.5, 1.0).is_err());
    }
}
