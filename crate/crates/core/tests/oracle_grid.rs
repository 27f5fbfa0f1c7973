//! Oracle-vs-closed-form agreement over a random parameter grid.

use fluosim::dynamics::Rates;
use fluosim::oracle::{self, FockConfig};
use num_complex::Complex64;

struct Lcg(u64);
impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[test]
fn twenty_point_grid_agrees_to_1e8() {
    let mut rng = Lcg(0x09AC1E ^ 0xBEEF);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let magnitude = rng.next_f64();
        let phase = rng.next_f64() * std::f64::consts::TAU;
        let alpha = Complex64::from_polar(magnitude, phase);
        let gamma0 = 0.1 + 0.9 * rng.next_f64();
        let gamma_s = 0.1 + 0.9 * rng.next_f64();
        let rates = Rates::new(gamma0, gamma_s).unwrap();
        let dt = rng.next_f64() / rates.gamma(); // Δt·γ ≤ 1
        let cfg = FockConfig { dim: 12, tail_tol: 1e-8 };
        let report = oracle::compare_with_closed_form(alpha, &rates, dt, &cfg).unwrap();
        worst = worst.max(report.max_deviation);
    }
    println!("worst deviation over grid: {worst:.3e}");
    assert!(worst < 1e-8, "worst {worst:.3e}");
}
