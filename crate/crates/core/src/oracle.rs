//! Brute-force truncated Fock-space evolution, the ground truth every
//! closed-form result is checked against.
//!
//! The three modes are truncated to `dim` levels each (state dimension
//! `dim³`, index order `n_a`-major, then `n_b`, then `n_c`). The window
//! generator `√Δt·(√γ₀ a†b + √γ_s b†c + h.c.)` is real symmetric and very
//! sparse, so `exp(−i·H)` is applied to the state with norm-bounded Taylor
//! substeps instead of ever forming a dense exponential. Zero rates are
//! accepted here (unlike [`crate::dynamics::Rates`]) so decoupled limits
//! can be probed directly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Rates};
use crate::error::{Error, Result};
use crate::measurement;
use crate::states;

/// Hard cap on the per-mode truncation (`dim³` amplitudes are stored).
pub const MAX_DIM: usize = 32;

/// Dense materialization of the generator is refused above this total
/// dimension.
pub const MAX_DENSE_DIM: usize = 4096;

/// Truncation settings for the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    /// Per-mode truncation: levels `0 ..= dim−1` are retained.
    pub dim: usize,
    /// Maximum allowed population in any mode's top retained level, checked
    /// before and after evolution.
    pub tail_tol: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig { dim: 12, tail_tol: 1e-10 }
    }
}

impl FockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.dim > MAX_DIM {
            return Err(Error::DimensionGuard(self.dim));
        }
        if !self.tail_tol.is_finite() || self.tail_tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "tail tolerance must be > 0, got {}",
                self.tail_tol
            )));
        }
        Ok(())
    }
}

/// Pure state of the truncated three-mode system.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    dim: usize,
    /// `dim³` amplitudes, index `(n_a·dim + n_b)·dim + n_c`.
    amplitudes: Vec<Complex64>,
}

impl FockState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn index(&self, n_a: usize, n_b: usize, n_c: usize) -> usize {
        (n_a * self.dim + n_b) * self.dim + n_c
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Occupation numbers `(n_a, n_b, n_c)` of a flat index.
    fn occupations(&self, idx: usize) -> (usize, usize, usize) {
        (idx / (self.dim * self.dim), (idx / self.dim) % self.dim, idx % self.dim)
    }

    /// Marginal population of `level` in one mode (0 = a, 1 = b, 2 = c).
    pub fn mode_level_population(&self, mode: usize, level: usize) -> f64 {
        let mut total = 0.0;
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let occ = self.occupations(idx);
            let n = [occ.0, occ.1, occ.2][mode];
            if n == level {
                total += amp.norm_sqr();
            }
        }
        total
    }

    fn top_level_tail(&self) -> f64 {
        (0..3)
            .map(|mode| self.mode_level_population(mode, self.dim - 1))
            .fold(0.0, f64::max)
    }
}

/// The window generator on the truncated space, stored as sparse triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    dim: usize,
    /// `(row, col, value)` with both orientations present; all values real.
    entries: Vec<(u32, u32, f64)>,
}

impl Generator {
    pub fn total_dim(&self) -> usize {
        self.dim * self.dim * self.dim
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    /// `out = H·v`.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::ZERO);
        for &(row, col, value) in &self.entries {
            out[row as usize] += v[col as usize] * value;
        }
    }

    /// `max |H[i][j] − conj(H[j][i])|` over all stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut map = std::collections::HashMap::with_capacity(self.entries.len());
        for &(row, col, value) in &self.entries {
            *map.entry((row, col)).or_insert(0.0) += value;
        }
        let mut defect: f64 = 0.0;
        for (&(row, col), &value) in &map {
            let partner = map.get(&(col, row)).copied().unwrap_or(0.0);
            defect = defect.max((value - partner).abs());
        }
        defect
    }

    /// Upper bound on the spectral norm (max absolute row sum).
    pub fn gershgorin_bound(&self) -> f64 {
        let mut row_sums = vec![0.0; self.total_dim()];
        for &(row, _, value) in &self.entries {
            row_sums[row as usize] += value.abs();
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }

    /// Dense matrix form, available only for small truncations.
    pub fn to_dense(&self) -> Result<nalgebra::DMatrix<f64>> {
        let n = self.total_dim();
        if n > MAX_DENSE_DIM {
            return Err(Error::DimensionGuard(self.dim));
        }
        let mut dense = nalgebra::DMatrix::zeros(n, n);
        for &(row, col, value) in &self.entries {
            dense[(row as usize, col as usize)] += value;
        }
        Ok(dense)
    }
}

fn check_oracle_rate(value: f64, name: &str) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidInput(format!("{name} must be ≥ 0, got {value}")));
    }
    Ok(())
}

/// Assemble `√Δt·(√γ₀ a†b + √γ_s b†c + h.c.)` on the truncated space.
pub fn build_generator(gamma0: f64, gamma_s: f64, dt: f64, cfg: &FockConfig) -> Result<Generator> {
    cfg.validate()?;
    check_oracle_rate(gamma0, "gamma0")?;
    check_oracle_rate(gamma_s, "gamma_s")?;
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::InvalidInput(format!("Δt must be ≥ 0, got {dt}")));
    }

    let dim = cfg.dim;
    let sqrt_dt = dt.sqrt();
    let c0 = sqrt_dt * gamma0.sqrt();
    let cs = sqrt_dt * gamma_s.sqrt();
    let idx = |n_a: usize, n_b: usize, n_c: usize| ((n_a * dim + n_b) * dim + n_c) as u32;

    let mut entries = Vec::new();
    for n_a in 0..dim {
        for n_b in 0..dim {
            for n_c in 0..dim {
                let from = idx(n_a, n_b, n_c);
                // a†b : |n_a+1, n_b−1⟩, element √((n_a+1)·n_b)
                if c0 != 0.0 && n_a + 1 < dim && n_b >= 1 {
                    let v = c0 * (((n_a + 1) * n_b) as f64).sqrt();
                    entries.push((idx(n_a + 1, n_b - 1, n_c), from, v));
                }
                // a b† : |n_a−1, n_b+1⟩, element √(n_a·(n_b+1))
                if c0 != 0.0 && n_a >= 1 && n_b + 1 < dim {
                    let v = c0 * ((n_a * (n_b + 1)) as f64).sqrt();
                    entries.push((idx(n_a - 1, n_b + 1, n_c), from, v));
                }
                // b†c : |n_b+1, n_c−1⟩, element √((n_b+1)·n_c)
                if cs != 0.0 && n_b + 1 < dim && n_c >= 1 {
                    let v = cs * (((n_b + 1) * n_c) as f64).sqrt();
                    entries.push((idx(n_a, n_b + 1, n_c - 1), from, v));
                }
                // b c† : |n_b−1, n_c+1⟩, element √(n_b·(n_c+1))
                if cs != 0.0 && n_b >= 1 && n_c + 1 < dim {
                    let v = cs * ((n_b * (n_c + 1)) as f64).sqrt();
                    entries.push((idx(n_a, n_b - 1, n_c + 1), from, v));
                }
            }
        }
    }
    Ok(Generator { dim, entries })
}

/// `ψ ← exp(−i·H)·ψ` by Taylor series over norm-bounded substeps. With the
/// per-substep bound ‖H‖/steps ≤ 1/2 the series reaches machine precision
/// in ~20 terms and preserves the norm to ~1e−15.
fn apply_exp_neg_i(generator: &Generator, psi: &mut [Complex64]) {
    let bound = generator.gershgorin_bound();
    if bound == 0.0 {
        return;
    }
    let mut steps: usize = 1;
    while bound / steps as f64 > 0.5 && steps < (1 << 24) {
        steps <<= 1;
    }

    let n = psi.len();
    let mut term = vec![Complex64::ZERO; n];
    let mut h_term = vec![Complex64::ZERO; n];
    for _ in 0..steps {
        let mut acc = psi.to_vec();
        term.copy_from_slice(psi);
        for k in 1..=80u32 {
            generator.apply(&term, &mut h_term);
            let factor = Complex64::new(0.0, -1.0) / (steps as f64 * k as f64);
            let mut term_norm2 = 0.0;
            for (t, (h, a)) in term.iter_mut().zip(h_term.iter().zip(acc.iter_mut())) {
                *t = h * factor;
                *a += *t;
                term_norm2 += t.norm_sqr();
            }
            let acc_norm2: f64 = acc.iter().map(|a| a.norm_sqr()).sum();
            if term_norm2 <= 1e-34 * acc_norm2 {
                break;
            }
        }
        psi.copy_from_slice(&acc);
    }
}

/// Truncated, renormalized coherent state amplitudes for one mode.
fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(dim);
    let mut current = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            current *= alpha / (n as f64).sqrt();
        }
        amps.push(current);
    }
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    amps
}

/// Evolve `|α⟩ ⊗ |0⟩ ⊗ |0⟩` through one window on the truncated space.
pub fn evolve_fock(
    alpha: Complex64,
    gamma0: f64,
    gamma_s: f64,
    dt: f64,
    cfg: &FockConfig,
) -> Result<FockState> {
    let generator = build_generator(gamma0, gamma_s, dt, cfg)?;
    let dim = cfg.dim;

    let mode_a = coherent_amplitudes(alpha, dim);
    let mut amplitudes = vec![Complex64::ZERO; dim * dim * dim];
    for (n_a, amp) in mode_a.iter().enumerate() {
        amplitudes[(n_a * dim) * dim] = *amp;
    }
    let mut state = FockState { dim, amplitudes };

    let initial_tail = state.top_level_tail();
    if initial_tail > cfg.tail_tol {
        return Err(Error::TruncationTail { population: initial_tail, tolerance: cfg.tail_tol });
    }

    apply_exp_neg_i(&generator, &mut state.amplitudes);

    let final_tail = state.top_level_tail();
    if final_tail > cfg.tail_tol {
        return Err(Error::TruncationTail { population: final_tail, tolerance: cfg.tail_tol });
    }
    Ok(state)
}

/// First and second moments extracted from a Fock state.
#[derive(Debug, Clone, PartialEq)]
pub struct FockMoments {
    /// Quadrature means, ordering `(x_a, p_a, x_b, p_b, x_c, p_c)`.
    pub quadrature_mean: nalgebra::Vector6<f64>,
    /// Symmetrized quadrature covariance matrix.
    pub quadrature_cov: nalgebra::Matrix6<f64>,
    /// `⟨n_m⟩` per mode.
    pub number_mean: [f64; 3],
    /// `Cov(n_m, n_n)`; the diagonal holds number variances.
    pub number_cov: [[f64; 3]; 3],
}

fn lower(state: &FockState, mode: usize) -> Vec<Complex64> {
    let dim = state.dim;
    let stride = match mode {
        0 => dim * dim,
        1 => dim,
        _ => 1,
    };
    let mut out = vec![Complex64::ZERO; state.amplitudes.len()];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        let occ = state.occupations(idx);
        let n = [occ.0, occ.1, occ.2][mode];
        if n >= 1 {
            // (a ψ)[idx − stride] = √n · ψ[idx]
            out[idx - stride] += amp * (n as f64).sqrt();
        }
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Expectation values via ladder-operator matrix elements.
pub fn state_moments(state: &FockState) -> FockMoments {
    let lowered: Vec<Vec<Complex64>> = (0..3).map(|m| lower(state, m)).collect();

    // A_m = ⟨a_m⟩, N_{mn} = ⟨a_m† a_n⟩, M_{mn} = ⟨a_m a_n⟩
    let mut first = [Complex64::ZERO; 3];
    let mut normal = [[Complex64::ZERO; 3]; 3];
    let mut anomalous = [[Complex64::ZERO; 3]; 3];
    for m in 0..3 {
        first[m] = dot(&state.amplitudes, &lowered[m]);
        for n in 0..3 {
            normal[m][n] = dot(&lowered[m], &lowered[n]);
            let double = lower(
                &FockState { dim: state.dim, amplitudes: lowered[n].clone() },
                m,
            );
            anomalous[m][n] = dot(&state.amplitudes, &double);
        }
    }

    let sqrt2 = std::f64::consts::SQRT_2;
    let mut mean = nalgebra::Vector6::zeros();
    for m in 0..3 {
        mean[2 * m] = sqrt2 * first[m].re;
        mean[2 * m + 1] = sqrt2 * first[m].im;
    }

    let mut cov = nalgebra::Matrix6::zeros();
    for m in 0..3 {
        for n in 0..3 {
            let delta = if m == n { 0.5 } else { 0.0 };
            let (am, an) = (first[m], first[n]);
            // Cov_sym(x_m, x_n) = Re M + Re N + δ/2 − x̄_m x̄_n
            cov[(2 * m, 2 * n)] =
                anomalous[m][n].re + normal[m][n].re + delta - 2.0 * am.re * an.re;
            // Cov_sym(p_m, p_n) = −Re M + Re N + δ/2 − p̄_m p̄_n
            cov[(2 * m + 1, 2 * n + 1)] =
                -anomalous[m][n].re + normal[m][n].re + delta - 2.0 * am.im * an.im;
            // Cov_sym(x_m, p_n) = Im M + Im N − x̄_m p̄_n
            cov[(2 * m, 2 * n + 1)] =
                anomalous[m][n].im + normal[m][n].im - 2.0 * am.re * an.im;
            // Cov_sym(p_m, x_n) = Im M − Im N − p̄_m x̄_n
            cov[(2 * m + 1, 2 * n)] =
                anomalous[m][n].im - normal[m][n].im - 2.0 * am.im * an.re;
        }
    }

    let mut number_mean = [0.0; 3];
    let mut number_second = [[0.0; 3]; 3];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let occ = state.occupations(idx);
        let ns = [occ.0 as f64, occ.1 as f64, occ.2 as f64];
        for m in 0..3 {
            number_mean[m] += p * ns[m];
            for n in 0..3 {
                number_second[m][n] += p * ns[m] * ns[n];
            }
        }
    }
    let mut number_cov = [[0.0; 3]; 3];
    for m in 0..3 {
        for n in 0..3 {
            number_cov[m][n] = number_second[m][n] - number_mean[m] * number_mean[n];
        }
    }

    FockMoments { quadrature_mean: mean, quadrature_cov: cov, number_mean, number_cov }
}

/// Worst-case deviations between the oracle and the closed forms, per
/// quantity family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub quadrature_mean: f64,
    pub quadrature_cov: f64,
    pub number_mean: f64,
    pub number_cov: f64,
    /// Fluorescent counting formulas (mean, variance, count covariance).
    pub counting: f64,
    pub max_deviation: f64,
}

/// Evolve a coherent drive in the truncated space and compare every moment
/// against the closed-form predictions.
pub fn compare_with_closed_form(
    alpha: Complex64,
    rates: &Rates,
    dt: f64,
    cfg: &FockConfig,
) -> Result<OracleComparison> {
    let state = evolve_fock(alpha, rates.gamma0, rates.gamma_s, dt, cfg)?;
    let moments = state_moments(&state);

    let amps = dynamics::transfer_amplitudes(rates, dt)?;
    let betas = dynamics::propagated_amplitudes(&amps, alpha);
    let closed_mean = dynamics::propagated_mean(&amps, alpha);

    let quadrature_mean = (moments.quadrature_mean - closed_mean).abs().max();
    let quadrature_cov =
        (moments.quadrature_cov - nalgebra::Matrix6::identity() * states::VACUUM_VARIANCE)
            .abs()
            .max();

    let mut number_mean: f64 = 0.0;
    let mut number_cov: f64 = 0.0;
    for (m, beta) in betas.iter().enumerate() {
        number_mean = number_mean.max((moments.number_mean[m] - beta.norm_sqr()).abs());
        for n in 0..3 {
            // Independent Poissons: Var(n_m) = |β_m|², cross-covariances 0.
            let expected = if m == n { beta.norm_sqr() } else { 0.0 };
            number_cov = number_cov.max((moments.number_cov[m][n] - expected).abs());
        }
    }

    let counting = if alpha.norm_sqr() > measurement::PHOTON_NUMBER_TOLERANCE {
        let stats = measurement::counting_stats(
            &states::DriveState::coherent(alpha),
            rates,
            dt,
        )?;
        let mean_dev = (moments.number_mean[2] - stats.mean_nc).abs();
        let var_dev = (moments.number_cov[2][2] - stats.var_nc).abs();
        let cov_dev = (moments.number_cov[1][2] - stats.cov_nb_nc).abs();
        mean_dev.max(var_dev).max(cov_dev)
    } else {
        0.0
    };

    let max_deviation = quadrature_mean
        .max(quadrature_cov)
        .max(number_mean)
        .max(number_cov)
        .max(counting);
    Ok(OracleComparison {
        quadrature_mean,
        quadrature_cov,
        number_mean,
        number_cov,
        counting,
        max_deviation,
    })
}
