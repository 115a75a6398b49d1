use serde::Serialize;

use crate::datagen::{gaussian_spectrum, random_scalar};
use crate::error::{invalid, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::norms::{sobolev_norm, time_lr};
use crate::nse_solver::Trajectory;
use crate::spectral_core::{apply_heat, duhamel_series, leray_in_place, tensor_divergence, Grid, SpectralField};

#[derive(Clone, Debug, Serialize)]
pub struct PersistenceProfile {
    pub alpha: f64,
    /// `(t, ‖U(t)‖_{H^α})`.
    pub profile: Vec<(f64, f64)>,
    pub initial: f64,
    pub sup: f64,
    /// `sup / initial`.
    pub ratio: f64,
    pub grew_beyond_two: bool,
}

/// Inhomogeneous `H^α` norm of the evolved component along the run.
pub fn persistence_check(traj: &Trajectory, alpha: f64) -> Result<PersistenceProfile> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("persistence index must be positive, got {alpha}")));
    }
    let profile: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.fields)
        .map(|(&t, u)| Ok((t, sobolev_norm(u, alpha, false)?)))
        .collect::<Result<_>>()?;
    let initial = profile[0].1;
    let sup = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    let ratio = if initial > 0.0 { sup / initial } else if sup > 0.0 { f64::INFINITY } else { 1.0 };
    Ok(PersistenceProfile {
        alpha,
        profile,
        initial,
        sup,
        ratio,
        grew_beyond_two: ratio > 2.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FluctuationFit {
    /// `(t, ‖U(t) - e^{tΔ}u₀¹‖₂)` over the earliest decade.
    pub samples: Vec<(f64, f64)>,
    /// `γ̂` in `‖U(t) - e^{tΔ}u₀¹‖₂ ≈ c·t^{γ̂/2}`; absent when the
    /// fluctuation vanishes identically.
    pub gamma_hat: Option<f64>,
    pub line: Option<LineFit>,
    pub max_fluctuation: f64,
}

/// Power-law fit of the departure from the heat flow on `(0, 10·t₁]`,
/// `t₁` being the first recorded positive time.
pub fn fluctuation_decay_fit(traj: &Trajectory, u01: &SpectralField) -> Result<FluctuationFit> {
    if traj.times.len() < 2 {
        return Err(invalid("fluctuation fit needs recorded positive times"));
    }
    let t1 = traj.times[1];
    let mut samples = Vec::new();
    for (&t, u) in traj.times.iter().zip(&traj.fields) {
        if t > 0.0 && t <= 10.0 * t1 * (1.0 + 1e-12) {
            samples.push((t, (u - &apply_heat(u01, t)?).l2_norm()));
        }
    }
    if samples.len() < 3 {
        return Err(invalid(format!(
            "fluctuation fit needs at least three snapshots in the earliest decade, found {}",
            samples.len()
        )));
    }
    let max_fluctuation = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if max_fluctuation == 0.0 {
        return Ok(FluctuationFit {
            samples,
            gamma_hat: None,
            line: None,
            max_fluctuation,
        });
    }
    let positive: Vec<(f64, f64)> = samples.iter().copied().filter(|s| s.1 > 0.0).collect();
    if positive.len() < 3 {
        return Err(invalid("fluctuation fit needs three nonzero samples"));
    }
    let x: Vec<f64> = positive.iter().map(|s| s.0).collect();
    let y: Vec<f64> = positive.iter().map(|s| s.1).collect();
    let line = log_log_fit(&x, &y)?;
    Ok(FluctuationFit {
        samples,
        gamma_hat: Some(2.0 * line.slope),
        line: Some(line),
        max_fluctuation,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DuhamelSobolevRatio {
    /// `sup_t ‖L(f)(t)‖_{H^β}`.
    pub lhs: f64,
    /// `max(‖f‖_{L^p_TL²}, ‖f‖_{L²_TL²})`.
    pub rhs: f64,
    pub ratio: f64,
}

/// `L(f)(t) = ∫₀ᵗ e^{(t-s)Δ}ℙ∇·f(s) ds` for a 9-component tensor path,
/// compared in `L^∞_TH^β` with the `L^p_TL²` size of `f`.
pub fn linear_duhamel_sobolev_check(times: &[f64], f: &[SpectralField], beta: f64, p: f64) -> Result<DuhamelSobolevRatio> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(invalid(format!("time exponent must lie in (2, ∞), got {p}")));
    }
    if !(beta > 0.0 && beta < 1.0 - 2.0 / p) {
        return Err(invalid(format!("beta must lie in (0, 1-2/p), got {beta}")));
    }
    if f.is_empty() || f.len() != times.len() {
        return Err(invalid("tensor samples must match the time grid"));
    }
    let integrand: Vec<SpectralField> = f
        .iter()
        .map(|t| {
            let mut d = tensor_divergence(t)?;
            leray_in_place(&mut d)?;
            Ok(d)
        })
        .collect::<Result<_>>()?;
    let l = duhamel_series(times, &integrand)?;
    let lhs = l
        .iter()
        .map(|v| sobolev_norm(v, beta, false))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let sizes: Vec<f64> = f.iter().map(|t| t.l2_norm()).collect();
    let rhs = time_lr(times, &sizes, p).max(time_lr(times, &sizes, 2.0));
    Ok(DuhamelSobolevRatio {
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// Ratios for `count` seeded tensor paths `f(t) = e^{-t}A + tB` on `[0, 1]`.
pub fn duhamel_sobolev_probe(grid: &Grid, beta: f64, p: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let times: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    (0..count)
        .map(|c| {
            let base = seed.wrapping_mul(1000).wrapping_add(18 * c as u64);
            let tensor = |offset: u64| -> Result<SpectralField> {
                let parts: Vec<SpectralField> = (0..9)
                    .map(|k| random_scalar(grid, base + offset + k, gaussian_spectrum(4.0)))
                    .collect();
                SpectralField::stack(&parts)
            };
            let a = tensor(0)?;
            let b = tensor(9)?;
            let path: Vec<SpectralField> = times
                .iter()
                .map(|&t| {
                    let mut f = a.scaled((-t).exp());
                    f.axpy(t, &b);
                    f
                })
                .collect();
            Ok(linear_duhamel_sobolev_check(&times, &path, beta, p)?.ratio)
        })
        .collect()
}
