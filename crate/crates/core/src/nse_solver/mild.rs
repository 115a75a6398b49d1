use serde::Serialize;

use super::Trajectory;
use crate::error::{invalid, Result};
use crate::norms::path_norm_e_t;
use crate::spectral_core::{apply_heat, bilinear_integrand, derivative, duhamel_series, gradient, SpectralField};

/// `e^{tΔ}u0` sampled at `times`.
pub fn heat_trajectory(u0: &SpectralField, times: &[f64]) -> Result<Vec<SpectralField>> {
    times.iter().map(|&t| apply_heat(u0, t)).collect()
}

/// `sup_i ‖u(t_i) - e^{t_iΔ}u(0) - B(u,u)(t_i)‖₂ / ‖u(0)‖₂` with the Duhamel
/// integral taken by the trapezoid rule over every `stride`-th snapshot.
/// For a perturbed run the full velocity `U + e^{tΔ}u₀²` is used.
pub fn mild_residual(traj: &Trajectory, stride: usize) -> Result<f64> {
    if stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    let total = traj.total_fields()?;
    let last = total.len() - 1;
    let mut idx: Vec<usize> = (0..=last).step_by(stride).collect();
    if *idx.last().unwrap() != last {
        idx.push(last);
    }
    let times: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    let fields: Vec<&SpectralField> = idx.iter().map(|&i| &total[i]).collect();
    let scale = fields[0].l2_norm();
    if scale == 0.0 {
        return Ok(fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max));
    }
    let integrand: Vec<SpectralField> = fields
        .iter()
        .map(|f| bilinear_integrand(f, f))
        .collect::<Result<_>>()?;
    let b = duhamel_series(&times, &integrand)?;
    let mut worst: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let mut r = fields[i].clone();
        r -= &apply_heat(fields[0], t)?;
        r -= &b[i];
        worst = worst.max(r.l2_norm() / scale);
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct PicardResult {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
    /// `‖u⁽ᵐ⁺¹⁾ - u⁽ᵐ⁾‖_{E_T}` per iteration.
    pub residuals: Vec<f64>,
    pub heat_norm: f64,
    pub final_norm: f64,
    /// `‖u‖_{E_T} < 2‖e^{tΔ}u0‖_{E_T}`.
    pub factor_two_holds: bool,
    /// Set when the residual grew three iterations in a row.
    pub diverged: bool,
}

/// Fixed-point iteration `u⁽ᵐ⁺¹⁾ = e^{tΔ}u0 + B(u⁽ᵐ⁾, u⁽ᵐ⁾)` on the uniform
/// grid `t_i = i·T/nodes`.
pub fn picard_iterate(u0: &SpectralField, horizon: f64, nodes: usize, iterations: usize) -> Result<PicardResult> {
    if iterations == 0 {
        return Err(invalid("picard iteration needs at least one iteration"));
    }
    if nodes == 0 || !(horizon > 0.0) {
        return Err(invalid("picard iteration needs a positive horizon and at least one step"));
    }
    u0.expect_components(3)?;
    let times: Vec<f64> = (0..=nodes).map(|i| horizon * i as f64 / nodes as f64).collect();
    let heat = heat_trajectory(u0, &times)?;
    let heat_norm = path_norm_e_t(&times, &heat)?.value;
    let mut current = heat.clone();
    let mut residuals = Vec::new();
    let mut growth = 0;
    let mut diverged = false;
    for _ in 0..iterations {
        let integrand: Vec<SpectralField> = current
            .iter()
            .map(|f| bilinear_integrand(f, f))
            .collect::<Result<_>>()?;
        let b = duhamel_series(&times, &integrand)?;
        let next: Vec<SpectralField> = heat.iter().zip(&b).map(|(h, b)| h + b).collect();
        let diff: Vec<SpectralField> = next.iter().zip(&current).map(|(a, b)| a - b).collect();
        let r = path_norm_e_t(&times, &diff)?.value;
        if let Some(&prev) = residuals.last() {
            if r > prev {
                growth += 1;
            } else {
                growth = 0;
            }
        }
        residuals.push(r);
        current = next;
        if !r.is_finite() || growth >= 3 {
            diverged = true;
            break;
        }
    }
    let final_norm = path_norm_e_t(&times, &current)?.value;
    Ok(PicardResult {
        times,
        fields: current,
        residuals,
        heat_norm,
        final_norm,
        factor_two_holds: final_norm < 2.0 * heat_norm,
        diverged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingProfile {
    /// `sup_t (√t)^{k+1}‖∇^k u(t)‖_∞` for `k = 0, 1, 2`.
    pub sup: [f64; 3],
    /// The same sup restricted to `(0, t_i]`, per snapshot.
    pub running: Vec<(f64, [f64; 3])>,
}

fn derivative_sup_norms(u: &SpectralField) -> [f64; 3] {
    let g = gradient(u);
    let parts: Vec<SpectralField> = (0..3).map(|a| derivative(&g, a)).collect();
    let h = SpectralField::stack(&parts).expect("common grid");
    [
        u.to_physical().max_magnitude(),
        g.to_physical().max_magnitude(),
        h.to_physical().max_magnitude(),
    ]
}

/// Weighted derivative sup norms over a trajectory; `t = 0` is excluded.
pub fn smoothing_profile(times: &[f64], fields: &[SpectralField]) -> Result<SmoothingProfile> {
    if fields.is_empty() || times.len() != fields.len() {
        return Err(invalid("smoothing profile needs a nonempty trajectory"));
    }
    let mut sup = [0.0f64; 3];
    let mut running = Vec::new();
    for (&t, f) in times.iter().zip(fields) {
        if t > 0.0 {
            let norms = derivative_sup_norms(f);
            for k in 0..3 {
                sup[k] = sup[k].max(t.sqrt().powi(k as i32 + 1) * norms[k]);
            }
        }
        running.push((t, sup));
    }
    Ok(SmoothingProfile { sup, running })
}
