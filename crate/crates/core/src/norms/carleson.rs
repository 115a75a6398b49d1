use serde::Serialize;

use crate::error::{invalid, Result};
use crate::spectral_core::{apply_heat, Grid, PhysicalField, SpectralField};

/// Points per decade of the geometric time grid for the heat extension.
pub const TIMES_PER_DECADE: usize = 24;

/// Dyadic radii `2π·2^{-m}` between the grid spacing and the half box,
/// ascending.
pub fn carleson_radii(grid: &Grid) -> Vec<f64> {
    let h = grid.length() / grid.n() as f64;
    let mut radii = Vec::new();
    let mut m = 1;
    loop {
        let r = grid.length() * 2f64.powi(-m);
        if r < h * (1.0 - 1e-12) {
            break;
        }
        radii.push(r);
        m += 1;
    }
    radii.reverse();
    radii
}

fn periodic_offset(i: usize, n: usize, h: f64) -> f64 {
    let d = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
    d * h
}

/// Spectral coefficients of the ball indicator at the origin and its point count.
fn ball(grid: &Grid, radius: f64) -> (SpectralField, usize) {
    let n = grid.n();
    let h = grid.length() / n as f64;
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut values = vec![0.0; grid.len()];
    let mut count = 0;
    for a in 0..n {
        let xa = periodic_offset(a, n, h).powi(2);
        for b in 0..n {
            let xb = xa + periodic_offset(b, n, h).powi(2);
            for c in 0..n {
                if xb + periodic_offset(c, n, h).powi(2) <= r2 {
                    values[(a * n + b) * n + c] = 1.0;
                    count += 1;
                }
            }
        }
    }
    let phys = PhysicalField::from_values(grid, 1, values).expect("scalar grid values");
    (phys.to_spectral(), count)
}

/// Largest average of `density` over balls of the given radius centered at
/// every grid point (periodic convolution by FFT).
fn max_ball_average(grid: &Grid, density: &[f64], radius: f64) -> f64 {
    let (ind, count) = ball(grid, radius);
    let phys = PhysicalField::from_values(grid, 1, density.to_vec()).expect("scalar grid values");
    let mut conv = phys.to_spectral();
    let scale = grid.len() as f64 / count as f64;
    for (x, y) in conv.coeffs_mut().iter_mut().zip(ind.coeffs()) {
        *x = *x * *y * scale;
    }
    conv.to_physical().values().iter().cloned().fold(0.0, f64::max)
}

fn squared_magnitude(f: &SpectralField) -> Vec<f64> {
    f.to_physical().magnitude().into_iter().map(|v| v * v).collect()
}

/// Running time integral of pointwise densities, sampled at ascending
/// `nodes`, evaluated at each `(t, radius)` request (ascending in `t`).
fn carleson_sup(
    nodes: &[f64],
    mut density: impl FnMut(usize) -> Result<Vec<f64>>,
    requests: &[(f64, f64)],
    grid: &Grid,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    let mut prev = density(0)?;
    let mut cum_prev = vec![0.0; prev.len()];
    let mut next_req = 0;
    while next_req < requests.len() && requests[next_req].0 <= nodes[0] {
        next_req += 1;
    }
    for i in 1..nodes.len() {
        if next_req >= requests.len() {
            break;
        }
        let cur = density(i)?;
        let h = nodes[i] - nodes[i - 1];
        let cum: Vec<f64> = cum_prev
            .iter()
            .zip(prev.iter().zip(&cur))
            .map(|(c, (a, b))| c + 0.5 * h * (a + b))
            .collect();
        while next_req < requests.len() && requests[next_req].0 <= nodes[i] * (1.0 + 1e-12) {
            let (t, r) = requests[next_req];
            let w = ((t - nodes[i - 1]) / h).clamp(0.0, 1.0);
            let at: Vec<f64> = cum_prev.iter().zip(&cum).map(|(a, b)| a + w * (b - a)).collect();
            best = best.max(max_ball_average(grid, &at, r));
            next_req += 1;
        }
        prev = cur;
        cum_prev = cum;
    }
    Ok(best)
}

/// `sup_{x,R} |B_R|^{-1} ∫_0^{R²}∫_{B(x,R)} |e^{tΔ}u₀|²` over grid centers and
/// dyadic radii up to half the box side. Returns the squared average.
pub fn bmo_minus1_norm(u0: &SpectralField) -> Result<f64> {
    u0.ensure_finite("bmo_minus1_norm input")?;
    let grid = u0.grid().clone();
    let radii = carleson_radii(&grid);
    let r_min = radii[0];
    let t_max = radii[radii.len() - 1].powi(2);
    let t_min = 1e-3 * r_min * r_min;
    let mut nodes = vec![0.0];
    let mut i = 0;
    loop {
        let t = t_min * 10f64.powf(i as f64 / TIMES_PER_DECADE as f64);
        if t >= t_max {
            break;
        }
        nodes.push(t);
        i += 1;
    }
    nodes.extend(radii.iter().map(|r| r * r));
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let requests: Vec<(f64, f64)> = radii.iter().map(|&r| (r * r, r)).collect();
    carleson_sup(&nodes, |k| Ok(squared_magnitude(&apply_heat(u0, nodes[k])?)), &requests, &grid)
}

/// The two parts of the path norm and their sum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathNorm {
    pub sup_term: f64,
    pub carleson_term: f64,
    pub value: f64,
}

/// `sup_{0<t<T} √t‖u(t)‖_∞ + (sup_{x, R²<T} |B_R|^{-1}∫_0^{R²}∫_{B(x,R)}|u|²)^{1/2}`
/// on a trajectory starting at `t = 0`, with `T` its final time.
pub fn path_norm_e_t(times: &[f64], fields: &[SpectralField]) -> Result<PathNorm> {
    if fields.is_empty() || fields.len() != times.len() {
        return Err(invalid("path norm needs a nonempty trajectory with matching times"));
    }
    if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("trajectory times must start at 0 and increase"));
    }
    for f in fields {
        f.ensure_finite("path norm snapshot")?;
    }
    let grid = fields[0].grid().clone();
    let t_end = times[times.len() - 1];
    let mut sup_term: f64 = 0.0;
    for (t, f) in times.iter().zip(fields).skip(1) {
        sup_term = sup_term.max(t.sqrt() * f.to_physical().max_magnitude());
    }
    let mut requests: Vec<(f64, f64)> = carleson_radii(&grid)
        .into_iter()
        .filter(|r| r * r < t_end)
        .map(|r| (r * r, r))
        .collect();
    let half = grid.length() / 2.0;
    if t_end > 0.0 && t_end.sqrt() <= half * (1.0 + 1e-12) {
        requests.push((t_end, t_end.sqrt()));
    }
    let carleson = if requests.is_empty() || times.len() < 2 {
        0.0
    } else {
        carleson_sup(times, |k| Ok(squared_magnitude(&fields[k])), &requests, &grid)?
    };
    let carleson_term = carleson.sqrt();
    Ok(PathNorm {
        sup_term,
        carleson_term,
        value: sup_term + carleson_term,
    })
}
