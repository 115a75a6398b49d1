use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::phi;
use crate::error::{invalid, Result};
use crate::spectral_core::{Grid, SpectralField};

/// Frequency-localized heat kernels evaluated on the physical grid.
///
/// `projected[(3i+j)*3+m]` holds the kernel with symbol
/// `φ(2^{-q}k) e^{-t|k|²} (δ_ij - k_ik_j/|k|²) i k_m`, `projection[3i+j]` the
/// same without the derivative, `scalar` the bare `φ(2^{-q}k) e^{-t|k|²}`.
#[derive(Clone, Debug)]
pub struct KernelSample {
    pub q: i32,
    pub t: f64,
    pub projected: Vec<Vec<f64>>,
    pub projection: Vec<Vec<f64>>,
    pub scalar: Vec<f64>,
    pub bound: KernelBound,
}

/// Smallest constants making the localized bounds hold on the sampled grid
/// with decay rate `c`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelBound {
    pub c: f64,
    pub projected_constant: f64,
    pub other_constant: f64,
}

/// Periodic distance from the origin of grid point `idx`.
fn periodic_radius(grid: &Grid, idx: usize) -> f64 {
    let n = grid.n();
    let h = grid.length() / n as f64;
    let coords = [idx / (n * n), (idx / n) % n, idx % n];
    coords
        .iter()
        .map(|&i| {
            let d = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            (d * h).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

pub fn sample_localized_kernel(q: i32, t: f64, grid: &Grid) -> Result<KernelSample> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("kernel time must be positive, got {t}")));
    }
    let len = grid.len();
    let k2 = grid.k2();
    let scale = 1.0 / (2.0 * std::f64::consts::PI).powi(3);
    let base: Vec<f64> = (0..len)
        .map(|idx| {
            let m = k2[idx] as f64;
            scale * phi(m.sqrt() * 2f64.powi(-q)) * (-m * t).exp()
        })
        .collect();

    let transform = |symbol: &dyn Fn(usize) -> Complex64| -> Vec<f64> {
        let coeffs: Vec<Complex64> = (0..len).map(symbol).collect();
        let f = SpectralField::from_coeffs(grid, 1, coeffs).expect("scalar field");
        f.to_physical().values().to_vec()
    };

    let proj_entry = |idx: usize, i: usize, j: usize| -> f64 {
        let m = k2[idx] as f64;
        if m == 0.0 {
            return 0.0;
        }
        let k = grid.wavevector(idx);
        let d = if i == j { 1.0 } else { 0.0 };
        d - (k[i] * k[j]) as f64 / m
    };

    let scalar = transform(&|idx| Complex64::new(base[idx], 0.0));
    let mut projection = Vec::with_capacity(9);
    let mut projected = Vec::with_capacity(27);
    for i in 0..3 {
        for j in 0..3 {
            projection.push(transform(&|idx| Complex64::new(base[idx] * proj_entry(idx, i, j), 0.0)));
            for m in 0..3 {
                projected.push(transform(&|idx| {
                    let km = grid.wavevector(idx)[m] as f64;
                    Complex64::new(0.0, base[idx] * proj_entry(idx, i, j) * km)
                }));
            }
        }
    }

    let c = 9.0 / 16.0;
    let lam = 2f64.powi(q);
    let decay = (-c * t * lam * lam).exp();
    let mut projected_constant: f64 = 0.0;
    let mut other_constant: f64 = 0.0;
    for idx in 0..len {
        let r = periodic_radius(grid, idx);
        let w = 1.0 + (lam * r).powi(6);
        let p = projected.iter().map(|g| g[idx].abs()).fold(0.0, f64::max);
        projected_constant = projected_constant.max(p * w / (lam.powi(4) * decay));
        let o = projection.iter().map(|g| g[idx].abs()).fold(0.0, f64::max) + scalar[idx].abs();
        other_constant = other_constant.max(o * w / (lam.powi(3) * decay));
    }
    Ok(KernelSample {
        q,
        t,
        projected,
        projection,
        scalar,
        bound: KernelBound {
            c,
            projected_constant,
            other_constant,
        },
    })
}
