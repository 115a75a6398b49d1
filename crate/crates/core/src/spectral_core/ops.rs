use rustfft::num_complex::Complex64;

use super::field::{PhysicalField, SpectralField};
use super::grid::{product_size, Grid};
use crate::error::{invalid, Result};

/// Index of `F_{il}` inside a 9-component tensor field.
pub const fn tensor_index(i: usize, l: usize) -> usize {
    3 * i + l
}

/// `e^{tΔ}u`, applied exactly as the multiplier `e^{-|k|²t}`.
pub fn apply_heat(u: &SpectralField, t: f64) -> Result<SpectralField> {
    let mut out = u.clone();
    heat_in_place(&mut out, t)?;
    Ok(out)
}

pub fn heat_in_place(u: &mut SpectralField, t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(invalid(format!("heat time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(());
    }
    let weights = heat_weights(u.grid(), t);
    u.apply_radial(&weights);
    Ok(())
}

/// `e^{-mt}` indexed by `m = |k|²`.
pub fn heat_weights(grid: &Grid, t: f64) -> Vec<f64> {
    (0..=grid.max_k2()).map(|m| (-(m as f64) * t).exp()).collect()
}

/// Leray projection `I - kkᵀ/|k|²`; the mean mode is set to zero.
pub fn leray_project(v: &SpectralField) -> Result<SpectralField> {
    let mut out = v.clone();
    leray_in_place(&mut out)?;
    Ok(out)
}

pub fn leray_in_place(v: &mut SpectralField) -> Result<()> {
    v.expect_components(3)?;
    let grid = v.grid().clone();
    let len = grid.len();
    let k2 = grid.k2();
    let coeffs = v.coeffs_mut();
    for idx in 0..len {
        if k2[idx] == 0 {
            for c in 0..3 {
                coeffs[c * len + idx] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let k = grid.wavevector(idx);
        let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
        let inv = 1.0 / k2[idx] as f64;
        let dot = (coeffs[idx] * kf[0] + coeffs[len + idx] * kf[1] + coeffs[2 * len + idx] * kf[2]) * inv;
        for c in 0..3 {
            coeffs[c * len + idx] -= dot * kf[c];
        }
    }
    Ok(())
}

/// `∂_axis f` for every component.
pub fn derivative(f: &SpectralField, axis: usize) -> SpectralField {
    let mut out = f.clone();
    let grid = f.grid().clone();
    let len = grid.len();
    let comps = f.components();
    let coeffs = out.coeffs_mut();
    for idx in 0..len {
        let k = grid.wavevector(idx)[axis] as f64;
        for c in 0..comps {
            let v = coeffs[c * len + idx];
            coeffs[c * len + idx] = Complex64::new(-k * v.im, k * v.re);
        }
    }
    out
}

/// Gradient tensor `∂_l u_i` stored at `3i+l` (9 components for a vector).
pub fn gradient(u: &SpectralField) -> SpectralField {
    let grid = u.grid().clone();
    let len = grid.len();
    let comps = u.components();
    let mut out = SpectralField::zeros(&grid, 3 * comps);
    let src = u.coeffs();
    let dst = out.coeffs_mut();
    for idx in 0..len {
        let k = grid.wavevector(idx);
        for i in 0..comps {
            let v = src[i * len + idx];
            let iv = Complex64::new(-v.im, v.re);
            for l in 0..3 {
                dst[(3 * i + l) * len + idx] = iv * k[l] as f64;
            }
        }
    }
    out
}

/// Divergence of a 9-component tensor along its second slot,
/// `(∇·F)_i = Σ_l ∂_l F_{il}`.
pub fn tensor_divergence(t: &SpectralField) -> Result<SpectralField> {
    t.expect_components(9)?;
    let grid = t.grid().clone();
    let len = grid.len();
    let mut out = SpectralField::zeros(&grid, 3);
    let src = t.coeffs();
    let dst = out.coeffs_mut();
    for idx in 0..len {
        let k = grid.wavevector(idx);
        for i in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..3 {
                acc += src[tensor_index(i, l) * len + idx] * k[l] as f64;
            }
            dst[i * len + idx] = Complex64::new(-acc.im, acc.re);
        }
    }
    Ok(out)
}

/// Transpose `F_{il} -> F_{li}`.
pub fn tensor_transpose(t: &SpectralField) -> Result<SpectralField> {
    t.expect_components(9)?;
    let parts: Vec<SpectralField> = (0..3)
        .flat_map(|i| (0..3).map(move |l| (i, l)))
        .map(|(i, l)| t.scalar(tensor_index(l, i)))
        .collect();
    SpectralField::stack(&parts)
}

/// Pointwise outer product of two physical vector fields, `(f⊗g)_{il} = f_i g_l`.
pub fn outer_physical(f: &PhysicalField, g: &PhysicalField) -> Result<PhysicalField> {
    f.components()
        .eq(&3)
        .then_some(())
        .ok_or_else(|| invalid("outer product needs vector fields"))?;
    g.components()
        .eq(&3)
        .then_some(())
        .ok_or_else(|| invalid("outer product needs vector fields"))?;
    let grid = f.grid().clone();
    let len = grid.len();
    let mut out = PhysicalField::zeros(&grid, 9);
    for i in 0..3 {
        for l in 0..3 {
            let fi = f.component(i);
            let gl = g.component(l);
            let dst = &mut out.values_mut()[tensor_index(i, l) * len..(tensor_index(i, l) + 1) * len];
            for x in 0..len {
                dst[x] = fi[x] * gl[x];
            }
        }
    }
    Ok(out)
}

/// Grid on which the product of `a` and `b` is represented exactly.
pub fn exact_product_grid(a: &SpectralField, b: &SpectralField) -> Result<Grid> {
    a.expect_grid(b.grid())?;
    let m = a.max_mode().max(b.max_mode());
    if m <= a.grid().cutoff() {
        Ok(a.grid().product_grid())
    } else {
        Grid::new(product_size(m))
    }
}

/// Exact product of two scalar fields, returned on the padded grid.
pub fn product_exact(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.expect_components(1)?;
    b.expect_components(1)?;
    let pg = exact_product_grid(a, b)?;
    let both = SpectralField::stack(&[a.resample(&pg), b.resample(&pg)])?;
    let phys = both.to_physical();
    let len = pg.len();
    let vals: Vec<f64> = (0..len).map(|x| phys.values()[x] * phys.values()[len + x]).collect();
    Ok(PhysicalField::from_values(&pg, 1, vals)?.to_spectral())
}

/// Exact outer product `f⊗g` of two vector fields on the padded grid.
pub fn outer_exact(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.expect_components(3)?;
    g.expect_components(3)?;
    let pg = exact_product_grid(f, g)?;
    let fp = f.resample(&pg).to_physical();
    let gp = g.resample(&pg).to_physical();
    Ok(outer_physical(&fp, &gp)?.to_spectral())
}

/// `ℙ∇·(u⊗v)` with `(∇·(u⊗v))_i = Σ_j ∂_j(u_j v_i)`, dealiased.
pub fn nonlinear_term(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.expect_components(3)?;
    v.expect_same_shape(u)?;
    let up = u.to_physical();
    let vp = v.to_physical();
    // (u⊗v)_{ji} = u_j v_i, so ∂_j acts on the first slot; transpose to use tensor_divergence.
    let t = outer_physical(&vp, &up)?.to_spectral();
    let mut out = tensor_divergence(&t)?;
    leray_in_place(&mut out)?;
    out.dealias();
    Ok(out)
}

/// `ℙ∇·(w⊗w)` from point values of `w`, dealiased. Uses the six distinct
/// products only.
pub fn projected_self_advection(w: &PhysicalField) -> Result<SpectralField> {
    if w.components() != 3 {
        return Err(invalid("advection needs a vector field"));
    }
    let grid = w.grid().clone();
    let len = grid.len();
    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mut prod = PhysicalField::zeros(&grid, 6);
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        let wa = w.component(a);
        let wb = w.component(b);
        let dst = &mut prod.values_mut()[p * len..(p + 1) * len];
        for x in 0..len {
            dst[x] = wa[x] * wb[x];
        }
    }
    let ps = prod.to_spectral();
    const SLOT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    let mut out = SpectralField::zeros(&grid, 3);
    let src = ps.coeffs();
    let dst = out.coeffs_mut();
    let cut = grid.cutoff();
    for idx in 0..len {
        let k = grid.wavevector(idx);
        if k.iter().any(|x| x.abs() > cut) {
            continue;
        }
        for i in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                acc += src[SLOT[i][j] * len + idx] * k[j] as f64;
            }
            dst[i * len + idx] = Complex64::new(-acc.im, acc.re);
        }
    }
    leray_in_place(&mut out)?;
    Ok(out)
}

/// Pressure `π` with `-Δπ = ∂_i∂_j(u_i u_j)`, dealiased and mean-free.
pub fn pressure_from_velocity(u: &SpectralField) -> Result<SpectralField> {
    u.expect_components(3)?;
    let up = u.to_physical();
    let t = outer_physical(&up, &up)?.to_spectral();
    let grid = u.grid().clone();
    let len = grid.len();
    let k2 = grid.k2();
    let mut out = SpectralField::zeros(&grid, 1);
    let src = t.coeffs();
    let dst = out.coeffs_mut();
    for idx in 0..len {
        if k2[idx] == 0 {
            continue;
        }
        let k = grid.wavevector(idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc += src[tensor_index(i, j) * len + idx] * (k[i] * k[j]) as f64;
            }
        }
        dst[idx] = -acc / k2[idx] as f64;
    }
    out.dealias();
    Ok(out)
}

/// Time-quadrature record for a Duhamel integral.
#[derive(Clone, Debug)]
pub struct DuhamelOutput {
    pub field: SpectralField,
    /// Largest quadrature step used.
    pub step: f64,
    pub nodes: usize,
}

/// Integrand of the bilinear term, `-ℙ∇·(f⊗g)`.
pub fn bilinear_integrand(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let mut n = nonlinear_term(f, g)?;
    n.scale(-1.0);
    Ok(n)
}

/// Trapezoidal Duhamel recursion: given integrand samples `N_i` at times
/// `t_i`, returns `B(t_i) = ∫_0^{t_i} e^{(t_i-s)Δ} N(s) ds` for every node.
pub fn duhamel_series(times: &[f64], integrand: &[SpectralField]) -> Result<Vec<SpectralField>> {
    if times.is_empty() || times.len() != integrand.len() {
        return Err(invalid("integrand samples must match the time grid"));
    }
    if times[0] != 0.0 {
        return Err(invalid("time grid must start at 0"));
    }
    let grid = integrand[0].grid().clone();
    let mut out = Vec::with_capacity(times.len());
    let mut acc = SpectralField::zeros(&grid, integrand[0].components());
    out.push(acc.clone());
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        if !(h > 0.0) {
            return Err(invalid("snapshot times must be strictly increasing"));
        }
        let w = heat_weights(&grid, h);
        acc.apply_radial(&w);
        acc.axpy(0.5 * h, &integrand[i - 1].radial_filtered(&w));
        acc.axpy(0.5 * h, &integrand[i]);
        out.push(acc.clone());
    }
    Ok(out)
}

/// `B(f,g)(t) = -∫_0^t e^{(t-s)Δ} ℙ∇·(f⊗g)(s) ds` by the trapezoid rule on
/// the common snapshot grid, with linear interpolation inside the last step.
pub fn duhamel_bilinear(
    times: &[f64],
    f: &[SpectralField],
    g: &[SpectralField],
    t: f64,
) -> Result<DuhamelOutput> {
    if times.len() != f.len() || times.len() != g.len() {
        return Err(invalid("trajectories are sampled on different time grids"));
    }
    if times.is_empty() {
        return Err(invalid("empty trajectory"));
    }
    let horizon = *times.last().unwrap();
    if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) {
        return Err(invalid(format!("time {t} outside the trajectory horizon {horizon}")));
    }
    let grid = f[0].grid().clone();
    let mut acc = SpectralField::zeros(&grid, 3);
    let mut prev = bilinear_integrand(&f[0], &g[0])?;
    let mut step: f64 = 0.0;
    let mut nodes = 1;
    for i in 1..times.len() {
        if times[i - 1] >= t {
            break;
        }
        let full = times[i] <= t * (1.0 + 1e-14);
        let cur = bilinear_integrand(&f[i], &g[i])?;
        let (h, end) = if full {
            (times[i] - times[i - 1], cur.clone())
        } else {
            let h = t - times[i - 1];
            let th = h / (times[i] - times[i - 1]);
            let mut mid = prev.scaled(1.0 - th);
            mid.axpy(th, &cur);
            (h, mid)
        };
        let w = heat_weights(&grid, h);
        acc.apply_radial(&w);
        acc.axpy(0.5 * h, &prev.radial_filtered(&w));
        acc.axpy(0.5 * h, &end);
        step = step.max(h);
        nodes += 1;
        prev = cur;
        if !full {
            break;
        }
    }
    Ok(DuhamelOutput {
        field: acc,
        step,
        nodes,
    })
}
