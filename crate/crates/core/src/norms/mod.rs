//! Scalar functionals of fields: Lebesgue, Sobolev, Besov and Chemin–Lerner
//! norms, the Carleson-type norms of the heat extension, and inequality
//! probes.

mod carleson;
mod probes;

pub use carleson::{bmo_minus1_norm, carleson_radii, path_norm_e_t, PathNorm};
pub use probes::{
    chemin_lerner_heat_ratio, heat_characterization_ratio, interpolation_ratio, product_ratio,
    run_probe_suite, sobolev_semigroup_ratio, ProbeConfig, ProbeReport, ProbeSummary,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::littlewood_paley::LittlewoodPaleyBank;
use crate::spectral_core::{apply_heat, PhysicalField, SpectralField};

/// Regularity `s`, integrability `p` and summability `q`; infinite exponents
/// are `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<BesovParams> {
        let b = BesovParams { s, p, q };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(invalid("Besov regularity must be finite"));
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(invalid(format!(
                "Besov exponents need p, q >= 1, got p={}, q={}",
                self.p, self.q
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub j_range_used: (i32, i32),
    /// `(j, 2^{js}‖Δ̇_j f‖)` per block.
    pub per_block: Vec<(i32, f64)>,
}

/// `ℓ^q` aggregation; `q = ∞` gives the sup.
pub fn lq_sum(values: impl IntoIterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else {
        values.into_iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Riemann-sum `L^p` norm of point values (pointwise Euclidean magnitude).
pub fn lp_norm_physical(f: &PhysicalField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("L^p needs p >= 1, got {p}")));
    }
    let mag = f.magnitude();
    if mag.iter().any(|v| !v.is_finite()) {
        return Err(crate::error::Error::NonFinite("field values".into()));
    }
    if p.is_infinite() {
        return Ok(mag.into_iter().fold(0.0, f64::max));
    }
    let dv = f.grid().cell_volume();
    let s: f64 = if p == 2.0 {
        mag.iter().map(|v| v * v).sum()
    } else {
        mag.iter().map(|v| v.powf(p)).sum()
    };
    Ok((s * dv).powf(1.0 / p))
}

pub fn lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    f.ensure_finite("lp_norm input")?;
    lp_norm_physical(&f.to_physical(), p)
}

/// `‖f‖_{Ḣ^α}` or, when `homogeneous` is false, `(‖f‖₂² + ‖f‖²_{Ḣ^α})^{1/2}`.
pub fn sobolev_norm(f: &SpectralField, alpha: f64, homogeneous: bool) -> Result<f64> {
    f.ensure_finite("sobolev_norm input")?;
    if homogeneous && !(alpha > -1.5 && alpha < 1.5) {
        return Err(invalid(format!("homogeneous Sobolev index must lie in (-3/2, 3/2), got {alpha}")));
    }
    let grid = f.grid();
    let len = grid.len();
    let k2 = grid.k2();
    let mut hom = 0.0;
    for (i, c) in f.coeffs().iter().enumerate() {
        let m = k2[i % len];
        if m > 0 {
            hom += (m as f64).powf(alpha) * c.norm_sqr();
        }
    }
    let hom = grid.volume() * hom;
    if homogeneous {
        Ok(hom.sqrt())
    } else {
        Ok((hom + f.l2_norm_sq()).sqrt())
    }
}

pub fn besov_norm(f: &SpectralField, bank: &LittlewoodPaleyBank, params: BesovParams) -> Result<NormReport> {
    params.validate()?;
    f.expect_grid(bank.grid())?;
    f.ensure_finite("besov_norm input")?;
    let mut per_block = Vec::new();
    for j in bank.blocks() {
        let block = bank.delta(f, j)?;
        let v = 2f64.powf(j as f64 * params.s) * lp_norm(&block, params.p)?;
        per_block.push((j, v));
    }
    if per_block.is_empty() {
        return Err(invalid("empty dyadic range"));
    }
    Ok(NormReport {
        value: lq_sum(per_block.iter().map(|x| x.1), params.q),
        j_range_used: (bank.j_min(), bank.j_max()),
        per_block,
    })
}

/// Trapezoid-rule `L^r(0,T)` norm of samples; `r = ∞` gives the sup.
pub fn time_lr(times: &[f64], values: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        return values.iter().cloned().fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        acc += 0.5 * h * (values[i - 1].powf(r) + values[i].powf(r));
    }
    acc.powf(1.0 / r)
}

/// Time norm inside the block sum: `‖(2^{js}‖Δ̇_j u‖_{L^r_T L^p})_j‖_{ℓ^q}`.
pub fn chemin_lerner_norm(
    times: &[f64],
    fields: &[SpectralField],
    bank: &LittlewoodPaleyBank,
    r: f64,
    params: BesovParams,
) -> Result<NormReport> {
    params.validate()?;
    if fields.is_empty() || times.len() != fields.len() {
        return Err(invalid("trajectory is empty or mismatched"));
    }
    if !r.is_infinite() && fields.len() < 2 {
        return Err(invalid("a finite time exponent needs at least two snapshots"));
    }
    if !(r >= 1.0) {
        return Err(invalid(format!("time exponent must be >= 1, got {r}")));
    }
    let mut per_block = Vec::new();
    for j in bank.blocks() {
        let w = bank.phi_weights(j);
        let mut vals = Vec::with_capacity(fields.len());
        for f in fields {
            vals.push(lp_norm(&f.radial_filtered(&w), params.p)?);
        }
        per_block.push((j, 2f64.powf(j as f64 * params.s) * time_lr(times, &vals, r)));
    }
    Ok(NormReport {
        value: lq_sum(per_block.iter().map(|x| x.1), params.q),
        j_range_used: (bank.j_min(), bank.j_max()),
        per_block,
    })
}

/// `sup_t t^{-s/2}‖e^{tΔ}f‖_{L^p}` over the dyadic times `t = 4^{-m}`.
pub fn heat_sup_norm(f: &SpectralField, s: f64, p: f64, m_range: (i32, i32)) -> Result<f64> {
    if !(s < 0.0) {
        return Err(invalid(format!("heat characterization needs s < 0, got {s}")));
    }
    let mut best: f64 = 0.0;
    for m in m_range.0..=m_range.1 {
        let t = 4f64.powi(-m);
        let v = t.powf(-s / 2.0) * lp_norm(&apply_heat(f, t)?, p)?;
        best = best.max(v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::{Complex64, Grid};

    #[test]
    fn h0_matches_l2() {
        let g = Grid::new(16).unwrap();
        let f = crate::datagen::random_solenoidal(&g, 1, crate::datagen::gaussian_spectrum(3.0));
        let a = sobolev_norm(&f, 0.0, true).unwrap();
        assert!((a - f.l2_norm()).abs() < 1e-14);
    }

    #[test]
    fn single_mode_sobolev_scaling() {
        let g = Grid::new(16).unwrap();
        let f = SpectralField::single_mode(&g, 1, 0, [2, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let a = sobolev_norm(&f, 0.7, true).unwrap();
        assert!((a - 2f64.powf(0.7) * f.l2_norm()).abs() < 1e-13);
    }

    #[test]
    fn bad_exponents_rejected() {
        assert!(BesovParams::new(0.0, 0.5, 2.0).is_err());
        assert!(BesovParams::new(f64::NAN, 2.0, 2.0).is_err());
        let g = Grid::new(16).unwrap();
        let f = SpectralField::zeros(&g, 1);
        assert!(lp_norm(&f, 0.5).is_err());
        assert!(sobolev_norm(&f, 1.6, true).is_err());
    }
}
