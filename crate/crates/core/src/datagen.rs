//! Seeded synthetic fields: random divergence-free data, shell-normalized
//! rough data, and perturbation directions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::norms::lp_norm;
use crate::spectral_core::{leray_in_place, Complex64, Grid, SpectralField};

fn gaussian_coeffs(grid: &Grid, components: usize, rng: &mut ChaCha8Rng, weight: impl Fn(f64) -> f64) -> SpectralField {
    let len = grid.len();
    let mut f = SpectralField::zeros(grid, components);
    let k2 = grid.k2();
    {
        let coeffs = f.coeffs_mut();
        for c in 0..components {
            for idx in 0..len {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                if k2[idx] == 0 || !grid.is_retained(idx) {
                    continue;
                }
                let w = weight((k2[idx] as f64).sqrt());
                coeffs[c * len + idx] = Complex64::new(re, im) * w;
            }
        }
    }
    f.symmetrize();
    f
}

/// Random dealiased scalar field with spectrum `weight(|k|)`, unit `L²` norm.
pub fn random_scalar(grid: &Grid, seed: u64, weight: impl Fn(f64) -> f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = gaussian_coeffs(grid, 1, &mut rng, weight);
    let n = f.l2_norm();
    if n > 0.0 {
        f.scale(1.0 / n);
    }
    f
}

/// Random dealiased divergence-free vector field with spectrum
/// `weight(|k|)`, unit `L²` norm.
pub fn random_solenoidal(grid: &Grid, seed: u64, weight: impl Fn(f64) -> f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = gaussian_coeffs(grid, 3, &mut rng, weight);
    leray_in_place(&mut f).expect("vector field");
    let n = f.l2_norm();
    if n > 0.0 {
        f.scale(1.0 / n);
    }
    f
}

/// Smooth spectrum `exp(-(|k|/k0)²)`.
pub fn gaussian_spectrum(k0: f64) -> impl Fn(f64) -> f64 {
    move |k| (-(k / k0).powi(2)).exp()
}

/// Spectrum restricted to `|k| <= kmax` with a flat profile.
pub fn band_spectrum(kmin: f64, kmax: f64) -> impl Fn(f64) -> f64 {
    move |k| if k >= kmin && k <= kmax { 1.0 } else { 0.0 }
}

/// Parameters of a shell-normalized rough datum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughDatum {
    pub s: f64,
    pub q: f64,
    pub amplitude: f64,
    pub seed: u64,
}

/// Random divergence-free field whose dyadic shells `2^j <= |k| < 2^{j+1}`
/// are each scaled to `‖shell‖_{L^q} = amplitude·2^{-js}`.
pub fn rough_datum(grid: &Grid, spec: &RoughDatum) -> Result<SpectralField> {
    if !(spec.q >= 1.0) || !spec.s.is_finite() || !(spec.amplitude >= 0.0) {
        return Err(invalid("rough datum needs q >= 1, finite s and a nonnegative amplitude"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw = gaussian_coeffs(grid, 3, &mut rng, |_| 1.0);
    let len = grid.len();
    let k2 = grid.k2();
    let mut out = SpectralField::zeros(grid, 3);
    let mut j = 0;
    loop {
        let lo = 1u64 << (2 * j);
        let hi = 1u64 << (2 * (j + 1));
        if lo > grid.max_k2() as u64 {
            break;
        }
        let mut shell = raw.clone();
        {
            let coeffs = shell.coeffs_mut();
            for c in 0..3 {
                for idx in 0..len {
                    let m = k2[idx] as u64;
                    if m < lo || m >= hi {
                        coeffs[c * len + idx] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        leray_in_place(&mut shell)?;
        let norm = lp_norm(&shell, spec.q)?;
        if norm > 0.0 {
            shell.scale(spec.amplitude * 2f64.powf(-(j as f64) * spec.s) / norm);
            out += &shell;
        }
        j += 1;
    }
    Ok(out)
}

/// Direction used to perturb an initial datum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Seeded random solenoidal field with a smooth spectrum.
    Random,
    /// The datum's highest populated dyadic shell, normalized.
    TopShell,
}

/// Unit-`L²` perturbation direction.
pub fn perturbation(grid: &Grid, datum: &SpectralField, kind: PerturbationKind, seed: u64) -> Result<SpectralField> {
    match kind {
        PerturbationKind::Random => Ok(random_solenoidal(grid, seed, gaussian_spectrum(3.0))),
        PerturbationKind::TopShell => {
            datum.expect_grid(grid)?;
            let len = grid.len();
            let k2 = grid.k2();
            let mut top = 0u32;
            for c in 0..3 {
                for (idx, v) in datum.component(c).iter().enumerate() {
                    if v.norm() > 0.0 {
                        top = top.max(k2[idx]);
                    }
                }
            }
            if top == 0 {
                return Err(invalid("datum has no populated shell"));
            }
            let j = ((top as f64).sqrt().log2().floor()) as u32;
            let lo = 1u64 << (2 * j);
            let mut f = datum.clone();
            let coeffs = f.coeffs_mut();
            for c in 0..3 {
                for idx in 0..len {
                    if (k2[idx] as u64) < lo {
                        coeffs[c * len + idx] = Complex64::new(0.0, 0.0);
                    }
                }
            }
            let n = f.l2_norm();
            f.scale(1.0 / n);
            Ok(f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solenoidal_fields_are_real_unit_and_divergence_free() {
        let g = Grid::new(16).unwrap();
        let f = random_solenoidal(&g, 7, gaussian_spectrum(3.0));
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        assert!(f.divergence_max() < 1e-12);
        assert!(f.hermitian_defect() < 1e-15);
        assert_eq!(f.max_mode() <= g.cutoff(), true);
    }

    #[test]
    fn rough_datum_shells_hit_their_targets() {
        let g = Grid::new(16).unwrap();
        let spec = RoughDatum { s: -0.4, q: 4.0, amplitude: 1.5, seed: 3 };
        let u = rough_datum(&g, &spec).unwrap();
        assert!(u.divergence_max() < 1e-12);
        let same = rough_datum(&g, &spec).unwrap();
        assert_eq!(u.coeffs(), same.coeffs());
    }
}
