//! Dyadic frequency decomposition: the smooth profiles, the block and
//! low-pass projectors, and the exact product-support identities.

mod kernels;

pub use kernels::{sample_localized_kernel, KernelBound, KernelSample};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::spectral_core::{product_exact, Grid, SpectralField};

fn glue(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Low-pass profile: 1 on `r <= 3/4`, 0 on `r >= 4/3`, smooth in between.
pub fn chi(r: f64) -> f64 {
    let a = glue(4.0 / 3.0 - r);
    let b = glue(r - 0.75);
    if a == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Annulus profile `φ(r) = χ(r/2) - χ(r)`, supported in `(3/4, 8/3)`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Projector bank on a grid.
///
/// The block range runs from `j_min = -1` (so that `Σ_j Δ̇_j = I` on every
/// nonzero lattice mode) to the last block whose support meets the lattice.
#[derive(Clone, Debug)]
pub struct LittlewoodPaleyBank {
    grid: Grid,
    j_min: i32,
    j_max: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BankRange {
    pub j_min: i32,
    pub j_max: i32,
    pub n: usize,
}

pub const J_MIN: i32 = -1;

/// Block-level product-support checks report this residual.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupportResidual {
    pub residual: f64,
    pub scale: f64,
}

impl SupportResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

impl LittlewoodPaleyBank {
    pub fn new(grid: &Grid) -> Result<LittlewoodPaleyBank> {
        let rmax = (grid.max_k2() as f64).sqrt();
        let mut j_max = 0;
        while 0.75 * 2f64.powi(j_max + 1) <= rmax {
            j_max += 1;
        }
        if j_max - J_MIN + 1 < 3 {
            return Err(invalid(format!("n={} hosts fewer than 3 dyadic blocks", grid.n())));
        }
        Ok(LittlewoodPaleyBank {
            grid: grid.clone(),
            j_min: J_MIN,
            j_max,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn range(&self) -> BankRange {
        BankRange {
            j_min: self.j_min,
            j_max: self.j_max,
            n: self.grid.n(),
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn check_block(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::OutOfRange {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        Ok(())
    }

    /// `φ(2^{-j}√m)` for `m = 0..=max|k|²`.
    pub fn phi_weights(&self, j: i32) -> Vec<f64> {
        radial_table(&self.grid, |r| phi(r * 2f64.powi(-j)))
    }

    /// `χ(2^{-j}√m)` for `m = 0..=max|k|²`.
    pub fn chi_weights(&self, j: i32) -> Vec<f64> {
        radial_table(&self.grid, |r| chi(r * 2f64.powi(-j)))
    }

    /// `Δ̇_j f`.
    pub fn delta(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_block(j)?;
        f.expect_grid(&self.grid)?;
        Ok(f.radial_filtered(&self.phi_weights(j)))
    }

    /// `Ṡ_j f = χ(2^{-j}D) f`, defined for every integer `j`.
    pub fn low_pass(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        f.expect_grid(&self.grid)?;
        if j > self.j_max {
            return Ok(f.clone());
        }
        Ok(f.radial_filtered(&self.chi_weights(j)))
    }

    /// `I - Ṡ_j`.
    pub fn high_pass(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        Ok(f - &self.low_pass(f, j)?)
    }

    /// Largest `|χ(r) + Σ_{j=0}^{j_max} φ(2^{-j}r) - 1|` over nonzero lattice radii.
    pub fn partition_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 1..=self.grid.max_k2() {
            let r = (m as f64).sqrt();
            let mut s = chi(r);
            for j in 0..=self.j_max {
                s += phi(r * 2f64.powi(-j));
            }
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }

    /// Largest `|Σ_{j∈range} φ(2^{-j}r) - 1|` over nonzero lattice radii.
    pub fn block_sum_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 1..=self.grid.max_k2() {
            let r = (m as f64).sqrt();
            let s: f64 = self.blocks().map(|j| phi(r * 2f64.powi(-j))).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }
}

fn radial_table(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..=grid.max_k2()).map(|m| f((m as f64).sqrt())).collect()
}

/// `‖Ṡ_j(Ṡ_{j-n0}a · Ṡ_{j-n0}b) - Ṡ_{j-n0}a · Ṡ_{j-n0}b‖₂` with exact
/// products, for any `n0` (including violating choices).
pub fn low_product_support_residual(
    bank: &LittlewoodPaleyBank,
    a: &SpectralField,
    b: &SpectralField,
    j: i32,
    n0: i32,
) -> Result<SupportResidual> {
    let la = bank.low_pass(a, j - n0)?;
    let lb = bank.low_pass(b, j - n0)?;
    let prod = product_exact(&la, &lb)?;
    let pbank = LittlewoodPaleyBank::new(prod.grid())?;
    let filtered = pbank.low_pass(&prod, j)?;
    Ok(SupportResidual {
        residual: (&filtered - &prod).l2_norm(),
        scale: a.l2_norm() * b.l2_norm(),
    })
}

/// Support identity for low-low products with `n0 >= 3`.
pub fn check_product_support_low(
    bank: &LittlewoodPaleyBank,
    a: &SpectralField,
    b: &SpectralField,
    j: i32,
    n0: i32,
) -> Result<SupportResidual> {
    if n0 < 3 {
        return Err(invalid(format!("n0 must be at least 3, got {n0}")));
    }
    bank.check_block(j)?;
    if j - n0 < bank.j_min() {
        return Err(Error::OutOfRange {
            j: j - n0,
            min: bank.j_min(),
            max: bank.j_max(),
        });
    }
    low_product_support_residual(bank, a, b, j, n0)
}

/// `‖Ṡ_j(Δ̇_{j1}a · Δ̇_{j2}b)‖₂` with exact products, no index checks.
pub fn high_product_support_residual(
    bank: &LittlewoodPaleyBank,
    a: &SpectralField,
    b: &SpectralField,
    j: i32,
    j1: i32,
    j2: i32,
) -> Result<SupportResidual> {
    let da = bank.delta(a, j1)?;
    let db = bank.delta(b, j2)?;
    let prod = product_exact(&da, &db)?;
    let pbank = LittlewoodPaleyBank::new(prod.grid())?;
    Ok(SupportResidual {
        residual: pbank.low_pass(&prod, j)?.l2_norm(),
        scale: a.l2_norm() * b.l2_norm(),
    })
}

/// Support identity for high-high products: requires `n1 >= 5`,
/// `j1 >= j + n1` and `j2 <= j1 - 2`.
pub fn check_product_support_high(
    bank: &LittlewoodPaleyBank,
    a: &SpectralField,
    b: &SpectralField,
    (j, j1, j2): (i32, i32, i32),
    n1: i32,
) -> Result<SupportResidual> {
    if n1 < 5 {
        return Err(invalid(format!("n1 must be at least 5, got {n1}")));
    }
    if j1 < j + n1 {
        return Err(invalid(format!("need j1 >= j + n1, got j1={j1}, j={j}, n1={n1}")));
    }
    if j2 > j1 - 2 {
        return Err(invalid(format!("need j2 <= j1 - 2, got j1={j1}, j2={j2}")));
    }
    high_product_support_residual(bank, a, b, j, j1, j2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_supports() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(0.75), 1.0);
        assert_eq!(chi(4.0 / 3.0), 0.0);
        assert_eq!(phi(0.5), 0.0);
        assert_eq!(phi(0.75), 0.0);
        assert_eq!(phi(8.0 / 3.0), 0.0);
        assert!(phi(1.0) > 0.0 && phi(2.0) > 0.0);
    }

    #[test]
    fn bank_ranges() {
        for (n, jm) in [(16usize, 4), (32, 5), (48, 5), (64, 6)] {
            let b = LittlewoodPaleyBank::new(&Grid::new(n).unwrap()).unwrap();
            assert_eq!(b.j_min(), -1);
            assert_eq!(b.j_max(), jm, "n={n}");
        }
    }

    #[test]
    fn radius_one_shell_sees_only_chi_and_first_block() {
        let r: f64 = 1.0;
        for j in 1..6 {
            assert_eq!(phi(r * 2f64.powi(-j)), 0.0);
        }
        assert!((chi(r) + phi(r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_block_rejected() {
        let b = LittlewoodPaleyBank::new(&Grid::new(16).unwrap()).unwrap();
        let f = SpectralField::zeros(b.grid(), 1);
        assert!(b.delta(&f, 9).is_err());
        assert!(b.delta(&f, -2).is_err());
    }
}
