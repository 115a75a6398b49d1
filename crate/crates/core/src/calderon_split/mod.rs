//! Splitting rough data into a small subcritical-Besov piece and a piece of
//! finite Sobolev regularity by thresholding each dyadic block.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::littlewood_paley::LittlewoodPaleyBank;
use crate::norms::{besov_norm, sobolev_norm, BesovParams};
use crate::spectral_core::{leray_in_place, PhysicalField, SpectralField};

/// How the integrability exponent is chosen once the smallest admissible
/// even value is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExponentPolicy {
    #[default]
    Smallest,
    Doubled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub s: f64,
    pub q: f64,
    /// `s + 1 - 2/q`.
    pub eps_tilde: f64,
    pub p: f64,
    pub delta_hat: f64,
    pub theta: f64,
    pub alpha_hat: f64,
    pub delta: f64,
    /// Regularity of the small piece, `-1 + 3/p + δ`.
    pub s1: f64,
    pub epsilon: f64,
}

fn delta_hat_for(s: f64, q: f64, p: f64) -> f64 {
    (1.0 - 2.0 / p) / (1.0 - 2.0 / q) * s + 1.0 - 3.0 / p
}

impl SplitParams {
    pub fn select(s: f64, q: f64, alpha_fraction: f64, policy: ExponentPolicy) -> Result<SplitParams> {
        if !(q > 3.0) || !q.is_finite() {
            return Err(invalid(format!("splitting needs q > 3, got q={q}")));
        }
        let lower = -1.0 + 2.0 / q;
        if !(s > lower && s < 0.0) {
            return Err(invalid(format!("splitting needs s in ({lower}, 0), got s={s}")));
        }
        if !(alpha_fraction > 0.0 && alpha_fraction < 1.0) {
            return Err(invalid(format!("alpha_fraction must lie in (0,1), got {alpha_fraction}")));
        }
        let mut p = 2.0 * ((q.max(4.0) / 2.0).floor() + 1.0);
        while delta_hat_for(s, q, p) <= 0.0 {
            p += 2.0;
            if p > 1e6 {
                return Err(invalid("no admissible integrability exponent found"));
            }
        }
        if policy == ExponentPolicy::Doubled {
            p *= 2.0;
        }
        SplitParams::with_exponent(s, q, p, alpha_fraction)
    }

    /// Completes the chain for an explicit `p`.
    pub fn with_exponent(s: f64, q: f64, p: f64, alpha_fraction: f64) -> Result<SplitParams> {
        if !(p > q.max(4.0)) {
            return Err(invalid(format!("need p > max(q, 4), got p={p}")));
        }
        let delta_hat = delta_hat_for(s, q, p);
        if !(delta_hat > 0.0) {
            return Err(invalid(format!("p={p} gives a nonpositive delta_hat {delta_hat}")));
        }
        let theta = 1.0 - (1.0 - 2.0 / q) / (1.0 - 2.0 / p);
        let alpha_hat = alpha_fraction * (1.5f64).min(delta_hat * (1.0 - theta) / theta);
        let delta = delta_hat - theta * alpha_hat / (1.0 - theta);
        let params = SplitParams {
            s,
            q,
            eps_tilde: s + 1.0 - 2.0 / q,
            p,
            delta_hat,
            theta,
            alpha_hat,
            delta,
            s1: -1.0 + 3.0 / p + delta,
            epsilon: 1.0,
        };
        params.check_invariants()?;
        Ok(params)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<SplitParams> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let lhs = (1.0 - 2.0 / self.p) / (1.0 - 2.0 / self.q) * self.s;
        let rhs = -1.0 + 3.0 / self.p + self.delta_hat;
        let checks = [
            ((lhs - rhs).abs() <= 1e-12, "exponent relation"),
            (self.theta > 0.0 && self.theta < 1.0, "theta in (0,1)"),
            (
                self.alpha_hat > 0.0 && self.alpha_hat < (1.5f64).min(self.delta_hat * (1.0 - self.theta) / self.theta),
                "alpha_hat range",
            ),
            (self.delta > 0.0 && self.delta < 1.0 - 3.0 / self.p, "delta in (0, 1-3/p)"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(invalid(format!("split parameter invariant violated: {what}")));
            }
        }
        Ok(())
    }

    /// Decay rate `min(α̂/2, 1/p, δ/2)` of the commutator stress in the
    /// cut-off index.
    pub fn stress_decay_rate(&self) -> f64 {
        (self.alpha_hat / 2.0).min(1.0 / self.p).min(self.delta / 2.0)
    }

    /// Cut level `ε·2^{j(sq - s₁p)/(p-q)}` for block `j`.
    pub fn threshold(&self, j: i32) -> f64 {
        self.epsilon * 2f64.powf(j as f64 * (self.s * self.q - self.s1 * self.p) / (self.p - self.q))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SplitBounds {
    /// `‖u1‖_{Ḃ^{s₁}_{p,p}}`.
    pub besov_small: f64,
    /// `‖u2‖_{Ḣ^{α̂}}`.
    pub sobolev_large: f64,
    pub l2_small: f64,
    pub l2_large: f64,
    pub l2_datum: f64,
    /// `‖u0‖_{Ḃ^s_{q,q}}`.
    pub besov_datum: f64,
    /// `‖u1‖^p / (ε^{p-q}‖u0‖^q)`, bounded by 1 in the continuum estimate.
    pub small_ratio: f64,
    /// `‖u2‖²_{Ḣ^{α̂}} / (ε^{2-q}‖u0‖^q)`.
    pub large_ratio: f64,
    /// `max(‖u1‖₂, ‖u2‖₂) / ‖u0‖₂`.
    pub l2_constant: f64,
    /// `‖u1 + u2 - u0‖₂ / ‖u0‖₂` before and after projection.
    pub reconstruction_raw: f64,
    pub reconstruction: f64,
}

#[derive(Clone, Debug)]
pub struct SplitResult {
    pub params: SplitParams,
    /// Small piece in the subcritical Besov space.
    pub u1: SpectralField,
    /// Large piece of finite Sobolev regularity.
    pub u2: SpectralField,
    pub verified_bounds: SplitBounds,
}

/// Cuts every block `Δ̇_j u0` componentwise at `level(j)`; values with
/// `|v| >= level` go to the large part. Returns `(small, large)` unprojected.
pub fn block_threshold_split(
    u0: &SpectralField,
    bank: &LittlewoodPaleyBank,
    level: impl Fn(i32) -> f64,
) -> Result<(SpectralField, SpectralField)> {
    u0.expect_grid(bank.grid())?;
    u0.ensure_finite("split input")?;
    let grid = bank.grid();
    let comps = u0.components();
    let mut small = PhysicalField::zeros(grid, comps);
    let mut large = PhysicalField::zeros(grid, comps);
    for j in bank.blocks() {
        let n = level(j);
        let block = bank.delta(u0, j)?.to_physical();
        for ((v, s), l) in block
            .values()
            .iter()
            .zip(small.values_mut().iter_mut())
            .zip(large.values_mut().iter_mut())
        {
            if v.abs() >= n {
                *l += v;
            } else {
                *s += v;
            }
        }
    }
    Ok((small.to_spectral(), large.to_spectral()))
}

fn relative(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

pub fn threshold_split(u0: &SpectralField, bank: &LittlewoodPaleyBank, params: &SplitParams) -> Result<SplitResult> {
    params.check_invariants()?;
    u0.expect_components(3)?;
    let (mut u1, mut u2) = block_threshold_split(u0, bank, |j| params.threshold(j))?;
    let l2_datum = u0.l2_norm();
    let raw = (&(&u1 + &u2) - u0).l2_norm();
    leray_in_place(&mut u1)?;
    leray_in_place(&mut u2)?;
    u1.dealias();
    u2.dealias();
    let recon = (&(&u1 + &u2) - u0).l2_norm();
    let bounds = measure(u0, &u1, &u2, bank, params, relative(raw, l2_datum), relative(recon, l2_datum))?;
    Ok(SplitResult {
        params: *params,
        u1,
        u2,
        verified_bounds: bounds,
    })
}

fn measure(
    u0: &SpectralField,
    u1: &SpectralField,
    u2: &SpectralField,
    bank: &LittlewoodPaleyBank,
    params: &SplitParams,
    reconstruction_raw: f64,
    reconstruction: f64,
) -> Result<SplitBounds> {
    let besov_small = besov_norm(u1, bank, BesovParams::new(params.s1, params.p, params.p)?)?.value;
    let sobolev_large = sobolev_norm(u2, params.alpha_hat, true)?;
    let besov_datum = besov_norm(u0, bank, BesovParams::new(params.s, params.q, params.q)?)?.value;
    let l2_datum = u0.l2_norm();
    let l2_small = u1.l2_norm();
    let l2_large = u2.l2_norm();
    let base = besov_datum.powf(params.q);
    Ok(SplitBounds {
        besov_small,
        sobolev_large,
        l2_small,
        l2_large,
        l2_datum,
        besov_datum,
        small_ratio: besov_small.powf(params.p) / (params.epsilon.powf(params.p - params.q) * base),
        large_ratio: sobolev_large.powi(2) / (params.epsilon.powf(2.0 - params.q) * base),
        l2_constant: relative(l2_small.max(l2_large), l2_datum),
        reconstruction_raw,
        reconstruction,
    })
}

/// Checks a split: the reconstruction is exact, both pieces are
/// divergence-free, and both `L²` norms are at most `l2_cap·‖u0‖₂`.
pub fn verify_split(result: &SplitResult, u0: &SpectralField, l2_cap: f64) -> Result<SplitBounds> {
    let b = result.verified_bounds;
    let recon = relative((&(&result.u1 + &result.u2) - u0).l2_norm(), u0.l2_norm());
    if !(recon < 1e-12) || !(b.reconstruction_raw < 1e-12) {
        return Err(Error::Format(format!(
            "split reconstruction failed: relative residual {recon:e} (raw {:e})",
            b.reconstruction_raw
        )));
    }
    let div = result.u1.divergence_max().max(result.u2.divergence_max());
    if !(div < 1e-12) {
        return Err(invalid(format!("split pieces are not divergence-free: {div:e}")));
    }
    if !(b.l2_constant <= l2_cap) {
        return Err(invalid(format!("L2 constant {} exceeds the cap {l2_cap}", b.l2_constant)));
    }
    Ok(b)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub bounds: SplitBounds,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub params: SplitParams,
    pub rows: Vec<SweepRow>,
    /// Fit of `log ‖u1‖^p_{Ḃ^{s₁}_{p,p}}` against `log ε`.
    pub small_fit: LineFit,
    /// Fit of `log ‖u2‖²_{Ḣ^{α̂}}` against `log ε`.
    pub large_fit: LineFit,
    pub small_target: f64,
    pub large_target: f64,
    pub small_relative_error: f64,
    pub large_relative_error: f64,
    /// Whether `‖u2‖₂` is nonincreasing along the (ascending) sweep.
    pub large_l2_monotone: bool,
    pub max_l2_constant: f64,
    pub max_reconstruction: f64,
}

pub fn epsilon_sweep(
    u0: &SpectralField,
    bank: &LittlewoodPaleyBank,
    params: &SplitParams,
    epsilons: &[f64],
) -> Result<SweepReport> {
    if epsilons.len() < 2 {
        return Err(invalid("an epsilon sweep needs at least two values"));
    }
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rows = Vec::new();
    for &e in &eps {
        let p = params.with_epsilon(e)?;
        let r = threshold_split(u0, bank, &p)?;
        rows.push(SweepRow {
            epsilon: e,
            bounds: r.verified_bounds,
        });
    }
    let small: Vec<f64> = rows.iter().map(|r| r.bounds.besov_small.powf(params.p)).collect();
    let large: Vec<f64> = rows.iter().map(|r| r.bounds.sobolev_large.powi(2)).collect();
    let small_fit = log_log_fit(&eps, &small)?;
    let large_fit = log_log_fit(&eps, &large)?;
    let small_target = params.p - params.q;
    let large_target = 2.0 - params.q;
    let large_l2_monotone = rows
        .windows(2)
        .all(|w| w[1].bounds.l2_large <= w[0].bounds.l2_large * (1.0 + 1e-12));
    Ok(SweepReport {
        params: *params,
        small_relative_error: ((small_fit.slope - small_target) / small_target).abs(),
        large_relative_error: ((large_fit.slope - large_target) / large_target).abs(),
        max_l2_constant: rows.iter().map(|r| r.bounds.l2_constant).fold(0.0, f64::max),
        max_reconstruction: rows.iter().map(|r| r.bounds.reconstruction).fold(0.0, f64::max),
        rows,
        small_fit,
        large_fit,
        small_target,
        large_target,
        large_l2_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_chain() {
        let p = SplitParams::select(-0.4, 4.0, 0.5, ExponentPolicy::Smallest).unwrap();
        assert_eq!(p.p, 8.0);
        assert!((p.delta_hat - 0.025).abs() < 1e-12);
        assert!((p.theta - 1.0 / 3.0).abs() < 1e-12);
        assert!((p.alpha_hat - 0.025).abs() < 1e-12);
        assert!((p.delta - 0.0125).abs() < 1e-12);
        assert!((p.s1 + 0.6125).abs() < 1e-12);
        assert!((p.stress_decay_rate() - 0.00625).abs() < 1e-15);
    }

    #[test]
    fn doubled_exponent() {
        let p = SplitParams::select(-0.4, 4.0, 0.5, ExponentPolicy::Doubled).unwrap();
        assert_eq!(p.p, 16.0);
        assert!((p.delta_hat - 0.1125).abs() < 1e-12);
        assert!((1.0 - p.theta - 0.5 / 0.875).abs() < 1e-12);
    }

    #[test]
    fn hypotheses_enforced() {
        assert!(SplitParams::select(-0.6, 4.0, 0.5, ExponentPolicy::Smallest).is_err());
        assert!(SplitParams::select(0.1, 4.0, 0.5, ExponentPolicy::Smallest).is_err());
        assert!(SplitParams::select(-0.2, 3.0, 0.5, ExponentPolicy::Smallest).is_err());
        assert!(SplitParams::select(-0.4, 4.0, 1.0, ExponentPolicy::Smallest).is_err());
    }
}
