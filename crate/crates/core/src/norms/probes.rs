use serde::{Deserialize, Serialize};

use super::{besov_norm, heat_sup_norm, lp_norm, lq_sum, sobolev_norm, time_lr, BesovParams};
use crate::datagen::{gaussian_spectrum, random_scalar};
use crate::error::{invalid, Result};
use crate::littlewood_paley::LittlewoodPaleyBank;
use crate::spectral_core::{apply_heat, product_exact, Grid, SpectralField};

/// `‖f‖_{Ḃ^{θs₁+(1-θ)s₂}_{p,1}}` over
/// `(1/(s₂-s₁))(1/θ + 1/(1-θ))‖f‖^θ_{Ḃ^{s₁}_{p,∞}}‖f‖^{1-θ}_{Ḃ^{s₂}_{p,∞}}`.
pub fn interpolation_ratio(
    bank: &LittlewoodPaleyBank,
    f: &SpectralField,
    p: f64,
    (s1, s2): (f64, f64),
    theta: f64,
) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("interpolation needs theta in (0,1), got {theta}")));
    }
    if !(s1 < s2) {
        return Err(invalid(format!("interpolation needs s1 < s2, got s1={s1}, s2={s2}")));
    }
    let s = theta * s1 + (1.0 - theta) * s2;
    let lhs = besov_norm(f, bank, BesovParams::new(s, p, 1.0)?)?.value;
    let a = besov_norm(f, bank, BesovParams::new(s1, p, f64::INFINITY)?)?.value;
    let b = besov_norm(f, bank, BesovParams::new(s2, p, f64::INFINITY)?)?.value;
    let rhs = (1.0 / theta + 1.0 / (1.0 - theta)) / (s2 - s1) * a.powf(theta) * b.powf(1.0 - theta);
    Ok(lhs / rhs)
}

/// `‖uv‖_{Ḃ^s_{p,q}}` over `(1/s)(‖u‖_∞‖v‖_{Ḃ^s_{p,q}} + ‖v‖_∞‖u‖_{Ḃ^s_{p,q}})`
/// for scalar `u, v`; the product is formed exactly on the padded grid.
pub fn product_ratio(
    bank: &LittlewoodPaleyBank,
    u: &SpectralField,
    v: &SpectralField,
    params: BesovParams,
) -> Result<f64> {
    params.validate()?;
    if !(params.s > 0.0 && params.s < 3.0 / params.p) {
        return Err(invalid(format!(
            "product estimate needs 0 < s < 3/p, got s={}, p={}",
            params.s, params.p
        )));
    }
    u.expect_components(1)?;
    v.expect_components(1)?;
    let uv = product_exact(u, v)?;
    let pbank = LittlewoodPaleyBank::new(uv.grid())?;
    let lhs = besov_norm(&uv, &pbank, params)?.value;
    let bu = besov_norm(u, bank, params)?.value;
    let bv = besov_norm(v, bank, params)?.value;
    let rhs = (lp_norm(u, f64::INFINITY)? * bv + lp_norm(v, f64::INFINITY)? * bu) / params.s;
    Ok(lhs / rhs)
}

/// Time nodes `0` and a geometric grid up to `t_final`, 8 per decade over 6 decades.
fn heat_time_nodes(t_final: f64) -> Vec<f64> {
    let mut nodes = vec![0.0];
    let count = 48;
    for i in 0..=count {
        nodes.push(t_final * 10f64.powf(-6.0 + 6.0 * i as f64 / count as f64));
    }
    nodes
}

/// `‖e^{tΔ}u‖_{L̃^r_T Ḃ^{s+2/r}_{p,q}} / ‖u‖_{Ḃ^s_{p,q}}`.
pub fn chemin_lerner_heat_ratio(
    bank: &LittlewoodPaleyBank,
    u: &SpectralField,
    params: BesovParams,
    r: f64,
    t_final: f64,
) -> Result<f64> {
    params.validate()?;
    if !(r >= 1.0) || !(t_final > 0.0) || !t_final.is_finite() {
        return Err(invalid(format!("heat bound needs r >= 1 and T > 0, got r={r}, T={t_final}")));
    }
    let times = heat_time_nodes(t_final);
    let shifted = params.s + if r.is_infinite() { 0.0 } else { 2.0 / r };
    let mut per_block = Vec::new();
    for j in bank.blocks() {
        let block = bank.delta(u, j)?;
        let mut vals = Vec::with_capacity(times.len());
        for &t in &times {
            vals.push(lp_norm(&apply_heat(&block, t)?, params.p)?);
        }
        per_block.push(2f64.powf(j as f64 * shifted) * time_lr(&times, &vals, r));
    }
    let lhs = lq_sum(per_block, params.q);
    Ok(lhs / besov_norm(u, bank, params)?.value)
}

/// `sup_t t^{α/2}‖e^{tΔ}u‖_{Ḣ^α} / ‖u‖₂` over dyadic `t = 4^{-m}`, `m ∈ [-2, 8]`.
pub fn sobolev_semigroup_ratio(u: &SpectralField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.5) {
        return Err(invalid(format!("semigroup bound needs alpha in (0, 3/2), got {alpha}")));
    }
    let mut best: f64 = 0.0;
    for m in -2..=8 {
        let t = 4f64.powi(-m);
        best = best.max(t.powf(alpha / 2.0) * sobolev_norm(&apply_heat(u, t)?, alpha, true)?);
    }
    Ok(best / u.l2_norm())
}

/// Heat-side over block-side norm for `s < 0`: `sup_t t^{-s/2}‖e^{tΔ}f‖_p`
/// against `‖f‖_{Ḃ^s_{p,∞}}`.
pub fn heat_characterization_ratio(bank: &LittlewoodPaleyBank, f: &SpectralField, s: f64, p: f64) -> Result<f64> {
    let heat = heat_sup_norm(f, s, p, (-2, bank.j_max() + 2))?;
    Ok(heat / besov_norm(f, bank, BesovParams::new(s, p, f64::INFINITY)?)?.value)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub n: usize,
    pub fields: usize,
    pub seed: u64,
    /// Spectral width of the random test fields.
    pub k0: f64,
    /// Rescaling used for the amplitude-invariance check.
    pub amplitude: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            n: 32,
            fields: 50,
            seed: 11,
            k0: 4.0,
            amplitude: 37.5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub name: String,
    pub ratios: Vec<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub max_over_median: f64,
    /// Largest `|ratio(λf)/ratio(f) - 1|` over the sampled fields.
    pub amplitude_drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeSummary {
    pub config: ProbeConfig,
    pub probes: Vec<ProbeReport>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn summarize(name: &str, ratios: Vec<f64>, scaled: Vec<f64>) -> ProbeReport {
    let med = median(&ratios);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let drift = ratios
        .iter()
        .zip(&scaled)
        .map(|(a, b)| (b / a - 1.0).abs())
        .fold(0.0, f64::max);
    ProbeReport {
        name: name.to_string(),
        ratios,
        median: med,
        min,
        max,
        max_over_median: max / med,
        amplitude_drift: drift,
    }
}

/// Evaluates all five ratios on `config.fields` random scalar fields, each
/// also at amplitude `config.amplitude`.
pub fn run_probe_suite(config: &ProbeConfig) -> Result<ProbeSummary> {
    if config.fields == 0 {
        return Err(invalid("probe suite needs at least one field"));
    }
    let grid = Grid::new(config.n)?;
    let bank = LittlewoodPaleyBank::new(&grid)?;
    let lam = config.amplitude;
    type Probe<'a> = Box<dyn Fn(&SpectralField, &SpectralField) -> Result<f64> + 'a>;
    let probes: Vec<(&str, Probe)> = vec![
        ("interpolation", Box::new(|f, _| interpolation_ratio(&bank, f, 4.0, (-0.5, 0.5), 0.4))),
        (
            "product",
            Box::new(|f, g| product_ratio(&bank, f, g, BesovParams { s: 0.5, p: 2.0, q: 2.0 })),
        ),
        (
            "chemin_lerner_heat",
            Box::new(|f, _| chemin_lerner_heat_ratio(&bank, f, BesovParams { s: -0.5, p: 4.0, q: 2.0 }, 1.0, 1.0)),
        ),
        ("sobolev_semigroup", Box::new(|f, _| sobolev_semigroup_ratio(f, 0.75))),
        ("heat_characterization", Box::new(|f, _| heat_characterization_ratio(&bank, f, -0.5, 4.0))),
    ];
    let fields: Vec<(SpectralField, SpectralField)> = (0..config.fields)
        .map(|i| {
            let s = config.seed.wrapping_mul(1_000_003).wrapping_add(2 * i as u64);
            (
                random_scalar(&grid, s, gaussian_spectrum(config.k0)),
                random_scalar(&grid, s + 1, gaussian_spectrum(config.k0)),
            )
        })
        .collect();
    let mut reports = Vec::new();
    for (name, probe) in &probes {
        let mut ratios = Vec::new();
        let mut scaled = Vec::new();
        for (f, g) in &fields {
            ratios.push(probe(f, g)?);
            scaled.push(probe(&f.scaled(lam), &g.scaled(lam))?);
        }
        reports.push(summarize(name, ratios, scaled));
    }
    Ok(ProbeSummary {
        config: config.clone(),
        probes: reports,
    })
}
