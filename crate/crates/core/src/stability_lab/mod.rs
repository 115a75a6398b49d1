//! The perturbed stability experiment: split a rough datum, evolve the base
//! and perturbed solutions, certify the low-frequency energy chain at every
//! snapshot and fit the exponent of the distance curve.

mod persistence;

pub use persistence::{
    duhamel_sobolev_probe, fluctuation_decay_fit, linear_duhamel_sobolev_check, persistence_check,
    DuhamelSobolevRatio, FluctuationFit, PersistenceProfile,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calderon_split::{threshold_split, ExponentPolicy, SplitBounds, SplitParams};
use crate::datagen::{perturbation, rough_datum, PerturbationKind, RoughDatum};
use crate::error::{invalid, Error, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::littlewood_paley::LittlewoodPaleyBank;
use crate::norms::path_norm_e_t;
use crate::nse_solver::{heat_trajectory, picard_iterate, solve_perturbed, SolverConfig, Trajectory};
use crate::reynolds::reynolds_stress;
use crate::spectral_core::{gradient, Grid, SpectralField};

/// Uniform nodes used when measuring the heat path norm for a horizon.
pub const HORIZON_NODES: usize = 16;
/// Picard iterations run to confirm the chosen horizon.
pub const PICARD_ITERATIONS: usize = 6;
/// Allowed shortfall of the fitted exponent below `1 - η`.
pub const EXPONENT_MARGIN: f64 = 0.1;

/// How the cut-off index is picked for each perturbation size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JPolicy {
    /// `⌈-log₂ d / min(γ, α̂)⌉`, clamped to the bank.
    #[default]
    Formula,
    /// The formula plus a certificate for every nonnegative block index.
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datum: RoughDatum,
    pub eta: f64,
    /// Requested `‖v₀ - u₀‖₂` values, each in `(0, 1)`.
    pub ladder: Vec<f64>,
    pub split_epsilon: f64,
    pub alpha_fraction: f64,
    pub exponent_policy: ExponentPolicy,
    /// Time stepping; `horizon` caps the dyadic horizon search.
    pub solver: SolverConfig,
    /// Bound on the heat path norm of the large piece that fixes the horizon.
    pub smallness_threshold: f64,
    pub perturbation: PerturbationKind,
    pub perturbation_seed: u64,
    pub j_policy: JPolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::reference(48)
    }
}

impl ExperimentConfig {
    /// The rough-datum run: `(s, q) = (-0.4, 4)`, `η = 1/2`, ladder
    /// `2^{-1} … 2^{-6}`.
    pub fn reference(n: usize) -> ExperimentConfig {
        ExperimentConfig {
            datum: RoughDatum {
                s: -0.4,
                q: 4.0,
                amplitude: 1.0,
                seed: 7,
            },
            eta: 0.5,
            ladder: (1..=6).map(|k| 0.5f64.powi(k)).collect(),
            split_epsilon: 0.1,
            alpha_fraction: 0.5,
            exponent_policy: ExponentPolicy::Smallest,
            solver: SolverConfig::new(n, 1e-3, 0.25).with_stride(2),
            smallness_threshold: 0.32,
            perturbation: PerturbationKind::Random,
            perturbation_seed: 101,
            j_policy: JPolicy::Formula,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid(format!("eta must lie in (0,1), got {}", self.eta)));
        }
        if self.ladder.len() < 4 {
            return Err(invalid("the amplitude ladder needs at least four entries"));
        }
        if let Some(d) = self.ladder.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(invalid(format!("ladder amplitudes must lie in (0,1), got {d}")));
        }
        if !(self.split_epsilon > 0.0) || !self.split_epsilon.is_finite() {
            return Err(invalid("split epsilon must be positive"));
        }
        if !(self.smallness_threshold > 0.0) {
            return Err(invalid("smallness threshold must be positive"));
        }
        self.solver.validate()?;
        SplitParams::select(self.datum.s, self.datum.q, self.alpha_fraction, self.exponent_policy)?;
        Ok(())
    }
}

/// `⌈-log₂(distance)/min(γ, α̂)⌉` without clamping.
pub fn frequency_index(distance: f64, gamma: f64, alpha_hat: f64) -> Result<i64> {
    if !(distance > 0.0 && distance < 1.0) {
        return Err(invalid(format!("distance must lie in (0,1), got {distance}")));
    }
    if !(gamma > 0.0) || !(alpha_hat > 0.0) {
        return Err(invalid("rates must be positive"));
    }
    Ok((-distance.log2() / gamma.min(alpha_hat)).ceil() as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyChoice {
    /// Index from the formula.
    pub formula: i64,
    /// Index actually used.
    pub j: i32,
    pub clamped: bool,
}

pub fn choose_frequency_j(
    distance: f64,
    gamma: f64,
    alpha_hat: f64,
    bank: &LittlewoodPaleyBank,
) -> Result<FrequencyChoice> {
    let formula = frequency_index(distance, gamma, alpha_hat)?;
    let j = formula.clamp(bank.j_min() as i64, bank.j_max() as i64) as i32;
    Ok(FrequencyChoice {
        formula,
        j,
        clamped: j as i64 != formula,
    })
}

/// `2η·min(γ, α̂)`.
pub fn epsilon_hat(eta: f64, gamma: f64, alpha_hat: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (0,1), got {eta}")));
    }
    Ok(2.0 * eta * gamma.min(alpha_hat))
}

#[derive(Clone, Debug, Serialize)]
pub struct HorizonChoice {
    pub horizon: f64,
    pub heat_path_norm: f64,
    /// `(T, ‖e^{tΔ}u₀¹‖_{E_T})` for every candidate examined.
    pub candidates: Vec<(f64, f64)>,
}

/// Largest `T = 2^{-m} <= cap` whose heat path norm is below `threshold`.
pub fn choose_horizon(u01: &SpectralField, cap: f64, threshold: f64) -> Result<HorizonChoice> {
    if !(cap > 0.0) || !(threshold > 0.0) {
        return Err(invalid("horizon search needs a positive cap and threshold"));
    }
    let mut m = (-cap.log2()).ceil() as i32;
    let mut candidates = Vec::new();
    while m <= 30 {
        let t = 0.5f64.powi(m);
        let times: Vec<f64> = (0..=HORIZON_NODES).map(|i| t * i as f64 / HORIZON_NODES as f64).collect();
        let norm = path_norm_e_t(&times, &heat_trajectory(u01, &times)?)?.value;
        candidates.push((t, norm));
        if norm < threshold {
            return Ok(HorizonChoice {
                horizon: t,
                heat_path_norm: norm,
                candidates,
            });
        }
        m += 1;
    }
    Err(invalid(format!("no dyadic horizon brings the heat path norm below {threshold}")))
}

/// Per-snapshot series feeding the low-frequency energy chain.
pub struct GronwallInputs<'a> {
    pub times: &'a [f64],
    /// `W_j = V - Ṡ_jU`.
    pub w: &'a [SpectralField],
    /// `‖F_j(t)‖₂²`.
    pub stress_sq: &'a [f64],
    /// `‖e^{tΔ}u₀²‖_∞`.
    pub drift_sup: &'a [f64],
    /// `‖∇Ṡ_jU(t)‖_∞`.
    pub low_gradient_sup: &'a [f64],
}

#[derive(Clone, Debug, Serialize)]
pub struct GronwallCertificate {
    /// `‖W_j(t)‖₂² + ∫₀ᵗ‖∇W_j‖₂²`.
    pub lhs: Vec<f64>,
    /// `‖W_j(0)‖₂² + ∫₀ᵗ‖F_j‖₂² + ∫₀ᵗ‖W_j‖₂²(‖e^{sΔ}u₀²‖_∞² + ‖∇Ṡ_jU‖_∞)`.
    pub rhs_unit: Vec<f64>,
    /// Smallest `C` with `lhs <= C·rhs_unit` at every snapshot.
    pub constant: f64,
    /// The same constant over `t > 0` only (at `t = 0` both sides agree).
    pub interior_constant: f64,
    pub holds: bool,
    pub rhs_monotone: bool,
    /// `(‖W_j(0)‖₂² + ∫₀ᵗ‖F_j‖₂²)·exp(∫₀ᵗ(‖e^{sΔ}u₀²‖_∞² + ‖∇Ṡ_jU‖_∞))`.
    pub gronwall_bound: Vec<f64>,
    pub gronwall_constant: f64,
}

/// Running trapezoid integral, starting at 0.
fn cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..values.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        out.push(acc);
    }
    out
}

fn fitted_constant(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).fold(0.0, |c, (&l, &r)| {
        if r > 0.0 {
            c.max(l / r)
        } else if l > 0.0 {
            f64::INFINITY
        } else {
            c
        }
    })
}

pub fn gronwall_certificate(inputs: &GronwallInputs) -> Result<GronwallCertificate> {
    let m = inputs.times.len();
    if m == 0 {
        return Err(invalid("certificate needs at least one snapshot"));
    }
    if [inputs.w.len(), inputs.stress_sq.len(), inputs.drift_sup.len(), inputs.low_gradient_sup.len()]
        .iter()
        .any(|&l| l != m)
    {
        return Err(invalid("certificate series must share the snapshot times"));
    }
    let energy: Vec<f64> = inputs.w.iter().map(|w| w.l2_norm_sq()).collect();
    let grad: Vec<f64> = inputs.w.iter().map(|w| w.gradient_norm_sq()).collect();
    let factor: Vec<f64> = inputs
        .drift_sup
        .iter()
        .zip(inputs.low_gradient_sup)
        .map(|(d, g)| d * d + g)
        .collect();
    let weighted: Vec<f64> = energy.iter().zip(&factor).map(|(e, f)| e * f).collect();
    let dissipation = cumulative(inputs.times, &grad);
    let stress = cumulative(inputs.times, inputs.stress_sq);
    let gronwall = cumulative(inputs.times, &weighted);
    let exponent = cumulative(inputs.times, &factor);
    let lhs: Vec<f64> = energy.iter().zip(&dissipation).map(|(e, d)| e + d).collect();
    let rhs_unit: Vec<f64> = (0..m).map(|i| energy[0] + stress[i] + gronwall[i]).collect();
    let gronwall_bound: Vec<f64> = (0..m).map(|i| (energy[0] + stress[i]) * exponent[i].exp()).collect();
    let constant = fitted_constant(&lhs, &rhs_unit);
    if lhs.iter().chain(&rhs_unit).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("certificate series".into()));
    }
    Ok(GronwallCertificate {
        holds: constant.is_finite() && lhs.iter().zip(&rhs_unit).all(|(l, r)| *l <= constant * r * (1.0 + 1e-12)),
        rhs_monotone: rhs_unit.windows(2).all(|w| w[1] >= w[0]),
        gronwall_constant: fitted_constant(&lhs, &gronwall_bound),
        interior_constant: fitted_constant(&lhs[1..], &rhs_unit[1..]),
        constant,
        lhs,
        rhs_unit,
        gronwall_bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub j: i32,
    pub constant: f64,
    /// `2(sup_t LHS_j + sup_t E_j)` with `E_j` the energy of `U - Ṡ_jU`;
    /// bounds `sup_t ‖V-U‖₂²` through the triangle inequality.
    pub route_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeRow {
    pub amplitude: f64,
    /// Measured `‖v₀ - u₀‖₂`.
    pub distance: f64,
    pub sup_distance_sq: f64,
    /// `∫₀ᵀ‖∇(v-u)‖₂²`.
    pub dissipation: f64,
    /// `‖(v-u)(t)‖₂²` per snapshot.
    pub distance_curve: Vec<f64>,
    pub frequency: FrequencyChoice,
    pub certificate: GronwallCertificate,
    /// `sup_t |‖v-u‖₂ - ‖V-U‖₂| / sup_t ‖u‖₂`.
    pub translation_defect: f64,
    pub sweep: Vec<SweepEntry>,
    pub best_j: Option<i32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    /// `log sup‖v-u‖₂²` against `log ‖v₀-u₀‖₂²`.
    pub line: LineFit,
    pub exponent_hat: f64,
    /// `1 - η`.
    pub target: f64,
    /// Same slope measured against `log ‖v₀-u₀‖₂`; compare with `2 - 2η`.
    pub distance_exponent: f64,
    pub distance_target: f64,
    pub passes: bool,
}

/// Fits the distance curve; `sup_sq[i]` belongs to `distance[i]`.
pub fn exponent_fit(distance: &[f64], sup_sq: &[f64], eta: f64) -> Result<ExponentFit> {
    if distance.len() < 4 {
        return Err(invalid("the exponent fit needs at least four amplitudes"));
    }
    let d2: Vec<f64> = distance.iter().map(|d| d * d).collect();
    let line = log_log_fit(&d2, sup_sq)?;
    let target = 1.0 - eta;
    Ok(ExponentFit {
        exponent_hat: line.slope,
        target,
        distance_exponent: 2.0 * line.slope,
        distance_target: 2.0 * target,
        passes: line.slope >= target - EXPONENT_MARGIN,
        line,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardSummary {
    pub residuals: Vec<f64>,
    pub heat_norm: f64,
    pub final_norm: f64,
    pub factor_two_holds: bool,
    pub diverged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageDiagnostic {
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub config: ExperimentConfig,
    pub params: Option<SplitParams>,
    pub split_bounds: Option<SplitBounds>,
    pub horizon: Option<HorizonChoice>,
    pub picard: Option<PicardSummary>,
    /// `min(α̂/2, 1/p, δ/2)`.
    pub gamma: Option<f64>,
    pub epsilon_hat: Option<f64>,
    /// `sup_t ‖V-U‖₂ / sup_t ‖U‖₂` for `v₀ = u₀`.
    pub control_deviation: Option<f64>,
    pub rows: Vec<AmplitudeRow>,
    pub exponent: Option<ExponentFit>,
    /// `max |C/median(C) - 1|` over the ladder.
    pub certificate_spread: Option<f64>,
    pub persistence: Option<PersistenceProfile>,
    pub fluctuation: Option<FluctuationFit>,
    pub diagnostics: Vec<StageDiagnostic>,
}

impl StabilityReport {
    fn empty(config: &ExperimentConfig) -> StabilityReport {
        StabilityReport {
            config: config.clone(),
            params: None,
            split_bounds: None,
            horizon: None,
            picard: None,
            gamma: None,
            epsilon_hat: None,
            control_deviation: None,
            rows: Vec::new(),
            exponent: None,
            certificate_spread: None,
            persistence: None,
            fluctuation: None,
            diagnostics: Vec::new(),
        }
    }

    fn record<T>(&mut self, stage: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.diagnostics.push(StageDiagnostic {
                    stage: stage.into(),
                    message: e.to_string(),
                });
                None
            }
        }
    }

    /// Whether every stage completed.
    pub fn complete(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Shared per-snapshot data of the base run for one cut-off index.
struct LowData {
    j: i32,
    stress_sq: Vec<f64>,
    low_gradient_sup: Vec<f64>,
    /// `sup_t` of the energy of `U - Ṡ_jU`.
    high_energy: f64,
}

fn low_data(base: &Trajectory, bank: &LittlewoodPaleyBank, js: &[i32]) -> Result<Vec<LowData>> {
    let rows = reynolds_stress(base, js)?;
    let mut out = Vec::with_capacity(js.len());
    for (row, &j) in rows.iter().zip(js) {
        let mut grad_sup = Vec::with_capacity(base.fields.len());
        let mut high_energy = Vec::with_capacity(base.fields.len());
        let mut high_grad = Vec::with_capacity(base.fields.len());
        for u in &base.fields {
            let low = bank.low_pass(u, j)?;
            grad_sup.push(gradient(&low).to_physical().max_magnitude());
            let high = u - &low;
            high_energy.push(high.l2_norm_sq());
            high_grad.push(high.gradient_norm_sq());
        }
        let diss = cumulative(&base.times, &high_grad);
        out.push(LowData {
            j,
            stress_sq: row.profile.iter().map(|v| v * v).collect(),
            low_gradient_sup: grad_sup,
            high_energy: high_energy.iter().zip(&diss).map(|(e, d)| e + d).fold(0.0, f64::max),
        });
    }
    Ok(out)
}

struct Shared<'a> {
    grid: &'a Grid,
    bank: &'a LittlewoodPaleyBank,
    base: &'a Trajectory,
    u01: &'a SpectralField,
    u02: &'a SpectralField,
    direction: &'a SpectralField,
    solver: &'a SolverConfig,
    drift_sup: Vec<f64>,
    low: Vec<LowData>,
    gamma: f64,
    alpha_hat: f64,
    policy: JPolicy,
}

fn certificate_for(shared: &Shared, v: &Trajectory, data: &LowData) -> Result<GronwallCertificate> {
    let w: Vec<SpectralField> = v
        .fields
        .iter()
        .zip(&shared.base.fields)
        .map(|(v, u)| Ok(v - &shared.bank.low_pass(u, data.j)?))
        .collect::<Result<_>>()?;
    gronwall_certificate(&GronwallInputs {
        times: &shared.base.times,
        w: &w,
        stress_sq: &data.stress_sq,
        drift_sup: &shared.drift_sup,
        low_gradient_sup: &data.low_gradient_sup,
    })
}

fn amplitude_row(shared: &Shared, amplitude: f64) -> Result<AmplitudeRow> {
    let v01 = shared.u01 + &shared.direction.scaled(amplitude);
    let distance = (&v01 - shared.u01).l2_norm();
    let v = solve_perturbed(&v01, shared.u02, shared.solver)?;
    if v.times != shared.base.times {
        return Err(invalid("perturbed run recorded a different time mesh"));
    }
    let base = shared.base;
    let mut curve = Vec::with_capacity(v.fields.len());
    let mut grad = Vec::with_capacity(v.fields.len());
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..v.fields.len() {
        let diff = &v.fields[i] - &base.fields[i];
        curve.push(diff.l2_norm_sq());
        grad.push(diff.gradient_norm_sq());
        let drift = base.drift_at(i)?;
        let full_u = &base.fields[i] + &drift;
        let full_v = &v.fields[i] + &drift;
        defect = defect.max(((&full_v - &full_u).l2_norm() - diff.l2_norm()).abs());
        scale = scale.max(full_u.l2_norm());
    }
    let frequency = choose_frequency_j(distance, shared.gamma, shared.alpha_hat, shared.bank)?;
    let data = shared
        .low
        .iter()
        .find(|d| d.j == frequency.j)
        .ok_or_else(|| invalid("missing low-frequency data for the chosen index"))?;
    let certificate = certificate_for(shared, &v, data)?;
    let mut sweep = Vec::new();
    if shared.policy == JPolicy::Sweep {
        for d in shared.low.iter().filter(|d| d.j >= 0) {
            let c = certificate_for(shared, &v, d)?;
            let lhs_sup = c.lhs.iter().cloned().fold(0.0, f64::max);
            sweep.push(SweepEntry {
                j: d.j,
                constant: c.constant,
                route_bound: 2.0 * (lhs_sup + d.high_energy),
            });
        }
    }
    let best_j = sweep
        .iter()
        .min_by(|a, b| a.route_bound.total_cmp(&b.route_bound))
        .map(|e| e.j);
    Ok(AmplitudeRow {
        amplitude,
        distance,
        sup_distance_sq: curve.iter().cloned().fold(0.0, f64::max),
        dissipation: *cumulative(&base.times, &grad).last().unwrap(),
        distance_curve: curve,
        frequency,
        certificate,
        translation_defect: if scale > 0.0 { defect / scale } else { defect },
        sweep,
        best_j,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// The whole pipeline. Configuration errors are returned; failures of later
/// stages end the run early and are listed in the report's diagnostics.
pub fn run_stability_experiment(config: &ExperimentConfig) -> Result<StabilityReport> {
    Ok(run_stability_with_base(config)?.0)
}

/// As [`run_stability_experiment`], also returning the base trajectory.
pub fn run_stability_with_base(config: &ExperimentConfig) -> Result<(StabilityReport, Option<Trajectory>)> {
    config.validate()?;
    let grid = Grid::new(config.solver.n)?;
    let bank = LittlewoodPaleyBank::new(&grid)?;
    let mut report = StabilityReport::empty(config);

    let Some(u0) = report.record("datum", rough_datum(&grid, &config.datum)) else {
        return Ok((report, None));
    };
    let params = SplitParams::select(config.datum.s, config.datum.q, config.alpha_fraction, config.exponent_policy)
        .and_then(|p| p.with_epsilon(config.split_epsilon));
    let Some(params) = report.record("split", params) else {
        return Ok((report, None));
    };
    report.params = Some(params);
    let Some(split) = report.record("split", threshold_split(&u0, &bank, &params)) else {
        return Ok((report, None));
    };
    report.split_bounds = Some(split.verified_bounds);
    // The finite-energy piece is evolved; the small Besov piece drives it
    // through its heat flow.
    let u01 = split.u2;
    let u02 = split.u1;
    let gamma = params.stress_decay_rate();
    report.gamma = Some(gamma);
    report.epsilon_hat = Some(epsilon_hat(config.eta, gamma, params.alpha_hat)?);

    let Some(horizon) = report.record(
        "horizon",
        choose_horizon(&u01, config.solver.horizon, config.smallness_threshold),
    ) else {
        return Ok((report, None));
    };
    let t = horizon.horizon;
    report.horizon = Some(horizon);
    if let Some(p) = report.record("picard", picard_iterate(&u01, t, HORIZON_NODES, PICARD_ITERATIONS)) {
        report.picard = Some(PicardSummary {
            residuals: p.residuals,
            heat_norm: p.heat_norm,
            final_norm: p.final_norm,
            factor_two_holds: p.factor_two_holds,
            diverged: p.diverged,
        });
    }
    let mut solver = config.solver.clone();
    solver.horizon = t;
    let Some(base) = report.record("base solve", solve_perturbed(&u01, &u02, &solver)) else {
        return Ok((report, None));
    };
    if let Some(control) = report.record("control solve", solve_perturbed(&u01.clone(), &u02, &solver)) {
        let dev = control
            .fields
            .iter()
            .zip(&base.fields)
            .map(|(a, b)| (a - b).l2_norm())
            .fold(0.0, f64::max);
        let scale = base.fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
        report.control_deviation = Some(if scale > 0.0 { dev / scale } else { dev });
    }

    let direction_source = match config.perturbation {
        PerturbationKind::Random => &u01,
        PerturbationKind::TopShell => &u0,
    };
    let Some(direction) = report.record(
        "perturbation",
        perturbation(&grid, direction_source, config.perturbation, config.perturbation_seed),
    ) else {
        return Ok((report, Some(base)));
    };

    let mut js: Vec<i32> = Vec::new();
    for &d in &config.ladder {
        if let Some(c) = report.record("frequency", choose_frequency_j(d, gamma, params.alpha_hat, &bank)) {
            js.push(c.j);
        }
    }
    if config.j_policy == JPolicy::Sweep {
        js.extend(0..=bank.j_max());
    }
    js.sort_unstable();
    js.dedup();
    let drift_sup: Result<Vec<f64>> = (0..base.fields.len())
        .map(|i| Ok(base.drift_at(i)?.to_physical().max_magnitude()))
        .collect();
    let Some(drift_sup) = report.record("drift", drift_sup) else {
        return Ok((report, Some(base)));
    };
    let Some(low) = report.record("stress", low_data(&base, &bank, &js)) else {
        return Ok((report, Some(base)));
    };
    let shared = Shared {
        grid: &grid,
        bank: &bank,
        base: &base,
        u01: &u01,
        u02: &u02,
        direction: &direction,
        solver: &solver,
        drift_sup,
        low,
        gamma,
        alpha_hat: params.alpha_hat,
        policy: config.j_policy,
    };
    debug_assert_eq!(shared.grid.n(), config.solver.n);
    let results: Vec<Result<AmplitudeRow>> = config
        .ladder
        .par_iter()
        .map(|&d| amplitude_row(&shared, d))
        .collect();
    for (r, d) in results.into_iter().zip(&config.ladder) {
        if let Some(row) = report.record(&format!("amplitude {d}"), r) {
            report.rows.push(row);
        }
    }

    let distances: Vec<f64> = report.rows.iter().map(|r| r.distance).collect();
    let sups: Vec<f64> = report.rows.iter().map(|r| r.sup_distance_sq).collect();
    report.exponent = report.record("exponent fit", exponent_fit(&distances, &sups, config.eta));
    let constants: Vec<f64> = report.rows.iter().map(|r| r.certificate.constant).collect();
    if !constants.is_empty() {
        let med = median(&constants);
        report.certificate_spread = Some(constants.iter().map(|c| (c / med - 1.0).abs()).fold(0.0, f64::max));
    }
    report.persistence = report.record("persistence", persistence_check(&base, params.alpha_hat));
    report.fluctuation = report.record("fluctuation", fluctuation_decay_fit(&base, &u01));
    Ok((report, Some(base)))
}
