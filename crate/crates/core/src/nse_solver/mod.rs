//! Pseudo-spectral integration of the Navier–Stokes system (unit viscosity)
//! and of its drift-perturbed form, with mild-solution tools.

mod mild;
mod persist;

pub use mild::{
    heat_trajectory, mild_residual, picard_iterate, smoothing_profile, PicardResult, SmoothingProfile,
};
pub use persist::{load_trajectory, save_trajectory, sha256_hex, FileEntry, TrajectoryManifest, MANIFEST_NAME};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral_core::{apply_heat, heat_weights, projected_self_advection, Grid, SpectralField};

/// Largest number of step halvings before the run is abandoned.
const MAX_HALVINGS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    IntegratingFactorRk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Bound on `max|u|·dt·n/(2π)`.
    pub cfl_cap: f64,
    /// Base steps between recorded snapshots.
    pub snapshot_stride: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SolverConfig {
    pub fn new(n: usize, dt: f64, horizon: f64) -> SolverConfig {
        SolverConfig {
            n,
            dt,
            horizon,
            cfl_cap: 1.0,
            snapshot_stride: 1,
            scheme: Scheme::IntegratingFactorRk4,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> SolverConfig {
        self.snapshot_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.n)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.cfl_cap > 0.0) {
            return Err(invalid("CFL cap must be positive"));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot stride must be at least 1"));
        }
        Ok(())
    }

    /// Number of base steps; the step is shrunk so they tile the horizon.
    pub fn base_steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn base_dt(&self) -> f64 {
        self.horizon / self.base_steps() as f64
    }
}

/// Energy bookkeeping at every snapshot. For the perturbed system
/// `work_total = work_mixed + work_drift` is the time integral of
/// `-2⟨ℙ∇·((U+V)⊗(U+V)), U⟩`, with `work_drift` the `V⊗V` part.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub kinetic: Vec<f64>,
    /// `2∫_0^t ‖∇u‖₂²`.
    pub dissipation: Vec<f64>,
    pub work_total: Vec<f64>,
    pub work_mixed: Vec<f64>,
    pub work_drift: Vec<f64>,
}

impl EnergyLedger {
    /// `|kinetic + dissipation - kinetic(0) - work| / kinetic(0)` per snapshot.
    pub fn balance_residuals(&self) -> Vec<f64> {
        let k0 = self.kinetic.first().copied().unwrap_or(0.0);
        let scale = if k0 > 0.0 { k0 } else { 1.0 };
        (0..self.kinetic.len())
            .map(|i| (self.kinetic[i] + self.dissipation[i] - k0 - self.work_total[i]).abs() / scale)
            .collect()
    }

    /// Largest excess of `kinetic + dissipation` over `kinetic(0) + work`,
    /// relative to `kinetic(0)` (negative when the inequality holds strictly).
    pub fn inequality_excess(&self) -> f64 {
        let k0 = self.kinetic.first().copied().unwrap_or(0.0);
        let scale = if k0 > 0.0 { k0 } else { 1.0 };
        (0..self.kinetic.len())
            .map(|i| (self.kinetic[i] + self.dissipation[i] - k0 - self.work_total[i]) / scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn push(&mut self, kinetic: f64, acc: &Accumulators) {
        self.kinetic.push(kinetic);
        self.dissipation.push(acc.dissipation);
        self.work_total.push(acc.work_total);
        self.work_mixed.push(acc.work_total - acc.work_drift);
        self.work_drift.push(acc.work_drift);
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
    pub ledger: EnergyLedger,
    /// Drift datum `u₀²` of the perturbed system, if any.
    pub drift: Option<SpectralField>,
    /// Number of times the step was halved by the CFL guard.
    pub halvings: u32,
    pub substeps: usize,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn final_field(&self) -> &SpectralField {
        self.fields.last().expect("trajectory has snapshots")
    }

    /// Drift `e^{tΔ}u₀²` at snapshot `i` (zero when unperturbed).
    pub fn drift_at(&self, i: usize) -> Result<SpectralField> {
        match &self.drift {
            Some(v) => apply_heat(v, self.times[i]),
            None => Ok(SpectralField::zeros(self.grid(), 3)),
        }
    }

    /// Full velocity `U + e^{tΔ}u₀²` at every snapshot.
    pub fn total_fields(&self) -> Result<Vec<SpectralField>> {
        match &self.drift {
            None => Ok(self.fields.clone()),
            Some(_) => (0..self.fields.len())
                .map(|i| Ok(&self.fields[i] + &self.drift_at(i)?))
                .collect(),
        }
    }

    /// Snapshots at `0, stride, 2·stride, …` and the last one.
    pub fn thinned(&self, stride: usize) -> (Vec<f64>, Vec<SpectralField>) {
        let last = self.times.len() - 1;
        let mut idx: Vec<usize> = (0..=last).step_by(stride.max(1)).collect();
        if *idx.last().unwrap() != last {
            idx.push(last);
        }
        (
            idx.iter().map(|&i| self.times[i]).collect(),
            idx.iter().map(|&i| self.fields[i].clone()).collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Accumulators {
    dissipation: f64,
    work_total: f64,
    work_drift: f64,
}

struct Stage {
    k: SpectralField,
    max_speed: f64,
}

struct Integrator<'a> {
    drift: Option<&'a SpectralField>,
    /// `(t, -ℙ∇·(V⊗V)(t))` for recently used stage times.
    drift_cache: Vec<(f64, SpectralField)>,
}

impl Integrator<'_> {
    fn rhs(&self, state: &SpectralField, t: f64) -> Result<Stage> {
        let w = match self.drift {
            Some(v) => state + &apply_heat(v, t)?,
            None => state.clone(),
        };
        let wp = w.to_physical();
        let max_speed = wp.max_magnitude();
        let mut k = projected_self_advection(&wp)?;
        k.scale(-1.0);
        Ok(Stage { k, max_speed })
    }

    fn drift_forcing(&mut self, t: f64) -> Result<Option<&SpectralField>> {
        let Some(v) = self.drift else {
            return Ok(None);
        };
        if let Some(pos) = self.drift_cache.iter().position(|(s, _)| *s == t) {
            return Ok(Some(&self.drift_cache[pos].1));
        }
        let mut f = projected_self_advection(&apply_heat(v, t)?.to_physical())?;
        f.scale(-1.0);
        if self.drift_cache.len() >= 4 {
            self.drift_cache.remove(0);
        }
        self.drift_cache.push((t, f));
        Ok(Some(&self.drift_cache.last().unwrap().1))
    }

    /// Rates `(2‖∇U‖², 2⟨k, U⟩, 2⟨-ℙ∇·(V⊗V), U⟩)` at one stage.
    fn rates(&mut self, state: &SpectralField, k: &SpectralField, t: f64) -> Result<[f64; 3]> {
        let drift = match self.drift_forcing(t)? {
            Some(f) => 2.0 * f.inner(state),
            None => 0.0,
        };
        Ok([2.0 * state.gradient_norm_sq(), 2.0 * k.inner(state), drift])
    }

    /// One integrating-factor RK4 step; `None` when the CFL guard trips.
    fn step(
        &mut self,
        u: &SpectralField,
        t: f64,
        h: f64,
        cfl: (f64, f64),
        acc: &mut Accumulators,
    ) -> Result<Option<SpectralField>> {
        let grid = u.grid();
        let e_half = heat_weights(grid, 0.5 * h);
        let e_full = heat_weights(grid, h);
        let s1 = self.rhs(u, t)?;
        if s1.max_speed * h * cfl.1 > cfl.0 {
            return Ok(None);
        }
        let k1 = s1.k;
        let mut a = u.clone();
        a.axpy(0.5 * h, &k1);
        a.apply_radial(&e_half);
        let k2 = self.rhs(&a, t + 0.5 * h)?.k;
        let mut b = u.radial_filtered(&e_half);
        b.axpy(0.5 * h, &k2);
        let k3 = self.rhs(&b, t + 0.5 * h)?.k;
        let mut c = u.radial_filtered(&e_full);
        c.axpy(h, &k3.radial_filtered(&e_half));
        let k4 = self.rhs(&c, t + h)?.k;

        let r1 = self.rates(u, &k1, t)?;
        let r2 = self.rates(&a, &k2, t + 0.5 * h)?;
        let r3 = self.rates(&b, &k3, t + 0.5 * h)?;
        let r4 = self.rates(&c, &k4, t + h)?;
        let quad = |i: usize| h / 6.0 * (r1[i] + 2.0 * r2[i] + 2.0 * r3[i] + r4[i]);
        acc.dissipation += quad(0);
        acc.work_total += quad(1);
        acc.work_drift += quad(2);

        let mut next = u.radial_filtered(&e_full);
        next.axpy(h / 6.0, &k1.radial_filtered(&e_full));
        let mut mid = &k2 + &k3;
        mid.apply_radial(&e_half);
        next.axpy(h / 3.0, &mid);
        next.axpy(h / 6.0, &k4);
        Ok(Some(next))
    }
}

fn check_datum(u: &SpectralField, config: &SolverConfig, what: &str) -> Result<()> {
    u.expect_components(3)?;
    if u.grid().n() != config.n {
        return Err(Error::GridMismatch {
            expected: config.n,
            found: u.grid().n(),
        });
    }
    u.ensure_finite(what)?;
    let scale = u.max_abs_coeff().max(f64::MIN_POSITIVE);
    if u.divergence_max() > 1e-10 * scale * config.n as f64 {
        return Err(invalid(format!("{what} is not divergence-free")));
    }
    Ok(())
}

fn integrate(u0: &SpectralField, drift: Option<&SpectralField>, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    check_datum(u0, config, "initial datum")?;
    if let Some(v) = drift {
        check_datum(v, config, "drift datum")?;
    }
    let steps = config.base_steps();
    let h_base = config.base_dt();
    let cfl = (config.cfl_cap, config.n as f64 / (2.0 * std::f64::consts::PI));
    let mut integ = Integrator {
        drift,
        drift_cache: Vec::new(),
    };
    let mut u = u0.clone();
    let mut acc = Accumulators::default();
    let mut ledger = EnergyLedger::default();
    ledger.push(u.l2_norm_sq(), &acc);
    let mut times = vec![0.0];
    let mut fields = vec![u.clone()];
    let mut level = 0u32;
    let mut substeps = 0;
    for step in 0..steps {
        let t0 = step as f64 * h_base;
        'retry: loop {
            let parts = 1usize << level;
            let h = h_base / parts as f64;
            let mut trial = u.clone();
            let mut trial_acc = acc;
            for s in 0..parts {
                match integ.step(&trial, t0 + s as f64 * h, h, cfl, &mut trial_acc)? {
                    Some(next) => trial = next,
                    None => {
                        level += 1;
                        if level > MAX_HALVINGS {
                            return Err(Error::Unstable(format!(
                                "CFL guard still violated after {MAX_HALVINGS} halvings at t={t0}"
                            )));
                        }
                        continue 'retry;
                    }
                }
            }
            if !trial.is_finite() {
                return Err(Error::NonFinite(format!("solution coefficients after t={}", t0 + h_base)));
            }
            u = trial;
            acc = trial_acc;
            substeps += parts;
            break;
        }
        if (step + 1) % config.snapshot_stride == 0 || step + 1 == steps {
            times.push((step + 1) as f64 * h_base);
            ledger.push(u.l2_norm_sq(), &acc);
            fields.push(u.clone());
        }
    }
    Ok(Trajectory {
        config: config.clone(),
        times,
        fields,
        ledger,
        drift: drift.cloned(),
        halvings: level,
        substeps,
    })
}

pub fn solve_nse(u0: &SpectralField, config: &SolverConfig) -> Result<Trajectory> {
    integrate(u0, None, config)
}

/// Evolves `U` from `u01` under the drift `V = e^{tΔ}u02`:
/// `∂_tU - ΔU + ℙ∇·((U+V)⊗(U+V)) = 0`.
pub fn solve_perturbed(u01: &SpectralField, u02: &SpectralField, config: &SolverConfig) -> Result<Trajectory> {
    u01.expect_same_shape(u02)?;
    integrate(u01, Some(u02), config)
}

/// ABC flow `(sin z + cos y, sin x + cos z, sin y + cos x)` scaled by
/// `amplitude`; it satisfies `curl u = u`.
pub fn abc_flow(grid: &Grid, amplitude: f64) -> SpectralField {
    use crate::spectral_core::Complex64;
    let mut u = SpectralField::zeros(grid, 3);
    let len = grid.len();
    let modes: [(usize, [i64; 3], Complex64); 6] = [
        (0, [0, 0, 1], Complex64::new(0.0, -0.5)),
        (0, [0, 1, 0], Complex64::new(0.5, 0.0)),
        (1, [1, 0, 0], Complex64::new(0.0, -0.5)),
        (1, [0, 0, 1], Complex64::new(0.5, 0.0)),
        (2, [0, 1, 0], Complex64::new(0.0, -0.5)),
        (2, [1, 0, 0], Complex64::new(0.5, 0.0)),
    ];
    let coeffs = u.coeffs_mut();
    for (c, k, a) in modes {
        let i = grid.index_of(k).expect("low mode");
        let j = grid.index_of([-k[0], -k[1], -k[2]]).expect("low mode");
        coeffs[c * len + i] += a * amplitude;
        coeffs[c * len + j] += a.conj() * amplitude;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abc_flow_is_beltrami() {
        let g = Grid::new(16).unwrap();
        let u = abc_flow(&g, 1.0);
        let curl = {
            use crate::spectral_core::derivative;
            let c = |i: usize| u.scalar(i);
            let d = |f: &SpectralField, a: usize| derivative(f, a);
            SpectralField::stack(&[
                &d(&c(2), 1) - &d(&c(1), 2),
                &d(&c(0), 2) - &d(&c(2), 0),
                &d(&c(1), 0) - &d(&c(0), 1),
            ])
            .unwrap()
        };
        assert!((&curl - &u).max_abs_coeff() < 1e-15);
        let p = u.to_physical();
        let h = g.length() / 16.0;
        let x = [3.0 * h, 5.0 * h, 7.0 * h];
        let want = x[2].sin() + x[1].cos();
        assert!((p.component(0)[(3 * 16 + 5) * 16 + 7] - want).abs() < 1e-13);
    }

    #[test]
    fn config_rules() {
        assert!(SolverConfig::new(16, 0.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(16, 0.1, -1.0).validate().is_err());
        assert!(SolverConfig::new(15, 0.1, 1.0).validate().is_err());
        assert!(SolverConfig::new(16, 0.1, 1.0).with_stride(0).validate().is_err());
        let c = SolverConfig::new(16, 0.3, 1.0);
        assert_eq!(c.base_steps(), 4);
        assert!((c.base_dt() - 0.25).abs() < 1e-15);
        assert_eq!(SolverConfig::new(16, 1e-3, 1.0).base_steps(), 1000);
    }
}
