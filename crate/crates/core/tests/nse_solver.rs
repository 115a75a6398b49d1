use std::f64::consts::E;

use besovlab::datagen::{gaussian_spectrum, random_solenoidal};
use besovlab::nse_solver::*;
use besovlab::spectral_core::{apply_heat, duhamel_bilinear, Complex64, Grid, SpectralField};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

fn smooth(n: usize, seed: u64, amp: f64) -> SpectralField {
    random_solenoidal(&grid(n), seed, gaussian_spectrum(2.5)).scaled(amp)
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    (a - b).l2_norm() / b.l2_norm()
}

#[test]
fn zero_datum_stays_zero() {
    let z = SpectralField::zeros(&grid(16), 3);
    let t = solve_nse(&z, &SolverConfig::new(16, 1e-2, 0.1)).unwrap();
    assert!(t.fields.iter().all(|f| f.l2_norm() == 0.0));
    assert_eq!(t.times.len(), 11);
}

#[test]
fn beltrami_decays_exactly() {
    let u0 = abc_flow(&grid(16), 1.0);
    let t = solve_nse(&u0, &SolverConfig::new(16, 1e-2, 0.5).with_stride(10)).unwrap();
    for (time, f) in t.times.iter().zip(&t.fields) {
        assert!(rel(f, &apply_heat(&u0, *time).unwrap()) < 1e-12);
    }
}

#[test]
fn energy_equality_on_smooth_run() {
    let u0 = smooth(16, 3, 1.5);
    let t = solve_nse(&u0, &SolverConfig::new(16, 2e-3, 0.2).with_stride(10)).unwrap();
    let worst = t.ledger.balance_residuals().into_iter().fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    assert!(t.ledger.kinetic.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn vanishing_drift_matches_plain_solve() {
    let u0 = smooth(16, 4, 1.0);
    let cfg = SolverConfig::new(16, 5e-3, 0.1).with_stride(4);
    let a = solve_nse(&u0, &cfg).unwrap();
    let b = solve_perturbed(&u0, &SpectralField::zeros(&grid(16), 3), &cfg).unwrap();
    assert_eq!(a.times, b.times);
    for (x, y) in a.fields.iter().zip(&b.fields) {
        assert!((x - y).l2_norm() <= 1e-12 * x.l2_norm());
    }
}

#[test]
fn change_of_variables() {
    // solve_nse(u01 + u02) - e^{tΔ}u02 = solve_perturbed(u01, u02).
    let u01 = smooth(16, 5, 0.8);
    let u02 = smooth(16, 6, 0.6);
    let cfg = SolverConfig::new(16, 1e-3, 0.1).with_stride(20);
    let full = solve_nse(&(&u01 + &u02), &cfg).unwrap();
    let pert = solve_perturbed(&u01, &u02, &cfg).unwrap();
    let i = full.times.len() - 1;
    let lhs = &full.fields[i] - &apply_heat(&u02, full.times[i]).unwrap();
    assert!(rel(&pert.fields[i], &lhs) < 1e-8, "{}", rel(&pert.fields[i], &lhs));
    let total = pert.total_fields().unwrap();
    assert!(rel(&total[i], &full.fields[i]) < 1e-8);
}

#[test]
fn pure_drift_response_is_the_bilinear_term() {
    // With u01 = 0, U(t) = B(V + U, V + U)(t) and U = O(t), so U - B(V, V) is
    // smaller than U by a factor O(t·|V|).
    let u02 = smooth(16, 7, 0.5);
    let dt = 1e-3;
    let cfg = SolverConfig::new(16, dt, 10.0 * dt);
    let pert = solve_perturbed(&SpectralField::zeros(&grid(16), 3), &u02, &cfg).unwrap();
    let fine: Vec<f64> = (0..=200).map(|i| 10.0 * dt * i as f64 / 200.0).collect();
    let heat: Vec<SpectralField> = fine.iter().map(|&t| apply_heat(&u02, t).unwrap()).collect();
    let b = duhamel_bilinear(&fine, &heat, &heat, 10.0 * dt).unwrap();
    let u = pert.final_field();
    let r = rel(u, &b.field);
    assert!(r < 0.05, "{r}");
}

#[test]
fn picard_examples() {
    let z = SpectralField::zeros(&grid(16), 3);
    let p = picard_iterate(&z, 0.1, 8, 3).unwrap();
    assert!(p.fields.iter().all(|f| f.l2_norm() == 0.0));

    let u0 = smooth(16, 8, 0.3);
    let p = picard_iterate(&u0, 0.2, 64, 10).unwrap();
    assert!(!p.diverged);
    assert!(p.factor_two_holds);
    // Contraction down to the roundoff floor.
    let floor = 1e-14 * p.residuals[0];
    assert!(p.residuals.windows(2).all(|w| w[1] < w[0] || w[0] < floor), "{:?}", p.residuals);
    let sol = solve_nse(&u0, &SolverConfig::new(16, 0.2 / 640.0, 0.2).with_stride(10)).unwrap();
    let d = (p.fields.last().unwrap() - sol.final_field()).l2_norm();
    // Trapezoid error with step 0.2/64.
    assert!(d < (1e-6f64).max(10.0 * (0.2f64 / 64.0).powi(2) * u0.l2_norm()), "{d}");
}

#[test]
fn mild_residual_examples() {
    let z = SpectralField::zeros(&grid(16), 3);
    let t = solve_nse(&z, &SolverConfig::new(16, 1e-2, 0.1)).unwrap();
    assert_eq!(mild_residual(&t, 1).unwrap(), 0.0);

    let u0 = abc_flow(&grid(32), 1.0);
    let t = solve_nse(&u0, &SolverConfig::new(32, 1e-3, 1.0).with_stride(10)).unwrap();
    assert!(mild_residual(&t, 10).unwrap() < 1e-5);

    let u0 = smooth(16, 9, 0.5);
    let t = solve_nse(&u0, &SolverConfig::new(16, 2.5e-3, 0.5)).unwrap();
    let r8 = mild_residual(&t, 8).unwrap();
    let r4 = mild_residual(&t, 4).unwrap();
    assert!((3.0..=5.0).contains(&(r8 / r4)), "{}", r8 / r4);
    assert!(mild_residual(&t, 0).is_err());
}

#[test]
fn smoothing_profile_of_heat_mode() {
    let g = grid(16);
    let a = 0.8;
    let u0 = SpectralField::single_mode(&g, 3, 1, [1, 0, 0], Complex64::new(0.5 * a, 0.0)).unwrap();
    let times: Vec<f64> = (0..=3000).map(|i| 2.0 * i as f64 / 3000.0).collect();
    let path: Vec<SpectralField> = times.iter().map(|&t| apply_heat(&u0, t).unwrap()).collect();
    let p = smoothing_profile(&times, &path).unwrap();
    for k in 0..3 {
        let m = (k as f64 + 1.0) / 2.0;
        let expect = a * (m / E).powf(m);
        assert!((p.sup[k] - expect).abs() < 1e-5 * expect, "k={k}: {} vs {expect}", p.sup[k]);
    }
    let z = vec![SpectralField::zeros(&g, 3); 3];
    assert_eq!(smoothing_profile(&[0.0, 0.1, 0.2], &z).unwrap().sup, [0.0; 3]);
}

#[test]
fn smoothing_profile_stable_under_refinement() {
    let u = smooth(32, 10, 1.0);
    let u64_ = u.resample(&grid(64));
    let times: Vec<f64> = (0..=20).map(|i| 0.01 * i as f64).collect();
    let a: Vec<SpectralField> = times.iter().map(|&t| apply_heat(&u, t).unwrap()).collect();
    let b: Vec<SpectralField> = times.iter().map(|&t| apply_heat(&u64_, t).unwrap()).collect();
    let pa = smoothing_profile(&times, &a).unwrap();
    let pb = smoothing_profile(&times, &b).unwrap();
    for k in 0..3 {
        assert!((pa.sup[k] / pb.sup[k] - 1.0).abs() < 0.1);
    }
}

#[test]
fn bad_configs_rejected() {
    let u0 = smooth(16, 1, 1.0);
    assert!(solve_nse(&u0, &SolverConfig::new(16, 0.0, 0.1)).is_err());
    assert!(solve_nse(&u0, &SolverConfig::new(16, 1e-2, -1.0)).is_err());
    assert!(solve_nse(&u0, &SolverConfig::new(32, 1e-2, 0.1)).is_err());
    assert!(solve_nse(&u0, &SolverConfig::new(16, 1e-2, 0.1).with_stride(0)).is_err());
}

#[test]
fn persistence_roundtrip_and_tamper() {
    let u01 = smooth(16, 11, 0.5);
    let u02 = smooth(16, 12, 0.5);
    let t = solve_perturbed(&u01, &u02, &SolverConfig::new(16, 1e-2, 0.05)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = save_trajectory(&t, dir.path()).unwrap();
    assert_eq!(m.snapshots.len(), t.times.len());
    let back = load_trajectory(dir.path()).unwrap();
    assert_eq!(back.times, t.times);
    assert_eq!(back.fields, t.fields);
    assert_eq!(back.drift, t.drift);

    let path = dir.path().join(&m.snapshots[1].name);
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    assert!(load_trajectory(dir.path()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn runs_are_deterministic_and_balanced(seed in any::<u64>(), amp in 0.1f64..2.0) {
        let u0 = smooth(16, seed, amp);
        let cfg = SolverConfig::new(16, 5e-3, 0.05);
        let a = solve_nse(&u0, &cfg).unwrap();
        let b = solve_nse(&u0, &cfg).unwrap();
        prop_assert_eq!(&a.fields, &b.fields);
        let worst = a.ledger.balance_residuals().into_iter().fold(0.0, f64::max);
        prop_assert!(worst < 1e-6);
        prop_assert!(a.fields.iter().all(|f| f.divergence_max() < 1e-12 * u0.max_abs_coeff()));
    }
}
