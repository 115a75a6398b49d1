use besovlab::datagen::{gaussian_spectrum, random_scalar, random_solenoidal};
use besovlab::littlewood_paley::LittlewoodPaleyBank;
use besovlab::nse_solver::{abc_flow, solve_nse, solve_perturbed, SolverConfig};
use besovlab::reynolds::*;
use besovlab::spectral_core::{Complex64, Grid, SpectralField};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

fn bank(n: usize) -> LittlewoodPaleyBank {
    LittlewoodPaleyBank::new(&grid(n)).unwrap()
}

fn smooth(n: usize, seed: u64, amp: f64) -> SpectralField {
    random_solenoidal(&grid(n), seed, gaussian_spectrum(2.5)).scaled(amp)
}

#[test]
fn zero_pair_gives_zero_terms() {
    let b = bank(32);
    let z = SpectralField::zeros(b.grid(), 1);
    let t = bj_terms(&b, &z, &z, 4, DEFAULT_N0, DEFAULT_N1).unwrap();
    for f in [&t.b1, &t.b2, &t.b3_ab, &t.b3_ba, &t.b41, &t.total] {
        assert_eq!(f.l2_norm(), 0.0);
    }
}

#[test]
fn low_supported_pair_commutes_with_cutoff() {
    // Support in |k| <= 2^{j-3}·3/4 = 3 at j = 5: every product stays inside
    // the region where the low-pass symbol is 1.
    let b = bank(32);
    let low = |r: f64| if r <= 3.0 { 1.0 } else { 0.0 };
    let a = random_scalar(b.grid(), 1, low);
    let c = random_scalar(b.grid(), 2, low);
    let t = bj_terms(&b, &a, &c, 5, 3, 5).unwrap();
    assert!(t.total.l2_norm() < 1e-14 * a.l2_norm() * c.l2_norm());
}

#[test]
fn decomposition_and_block_reassembly() {
    let b = bank(32);
    let a = random_scalar(b.grid(), 3, gaussian_spectrum(6.0));
    let c = random_scalar(b.grid(), 4, gaussian_spectrum(6.0));
    let scale = a.l2_norm() * c.l2_norm();
    for j in 2..=b.j_max() {
        let t = bj_terms(&b, &a, &c, j, 3, 5).unwrap();
        assert!(t.decomposition_residual() < 1e-12 * scale, "j={j}");
        let blocks = b41_from_blocks(&b, &a, &c, j, 3, 5).unwrap();
        assert!((&blocks - &t.b41).l2_norm() < 1e-12 * scale, "j={j}");
    }
}

#[test]
fn index_hypotheses_enforced() {
    let b = bank(32);
    let a = random_scalar(b.grid(), 5, gaussian_spectrum(4.0));
    assert!(bj_terms(&b, &a, &a, 4, 2, 5).is_err());
    assert!(bj_terms(&b, &a, &a, 4, 3, 4).is_err());
    assert!(bj_terms(&b, &a, &a, 1, 3, 5).is_err());
    assert!(bj_terms(&b, &a, &a, 9, 3, 5).is_err());
}

#[test]
fn vanishing_drift_leaves_only_the_first_term() {
    let u = smooth(16, 6, 1.0);
    let z = SpectralField::zeros(&grid(16), 3);
    let t = solve_perturbed(&u, &z, &SolverConfig::new(16, 1e-2, 0.02)).unwrap();
    let st = stress_terms_at(&t, 1, 2).unwrap();
    assert!(st.terms[0].l2_norm() > 0.0);
    for k in 1..6 {
        assert_eq!(st.terms[k].l2_norm(), 0.0, "term {}", k + 1);
    }
}

#[test]
fn vanishing_velocity_leaves_only_the_drift_term() {
    let z = SpectralField::zeros(&grid(16), 3);
    let v = smooth(16, 7, 1.0);
    let t = solve_perturbed(&z, &v, &SolverConfig::new(16, 1e-2, 0.02)).unwrap();
    // U(0) = 0.
    let st = stress_terms_at(&t, 0, 2).unwrap();
    for k in 0..5 {
        assert_eq!(st.terms[k].l2_norm(), 0.0, "term {}", k + 1);
    }
    assert!(st.terms[5].l2_norm() > 0.0);
}

#[test]
fn beltrami_low_pass_equation_residual() {
    let u0 = abc_flow(&grid(32), 1.0);
    let t = solve_nse(&u0, &SolverConfig::new(32, 1e-3, 0.1).with_stride(10)).unwrap();
    let b = bank(32);
    let r = residual_check_sj_equation(&t, b.j_max()).unwrap();
    assert!(r < 1e-5, "{r}");
}

#[test]
fn shear_heat_flow_residual_is_at_integrator_level() {
    // cos(2 x2) e1 has no self-advection and the heat-factored difference is
    // exact on a heat mode, so only the integrator error remains at any
    // snapshot spacing.
    let g = grid(16);
    let u0 = SpectralField::single_mode(&g, 3, 0, [0, 2, 0], Complex64::new(0.5, 0.0)).unwrap();
    let coarse = solve_nse(&u0, &SolverConfig::new(16, 1e-3, 0.2).with_stride(20)).unwrap();
    let fine = solve_nse(&u0, &SolverConfig::new(16, 1e-3, 0.2).with_stride(10)).unwrap();
    let rc = residual_check_sj_equation(&coarse, 3).unwrap();
    let rf = residual_check_sj_equation(&fine, 3).unwrap();
    assert!(rc < 1e-10 && rf < 1e-10, "{rc} {rf}");
    let short = solve_nse(&u0, &SolverConfig::new(16, 1e-3, 1e-3)).unwrap();
    assert!(residual_check_sj_equation(&short, 3).is_err());
}

#[test]
fn batched_residual_matches_single_index() {
    let u01 = smooth(16, 8, 0.8);
    let u02 = smooth(16, 9, 0.5);
    let t = solve_perturbed(&u01, &u02, &SolverConfig::new(16, 2e-3, 0.02)).unwrap();
    let many = residual_check_many(&t, &[1, 2, 3]).unwrap();
    for (k, j) in [1, 2, 3].into_iter().enumerate() {
        assert_eq!(many[k], residual_check_sj_equation(&t, j).unwrap());
    }
}

#[test]
fn stress_rows_and_fit() {
    let u01 = smooth(16, 10, 0.8);
    let u02 = smooth(16, 11, 0.5);
    let t = solve_perturbed(&u01, &u02, &SolverConfig::new(16, 5e-3, 0.05)).unwrap();
    let rows = reynolds_stress(&t, &[0, 1, 2, 3]).unwrap();
    for r in &rows {
        assert_eq!(r.profile.len(), t.times.len());
        // Triangle inequality on the time-integrated parts.
        assert!(r.norm <= r.per_term.iter().sum::<f64>() * (1.0 + 1e-12));
    }
    let fit = decay_fit(&rows, 0.1).unwrap();
    assert!(fit.c_hat > 0.0 && fit.gamma_hat.is_finite());
}

#[test]
fn synthetic_decay_is_recovered() {
    let gamma0 = 0.37;
    let rows: Vec<StressRow> = (2..=6)
        .map(|j| StressRow {
            j,
            norm: 2f64.powf(-gamma0 * j as f64),
            per_term: [0.0; 6],
            profile: Vec::new(),
        })
        .collect();
    let fit = decay_fit(&rows, 0.1).unwrap();
    assert!((fit.gamma_hat - gamma0).abs() < 1e-10);
    assert!(fit.monotone && fit.meets_threshold);
    let mut zero = rows.clone();
    zero[2].norm = 0.0;
    assert!(decay_fit(&zero, 0.1).is_err());
}

#[test]
fn gradient_budget_examples() {
    let z = SpectralField::zeros(&grid(16), 3);
    let t = solve_nse(&z, &SolverConfig::new(16, 1e-2, 0.05)).unwrap();
    let gb = gradient_budget(&t, &[1, 2, 3], 0.1).unwrap();
    assert!(gb.per_j.iter().all(|r| r.1 == 0.0));
    assert!((gb.target_slope - 0.1 * std::f64::consts::LN_2).abs() < 1e-15);

    // A single mode at |k| = 4 enters the budget once the cut-off passes it.
    let g = grid(16);
    let u0 = SpectralField::single_mode(&g, 3, 0, [0, 4, 0], Complex64::new(0.5, 0.0)).unwrap();
    let t = solve_nse(&u0, &SolverConfig::new(16, 1e-2, 0.05)).unwrap();
    let gb = gradient_budget(&t, &[0, 1, 2, 3], 0.1).unwrap();
    assert_eq!(gb.per_j[0].1, 0.0);
    assert_eq!(gb.per_j[1].1, 0.0);
    assert!(gb.per_j[3].1 > gb.per_j[2].1 && gb.per_j[2].1 > 0.0);
    assert!(gradient_budget(&t, &[1], 0.1).is_err());
}

#[test]
fn resolved_field_has_no_stress_at_top_index() {
    let u0 = smooth(32, 13, 1.0);
    let t = solve_nse(&u0, &SolverConfig::new(32, 5e-3, 0.02)).unwrap();
    let b = bank(32);
    let rows = reynolds_stress(&t, &[b.j_max()]).unwrap();
    let u2 = u0.l2_norm_sq();
    assert!(rows[0].profile.iter().all(|v| *v < 1e-8 * u2), "{:?}", rows[0].profile);
}

#[test]
fn resolved_tail_is_nonincreasing() {
    let u0 = smooth(16, 12, 1.0);
    let t = solve_nse(&u0, &SolverConfig::new(16, 5e-3, 0.05)).unwrap();
    let b = bank(16);
    let js: Vec<i32> = (b.j_max() - 1..=b.j_max() + 2).collect();
    let rows = reynolds_stress(&t, &js).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].norm <= w[0].norm * (1.0 + 1e-12), "{} -> {}", w[0].norm, w[1].norm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn decomposition_random(seed in any::<u64>(), j in 2i32..=5) {
        let b = bank(32);
        let a = random_scalar(b.grid(), seed, gaussian_spectrum(8.0));
        let c = random_scalar(b.grid(), seed ^ 0xabc, gaussian_spectrum(8.0));
        let t = bj_terms(&b, &a, &c, j, 3, 5).unwrap();
        prop_assert!(t.decomposition_residual() < 1e-12 * a.l2_norm() * c.l2_norm());
    }
}
