use std::f64::consts::{E, PI};

use besovlab::datagen::{gaussian_spectrum, random_scalar, random_solenoidal};
use besovlab::littlewood_paley::{phi, LittlewoodPaleyBank};
use besovlab::norms::*;
use besovlab::spectral_core::{apply_heat, Complex64, Grid, SpectralField};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

/// `amp·cos(k·x)` in one component.
fn cosine(g: &Grid, components: usize, component: usize, k: [i64; 3], amp: f64) -> SpectralField {
    SpectralField::single_mode(g, components, component, k, Complex64::new(0.5 * amp, 0.0)).unwrap()
}

#[test]
fn lebesgue_norms_of_a_sine() {
    let g = grid(16);
    let s = SpectralField::single_mode(&g, 1, 0, [1, 0, 0], Complex64::new(0.0, -0.5)).unwrap();
    let l2 = (2.0 * PI).powf(1.5) / 2f64.sqrt();
    assert!((lp_norm(&s, 2.0).unwrap() - l2).abs() < 1e-12 * l2);
    assert!((lp_norm(&s, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
    assert!(lp_norm(&s, 4.0).unwrap() > 0.0);
}

#[test]
fn sobolev_examples() {
    let g = grid(16);
    let f = random_solenoidal(&g, 2, gaussian_spectrum(3.0));
    assert!((sobolev_norm(&f, 0.0, true).unwrap() - f.l2_norm()).abs() < 1e-13 * f.l2_norm());
    let m = cosine(&g, 1, 0, [0, 2, 0], 1.0);
    for alpha in [0.3, 1.0, 1.4] {
        let v = sobolev_norm(&m, alpha, true).unwrap();
        assert!((v - 2f64.powf(alpha) * m.l2_norm()).abs() < 1e-13 * v);
    }
}

#[test]
fn besov_single_mode_two_terms() {
    let g = grid(32);
    let bank = LittlewoodPaleyBank::new(&g).unwrap();
    let (s, p, q) = (-0.4, 4.0, 4.0);
    let params = BesovParams::new(s, p, q).unwrap();
    let j0 = 2;
    let m = cosine(&g, 1, 0, [1 << j0, 0, 0], 1.0);
    let lp = lp_norm(&m, p).unwrap();
    let expect = ((2f64.powf((j0 - 1) as f64 * s) * phi(2.0) * lp).powf(q)
        + (2f64.powf(j0 as f64 * s) * phi(1.0) * lp).powf(q))
    .powf(1.0 / q);
    let got = besov_norm(&m, &bank, params).unwrap();
    assert!((got.value - expect).abs() < 1e-12 * expect);
    assert_eq!(besov_norm(&SpectralField::zeros(&g, 1), &bank, params).unwrap().value, 0.0);
}

#[test]
fn time_norm_examples() {
    let g = grid(16);
    let bank = LittlewoodPaleyBank::new(&g).unwrap();
    let f = random_scalar(&g, 3, gaussian_spectrum(3.0));
    let params = BesovParams::new(0.5, 2.0, 2.0).unwrap();
    let times: Vec<f64> = (0..5).map(|i| 0.1 * i as f64).collect();
    let fixed = vec![f.clone(); times.len()];
    let cl = chemin_lerner_norm(&times, &fixed, &bank, f64::INFINITY, params).unwrap().value;
    let b = besov_norm(&f, &bank, params).unwrap().value;
    assert!((cl - b).abs() < 1e-13 * b);
    let zeros = vec![SpectralField::zeros(&g, 1); times.len()];
    assert_eq!(chemin_lerner_norm(&times, &zeros, &bank, 1.0, params).unwrap().value, 0.0);
}

#[test]
fn chemin_lerner_heat_single_mode() {
    // Block j0 of a heat-evolved mode |k| = 2^{j0} in L^1_T: phi(1)·(1 - e^{-|k|^2 T})/|k|^2 · ‖mode‖_p.
    let g = grid(32);
    let bank = LittlewoodPaleyBank::new(&g).unwrap();
    let j0 = 1;
    let k2 = 4.0f64;
    let m = cosine(&g, 1, 0, [2, 0, 0], 1.0);
    let t_end = 0.5;
    let steps = 2000;
    let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
    let path: Vec<SpectralField> = times.iter().map(|&t| apply_heat(&m, t).unwrap()).collect();
    let params = BesovParams::new(0.0, 2.0, f64::INFINITY).unwrap();
    let r = chemin_lerner_norm(&times, &path, &bank, 1.0, params).unwrap();
    let got = r.per_block.iter().find(|b| b.0 == j0).unwrap().1;
    let expect = phi(1.0) * (1.0 - (-k2 * t_end).exp()) / k2 * m.l2_norm();
    assert!((got - expect).abs() < 1e-6 * expect, "{got} vs {expect}");
}

#[test]
fn heat_sup_rejects_nonnegative_regularity() {
    let g = grid(16);
    let f = random_scalar(&g, 1, gaussian_spectrum(3.0));
    assert!(heat_sup_norm(&f, 0.0, 2.0, (0, 3)).is_err());
    assert!(heat_sup_norm(&f, -0.5, 2.0, (0, 3)).unwrap() > 0.0);
}

/// Brute-force oracle for `cos(x₁)e₂`: the density factorizes, so the time
/// integral is `(1 - e^{-2R²})/2` times the discrete ball average of `cos²`.
fn bmo_oracle_single_mode(g: &Grid, amp: f64) -> f64 {
    let n = g.n();
    let h = g.length() / n as f64;
    let off = |i: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 } * h;
    let mut best: f64 = 0.0;
    for r in carleson_radii(g) {
        let r2 = r * r * (1.0 + 1e-12);
        let mut pts = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if off(a).powi(2) + off(b).powi(2) + off(c).powi(2) <= r2 {
                        pts.push(a);
                    }
                }
            }
        }
        let time = (1.0 - (-2.0 * r * r).exp()) / 2.0;
        for x in 0..n {
            let avg = pts
                .iter()
                .map(|&a| ((((x + a) % n) as f64) * h).cos().powi(2))
                .sum::<f64>()
                / pts.len() as f64;
            best = best.max(amp * amp * time * avg);
        }
    }
    best
}

#[test]
fn bmo_minus1_matches_oracle() {
    let g = grid(16);
    assert_eq!(bmo_minus1_norm(&SpectralField::zeros(&g, 3)).unwrap(), 0.0);
    let u = cosine(&g, 3, 1, [1, 0, 0], 1.3);
    let got = bmo_minus1_norm(&u).unwrap();
    let expect = bmo_oracle_single_mode(&g, 1.3);
    assert!((got / expect - 1.0).abs() < 0.05, "{got} vs {expect}");
    let doubled = bmo_minus1_norm(&u.scaled(2.0)).unwrap();
    assert!((doubled / got - 4.0).abs() < 1e-10);
}

#[test]
fn path_norm_examples() {
    let g = grid(16);
    let amp = 0.7;
    let k2 = 5.0;
    let u0 = cosine(&g, 3, 2, [1, 2, 0], amp);
    // Fine uniform time grid around the maximiser t* = 1/(2|k|²) = 0.1.
    let steps = 400;
    let t_end = 0.4;
    let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
    let path: Vec<SpectralField> = times.iter().map(|&t| apply_heat(&u0, t).unwrap()).collect();
    let pn = path_norm_e_t(&times, &path).unwrap();
    let expect = amp / (2.0 * k2 * E).sqrt();
    assert!((pn.sup_term - expect).abs() < 1e-9 * expect, "{} vs {expect}", pn.sup_term);
    assert!((pn.value - pn.sup_term - pn.carleson_term).abs() < 1e-15);

    let zeros = vec![SpectralField::zeros(&g, 3); 3];
    assert_eq!(path_norm_e_t(&[0.0, 0.1, 0.2], &zeros).unwrap().value, 0.0);
    assert!(path_norm_e_t(&[0.1, 0.2, 0.3], &zeros).is_err());
}

#[test]
fn path_norm_monotone_in_horizon() {
    let g = grid(16);
    let u0 = random_solenoidal(&g, 12, gaussian_spectrum(3.0));
    let mut last = f64::INFINITY;
    for m in 2..6 {
        let t_end = 2f64.powi(-m);
        let times: Vec<f64> = (0..=16).map(|i| t_end * i as f64 / 16.0).collect();
        let path: Vec<SpectralField> = times.iter().map(|&t| apply_heat(&u0, t).unwrap()).collect();
        let v = path_norm_e_t(&times, &path).unwrap().value;
        assert!(v <= last * (1.0 + 1e-12), "T=2^-{m}: {v} > {last}");
        last = v;
    }
}

#[test]
fn probe_single_mode_ratios_are_finite() {
    let g = grid(32);
    let bank = LittlewoodPaleyBank::new(&g).unwrap();
    let m = cosine(&g, 1, 0, [3, 1, 0], 1.0);
    let r = interpolation_ratio(&bank, &m, 2.0, (-0.5, 0.5), 0.5).unwrap();
    assert!(r.is_finite() && r > 0.0);
    let params = BesovParams::new(0.5, 2.0, 2.0).unwrap();
    let pr = product_ratio(&bank, &m, &m, params).unwrap();
    assert!(pr.is_finite() && pr > 0.0 && pr < 1.0);
    assert!(interpolation_ratio(&bank, &m, 2.0, (0.5, -0.5), 0.5).is_err());
    assert!(product_ratio(&bank, &m, &m, BesovParams::new(2.0, 2.0, 2.0).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn besov_is_homogeneous(seed in any::<u64>(), lambda in 0.01f64..100.0, s in -0.9f64..0.9) {
        let g = grid(16);
        let bank = LittlewoodPaleyBank::new(&g).unwrap();
        let f = random_scalar(&g, seed, gaussian_spectrum(4.0));
        let params = BesovParams::new(s, 3.0, 2.0).unwrap();
        let a = besov_norm(&f.scaled(lambda), &bank, params).unwrap().value;
        let b = besov_norm(&f, &bank, params).unwrap().value;
        prop_assert!((a - lambda * b).abs() <= 1e-12 * a);
    }

    #[test]
    fn probe_ratios_are_amplitude_invariant(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let g = grid(16);
        let bank = LittlewoodPaleyBank::new(&g).unwrap();
        let f = random_scalar(&g, seed, gaussian_spectrum(3.0));
        let a = interpolation_ratio(&bank, &f, 2.0, (-0.5, 0.5), 0.5).unwrap();
        let b = interpolation_ratio(&bank, &f.scaled(lambda), 2.0, (-0.5, 0.5), 0.5).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
        let a = sobolev_semigroup_ratio(&f, 0.7).unwrap();
        let b = sobolev_semigroup_ratio(&f.scaled(lambda), 0.7).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn lp_norms_increase_with_p(seed in any::<u64>()) {
        // On a probability-normalized box the Lp averages increase with p;
        // with the (2π)³ volume the ratio ‖f‖_p / vol^{1/p} does.
        let g = grid(16);
        let f = random_scalar(&g, seed, gaussian_spectrum(3.0));
        let vol = g.volume();
        let avg = |p: f64| lp_norm(&f, p).unwrap() / vol.powf(1.0 / p);
        prop_assert!(avg(2.0) <= avg(4.0) * (1.0 + 1e-12));
        prop_assert!(avg(4.0) <= lp_norm(&f, f64::INFINITY).unwrap() * (1.0 + 1e-12));
    }
}
