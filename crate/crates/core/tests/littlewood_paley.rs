use besovlab::datagen::{gaussian_spectrum, random_scalar};
use besovlab::littlewood_paley::*;
use besovlab::spectral_core::{Complex64, Grid, SpectralField};
use proptest::prelude::*;

fn bank(n: usize) -> LittlewoodPaleyBank {
    LittlewoodPaleyBank::new(&Grid::new(n).unwrap()).unwrap()
}

fn mode(n: usize, k: [i64; 3]) -> SpectralField {
    SpectralField::single_mode(&Grid::new(n).unwrap(), 1, 0, k, Complex64::new(1.0, 0.0)).unwrap()
}

#[test]
fn profile_values() {
    assert_eq!(chi(0.0), 1.0);
    assert_eq!(phi(0.0), 0.0);
    // Unit radius: chi and phi(r) share the mass, phi(r/2) vanishes.
    assert!(chi(1.0) > 0.0 && phi(1.0) > 0.0);
    assert_eq!(phi(0.5), 0.0);
    assert!((chi(1.0) + phi(1.0) - 1.0).abs() < 1e-15);
    for r in [0.8, 1.0, 1.7, 2.5] {
        assert!((0.0..=1.0).contains(&phi(r)));
    }
}

#[test]
fn bank_ranges() {
    for (n, hi) in [(16, 4), (32, 5), (48, 5), (64, 6)] {
        let b = bank(n);
        assert_eq!((b.j_min(), b.j_max()), (-1, hi), "n={n}");
        assert!(b.partition_residual() < 1e-12);
        assert!(b.block_sum_residual() < 1e-12);
    }
}

#[test]
fn dyadic_mode_lands_in_two_blocks() {
    let b = bank(32);
    for j0 in 0..=3 {
        let k = [1i64 << j0, 0, 0];
        let f = mode(32, k);
        for j in b.blocks() {
            let d = b.delta(&f, j).unwrap().l2_norm();
            if j == j0 - 1 || j == j0 {
                assert!(d > 0.0 || j == j0 - 1, "j0={j0} j={j}");
            } else {
                assert_eq!(d, 0.0, "j0={j0} j={j}");
            }
        }
        // |k| = 2^{j0} sits at phi(1) in block j0 and phi(2) in block j0 - 1.
        let here = b.delta(&f, j0).unwrap().l2_norm() / f.l2_norm();
        assert!((here - phi(1.0)).abs() < 1e-14);
        let below = b.delta(&f, j0 - 1).unwrap().l2_norm() / f.l2_norm();
        assert!((below - phi(2.0)).abs() < 1e-14);
    }
}

#[test]
fn low_pass_examples() {
    let b = bank(32);
    // Supported in |k| <= 3 * 2^2 / 4 = 3: unchanged by S_2.
    let g = Grid::new(32).unwrap();
    let f = random_scalar(&g, 4, |r| if r <= 3.0 { 1.0 } else { 0.0 });
    assert_eq!(b.low_pass(&f, 2).unwrap(), f);
    // |k| = 2^{j+2} is outside the low-pass ball.
    assert_eq!(b.low_pass(&mode(32, [8, 0, 0]), 1).unwrap().l2_norm(), 0.0);
    // S_j = I - sum_{m >= j} Delta_m, exactly on the lattice.
    let f = random_scalar(&g, 5, gaussian_spectrum(6.0));
    let mut rest = f.clone();
    for m in 2..=b.j_max() {
        rest = &rest - &b.delta(&f, m).unwrap();
    }
    let s = b.low_pass(&f, 2).unwrap();
    assert!((&rest - &s).l2_norm() < 1e-14 * f.l2_norm());
}

#[test]
fn zero_inputs_give_zero() {
    let b = bank(32);
    let z = SpectralField::zeros(b.grid(), 1);
    assert_eq!(b.delta(&z, 2).unwrap().l2_norm(), 0.0);
    assert_eq!(check_product_support_low(&b, &z, &z, 4, 3).unwrap().residual, 0.0);
    assert_eq!(check_product_support_high(&b, &z, &z, (0, 5, 3), 5).unwrap().residual, 0.0);
}

#[test]
fn support_identities_hold_and_probes_fire() {
    let b = bank(32);
    let g = b.grid().clone();
    let a = random_scalar(&g, 10, gaussian_spectrum(8.0));
    let c = random_scalar(&g, 11, gaussian_spectrum(8.0));
    assert!(check_product_support_low(&b, &a, &c, b.j_max(), 3).unwrap().relative() < 1e-12);
    assert!(check_product_support_high(&b, &a, &c, (0, 5, 3), 5).unwrap().relative() < 1e-12);
    assert!(low_product_support_residual(&b, &a, &c, 2, 0).unwrap().relative() > 1e-6);
    assert!(high_product_support_residual(&b, &a, &c, 1, 3, 3).unwrap().relative() > 1e-12);
    // Hypotheses are enforced by the checked versions.
    assert!(check_product_support_low(&b, &a, &c, 4, 2).is_err());
    assert!(check_product_support_high(&b, &a, &c, (0, 4, 3), 5).is_err());
    assert!(check_product_support_high(&b, &a, &c, (0, 5, 4), 5).is_err());
    assert!(b.delta(&a, 9).is_err());
}

#[test]
fn kernel_lattice_sum_and_decay() {
    let g = Grid::new(16).unwrap();
    let k = sample_localized_kernel(1, 0.05, &g).unwrap();
    // Value at the origin equals the direct lattice sum.
    let mut direct = 0.0;
    let n = g.n() as i64;
    for a in -n / 2..n / 2 {
        for b in -n / 2..n / 2 {
            for c in -n / 2..n / 2 {
                let m = (a * a + b * b + c * c) as f64;
                direct += phi(m.sqrt() / 2.0) * (-0.05 * m).exp();
            }
        }
    }
    direct /= (2.0 * std::f64::consts::PI).powi(3);
    assert!((k.scalar[0] - direct).abs() < 1e-12 * direct.abs());
    // t 2^{2q} > 30 drives every kernel below 1e-10.
    let late = sample_localized_kernel(1, 8.0, &g).unwrap();
    let worst = late
        .projected
        .iter()
        .chain(late.projection.iter())
        .flatten()
        .chain(late.scalar.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-10, "{worst}");
    assert!(k.bound.projected_constant.is_finite() && k.bound.other_constant.is_finite());
    assert!(sample_localized_kernel(1, 0.0, &g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn profile_partition(r in 0.0f64..200.0) {
        let jmax = 8;
        let total = chi(r) + (0..=jmax).map(|j| phi(r * 2f64.powi(-j))).sum::<f64>();
        if r <= 0.75 * 2f64.powi(jmax + 1) {
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        prop_assert!((0.0..=1.0).contains(&chi(r)));
    }

    #[test]
    fn blocks_reassemble_the_field(seed in any::<u64>(), k0 in 1.0f64..10.0) {
        let b = bank(32);
        let f = random_scalar(b.grid(), seed, gaussian_spectrum(k0));
        let mut sum = SpectralField::zeros(b.grid(), 1);
        for j in b.blocks() {
            sum = &sum + &b.delta(&f, j).unwrap();
        }
        // The zero mode belongs to no block.
        let mut g = f.clone();
        g.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        prop_assert!((&sum - &g).l2_norm() <= 1e-13 * f.l2_norm());
    }

    #[test]
    fn low_pass_is_monotone_in_energy(seed in any::<u64>(), j in -1i32..5) {
        let b = bank(32);
        let f = random_scalar(b.grid(), seed, gaussian_spectrum(6.0));
        let lo = b.low_pass(&f, j).unwrap().l2_norm();
        let hi = b.low_pass(&f, j + 1).unwrap().l2_norm();
        prop_assert!(lo <= hi * (1.0 + 1e-14));
        prop_assert!(hi <= f.l2_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn low_low_identity_random(seed in any::<u64>(), j in 2i32..=5) {
        let b = bank(32);
        let a = random_scalar(b.grid(), seed, gaussian_spectrum(8.0));
        let c = random_scalar(b.grid(), seed ^ 0x5555, gaussian_spectrum(8.0));
        prop_assert!(check_product_support_low(&b, &a, &c, j, 3).unwrap().relative() < 1e-12);
    }
}
