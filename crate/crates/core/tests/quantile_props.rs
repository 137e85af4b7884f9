mod common;

use common::*;
use esg_core::normal;
use esg_core::quantile::{es_curve, gaussian_es, GaussianLoss};
use esg_core::LossDistribution;
use proptest::prelude::*;

proptest! {
    #[test]
    fn es_is_nondecreasing(atoms in arb_atoms(20), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let x = quantile_of(&atoms);
        let (p, q) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(x.es(p).unwrap() <= x.es(q).unwrap() + 1e-12);
    }

    #[test]
    fn es_at_zero_is_the_mean(atoms in arb_atoms(20)) {
        let x = quantile_of(&atoms);
        let mean: f64 = atoms.iter().map(|(w, v)| w * v).sum();
        prop_assert!((x.es(0.0).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn es_translation_and_scaling(atoms in arb_atoms(20), p in 0.0..=1.0f64, m in -5.0..5.0f64, l in 0.01..10.0f64) {
        let x = quantile_of(&atoms);
        let base = x.es(p).unwrap();
        prop_assert!((x.shifted(m).es(p).unwrap() - (base + m)).abs() < 1e-12 * (1.0 + base.abs() + m.abs()));
        prop_assert!((x.scaled(l).unwrap().es(p).unwrap() - l * base).abs() < 1e-11 * (1.0 + l * base.abs()));
    }

    #[test]
    fn es_matches_descending_sweep(atoms in arb_atoms(30), p in 0.0..=1.0f64) {
        let x = quantile_of(&atoms);
        prop_assert!((x.es(p).unwrap() - oracle_es(&atoms, p)).abs() < 1e-9);
    }

    #[test]
    fn var_is_left_quantile(atoms in arb_atoms(20), p in 0.001..=1.0f64) {
        let x = quantile_of(&atoms);
        let v = x.var(p).unwrap();
        let below: f64 = atoms.iter().filter(|a| a.1 <= v).map(|a| a.0).sum();
        let strictly: f64 = atoms.iter().filter(|a| a.1 < v).map(|a| a.0).sum();
        prop_assert!(below >= p - 1e-12);
        prop_assert!(strictly < p + 1e-12);
    }

    #[test]
    fn es_curve_knots_agree(atoms in arb_atoms(20)) {
        let x = quantile_of(&atoms);
        let curve = es_curve(&x);
        for (p, v) in curve.knots() {
            prop_assert_eq!(v, x.es(p).unwrap());
        }
    }
}

#[test]
fn es_against_dense_grid() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        // atom counts dividing the grid size keep every breakpoint on the grid
        let n = [1usize, 2, 4, 5, 8, 10, 16, 20, 25, 32][rng.gen_range(0..10)];
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let x = esg_core::StepQuantile::from_samples(&values, None).unwrap();
        let grid = 100_000;
        // left Riemann sum of VaR over a uniform grid on [p, 1]
        for &p in &[0.0, 0.3, 0.9] {
            let start = (p * grid as f64) as usize;
            let mut acc = 0.0;
            for j in start..grid {
                let u = (j as f64 + 0.5) / grid as f64;
                acc += x.var(u).unwrap();
            }
            let dense = acc / (grid - start) as f64;
            assert!((dense - x.es(p).unwrap()).abs() < 1e-6);
        }
    }
}

fn simpson_tail_mean(p: f64) -> f64 {
    // int_{z_p}^{z_p + 12} z phi(z) dz / (1 - p) with composite Simpson
    let z_p = bisect_quantile(p);
    let (a, b) = (z_p, z_p + 12.0);
    let n = 20_000;
    let h = (b - a) / n as f64;
    let f = |z: f64| z * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(a) + f(b);
    for i in 1..n {
        let z = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(z) } else { 2.0 * f(z) };
    }
    s * h / 3.0 / (1.0 - p)
}

fn bisect_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal::cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn gaussian_es_matches_integration() {
    for &p in &[0.5, 0.9, 0.95, 0.99, 0.9975] {
        for &(mu, sigma) in &[(0.0, 1.0), (1.0, 0.125), (0.0, 0.5), (-2.0, 3.0)] {
            let oracle = mu + sigma * simpson_tail_mean(p);
            let got = gaussian_es(mu, sigma, p).unwrap();
            assert!((got - oracle).abs() < 1e-8, "p={p} mu={mu} sigma={sigma}: {got} vs {oracle}");
        }
    }
}

#[test]
fn gaussian_discretization_is_exact_on_the_grid() {
    let x = GaussianLoss::new(0.3, 1.7).unwrap();
    let q = x.discretize(1000).unwrap();
    for k in [0usize, 500, 900, 990, 999] {
        let p = k as f64 / 1000.0;
        let exact = if p == 0.0 { 0.3 } else { gaussian_es(0.3, 1.7, p).unwrap() };
        assert!((q.es(p).unwrap() - exact).abs() < 1e-8, "p = {p}");
    }
}
