use bvlab_core::dynamics::{
    birkhoff_history, birkhoff_variance_exact, birkhoff_variance_mc, log_deriv_mean, BlaschkeMap, CirclePotential,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn random_potential(rng: &mut ChaCha8Rng, max_freq: i64) -> CirclePotential {
    let terms: Vec<(i64, Complex64)> = (-max_freq..=max_freq)
        .filter(|&m| m != 0)
        .map(|m| (m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    CirclePotential::from_terms(terms)
}

#[test]
fn doubling_differences_shrink() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for d in [2u64, 3] {
        for _ in 0..5 {
            let phi = random_potential(&mut rng, 6);
            let h = birkhoff_history(&phi, d, 48).unwrap();
            let var = |n: usize| h[n - 1];
            // correlations at lag j vanish once d^j > 6; past that lag
            // var_n = A + B/n exactly
            let lag = (1..).find(|&j| d.pow(j) > 6).unwrap() as usize;
            let gaps: Vec<f64> = (lag..=24).map(|n| (var(2 * n) - var(n)).abs()).collect();
            for (i, w) in gaps.windows(2).enumerate() {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "d = {d}, n = {}: {} then {}", lag + i, w[0], w[1]);
            }
        }
    }
}

#[test]
fn lacunary_monomial_has_unit_variance() {
    for d in 2..=6u64 {
        let phi = CirclePotential::monomial(-((d - 1) as i64));
        for n in [1, 2, 7, 30] {
            let v = birkhoff_variance_exact(&phi, d, n).unwrap();
            assert!((v - 1.0).abs() < 1e-14, "d = {d}, n = {n}: {v}");
        }
    }
}

#[test]
fn orbit_angles_stay_uniform() {
    let map = BlaschkeMap::new(vec![Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.1)], 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let mut turns: Vec<f64> = (0..n)
        .map(|_| {
            let mut z = Complex64::cis(rng.gen_range(0.0..TAU));
            for _ in 0..5 {
                z = map.eval(z);
                z /= z.norm();
            }
            z.arg().rem_euclid(TAU) / TAU
        })
        .collect();
    turns.sort_by(f64::total_cmp);
    let ks = turns
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - u))
        .fold(0.0, f64::max);
    // asymptotic 1% critical value
    let critical = 1.628 / (n as f64).sqrt();
    assert!(ks < critical, "KS statistic {ks} above {critical}");
}

#[test]
fn exact_and_sampled_variance_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (i, d) in [2u64, 3, 4, 2, 3].into_iter().enumerate() {
        let phi = random_potential(&mut rng, 3);
        let n = 12;
        let exact = birkhoff_variance_exact(&phi, d, n).unwrap();
        let mc = birkhoff_variance_mc(&phi, &BlaschkeMap::power(d).unwrap(), n, 40_000, 1000 + i as u64).unwrap();
        assert!(
            (mc.estimate - exact).abs() <= 3.0 * mc.stderr,
            "d = {d}: {} +- {} vs {exact}",
            mc.estimate,
            mc.stderr
        );
    }
}

#[test]
fn one_zero_variance_is_stable_under_doubling() {
    let phi = CirclePotential::from_terms([(1, Complex64::new(0.5, 0.0)), (-1, Complex64::new(0.5, 0.0))]);
    let map = BlaschkeMap::new(vec![Complex64::new(0.3, 0.0)], 2).unwrap();
    let a = birkhoff_variance_mc(&phi, &map, 100, 100_000, 5).unwrap();
    let b = birkhoff_variance_mc(&phi, &map, 200, 100_000, 6).unwrap();
    assert!(a.estimate.is_finite() && a.estimate > 0.0);
    let se = a.stderr.hypot(b.stderr);
    assert!((a.estimate - b.estimate).abs() <= 3.0 * se, "{} vs {}", a.estimate, b.estimate);
}

#[test]
fn log_derivative_mean_matches_sampling() {
    let map = BlaschkeMap::new(vec![Complex64::new(0.6, -0.3)], 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = 100_000;
    let xs: Vec<f64> = (0..m).map(|_| map.circle_derivative_modulus(rng.gen_range(0.0..TAU)).ln()).collect();
    let mean = xs.iter().sum::<f64>() / m as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let se = (var / m as f64).sqrt();
    let want = log_deriv_mean(&map);
    assert!((mean - want).abs() <= 3.0 * se, "{mean} +- {se} vs {want}");
    assert_eq!(log_deriv_mean(&BlaschkeMap::power(5).unwrap()), 5f64.ln());
}

proptest! {
    #[test]
    fn blaschke_maps_preserve_the_circle(
        zeros in prop::collection::vec((0.0f64..0.95, 0.0f64..TAU), 0..4),
        extra in 0u64..3,
        theta in 0.0f64..TAU,
    ) {
        let zs: Vec<Complex64> = zeros.iter().map(|&(r, a)| Complex64::from_polar(r, a)).collect();
        let degree = (zs.len() as u64 + extra).max(1);
        let map = BlaschkeMap::new(zs, degree).unwrap();
        let w = map.eval(Complex64::cis(theta));
        prop_assert!((w.norm() - 1.0).abs() < 1e-12);
    }
}
