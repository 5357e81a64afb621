use bvlab_core::bounds::{
    best_integer_degree, distortion_constant, julia_dim_k, julia_dim_t, lambda_lemma_coeff, optimal_rho0,
    pointwise_sigma_bound, sigma2_optimal, sigma2_shell, table2,
};
use bvlab_core::constructions::{shell_variance, Rho0, ShellMethod, ShellParams};
use bvlab_oracles::grid_argmax;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn optimal_radius_maximises_the_shell_variance() {
    for d in [2.0, 2.5, 3.0, 4.0, 7.0, 20.0, 63.0] {
        let (x, best) = grid_argmax(|r| sigma2_shell(d, r).unwrap(), 1e-6, 1.0 - 1e-9, 401, 12);
        let at = sigma2_shell(d, optimal_rho0(d)).unwrap();
        assert!(at >= best - 1e-10 * best, "d = {d}: {at} below grid value {best} at {x}");
        assert!((at - best).abs() <= 1e-10 * best);
        assert!((at - sigma2_optimal(d).unwrap()).abs() <= 1e-14);
    }
}

#[test]
fn closed_form_matches_block_mass_on_the_shell() {
    for d in [2u64, 3, 4, 5, 8, 20] {
        let p = ShellParams::new(d, Rho0::Optimal, None, 64, 1_000_000_000_000).unwrap();
        let est = shell_variance(&p, ShellMethod::BlockMass, 1e-3).unwrap().value;
        let want = sigma2_optimal(d as f64).unwrap();
        assert!((est - want).abs() <= 0.02 * want, "d = {d}: {est} vs {want}");
    }
}

#[test]
fn improved_column_dominates_and_ties_at_two() {
    for row in table2() {
        assert!(row.improved >= row.lambda_lemma, "d = {}", row.d);
        assert!(row.improved <= 1.0 - 0.12);
    }
    let two = table2()[0];
    assert!((two.improved - two.lambda_lemma).abs() < 1e-15);
    assert!(best_integer_degree(2..=200).unwrap().1 <= 0.88);
}

#[test]
fn pointwise_bound_endpoints() {
    let m1 = pointwise_sigma_bound(1).unwrap();
    assert!((m1 - (8.0 / std::f64::consts::PI).powi(2)).abs() < 1e-12);
    assert_eq!(pointwise_sigma_bound(2).unwrap(), 6.0);
    let logs: Vec<f64> = (1..=400).map(|m| pointwise_sigma_bound(m).unwrap().ln()).collect();
    assert!(logs.iter().all(|l| l.is_finite()));
    // second differences are smooth wherever the evaluation switches branch
    for w in logs.windows(3).skip(20) {
        assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 0.1, "{w:?}");
    }
}

proptest! {
    #[test]
    fn dimension_routes_agree(d in 2u64..40, t in 0.0f64..0.5, angle in 0.0f64..6.3) {
        let c = distortion_constant(d).unwrap();
        let via_k = julia_dim_k(d, c * t / 2.0).unwrap();
        let via_t = julia_dim_t(d, Complex64::from_polar(t, angle)).unwrap();
        prop_assert!((via_k - via_t).abs() <= 1e-14);
    }

    #[test]
    fn shell_coefficient_stays_below_one(d in 1.001f64..1000.0) {
        let v = sigma2_optimal(d).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0 - 0.12, "d = {d}: {v}");
    }

    #[test]
    fn shell_beats_lambda_lemma(d in 2u64..500) {
        prop_assert!(sigma2_optimal(d as f64).unwrap() >= lambda_lemma_coeff(d as f64) * (1.0 - 1e-15));
    }
}
