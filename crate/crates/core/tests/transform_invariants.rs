mod common;

use bvlab_core::radius::LogRadius;
use bvlab_oracles::wirtinger;
use common::{block_field, probes};
use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::BTreeMap;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dbar_of_cauchy_transform_is_the_field(f in block_field(4, 12)) {
        let mu = &f.field;
        let cmu = mu.cauchy_full().unwrap();
        for z in probes(&f.circles, 0.02, 1.2, 1e-3, 50, 7) {
            let (_, dzbar) = wirtinger(|w| cmu.eval(w), z, 1e-6);
            let want = mu.eval(z);
            let err = (dzbar - want).norm() / want.norm().max(1.0);
            prop_assert!(err < 1e-4, "z = {z}: {dzbar} vs {want}");
        }
    }

    #[test]
    fn cauchy_transform_is_continuous_across_circles(f in block_field(4, 12)) {
        let cmu = f.field.cauchy_full().unwrap();
        for &r in &f.circles {
            let ln = r.ln();
            for k in 0..16 {
                let th = std::f64::consts::TAU * k as f64 / 16.0;
                let inside = cmu.eval_polar(ln - 1e-13, th);
                let outside = cmu.eval_polar(ln, th);
                prop_assert!((inside - outside).norm() < 1e-9, "r = {r}, theta = {th}");
            }
        }
    }

    #[test]
    fn operations_stay_in_the_term_class(f in block_field(3, 8), d in 2u64..5) {
        let mu = &f.field;
        let s = mu.beurling().unwrap();
        prop_assert!(mu.multiply(&s).is_ok());
        prop_assert!(mu.cauchy_full().unwrap().derivative_z().is_ok());
        prop_assert!(mu.pullback_power(d).unwrap().beurling().is_ok());
    }

    #[test]
    fn exterior_beurling_matches_laurent_route(f in block_field(4, 12)) {
        let mu = &f.field;
        let outer = mu.outer_radius();
        let mut piecewise: BTreeMap<u64, Complex64> = BTreeMap::new();
        for t in mu.beurling().unwrap().terms() {
            if t.r_out().is_infinite() && t.r_in() <= outer {
                prop_assert_eq!(t.degree(), t.nu() as f64);
                *piecewise.entry((-t.nu()) as u64).or_default() += t.coeff();
            }
        }
        let laurent = mu.cauchy_exterior().unwrap().derivative().unwrap();
        let direct = mu.beurling_exterior().unwrap();
        for (k, b) in laurent.iter() {
            let p = piecewise.get(&k).copied().unwrap_or_default();
            prop_assert!((p - b).norm() <= 1e-12 * b.norm().max(1.0), "k = {k}: {p} vs {b}");
            prop_assert!((direct.coeff(k) - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
        for (k, p) in &piecewise {
            prop_assert!((laurent.coeff(*k) - p).norm() <= 1e-12 * p.norm().max(1.0));
        }
    }

    #[test]
    fn pullback_keeps_the_sup_norm(f in block_field(4, 12), d in 2u64..6) {
        let before = f.field.sampled_sup(64, 64);
        let after = f.field.pullback_power(d).unwrap().sampled_sup(64, 64);
        prop_assert!((before - 1.0).abs() < 1e-12 && (after - 1.0).abs() < 1e-12, "{before} {after}");
    }
}

#[test]
fn continuity_probe_is_not_vacuous() {
    // a field with a jump does jump at the same offsets
    let lo = LogRadius::from_radius(0.4);
    let hi = LogRadius::from_radius(0.8);
    let mu = bvlab_core::annular::PiecewiseField::from_terms([bvlab_core::annular::MonomialTerm::unit_block(3, lo, hi).unwrap()]);
    let a = mu.eval_polar(hi.ln() - 1e-13, 0.3);
    let b = mu.eval_polar(hi.ln(), 0.3);
    assert!((a - b).norm() > 0.5);
}
