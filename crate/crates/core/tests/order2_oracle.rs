use bvlab_core::constructions::{build_shell, Rho0, ShellParams};
use bvlab_core::order2::order2_field;
use bvlab_oracles::{second_neumann_exterior, PolarRule, RotationalPiece};
use num_complex::Complex64;

#[test]
fn second_term_matches_quadrature_for_three_shells() {
    let p = ShellParams::new(3, Rho0::Optimal, Some(2), 3, 5000).unwrap();
    let mu = build_shell(&p).unwrap();
    let w = order2_field(&mu, 5000).unwrap().w;
    let radii: Vec<f64> = p.log_radii().unwrap().iter().map(|r| r.radius()).collect();
    let one = |_: f64| Complex64::new(1.0, 0.0);
    let pieces: Vec<RotationalPiece> = p
        .frequencies()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(j, &n)| RotationalPiece {
            lo: radii[j],
            hi: radii[j + 1],
            freq: -(n as i32 - 2),
            profile: &one,
        })
        .collect();
    let zs: Vec<Complex64> = (0..20)
        .map(|i| {
            let r = 1.02 + 0.48 * i as f64 / 19.0;
            Complex64::from_polar(r, 0.7 + 2.3 * i as f64)
        })
        .collect();
    let rule = PolarRule { radial_order: 16, radial_pieces: 2, angles: 256 };
    let want = second_neumann_exterior(&pieces, &zs, &rule, 256, 16);
    for (z, o) in zs.iter().zip(&want) {
        let got = w.eval(*z);
        let rel = (got - o).norm() / o.norm();
        assert!(rel < 1e-3, "z = {z}: {got} vs {o}, rel {rel:.2e}");
    }
}
