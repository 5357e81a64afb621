//! Closed-form variance bounds, dimension formulas and degree optimisation.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

fn check_degree(d: f64) -> Result<()> {
    if d.is_finite() && d > 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("d", format!("need d > 1, got {d}")))
    }
}

/// `4 (rho0^{1/d} - rho0)^2 / log d`.
pub fn sigma2_shell(d: f64, rho0: f64) -> Result<f64> {
    check_degree(d)?;
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(Error::invalid("rho0", format!("{rho0} not in (0, 1)")));
    }
    let gap = rho0.powf(1.0 / d) - rho0;
    Ok(4.0 * gap * gap / d.ln())
}

/// `d^{d/(1-d)}`, the maximiser of [`sigma2_shell`] in `rho0`.
pub fn optimal_rho0(d: f64) -> f64 {
    d.powf(d / (1.0 - d))
}

/// `4 d^{2/(1-d)} (d-1)^2 / (d^2 log d)`.
pub fn sigma2_optimal(d: f64) -> Result<f64> {
    check_degree(d)?;
    Ok(4.0 * d.powf(2.0 / (1.0 - d)) * lambda_lemma_coeff(d))
}

/// `(d-1)^2 / (d^2 log d)`, the `k^2` coefficient obtained from the
/// lambda-lemma route.
pub fn lambda_lemma_coeff(d: f64) -> f64 {
    let r = (d - 1.0) / d;
    r * r / d.ln()
}

/// Best integer degree in `range` for [`sigma2_optimal`]; ties go to the
/// smaller degree.
pub fn best_integer_degree(range: std::ops::RangeInclusive<u64>) -> Result<(u64, f64)> {
    let mut best: Option<(u64, f64)> = None;
    for d in range {
        let v = sigma2_optimal(d as f64)?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((d, v));
        }
    }
    best.ok_or_else(|| Error::invalid("range", "empty degree range"))
}

/// Golden-section maximisation of `f` on `[a, b]` to `x_tol`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > x_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximiser of [`sigma2_optimal`] over real `d` in `(2, 64)`.
pub fn best_real_degree() -> (f64, f64) {
    golden_section_max(|d| sigma2_optimal(d).unwrap_or(f64::NEG_INFINITY), 2.0, 64.0, 1e-8)
}

/// Second-order dimension of the Julia set of `z^d + t z` type
/// perturbations: `1 + |t|^2 (d-1)^2 / (4 d^2 log d)`. The `O(|t|^3)`
/// remainder is not included.
pub fn julia_dim_t(d: u64, t: num_complex::Complex64) -> Result<f64> {
    check_degree(d as f64)?;
    Ok(1.0 + t.norm_sqr() * lambda_lemma_coeff(d as f64) / 4.0)
}

/// `c_d = d^{1/(d-1)} / 2`, the factor between `|t|/2` and the dilatation.
pub fn distortion_constant(d: u64) -> Result<f64> {
    check_degree(d as f64)?;
    let df = d as f64;
    Ok(df.powf(1.0 / (df - 1.0)) / 2.0)
}

/// `1 + sigma2_optimal(d) k^2`, second order in `k`.
pub fn julia_dim_k(d: u64, k: f64) -> Result<f64> {
    Ok(1.0 + sigma2_optimal(d as f64)? * k * k)
}

/// Upper bound `1 + (1 - sqrt(1-|t|^2))^2 / |t|^2` for `|t| < 1`, written
/// as `1 + |t|^2 / (1 + sqrt(1-|t|^2))^2` so it extends continuously to 0.
pub fn smirnov_bound_t(t: f64) -> Result<f64> {
    if t.is_nan() || t.abs() >= 1.0 {
        return Err(Error::invalid("t", format!("need |t| < 1, got {t}")));
    }
    let s = 1.0 + (1.0 - t * t).sqrt();
    Ok(1.0 + t * t / (s * s))
}

/// `1 + k^2`.
pub fn smirnov_bound_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::invalid("k", format!("need 0 <= k < 1, got {k}")));
    }
    Ok(1.0 + k * k)
}

/// `Gamma(x)` for `x` a positive integer or half-integer up to ~170, by
/// exact recurrence from `Gamma(1) = 1` or `Gamma(1/2) = sqrt(pi)`.
fn gamma_half_integer(x: f64) -> f64 {
    let (mut g, mut y) = if x.fract() == 0.0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while y < x {
        g *= y;
        y += 1.0;
    }
    g
}

/// `Gamma(2+m)^2 Gamma(m)^2 / (Gamma(2m) Gamma(m/2+1)^4)`, the a-priori
/// bound on `sigma^2(S mu)` from the order-`m` pointwise estimate.
pub fn pointwise_sigma_bound(m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m", "order must be at least 1"));
    }
    let mf = m as f64;
    // the direct product stays below 1e200 up to here
    if m <= 40 {
        let g = gamma_half_integer;
        let num = g(2.0 + mf).powi(2) * g(mf).powi(2);
        let den = g(2.0 * mf) * g(mf / 2.0 + 1.0).powi(4);
        return Ok(num / den);
    }
    let ln = 2.0 * ln_gamma(2.0 + mf) + 2.0 * ln_gamma(mf) - ln_gamma(2.0 * mf) - 4.0 * ln_gamma(mf / 2.0 + 1.0);
    Ok(ln.exp())
}

/// One row of the comparison of `k^2` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionRow {
    pub d: f64,
    pub lambda_lemma: f64,
    pub improved: f64,
    pub c_d: f64,
    pub optimal_rho0: f64,
}

impl DimensionRow {
    pub fn new(d: u64) -> Result<Self> {
        let df = d as f64;
        Ok(Self {
            d: df,
            lambda_lemma: lambda_lemma_coeff(df),
            improved: sigma2_optimal(df)?,
            c_d: distortion_constant(d)?,
            optimal_rho0: optimal_rho0(df),
        })
    }
}

pub const TABLE2_DEGREES: [u64; 4] = [2, 3, 4, 20];

pub fn table2() -> Vec<DimensionRow> {
    TABLE2_DEGREES
        .iter()
        .map(|&d| DimensionRow::new(d).expect("fixed degrees are valid"))
        .collect()
}

/// `x` cut (not rounded) to `digits` decimals, the convention of printed
/// tables of lower bounds.
pub fn truncate_decimals(x: f64, digits: u32) -> String {
    let scale = 10f64.powi(digits as i32);
    // nudge by a few ulps so exact decimals are not cut one unit low
    let cut = (x * scale * (1.0 + 4.0 * f64::EPSILON)).trunc() / scale;
    format!("{cut:.*}", digits as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_variance_instances() {
        assert!((sigma2_shell(2.0, 0.25).unwrap() - 0.25 / 2f64.ln()).abs() < 1e-15);
        assert!(sigma2_shell(3.0, 1e-300).unwrap() < 1e-100);
        let d = 16.0;
        let want = 4.0 * 16f64.powf(-2.0 / 15.0) * 225.0 / (256.0 * 16f64.ln());
        assert!((sigma2_shell(d, optimal_rho0(d)).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn optimum_substitution() {
        for d in [2.0, 3.0, 7.5, 20.0, 64.0] {
            let a = sigma2_optimal(d).unwrap();
            let b = sigma2_shell(d, optimal_rho0(d)).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(optimal_rho0(2.0), 0.25);
    }

    #[test]
    fn pointwise_bound_values() {
        assert_eq!(pointwise_sigma_bound(2).unwrap(), 6.0);
        let pi = std::f64::consts::PI;
        assert!((pointwise_sigma_bound(1).unwrap() - 64.0 / (pi * pi)).abs() < 1e-12);
        // the log-gamma path agrees with the exact one where both apply
        let m = 40u32;
        let mf = m as f64;
        let ln = 2.0 * ln_gamma(2.0 + mf) + 2.0 * ln_gamma(mf) - ln_gamma(2.0 * mf) - 4.0 * ln_gamma(mf / 2.0 + 1.0);
        let exact = pointwise_sigma_bound(m).unwrap();
        assert!((ln.exp() - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn distortion_constants() {
        assert_eq!(distortion_constant(2).unwrap(), 1.0);
        for d in 3..=64 {
            assert!(distortion_constant(d).unwrap() < 1.0);
        }
    }

    #[test]
    fn truncation_display() {
        assert_eq!(truncate_decimals(0.36067, 4), "0.3606");
        assert_eq!(truncate_decimals(0.5, 4), "0.5000");
        assert_eq!(truncate_decimals(0.1, 1), "0.1");
    }

    #[test]
    fn golden_section_finds_parabola_top() {
        let (x, _) = golden_section_max(|x| -(x - 3.3) * (x - 3.3), 0.0, 10.0, 1e-10);
        assert!((x - 3.3).abs() < 1e-8);
    }
}
