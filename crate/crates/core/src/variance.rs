//! Integral means and asymptotic variance of exterior Laurent series.
//!
//! For `g(z) = sum b_k z^{-k}` orthogonality gives
//! `I(R) = (1/2pi) int |g(R e^{it})|^2 dt = sum |b_k|^2 R^{-2k}`, and the
//! asymptotic variance is the growth rate of `I(R)` against
//! `log 1/(R-1)`. The estimators below all exploit the eventual
//! self-similarity of lacunary constructions under `z -> z^d`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{ExteriorLaurent, TaylorSeries};
use crate::radius::LogRadius;
use crate::summation::{sum, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMethod {
    ClosedForm,
    LacunaryExact,
    BlockIncrement,
    BlockMass,
    Cesaro4,
}

impl std::fmt::Display for VarianceMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VarianceMethod::ClosedForm => "closed_form",
            VarianceMethod::LacunaryExact => "lacunary_exact",
            VarianceMethod::BlockIncrement => "block_increment",
            VarianceMethod::BlockMass => "block_mass",
            VarianceMethod::Cesaro4 => "cesaro4",
        })
    }
}

/// A variance estimate with its convergence history.
///
/// `diagnostics` holds `(scale index, running estimate)`; the running
/// estimate at index `l` averages the raw block values over the tail
/// `[ceil(l/2), l]`, so `value` is the last entry. `blocks` keeps the raw
/// per-block values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub method: VarianceMethod,
    pub diagnostics: Vec<(u64, f64)>,
    pub blocks: Vec<f64>,
    pub converged: bool,
    pub tolerance: f64,
}

/// Relative agreement used to declare convergence between consecutive
/// running estimates.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

impl VarianceEstimate {
    fn from_blocks(blocks: Vec<f64>, scale: impl Fn(usize) -> u64, method: VarianceMethod, tolerance: f64) -> Self {
        let mut diagnostics = Vec::with_capacity(blocks.len());
        for l in 0..blocks.len() {
            diagnostics.push((scale(l), tail_average(&blocks[..=l])));
        }
        Self::from_diagnostics(diagnostics, blocks, method, tolerance)
    }

    fn from_diagnostics(diagnostics: Vec<(u64, f64)>, blocks: Vec<f64>, method: VarianceMethod, tolerance: f64) -> Self {
        let value = diagnostics.last().map_or(0.0, |d| d.1);
        let converged = match diagnostics.len() {
            0 => false,
            1 => value == 0.0,
            n => {
                let prev = diagnostics[n - 2].1;
                (value - prev).abs() <= tolerance * value.abs()
            }
        };
        Self {
            value,
            method,
            diagnostics,
            blocks,
            converged,
            tolerance,
        }
    }

    /// An exact value with no convergence history.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            method: VarianceMethod::ClosedForm,
            diagnostics: Vec::new(),
            blocks: Vec::new(),
            converged: true,
            tolerance: 0.0,
        }
    }

    /// Largest and smallest raw block values, the limsup/liminf proxies.
    pub fn block_range(&self) -> Option<(f64, f64)> {
        let max = self.blocks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.blocks.iter().copied().fold(f64::INFINITY, f64::min);
        (!self.blocks.is_empty()).then_some((max, min))
    }
}

/// Mean of the last `ceil(n/2)` values.
fn tail_average(v: &[f64]) -> f64 {
    let start = v.len() / 2;
    let tail = &v[start..];
    sum(tail.iter().copied()) / tail.len() as f64
}

/// `I(R) = sum |b_k|^2 R^{-2k}`.
pub fn integral_means(g: &ExteriorLaurent, r: LogRadius) -> f64 {
    sum(g.iter().map(|(k, b)| b.norm_sqr() * (-2.0 * k as f64 * r.ln()).exp()))
}

/// `log 1/(R-1)`, accurate for `R` next to 1.
pub fn log_scale(r: LogRadius) -> f64 {
    -r.excess().ln()
}

fn check_d(d: f64) -> Result<()> {
    if d.is_finite() && d > 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("d", format!("base must exceed 1, got {d}")))
    }
}

/// Variance of a lacunary series with frequencies growing like `d^n` and
/// coefficient moduli `moduli[n]`: the Cesàro mean of `|c_n|^2` over
/// `log d`. Running estimates use the window `[N/2, N)` for `N = 2^k`.
pub fn variance_lacunary(moduli: &[f64], d: f64, tolerance: f64) -> Result<VarianceEstimate> {
    check_d(d)?;
    let ld = d.ln();
    let sq: Vec<f64> = moduli.iter().map(|c| c * c).collect();
    let mut diagnostics = Vec::new();
    let mut n = 1usize;
    while n <= sq.len() {
        diagnostics.push((n as u64, tail_average(&sq[..n]) / ld));
        if n == sq.len() {
            break;
        }
        n = if n * 2 > sq.len() { sq.len() } else { n * 2 };
    }
    Ok(VarianceEstimate::from_diagnostics(
        diagnostics,
        sq.iter().map(|s| s / ld).collect(),
        VarianceMethod::LacunaryExact,
        tolerance,
    ))
}

/// Radii `R_l = R0^{1/d^l}` for `l = 0..=blocks`.
fn block_radii(r0: LogRadius, d: f64, blocks: usize) -> Vec<LogRadius> {
    (0..=blocks)
        .map(|l| LogRadius::from_ln(r0.ln() / d.powi(l as i32)))
        .collect()
}

/// Smallest radius resolved by a series exact up to `max_freq`.
fn require_resolved(g: &ExteriorLaurent, finest: LogRadius) -> Result<()> {
    let need = 10.0 / finest.excess();
    if (g.max_freq() as f64) < need {
        return Err(Error::UnresolvedScale(format!(
            "scale R-1 = {:.3e} needs frequencies up to {need:.3e}, series is exact to {}",
            finest.excess(),
            g.max_freq()
        )));
    }
    Ok(())
}

fn check_r0(r0: LogRadius) -> Result<()> {
    if r0.ln() > 0.0 && r0.ln().is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("R0", format!("need R0 > 1, got {r0}")))
    }
}

/// Block-increment estimator: `[I(R^{1/d}) - I(R)] / [log 1/(R^{1/d}-1) -
/// log 1/(R-1)]` along `R_l = R0^{1/d^l}`.
pub fn variance_block(
    g: &ExteriorLaurent,
    d: u64,
    r0: LogRadius,
    n_blocks: usize,
    tolerance: f64,
) -> Result<VarianceEstimate> {
    check_d(d as f64)?;
    check_r0(r0)?;
    if n_blocks == 0 {
        return Err(Error::invalid("n_blocks", "need at least one block"));
    }
    let radii = block_radii(r0, d as f64, n_blocks);
    require_resolved(g, radii[n_blocks])?;
    let means: Vec<f64> = radii.iter().map(|&r| integral_means(g, r)).collect();
    let blocks: Vec<f64> = (0..n_blocks)
        .map(|l| (means[l + 1] - means[l]) / (log_scale(radii[l + 1]) - log_scale(radii[l])))
        .collect();
    Ok(VarianceEstimate::from_blocks(
        blocks,
        |l| l as u64,
        VarianceMethod::BlockIncrement,
        tolerance,
    ))
}

/// Block-mass estimator: per-block coefficient mass over the lacunary
/// edges `first * d^l`, divided by `log d`. Exact for series that are
/// eventually self-similar, since `I(R)` has no cross terms.
pub fn variance_block_mass(g: &ExteriorLaurent, tolerance: f64) -> Result<VarianceEstimate> {
    let s = g.self_similarity().ok_or_else(|| {
        Error::invalid("series", "block-mass estimation needs self-similarity metadata")
    })?;
    check_d(s.base as f64)?;
    let ld = (s.base as f64).ln();
    let edges = s.edges(g.max_freq().saturating_add(1));
    if edges.len() < 2 {
        return Err(Error::UnresolvedScale(format!(
            "no complete block below max_freq {}",
            g.max_freq()
        )));
    }
    let blocks: Vec<f64> = edges.windows(2).map(|w| g.mass(w[0], w[1]) / ld).collect();
    Ok(VarianceEstimate::from_blocks(
        blocks,
        |l| edges[l],
        VarianceMethod::BlockMass,
        tolerance,
    ))
}

/// `(8/3)` times the average of `|v'''|^2 ((|z|^2-1)/2)^3` over the annulus
/// `A(R_{l+1}, R_l)` against the hyperbolic area `2/(|z|^2-1) dm`, for
/// `R_l = R0^{1/d^l}`. This is the fourth-order Cesàro variance of `v'`.
pub fn cesaro_sigma4(
    v: &ExteriorLaurent,
    r0: LogRadius,
    d: u64,
    n_annuli: usize,
    tolerance: f64,
) -> Result<VarianceEstimate> {
    check_d(d as f64)?;
    check_r0(r0)?;
    if n_annuli == 0 {
        return Err(Error::invalid("n_annuli", "need at least one annulus"));
    }
    let radii = block_radii(r0, d as f64, n_annuli);
    require_resolved(v, radii[n_annuli])?;
    let v3 = v.third_derivative()?;
    let coeffs: Vec<(f64, f64)> = v3.iter().map(|(k, c)| (k as f64, c.norm_sqr())).collect();
    // integrand in u = log(s - 1): s I(s) ((s^2-1)/2)^3 ds/du
    let integrand = |u: f64| {
        let x = u.exp();
        let ln_s = x.ln_1p();
        let s = x + 1.0;
        let means = sum(coeffs.iter().map(|(k, c2)| c2 * (-2.0 * k * ln_s).exp()));
        let h = 0.5 * x * (2.0 + x);
        s * means * h * h * h * x
    };
    let mut blocks = Vec::with_capacity(n_annuli);
    for l in 0..n_annuli {
        let (hi, lo) = (radii[l], radii[l + 1]);
        let (a, b) = (lo.excess().ln(), hi.excess().ln());
        let integral = adaptive_gauss(&integrand, a, b, 1e-11);
        // log((R_l^2 - 1)/(R_{l+1}^2 - 1)) from the excesses
        let area = (hi.excess() * (2.0 + hi.excess())).ln() - (lo.excess() * (2.0 + lo.excess())).ln();
        blocks.push(8.0 / 3.0 * integral / area);
    }
    Ok(VarianceEstimate::from_blocks(
        blocks,
        |l| l as u64,
        VarianceMethod::Cesaro4,
        tolerance,
    ))
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

fn composite_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = NeumaierSum::new();
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in GL8 {
            acc.add(0.5 * h * w * f(mid + 0.5 * h * x));
        }
    }
    acc.value()
}

/// Composite 8-point Gauss-Legendre, doubling panels until two successive
/// values agree to `rel`.
fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64) -> f64 {
    let mut panels = 4;
    let mut prev = composite_gauss(f, a, b, panels);
    loop {
        panels *= 2;
        let cur = composite_gauss(f, a, b, panels);
        if (cur - prev).abs() <= rel * cur.abs() || panels >= 1 << 14 {
            return cur;
        }
        prev = cur;
    }
}

/// Least-squares slope of `I(R)` against `log 1/(R-1)` on `n_pts` radii
/// spaced geometrically in `R-1` between `r_lo` and `r_hi`.
pub fn growth_slope(g: &ExteriorLaurent, r_lo: LogRadius, r_hi: LogRadius, n_pts: usize) -> Result<f64> {
    if !(r_lo.ln() > 0.0 && r_lo < r_hi) || n_pts < 2 {
        return Err(Error::invalid("radii", "need 1 < R_lo < R_hi and at least two points"));
    }
    let pts = means_curve(g, r_lo, r_hi, n_pts)?;
    let n = pts.len() as f64;
    let mx = sum(pts.iter().map(|p| p.log_scale)) / n;
    let my = sum(pts.iter().map(|p| p.means)) / n;
    let sxy = sum(pts.iter().map(|p| (p.log_scale - mx) * (p.means - my)));
    let sxx = sum(pts.iter().map(|p| (p.log_scale - mx).powi(2)));
    Ok(sxy / sxx)
}

/// One row of an integral-means curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeansPoint {
    pub r: f64,
    pub excess: f64,
    pub means: f64,
    pub log_scale: f64,
    pub ratio: f64,
    /// Whether the series resolves this scale (`max_freq >= 10/(R-1)`).
    pub resolved: bool,
}

/// `(R, I(R), I(R)/log(1/(R-1)))` on a grid geometric in `R-1`, from the
/// largest radius down.
pub fn means_curve(g: &ExteriorLaurent, r_lo: LogRadius, r_hi: LogRadius, n_pts: usize) -> Result<Vec<MeansPoint>> {
    if !(r_lo.ln() > 0.0 && r_lo <= r_hi) || n_pts == 0 {
        return Err(Error::invalid("radii", "need 1 < R_lo <= R_hi and a non-empty grid"));
    }
    let (a, b) = (r_hi.excess().ln(), r_lo.excess().ln());
    Ok((0..n_pts)
        .map(|i| {
            let t = if n_pts == 1 { 0.0 } else { i as f64 / (n_pts - 1) as f64 };
            let excess = (a + (b - a) * t).exp();
            let r = LogRadius::from_excess(excess);
            let means = integral_means(g, r);
            let log_scale = -excess.ln();
            MeansPoint {
                r: r.radius(),
                excess,
                means,
                log_scale,
                ratio: means / log_scale,
                resolved: g.max_freq() as f64 >= 10.0 / excess,
            }
        })
        .collect())
}

/// Residual of the coefficient form of Hardy's identity
/// `(1/4r) d/dr (r d/dr M(r)) = sum k^2 |a_k|^2 r^{2k-2}` with
/// `M(r) = sum |a_k|^2 r^{2k}`. The left side is formed by differentiating
/// the power series of `M` as a polynomial in `r`.
pub fn hardy_check(f: &TaylorSeries, r: f64) -> f64 {
    // M(r) as a map power -> coefficient
    let m: Vec<(u64, f64)> = f.iter().map(|(k, a)| (2 * k, a.norm_sqr())).collect();
    // r M'(r): same powers, times the power
    let rm: Vec<(u64, f64)> = m.iter().map(|&(p, c)| (p, c * p as f64)).collect();
    // d/dr of that, divided by 4r
    let lhs = sum(rm
        .iter()
        .filter(|(p, _)| *p > 0)
        .map(|&(p, c)| c * p as f64 * r.powi(p as i32 - 2) / 4.0));
    let rhs = sum(f.iter().map(|(k, a)| (k * k) as f64 * a.norm_sqr() * if k == 0 { 0.0 } else { r.powi(2 * k as i32 - 2) }));
    (lhs - rhs).abs()
}

/// Evaluation grid for the Bloch seminorm: radii and equally spaced angles.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochGrid {
    pub radii: Vec<f64>,
    pub angles: usize,
}

impl BlochGrid {
    /// Radii geometric in `R-1` between `1 + lo` and `1 + hi`.
    pub fn geometric(lo: f64, hi: f64, n_radii: usize, angles: usize) -> Self {
        let (a, b) = (lo.ln(), hi.ln());
        let radii = (0..n_radii)
            .map(|i| 1.0 + (a + (b - a) * i as f64 / (n_radii.max(2) - 1) as f64).exp())
            .collect();
        Self { radii, angles }
    }
}

/// `sup (|z|^2 - 1) |g'(z)|` over the grid; a lower bound for the exterior
/// Bloch seminorm.
pub fn bloch_seminorm(g: &ExteriorLaurent, grid: &BlochGrid) -> Result<f64> {
    let dg = g.derivative()?;
    let mut best: f64 = 0.0;
    for &r in &grid.radii {
        let ln_r = r.ln();
        let weight = (2.0 * ln_r).exp_m1();
        for k in 0..grid.angles {
            let th = std::f64::consts::TAU * k as f64 / grid.angles as f64;
            best = best.max(weight * dg.eval_polar(ln_r, th).norm());
        }
    }
    Ok(best)
}

/// `|v'''(z)| ((|z|^2-1)/2)^2`, the quantity bounded by `3/2` for fields
/// coming from `|mu| <= 1`.
pub fn normalised_third_derivative(v3: &ExteriorLaurent, z: Complex64) -> f64 {
    let h = 0.5 * (2.0 * z.norm().ln()).exp_m1();
    v3.eval(z).norm() * h * h
}
