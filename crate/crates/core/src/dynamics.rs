//! Birkhoff-sum variance of circle potentials under `z^d` and finite
//! Blaschke products, and the coboundary relations tying it to the
//! asymptotic variance of lacunary series.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::{sum, ComplexSum, NeumaierSum};
use crate::variance::{variance_lacunary, DEFAULT_TOLERANCE};

/// Trigonometric polynomial `phi(e^{it}) = sum c_m e^{imt}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "PotentialDoc", into = "PotentialDoc")]
pub struct CirclePotential {
    coeffs: BTreeMap<i64, Complex64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialDoc {
    /// `[m, re, im]` triples.
    coeffs: Vec<(i64, f64, f64)>,
}

impl TryFrom<PotentialDoc> for CirclePotential {
    type Error = Error;

    fn try_from(doc: PotentialDoc) -> Result<Self> {
        if let Some(&(m, _, _)) = doc.coeffs.iter().find(|(_, re, im)| !(re.is_finite() && im.is_finite())) {
            return Err(Error::invalid("phi", format!("non-finite coefficient at frequency {m}")));
        }
        Ok(Self::from_terms(doc.coeffs.into_iter().map(|(m, re, im)| (m, Complex64::new(re, im)))))
    }
}

impl From<CirclePotential> for PotentialDoc {
    fn from(p: CirclePotential) -> Self {
        Self {
            coeffs: p.coeffs.into_iter().map(|(m, c)| (m, c.re, c.im)).collect(),
        }
    }
}

impl CirclePotential {
    /// Repeated frequencies are summed; zero coefficients dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut acc: BTreeMap<i64, ComplexSum> = BTreeMap::new();
        for (m, c) in terms {
            acc.entry(m).or_default().add(c);
        }
        let coeffs = acc
            .into_iter()
            .map(|(m, s)| (m, s.value()))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        Self { coeffs }
    }

    pub fn monomial(m: i64) -> Self {
        Self::from_terms([(m, Complex64::new(1.0, 0.0))])
    }

    pub fn coeff(&self, m: i64) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.remove(&0);
        out
    }

    pub fn eval_angle(&self, theta: f64) -> Complex64 {
        let mut s = ComplexSum::new();
        for (m, c) in self.iter() {
            s.add(c * Complex64::cis(m as f64 * theta));
        }
        s.value()
    }

    /// Value at a point of the unit circle.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_angle(z.arg())
    }
}

/// `B(z) = z^{degree - #zeros} prod (z - a)/(1 - conj(a) z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeMap {
    zeros: Vec<Complex64>,
    degree: u64,
}

impl BlaschkeMap {
    pub fn power(d: u64) -> Result<Self> {
        Self::new(Vec::new(), d)
    }

    pub fn new(zeros: Vec<Complex64>, degree: u64) -> Result<Self> {
        if degree < 1 {
            return Err(Error::invalid("degree", "must be at least 1"));
        }
        if zeros.len() as u64 > degree {
            return Err(Error::invalid(
                "zeros",
                format!("{} zeros exceed degree {degree}", zeros.len()),
            ));
        }
        if let Some(a) = zeros.iter().find(|a| a.norm().is_nan() || a.norm() >= 1.0) {
            return Err(Error::invalid("zeros", format!("{a} is not inside the unit disk")));
        }
        Ok(Self { zeros, degree })
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// True for `z^d`.
    pub fn is_power(&self) -> bool {
        self.zeros.iter().all(|a| a.norm() == 0.0)
    }

    fn free_power(&self) -> u64 {
        self.degree - self.zeros.len() as u64
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut b = z.powu(self.free_power() as u32);
        for &a in &self.zeros {
            b *= (z - a) / (1.0 - a.conj() * z);
        }
        b
    }

    /// `|B'(e^{it})| = (degree - #zeros) + sum (1 - |a|^2)/|e^{it} - a|^2`.
    pub fn circle_derivative_modulus(&self, theta: f64) -> f64 {
        let z = Complex64::cis(theta);
        self.free_power() as f64 + sum(self.zeros.iter().map(|a| (1.0 - a.norm_sqr()) / (z - a).norm_sqr()))
    }
}

/// `S_n phi = sum_{k<n} phi(z^{d^k})` as a frequency map.
fn birkhoff_sum_coeffs(phi: &CirclePotential, d: u64, n: usize) -> Result<Vec<BTreeMap<i128, ComplexSum>>> {
    let mut acc: BTreeMap<i128, ComplexSum> = BTreeMap::new();
    let mut history = Vec::with_capacity(n);
    let mut scale: i128 = 1;
    for k in 0..n {
        for (m, c) in phi.iter() {
            let f = (m as i128)
                .checked_mul(scale)
                .ok_or_else(|| Error::Capacity(format!("frequency {m} * {d}^{k} exceeds 128 bits")))?;
            acc.entry(f).or_default().add(c);
        }
        history.push(acc.clone());
        if k + 1 < n {
            scale = scale
                .checked_mul(d as i128)
                .ok_or_else(|| Error::Capacity(format!("{d}^{} exceeds 128 bits", k + 1)))?;
        }
    }
    Ok(history)
}

fn check_mean_zero(phi: &CirclePotential) -> Result<()> {
    let c0 = phi.mean();
    if c0.norm() != 0.0 {
        return Err(Error::NonzeroMean { re: c0.re, im: c0.im });
    }
    Ok(())
}

/// `var_k = (1/k) int |S_k phi|^2 dm` for `k = 1..=n` under `z^d`, exact by
/// orthogonality of the frequencies `m d^k`.
pub fn birkhoff_history(phi: &CirclePotential, d: u64, n: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::invalid("d", format!("degree {d} < 2")));
    }
    check_mean_zero(phi)?;
    Ok(birkhoff_sum_coeffs(phi, d, n)?
        .iter()
        .enumerate()
        .map(|(k, map)| sum(map.values().map(|c| c.value().norm_sqr())) / (k + 1) as f64)
        .collect())
}

/// `var_n(phi)` under `z^d`; zero for `n = 0`.
pub fn birkhoff_variance_exact(phi: &CirclePotential, d: u64, n: usize) -> Result<f64> {
    Ok(birkhoff_history(phi, d, n)?.last().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Samples per RNG stream; fixed so results do not depend on the thread
/// count.
const CHUNK: u64 = 4096;

/// Uniform starting angle as a fraction of a full turn.
fn random_turn(rng: &mut ChaCha8Rng) -> u128 {
    ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128
}

fn turn_to_angle(a: u128) -> f64 {
    ((a >> 64) as u64 as f64 + (a as u64 >> 11) as f64 / (1u64 << 53) as f64) * (TAU / 18446744073709551616.0)
}

/// Monte Carlo `var_n` from Lebesgue-random starting points. Powers `z^d`
/// iterate exactly on 128-bit angles; general products iterate in floating
/// point. Stream `i` of the seeded ChaCha8 generator drives samples
/// `[i*CHUNK, (i+1)*CHUNK)`, and chunks are reduced in order.
pub fn birkhoff_variance_mc(
    phi: &CirclePotential,
    map: &BlaschkeMap,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n == 0 || samples < 2 {
        return Err(Error::invalid("samples", "need n >= 1 and at least 2 samples"));
    }
    let phi = phi.without_mean();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(NeumaierSum, NeumaierSum)> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let count = CHUNK.min(samples - i * CHUNK);
            let (mut s1, mut s2) = (NeumaierSum::new(), NeumaierSum::new());
            for _ in 0..count {
                let start = random_turn(&mut rng);
                let s = if map.is_power() {
                    let mut a = start;
                    let mut acc = ComplexSum::new();
                    for _ in 0..n {
                        acc.add(phi.eval_angle(turn_to_angle(a)));
                        a = a.wrapping_mul(map.degree as u128);
                    }
                    acc.value()
                } else {
                    let mut z = Complex64::cis(turn_to_angle(start));
                    let mut acc = ComplexSum::new();
                    for _ in 0..n {
                        acc.add(phi.eval(z));
                        z = map.eval(z);
                        z /= z.norm();
                    }
                    acc.value()
                };
                let v = s.norm_sqr() / n as f64;
                s1.add(v);
                s2.add(v * v);
            }
            (s1, s2)
        })
        .collect();
    let (mut s1, mut s2) = (NeumaierSum::new(), NeumaierSum::new());
    for (a, b) in &partial {
        s1.add(a.value());
        s2.add(b.value());
    }
    let m = samples as f64;
    let mean = s1.value() / m;
    let var = ((s2.value() - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / m).sqrt(),
        samples,
        seed,
    })
}

/// `int log |B'| dm`: `log d` for `z^d`, otherwise a 4096-point
/// trapezoidal rule, spectrally accurate for this analytic integrand.
pub fn log_deriv_mean(map: &BlaschkeMap) -> f64 {
    if map.is_power() {
        return (map.degree as f64).ln();
    }
    const POINTS: usize = 4096;
    sum((0..POINTS).map(|i| map.circle_derivative_modulus(TAU * i as f64 / POINTS as f64).ln())) / POINTS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoboundaryCheck {
    pub d: u64,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// For `g(z) = sum_k z^{-(d-1) d^k}` the circle function
/// `h = g - g(z^d) = z^{-(d-1)}` must satisfy
/// `var(h) / int log|B'| dm = sigma^2(g)`.
pub fn coboundary_check(d: u64, n: usize) -> Result<CoboundaryCheck> {
    if d < 2 {
        return Err(Error::invalid("d", format!("degree {d} < 2")));
    }
    let h = CirclePotential::monomial(-((d - 1) as i64));
    let lhs = birkhoff_variance_exact(&h, d, n.max(1))? / log_deriv_mean(&BlaschkeMap::power(d)?);
    let rhs = variance_lacunary(&vec![1.0; n.max(1)], d as f64, DEFAULT_TOLERANCE)?.value;
    Ok(CoboundaryCheck {
        d,
        n,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRelation {
    pub d: u64,
    /// `int h dm / int log|B'| dm` for the constant `h = log d`.
    pub lhs: f64,
    /// `(R, (1/(2 pi |log(R-1)|)) int_{|z|=R} log(1/(|z|-1)) |dz|)` for
    /// `R = 1 + 10^{-j}`, `j = 2..=8`.
    pub rhs_points: Vec<(f64, f64)>,
    /// Richardson extrapolation of the last two points to `R = 1`.
    pub extrapolated: f64,
    pub residual: f64,
}

/// Checks that `h = log d` is a virtual coboundary of
/// `g(z) = log 1/(|z|-1)` under `z^d` by comparing both normalised means.
pub fn mean_relation_check(d: u64) -> Result<MeanRelation> {
    let map = BlaschkeMap::power(d)?;
    const POINTS: usize = 256;
    let lhs = (d as f64).ln() / log_deriv_mean(&map);
    let rhs_points: Vec<(f64, f64)> = (2..=8)
        .map(|j| {
            let eps = 10f64.powi(-j);
            let r = 1.0 + eps;
            let g = |z: Complex64| -(z.norm() - 1.0).ln();
            let integral = sum((0..POINTS).map(|i| {
                let z = Complex64::from_polar(r, TAU * i as f64 / POINTS as f64);
                g(z) * r * TAU / POINTS as f64
            }));
            (r, integral / (TAU * eps.ln().abs()))
        })
        .collect();
    let [.., (r1, f1), (r2, f2)] = rhs_points[..] else {
        unreachable!("seven points")
    };
    // linear in R - 1 through the last two points, evaluated at R = 1
    let (x1, x2) = (r1 - 1.0, r2 - 1.0);
    let extrapolated = f2 - x2 * (f1 - f2) / (x1 - x2);
    Ok(MeanRelation {
        d,
        lhs,
        rhs_points,
        extrapolated,
        residual: (extrapolated - lhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lacunary_monomial_has_unit_variance() {
        for d in [2, 3, 20] {
            let h = CirclePotential::monomial(-((d - 1) as i64));
            for n in [1, 5, 15] {
                assert_eq!(birkhoff_variance_exact(&h, d, n).unwrap(), 1.0);
            }
        }
        assert_eq!(birkhoff_variance_exact(&CirclePotential::default(), 2, 10).unwrap(), 0.0);
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let phi = CirclePotential::from_terms([(0, Complex64::new(1.0, 0.0))]);
        assert!(matches!(birkhoff_variance_exact(&phi, 2, 3), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn colliding_frequencies_correlate() {
        // phi = z + z^2 under z^2: S_n = z + 2 z^2 + ... + 2 z^{2^{n-1}} + z^{2^n}
        let phi = CirclePotential::from_terms([(1, 1.0.into()), (2, 1.0.into())]);
        let n = 6;
        let want = (1.0 + 4.0 * (n - 1) as f64 + 1.0) / n as f64;
        assert!((birkhoff_variance_exact(&phi, 2, n).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn capacity_is_reported() {
        let h = CirclePotential::monomial(1);
        assert!(birkhoff_variance_exact(&h, 2, 200).unwrap_err().is_capacity());
    }

    #[test]
    fn coboundary_small_degrees() {
        for d in [2, 3, 20] {
            let c = coboundary_check(d, 10).unwrap();
            assert!(c.residual <= 1e-12);
            assert!((c.lhs - 1.0 / (d as f64).ln()).abs() < 1e-12);
        }
        assert!(coboundary_check(2, 1).unwrap().residual <= 1e-12);
    }

    #[test]
    fn mean_relation() {
        let m = mean_relation_check(2).unwrap();
        assert_eq!(m.lhs, 1.0);
        let at_1e6 = m.rhs_points.iter().find(|(r, _)| (r - 1.0 - 1e-6).abs() < 1e-12).unwrap().1;
        assert!((at_1e6 - 1.0).abs() < 1e-2);
        assert!(m.residual < 1e-4);
    }

    #[test]
    fn log_derivative_means() {
        assert_eq!(log_deriv_mean(&BlaschkeMap::power(2).unwrap()), 2f64.ln());
        assert_eq!(log_deriv_mean(&BlaschkeMap::power(20).unwrap()), 20f64.ln());
        let b = BlaschkeMap::new(vec![Complex64::new(0.5, 0.0)], 2).unwrap();
        assert!(log_deriv_mean(&b) > 0.0);
    }

    #[test]
    fn blaschke_preserves_circle() {
        let b = BlaschkeMap::new(vec![Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.1)], 3).unwrap();
        for i in 0..64 {
            let z = Complex64::cis(0.1 * i as f64);
            assert!((b.eval(z).norm() - 1.0).abs() < 1e-12);
        }
        assert!(BlaschkeMap::new(vec![Complex64::new(1.0, 0.0)], 2).is_err());
    }

    #[test]
    fn mc_is_reproducible_and_matches_exact() {
        let phi = CirclePotential::monomial(-1);
        let b = BlaschkeMap::power(2).unwrap();
        let a = birkhoff_variance_mc(&phi, &b, 10, 20_000, 7).unwrap();
        let again = birkhoff_variance_mc(&phi, &b, 10, 20_000, 7).unwrap();
        assert_eq!(a, again);
        // |S_n|^2 of orthogonal unit monomials is not constant, but its mean is 1
        assert!((a.estimate - 1.0).abs() < 3.0 * a.stderr + 1e-12, "{a:?}");
        let constant = CirclePotential::from_terms([(0, Complex64::new(2.5, 0.0))]);
        assert_eq!(birkhoff_variance_mc(&constant, &b, 10, 100, 1).unwrap().estimate, 0.0);
    }
}
