//! Builders for shell Beltrami coefficients, lacunary and perturbative
//! vector fields, polynomial truncation and `z^d`-periodisation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::annular::{MonomialTerm, PiecewiseField};
use crate::error::{Error, Result};
use crate::laurent::{ExteriorLaurent, SelfSimilarity};
use crate::radius::LogRadius;
use crate::variance::{cesaro_sigma4, variance_block, variance_block_mass, variance_lacunary, VarianceEstimate};

/// Either the variance-maximising `rho0 = d^{d/(1-d)}` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho0 {
    Optimal,
    Value(f64),
}

impl Rho0 {
    pub fn resolve(self, d: f64) -> f64 {
        match self {
            Rho0::Optimal => crate::bounds::optimal_rho0(d),
            Rho0::Value(v) => v,
        }
    }
}

impl Serialize for Rho0 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rho0::Optimal => s.serialize_str("optimal"),
            Rho0::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Rho0 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Rho0::Value(v)),
            Raw::Str(s) if s == "optimal" => Ok(Rho0::Optimal),
            Raw::Str(s) => s
                .parse()
                .map(Rho0::Value)
                .map_err(|_| serde::de::Error::custom(format!("rho0 must be a number or \"optimal\", got {s:?}"))),
        }
    }
}

impl std::str::FromStr for Rho0 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "optimal" {
            return Ok(Rho0::Optimal);
        }
        s.parse()
            .map(Rho0::Value)
            .map_err(|_| Error::invalid("rho0", format!("expected a number or `optimal`, got {s:?}")))
    }
}

/// Default first-shell frequency: `d - 1`, except `2` for `d = 2`, where
/// the shells use `n_j = 2^{j+1}`.
pub fn default_n0(d: u64) -> u64 {
    if d == 2 {
        2
    } else {
        d.saturating_sub(1)
    }
}

/// Shell construction with frequencies `n_j = n0 d^j` and radii
/// `r_j = rho0^{1/n_j}` for `j < shells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellParams {
    pub d: u64,
    pub rho0: f64,
    pub n0: u64,
    pub shells: usize,
    pub max_freq: u64,
}

impl ShellParams {
    pub fn new(d: u64, rho0: Rho0, n0: Option<u64>, shells: usize, max_freq: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("d", format!("degree {d} < 2")));
        }
        let rho0 = rho0.resolve(d as f64);
        if !(rho0 > 0.0 && rho0 < 1.0) {
            return Err(Error::invalid("rho0", format!("{rho0} not in (0, 1)")));
        }
        let n0 = n0.unwrap_or_else(|| default_n0(d));
        if n0 < 2 {
            return Err(Error::invalid("n0", format!("first-shell frequency {n0} < 2")));
        }
        if max_freq == 0 {
            return Err(Error::invalid("max_freq", "must be positive"));
        }
        Ok(Self {
            d,
            rho0,
            n0,
            shells,
            max_freq,
        })
    }

    /// `n_j` for `j < shells`.
    pub fn frequencies(&self) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(self.shells);
        let mut n = self.n0;
        for j in 0..self.shells {
            out.push(n);
            if j + 1 < self.shells {
                n = n.checked_mul(self.d).ok_or_else(|| {
                    Error::Capacity(format!(
                        "shell {} frequency {}*{}^{} exceeds 64 bits",
                        j + 1,
                        self.n0,
                        self.d,
                        j + 1
                    ))
                })?;
            }
        }
        Ok(out)
    }

    /// The same construction with the shell count clamped to the shells
    /// whose frequency fits below `max_freq`.
    pub fn resolved(&self) -> Self {
        let mut count = 0;
        let mut n = Some(self.n0);
        while count < self.shells {
            match n {
                Some(v) if v <= self.max_freq => {
                    count += 1;
                    n = v.checked_mul(self.d);
                }
                _ => break,
            }
        }
        Self { shells: count, ..*self }
    }

    /// `ln r_j` for `j <= shells` (one more than the shell count: the outer
    /// edge of the last shell).
    pub fn log_radii(&self) -> Result<Vec<LogRadius>> {
        let ln_rho = self.rho0.ln();
        let mut out: Vec<LogRadius> = self
            .frequencies()?
            .iter()
            .map(|&n| LogRadius::from_ln(ln_rho / n as f64))
            .collect();
        let last = self.n0 as f64 * (self.d as f64).powi(self.shells as i32);
        out.push(LogRadius::from_ln(ln_rho / last));
        Ok(out)
    }

    /// `rho0^{1/d} - rho0`, the common shell weight.
    pub fn shell_gap(&self) -> f64 {
        LogRadius::pow_diff(LogRadius::from_ln(self.rho0.ln() / self.d as f64), LogRadius::from_radius(self.rho0), 1.0)
    }

    /// Frequency up to which the Beurling transform of the truncated
    /// construction agrees with the infinite one: `n_J - 1`, capped by
    /// `max_freq`.
    pub fn exact_cutoff(&self) -> u64 {
        let n_j = self
            .frequencies()
            .ok()
            .and_then(|f| f.last().copied())
            .and_then(|n| n.checked_mul(self.d));
        let n_j = if self.shells == 0 { Some(self.n0) } else { n_j };
        match n_j {
            Some(n) => (n - 1).min(self.max_freq),
            None => self.max_freq,
        }
    }

    pub fn self_similarity(&self) -> SelfSimilarity {
        SelfSimilarity {
            base: self.d,
            first: self.n0,
        }
    }
}

/// Shell coefficient `(conj(z)/|z|)^{n_j - 2}` on `A(r_j, r_{j+1})`.
pub fn build_shell(params: &ShellParams) -> Result<PiecewiseField> {
    let freqs = params.frequencies()?;
    let radii = params.log_radii()?;
    let mut terms = Vec::with_capacity(freqs.len());
    for (j, &n) in freqs.iter().enumerate() {
        terms.push(MonomialTerm::unit_block(n, radii[j], radii[j + 1])?);
    }
    Ok(PiecewiseField::from_terms(terms))
}

/// Exterior Beurling transform of the shell coefficient, truncated at
/// [`ShellParams::exact_cutoff`] and tagged with its self-similarity.
pub fn shell_beurling(params: &ShellParams) -> Result<ExteriorLaurent> {
    let s = build_shell(params)?.beurling_exterior()?;
    let (s, _) = s.truncated(params.exact_cutoff());
    Ok(s.with_self_similarity(params.self_similarity()))
}

/// Exterior Cauchy transform of the shell coefficient, truncated like
/// [`shell_beurling`].
pub fn shell_cauchy(params: &ShellParams) -> Result<ExteriorLaurent> {
    let c = build_shell(params)?.cauchy_exterior()?;
    let (c, _) = c.truncated(params.exact_cutoff().saturating_sub(1));
    Ok(c)
}

/// Lacunary field `v(z) = -(z/d) sum_{n<N} z^{-(d-1) d^n} / d^n` and its
/// derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct LacunaryField {
    pub d: u64,
    pub terms: u32,
    pub v: ExteriorLaurent,
    pub dv: ExteriorLaurent,
}

pub fn lacunary_vector_field(d: u64, n_terms: u32) -> Result<LacunaryField> {
    if d < 2 {
        return Err(Error::invalid("d", format!("degree {d} < 2")));
    }
    let mut terms = Vec::with_capacity(n_terms as usize);
    let mut lam = d - 1;
    let mut dn = 1.0f64;
    for n in 0..n_terms {
        // -(1/d^{n+1}) z^{1 - lam}
        terms.push((lam - 1, Complex64::new(-1.0 / (dn * d as f64), 0.0)));
        if n + 1 < n_terms {
            lam = lam
                .checked_mul(d)
                .ok_or_else(|| Error::Capacity(format!("lacunary frequency (d-1) d^{}", n + 1)))?;
        }
        dn *= d as f64;
    }
    let next = if n_terms == 0 { Some(d - 1) } else { lam.checked_mul(d) };
    let max_freq = next.map_or(u64::MAX, |l| l.saturating_sub(2));
    let v = ExteriorLaurent::from_terms(terms, max_freq);
    let dv = v.derivative()?.with_self_similarity(SelfSimilarity { base: d, first: d - 1 });
    Ok(LacunaryField {
        d,
        terms: n_terms,
        v,
        dv,
    })
}

impl LacunaryField {
    /// `v(z^d) - d z^{d-1} v(z) - z`.
    pub fn functional_residual(&self, z: Complex64) -> Complex64 {
        let d = self.d as i32;
        self.v.eval(z.powi(d)) - z.powi(d - 1) * self.d as f64 * self.v.eval(z) - z
    }

    /// Modulus of the term the truncation leaves in the functional
    /// equation: `|z|^{d - (d-1) d^N} / d^N`.
    pub fn functional_tail_bound(&self, z: Complex64) -> f64 {
        let d = self.d as f64;
        let n = self.terms as f64;
        ((d - (d - 1.0) * d.powf(n)) * z.norm().ln() - n * d.ln()).exp()
    }
}

/// Residual of `C mu = -(2d/(d-1)) [rho0^{1/d} - rho0] v` outside the unit
/// disk, with the truncation tail of the infinite identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub residual: f64,
    pub truncation_bound: f64,
}

/// For `d = 2` the shells use `n_j = 2^{j+1}` and the identity holds up to
/// the additive constant `-2 [rho0^{1/2} - rho0]`, which is removed here.
pub fn shell_cauchy_identity_check(params: &ShellParams, zs: &[Complex64]) -> Result<IdentityCheck> {
    if params.n0 != default_n0(params.d) {
        return Err(Error::invalid("n0", "the lacunary identity needs the default first-shell frequency"));
    }
    if zs.iter().any(|z| z.norm() <= 1.0) {
        return Err(Error::invalid("z", "samples must lie outside the closed unit disk"));
    }
    let d = params.d;
    let gap = params.shell_gap();
    let cmu = build_shell(params)?.cauchy_exterior()?;
    let (n_terms, constant) = if d == 2 {
        (params.shells as u32 + 1, -2.0 * gap)
    } else {
        (params.shells as u32, 0.0)
    };
    let lac = lacunary_vector_field(d, n_terms)?;
    let factor = -2.0 * d as f64 / (d as f64 - 1.0) * gap;
    let mut residual: f64 = 0.0;
    let mut bound: f64 = 0.0;
    let freqs = params.frequencies()?;
    let next = freqs.last().map_or(Some(params.n0), |n| n.checked_mul(d));
    for &z in zs {
        let lhs = cmu.eval(z);
        let rhs = lac.v.eval(z) * factor + constant;
        residual = residual.max((lhs - rhs).norm());
        // tail sum_{j >= J} (2/n_j) gap |z|^{-(n_j - 1)}
        let mut tail = 0.0;
        let mut n = next.map(|v| v as f64);
        while let Some(nf) = n {
            let term = 2.0 / nf * gap * (-(nf - 1.0) * z.norm().ln()).exp();
            tail += term;
            if term < 1e-300 || tail == 0.0 {
                break;
            }
            n = Some(nf * d as f64);
        }
        bound = bound.max(tail);
    }
    Ok(IdentityCheck {
        residual,
        truncation_bound: bound,
    })
}

/// `v(z) = (z/d) sum_{k<K} Q(z^{d^k}) / (d^k z^{d^{k+1}})` with
/// `deg Q <= d - 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub d: u64,
    /// Coefficients of `Q`, constant term first.
    pub q_coeffs: Vec<Complex64>,
    /// Number of series blocks `K`.
    pub terms: u32,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::invalid("d", format!("degree {} < 2", self.d)));
        }
        let degree = self
            .q_coeffs
            .iter()
            .rposition(|c| *c != Complex64::new(0.0, 0.0));
        if let Some(deg) = degree {
            if deg as u64 > self.d - 2 {
                return Err(Error::invalid(
                    "q_coeffs",
                    format!("deg Q = {deg} exceeds d - 2 = {}", self.d - 2),
                ));
            }
        }
        Ok(())
    }

    /// The `k`-th block `Q(z^{d^k}) z^{1 - d^{k+1}} / d^{k+1}`.
    pub fn block(&self, k: u32) -> Result<ExteriorLaurent> {
        self.validate()?;
        let cap = || Error::Capacity(format!("perturbation block {k}"));
        let dk = self.d.checked_pow(k).ok_or_else(cap)?;
        let dk1 = dk.checked_mul(self.d).ok_or_else(cap)?;
        let scale = (self.d as f64).powi(k as i32 + 1);
        let mut terms = Vec::new();
        for (i, c) in self.q_coeffs.iter().enumerate() {
            // z^{1 + i d^k - d^{k+1}}
            let freq = dk1 - (i as u64) * dk - 1;
            terms.push((freq, c / scale));
        }
        Ok(ExteriorLaurent::from_terms(terms, u64::MAX))
    }

    /// Largest `r` such that `v_k(z^d)/(d z^{d-1})` is `v_{k+1}` in both
    /// value and structure; returns the max residual over the samples.
    pub fn periodicity_residual(&self, zs: &[Complex64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let d = self.d as i32;
        for k in 0..self.terms.saturating_sub(1) {
            let vk = self.block(k)?;
            let vk1 = self.block(k + 1)?;
            for &z in zs {
                let lhs = vk1.eval(z);
                let rhs = vk.eval(z.powi(d)) / (z.powi(d - 1) * self.d as f64);
                worst = worst.max((lhs - rhs).norm());
            }
        }
        Ok(worst)
    }
}

pub fn perturbation_vector_field(spec: &PerturbationSpec) -> Result<ExteriorLaurent> {
    spec.validate()?;
    let mut acc = ExteriorLaurent::zero(u64::MAX);
    for k in 0..spec.terms {
        acc = acc.add(&spec.block(k)?);
    }
    Ok(acc)
}

/// Options for [`truncate_to_polynomial`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationOptions {
    /// Divide the result by `1 + eps` to restore `||mu||_inf <= 1`.
    pub rescale: bool,
    /// Largest admissible cut.
    pub max_cut: u64,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        Self {
            rescale: false,
            max_cut: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub field: PiecewiseField,
    /// Exterior Cauchy frequencies `>= cut` are cancelled.
    pub cut: u64,
    /// `sum |correction coefficients|`, an upper bound for the change in
    /// sup norm before rescaling.
    pub correction_bound: f64,
    pub rescaled: bool,
}

/// Smallest `N` with `sum_{j >= N} q^{j+1} <= eps`.
pub fn geometric_cut(q: f64, eps: f64) -> Result<u64> {
    if q.is_nan() || q <= 0.0 || q >= 1.0 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid("eps", "need 0 < q < 1 and eps > 0"));
    }
    // q^{N+1} / (1 - q) <= eps
    let n = ((eps * (1.0 - q)).ln() / q.ln() - 1.0).ceil().max(0.0);
    let mut n = n as u64;
    // guard the boundary against rounding in the logarithms
    while n > 0 && q.powf(n as f64) / (1.0 - q) <= eps {
        n -= 1;
    }
    while q.powf(n as f64 + 1.0) / (1.0 - q) > eps {
        n += 1;
    }
    Ok(n)
}

/// Cancels the exterior Cauchy coefficients `b_j`, `j >= N`, of a field
/// supported in `A(rho0, rho1)` with multiples of the building block
/// `(conj(z)/|z|)^{j-1}` on the wider annulus `A(rho0, r1)`. The cut `N`
/// comes from the geometric tail `(rho1/r1)^{j+1}` and grows if the actual
/// corrections exceed `eps`.
pub fn truncate_to_polynomial(
    mu: &PiecewiseField,
    r1: f64,
    eps: f64,
    options: TruncationOptions,
) -> Result<Truncation> {
    if mu.is_empty() {
        return Ok(Truncation {
            field: mu.clone(),
            cut: 0,
            correction_bound: 0.0,
            rescaled: false,
        });
    }
    let rho0 = mu
        .terms()
        .iter()
        .map(|t| t.r_in())
        .fold(LogRadius::INFINITY, |a, b| if b < a { b } else { a });
    let rho1 = mu.outer_radius();
    let r1l = LogRadius::from_radius(r1);
    if rho1.partial_cmp(&r1l) != Some(std::cmp::Ordering::Less) {
        return Err(Error::invalid("r1", format!("need r1 > {rho1}")));
    }
    let q = (rho1.ln() - r1l.ln()).exp();
    let coeffs = mu.cauchy_exterior()?;
    let weight = |j: u64| -> f64 {
        let e = j as f64 + 1.0;
        2.0 / e * LogRadius::pow_diff(r1l, rho0, e)
    };
    let bound_from = |cut: u64| -> f64 {
        crate::summation::sum(coeffs.iter().filter(|(j, _)| *j >= cut).map(|(j, b)| b.norm() / weight(j)))
    };
    let mut cut = geometric_cut(q, eps)?;
    if bound_from(cut) > eps {
        // the field is not bounded by one; find the smallest working cut
        let mut candidates: Vec<u64> = coeffs.iter().map(|(j, _)| j + 1).filter(|&j| j > cut).collect();
        candidates.sort_unstable();
        cut = candidates
            .into_iter()
            .find(|&c| bound_from(c) <= eps)
            .unwrap_or(cut);
    }
    if cut > options.max_cut {
        return Err(Error::Unreachable { eps, minimal_cut: cut });
    }
    let mut terms: Vec<MonomialTerm> = mu.terms().to_vec();
    for (j, b) in coeffs.iter().filter(|(j, _)| *j >= cut) {
        let block = MonomialTerm::unit_block(j + 1, rho0, r1l)?;
        terms.push(block.with_coeff(-b / weight(j)));
    }
    let mut field = PiecewiseField::from_terms(terms);
    if options.rescale {
        field = field.scale(Complex64::new(1.0 / (1.0 + eps), 0.0));
    }
    Ok(Truncation {
        field,
        cut,
        correction_bound: bound_from(cut),
        rescaled: options.rescale,
    })
}

/// `sum_{k<K} (z^{d^k})^* mu0` for `mu0` supported in one fundamental
/// annulus `A(r0, r0^{1/d})`.
pub fn periodise(mu0: &PiecewiseField, d: u64, k: u32) -> Result<PiecewiseField> {
    if d < 2 {
        return Err(Error::invalid("d", format!("degree {d} < 2")));
    }
    if mu0.is_empty() || k == 0 {
        return Ok(PiecewiseField::zero());
    }
    let r0 = mu0
        .terms()
        .iter()
        .map(|t| t.r_in())
        .fold(LogRadius::INFINITY, |a, b| if b < a { b } else { a });
    let outer = mu0.outer_radius();
    if r0.is_zero() || r0.ln() >= 0.0 || outer.ln() > r0.ln() / d as f64 {
        return Err(Error::OverlappingSupport(format!(
            "support [{r0}, {outer}) is not inside one fundamental annulus for z^{d}"
        )));
    }
    let mut acc = mu0.clone();
    let mut layer = mu0.clone();
    for _ in 1..k {
        layer = layer.pullback_power(d)?;
        acc = acc.add(&layer);
    }
    Ok(acc)
}

/// Estimators of `sigma^2(S mu)` for the shell coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellMethod {
    /// `4 (rho0^{1/d} - rho0)^2 / log d`.
    Exact,
    Lacunary,
    Block,
    BlockMass,
    Cesaro,
}

impl ShellMethod {
    pub const ALL: [ShellMethod; 5] = [
        ShellMethod::Exact,
        ShellMethod::Lacunary,
        ShellMethod::Block,
        ShellMethod::BlockMass,
        ShellMethod::Cesaro,
    ];
}

impl std::str::FromStr for ShellMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => ShellMethod::Exact,
            "lacunary" => ShellMethod::Lacunary,
            "block" => ShellMethod::Block,
            "block-mass" | "block_mass" => ShellMethod::BlockMass,
            "cesaro" => ShellMethod::Cesaro,
            _ => return Err(Error::invalid("method", format!("unknown method {s:?}"))),
        })
    }
}

impl std::fmt::Display for ShellMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ShellMethod::Exact => "exact",
            ShellMethod::Lacunary => "lacunary",
            ShellMethod::Block => "block",
            ShellMethod::BlockMass => "block-mass",
            ShellMethod::Cesaro => "cesaro",
        })
    }
}

/// Number of blocks along `R_l = R0^{1/d^l}` that a series exact up to
/// `cutoff` resolves, at most `limit`.
fn resolved_blocks(r0: LogRadius, d: u64, cutoff: u64, limit: usize) -> usize {
    let mut blocks = 0usize;
    while blocks < limit {
        let finest = LogRadius::from_ln(r0.ln() / (d as f64).powi(blocks as i32 + 1));
        if 10.0 / finest.excess() > cutoff as f64 {
            break;
        }
        blocks += 1;
    }
    blocks
}

/// Runs a series-based estimator on `g = v'`. Radius-based estimators use
/// `log R0 = 1/first`, matched to the first lacunary frequency.
fn estimate(
    method: ShellMethod,
    v_prime: &ExteriorLaurent,
    lacunary_freqs: &[u64],
    d: u64,
    tolerance: f64,
) -> Result<VarianceEstimate> {
    let first = lacunary_freqs.first().copied().unwrap_or(1).max(1);
    let r0 = LogRadius::from_ln(1.0 / first as f64);
    let blocks = resolved_blocks(r0, d, v_prime.max_freq(), lacunary_freqs.len());
    match method {
        ShellMethod::Exact => unreachable!("closed forms are handled by the caller"),
        ShellMethod::Lacunary => {
            let moduli: Vec<f64> = lacunary_freqs.iter().map(|&n| v_prime.coeff(n).norm()).collect();
            variance_lacunary(&moduli, d as f64, tolerance)
        }
        ShellMethod::BlockMass => variance_block_mass(v_prime, tolerance),
        ShellMethod::Block => variance_block(v_prime, d, r0, blocks, tolerance),
        ShellMethod::Cesaro => cesaro_sigma4(&v_prime.antiderivative()?, r0, d, blocks, tolerance),
    }
}

/// `sigma^2(S mu)` for the shell coefficient by the chosen estimator. The
/// shell count is first clamped to `max_freq`.
pub fn shell_variance(params: &ShellParams, method: ShellMethod, tolerance: f64) -> Result<VarianceEstimate> {
    let p = params.resolved();
    if method == ShellMethod::Exact {
        return Ok(VarianceEstimate::exact(crate::bounds::sigma2_shell(p.d as f64, p.rho0)?));
    }
    estimate(method, &shell_beurling(&p)?, &p.frequencies()?, p.d, tolerance)
}

/// `sigma^2(v')` for the lacunary field with `terms` terms; the closed form
/// is `(d-1)^2 / (d^2 log d)`.
pub fn lacunary_variance(d: u64, terms: u32, method: ShellMethod, tolerance: f64) -> Result<VarianceEstimate> {
    if method == ShellMethod::Exact {
        if d < 2 {
            return Err(Error::invalid("d", format!("degree {d} < 2")));
        }
        return Ok(VarianceEstimate::exact(crate::bounds::lambda_lemma_coeff(d as f64)));
    }
    let field = lacunary_vector_field(d, terms)?;
    let freqs: Vec<u64> = SelfSimilarity { base: d, first: d - 1 }.edges(field.dv.max_freq());
    estimate(method, &field.dv, &freqs, d, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn d2_shell_radii_follow_doubling() {
        let p = ShellParams::new(2, Rho0::Value(0.25), None, 5, 1 << 40).unwrap();
        assert_eq!(p.frequencies().unwrap(), vec![2, 4, 8, 16, 32]);
        let radii = p.log_radii().unwrap();
        assert!((radii[0].radius() - 0.5).abs() < 1e-15);
        assert!((radii[1].radius() - 0.25f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn d3_first_radius() {
        let rho0 = 3f64.powf(-1.5);
        let p = ShellParams::new(3, Rho0::Optimal, None, 3, 1000).unwrap();
        assert!((p.rho0 - rho0).abs() < 1e-15);
        assert!((p.log_radii().unwrap()[0].radius() - rho0.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shell_point_has_unit_modulus() {
        let p = ShellParams::new(2, Rho0::Value(0.25), None, 10, 1 << 40).unwrap();
        let mu = build_shell(&p).unwrap();
        let z = Complex64::from_polar(0.9, PI / 3.0);
        assert!((mu.eval(z).norm() - 1.0).abs() < 1e-15);
        assert!(build_shell(&ShellParams { shells: 0, ..p }).unwrap().is_empty());
    }

    #[test]
    fn overflowing_shells_are_a_capacity_error() {
        let p = ShellParams::new(20, Rho0::Optimal, None, 40, 1_000_000_000).unwrap();
        assert!(build_shell(&p).unwrap_err().is_capacity());
        let r = p.resolved();
        assert_eq!(r.shells, 6);
        assert!(build_shell(&r).is_ok());
    }

    #[test]
    fn shell_cauchy_coefficients() {
        let p = ShellParams::new(4, Rho0::Value(0.2), None, 6, u64::MAX).unwrap();
        let c = build_shell(&p).unwrap().cauchy_exterior().unwrap();
        let gap = 0.2f64.powf(0.25) - 0.2;
        for n in p.frequencies().unwrap() {
            let want = 2.0 / n as f64 * gap;
            assert!((c.coeff(n - 1).re - want).abs() < 1e-14 * want.max(1e-300) + 1e-16);
        }
    }

    #[test]
    fn cauchy_identity_for_d3_and_d2() {
        let zs = [Complex64::new(1.5, 0.0), Complex64::from_polar(1.2, 2.0)];
        let p = ShellParams::new(3, Rho0::Value(0.2), None, 20, u64::MAX).unwrap();
        let check = shell_cauchy_identity_check(&p, &zs).unwrap();
        assert!(check.residual < 1e-10, "{check:?}");
        let p = ShellParams::new(2, Rho0::Value(0.25), None, 30, u64::MAX).unwrap();
        let check = shell_cauchy_identity_check(&p, &zs).unwrap();
        assert!(check.residual < 1e-10, "{check:?}");
    }

    #[test]
    fn lacunary_field_zero_and_functional_equation() {
        assert!(lacunary_vector_field(3, 0).unwrap().v.is_empty());
        let f = lacunary_vector_field(2, 5).unwrap();
        let z = Complex64::from_polar(1.2, 1.0);
        let r = f.functional_residual(z).norm();
        let bound = f.functional_tail_bound(z);
        // the truncated series leaves exactly the first omitted term
        assert!((r - bound).abs() <= 1e-15 + 1e-12 * bound, "{r} vs {bound}");
        assert_eq!(f.v.coeff(0), Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn perturbation_reproduces_lacunary_field() {
        let spec = PerturbationSpec {
            d: 3,
            q_coeffs: vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
            terms: 8,
        };
        let v = perturbation_vector_field(&spec).unwrap();
        let lac = lacunary_vector_field(3, 8).unwrap();
        assert_eq!(v.len(), lac.v.len());
        for (k, b) in lac.v.iter() {
            assert!((v.coeff(k) - b).norm() < 1e-15);
        }
    }

    #[test]
    fn perturbation_degree_is_checked() {
        let spec = PerturbationSpec {
            d: 3,
            q_coeffs: vec![Complex64::new(1.0, 0.0); 3],
            terms: 2,
        };
        assert!(matches!(perturbation_vector_field(&spec), Err(Error::InvalidParameter { .. })));
        let zero = PerturbationSpec { d: 4, q_coeffs: vec![], terms: 5 };
        assert!(perturbation_vector_field(&zero).unwrap().is_empty());
    }

    #[test]
    fn geometric_cut_of_worked_example() {
        assert_eq!(geometric_cut(0.5 / 0.7, 0.01).unwrap(), 17);
    }

    #[test]
    fn truncation_leaves_polynomial_part_only() {
        let lr = LogRadius::from_radius;
        let mu = PiecewiseField::from_terms(
            (2..60u64).map(|n| {
                let t = MonomialTerm::unit_block(n, lr(0.3), lr(0.5)).unwrap();
                t.with_coeff(Complex64::from_polar(1.0 / 60.0, n as f64))
            }),
        );
        let tr = truncate_to_polynomial(&mu, 0.7, 0.01, TruncationOptions::default()).unwrap();
        assert_eq!(tr.cut, 17);
        let c = tr.field.cauchy_exterior().unwrap();
        for (k, b) in c.iter() {
            assert!(k < 17 || b.norm() < 1e-12, "frequency {k}: {b}");
        }
        assert!(tr.correction_bound <= 0.01);
    }

    #[test]
    fn periodise_first_shell_reproduces_shell() {
        let p = ShellParams::new(3, Rho0::Optimal, None, 4, u64::MAX).unwrap();
        let mu = build_shell(&p).unwrap();
        let first = PiecewiseField::from_terms([mu.terms()[0]]);
        let per = periodise(&first, 3, 4).unwrap();
        for (t, th) in [(0.6, 0.1), (0.8, 1.0), (0.95, 2.0), (0.99, 3.0), (0.999, -1.0)] {
            let z = Complex64::from_polar(t, th);
            assert!((per.eval(z) - mu.eval(z)).norm() < 1e-9);
        }
        assert_eq!(periodise(&first, 3, 1).unwrap(), first);
        let wide = PiecewiseField::from_terms([MonomialTerm::unit_block(
            3,
            LogRadius::from_radius(0.2),
            LogRadius::from_radius(0.9),
        )
        .unwrap()]);
        assert!(matches!(periodise(&wide, 2, 3), Err(Error::OverlappingSupport(_))));
    }
}
