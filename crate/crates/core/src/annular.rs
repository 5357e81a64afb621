//! Closed algebra of annulus-supported monomial fields.
//!
//! A term is `c * conj(z)^p * z^q * |z|^gamma` restricted to the half-open
//! shell `r_in <= |z| < r_out`. On the circle of radius `t` it reduces to
//! `c * t^m * e^{i nu theta}` with angular frequency `nu = q - p` and radial
//! degree `m = p + q + gamma`, and every transform below only depends on
//! that pair. Terms are therefore kept in the canonical form where one of
//! `p`, `q` vanishes.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{ExteriorLaurent, TaylorSeries};
use crate::radius::LogRadius;
use crate::summation::ComplexSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialTerm {
    coeff: Complex64,
    nu: i64,
    degree: f64,
    r_in: LogRadius,
    r_out: LogRadius,
}

fn checked(v: Option<i64>, what: &str) -> Result<i64> {
    v.ok_or_else(|| Error::Capacity(format!("{what} overflows 64-bit frequency")))
}

impl MonomialTerm {
    /// `coeff * conj(z)^p * z^q * |z|^gamma` on `[r_in, r_out)`. A negative
    /// `p` is rewritten through `conj(z)^{-1} = z / |z|^2`.
    pub fn new(
        coeff: Complex64,
        p: i64,
        q: i64,
        gamma: f64,
        r_in: LogRadius,
        r_out: LogRadius,
    ) -> Result<Self> {
        let nu = checked(q.checked_sub(p), "q - p")?;
        let degree = p as f64 + q as f64 + gamma;
        Self::from_shape(coeff, nu, degree, r_in, r_out)
    }

    /// Term `coeff * |z|^degree * e^{i nu arg z}` on `[r_in, r_out)`.
    pub fn from_shape(
        coeff: Complex64,
        nu: i64,
        degree: f64,
        r_in: LogRadius,
        r_out: LogRadius,
    ) -> Result<Self> {
        if r_in.ln().is_nan() || r_out.ln().is_nan() || r_in >= r_out {
            return Err(Error::invalid(
                "support",
                format!("need r_in < r_out, got [{r_in}, {r_out})"),
            ));
        }
        if !degree.is_finite() || !coeff.re.is_finite() || !coeff.im.is_finite() {
            return Err(Error::invalid("term", "non-finite coefficient or degree"));
        }
        Ok(Self {
            coeff,
            nu,
            degree,
            r_in,
            r_out,
        })
    }

    /// Unit-modulus building block `(conj(z)/|z|)^{n-2}` on `[r_in, r_out)`.
    pub fn unit_block(n: u64, r_in: LogRadius, r_out: LogRadius) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", format!("building block index {n} < 2")));
        }
        let p = i64::try_from(n - 2).map_err(|_| Error::Capacity(format!("block index {n}")))?;
        Self::from_shape(Complex64::new(1.0, 0.0), -p, 0.0, r_in, r_out)
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    /// Angular frequency `q - p`.
    pub fn nu(&self) -> i64 {
        self.nu
    }

    /// Radial homogeneity `p + q + gamma`.
    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn p(&self) -> i64 {
        (-self.nu).max(0)
    }

    pub fn q(&self) -> i64 {
        self.nu.max(0)
    }

    pub fn gamma(&self) -> f64 {
        self.degree - self.nu.unsigned_abs() as f64
    }

    pub fn r_in(&self) -> LogRadius {
        self.r_in
    }

    pub fn r_out(&self) -> LogRadius {
        self.r_out
    }

    pub fn with_coeff(mut self, coeff: Complex64) -> Self {
        self.coeff = coeff;
        self
    }

    pub fn contains(&self, ln_t: f64) -> bool {
        self.r_in.ln() <= ln_t && ln_t < self.r_out.ln()
    }

    /// Value at `|z| = e^{ln_t}`, `arg z = theta`, ignoring the support.
    pub fn eval_unrestricted(&self, ln_t: f64, theta: f64) -> Complex64 {
        let modulus = if self.degree == 0.0 {
            1.0
        } else {
            (self.degree * ln_t).exp()
        };
        self.coeff * Complex64::from_polar(modulus, self.nu as f64 * theta)
    }

    pub fn eval_polar(&self, ln_t: f64, theta: f64) -> Complex64 {
        if self.contains(ln_t) {
            self.eval_unrestricted(ln_t, theta)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_polar(z.norm().ln(), z.arg())
    }

    /// Radial exponent of `(1/pi) int term * w^j dm` for the one admissible
    /// `j = -nu`.
    fn moment_exponent(&self) -> f64 {
        self.degree - self.nu as f64 + 2.0
    }

    /// `2 c (r_out^e - r_in^e) / e`, the radial part shared by every moment.
    fn radial_integral(&self, e: f64) -> Result<Complex64> {
        if e == 0.0 {
            if self.r_in.is_zero() || self.r_out.is_infinite() {
                return Err(Error::DivergentMoment { exponent: e });
            }
            return Ok(self.coeff * 2.0 * (self.r_out.ln() - self.r_in.ln()));
        }
        if (self.r_out.is_infinite() && e > 0.0) || (self.r_in.is_zero() && e < 0.0) {
            return Err(Error::DivergentMoment { exponent: e });
        }
        Ok(self.coeff * (2.0 * LogRadius::pow_diff(self.r_out, self.r_in, e) / e))
    }

    /// `(1/pi) int term(w) w^j dm(w)`.
    pub fn moment(&self, j: i64) -> Result<Complex64> {
        if self.nu.checked_add(j) != Some(0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.radial_integral(self.moment_exponent())
    }
}

fn cmp_terms(a: &MonomialTerm, b: &MonomialTerm) -> Ordering {
    a.r_in
        .ln()
        .total_cmp(&b.r_in.ln())
        .then(a.r_out.ln().total_cmp(&b.r_out.ln()))
        .then(a.nu.cmp(&b.nu))
        .then(a.degree.total_cmp(&b.degree))
}

fn same_shape(a: &MonomialTerm, b: &MonomialTerm) -> bool {
    a.r_in == b.r_in && a.r_out == b.r_out && a.nu == b.nu && a.degree == b.degree
}

/// Finite sum of monomial terms, kept sorted with like terms merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewiseField {
    terms: Vec<MonomialTerm>,
}

impl PiecewiseField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = MonomialTerm>) -> Self {
        let mut terms: Vec<MonomialTerm> = terms.into_iter().collect();
        terms.sort_by(cmp_terms);
        let mut merged: Vec<MonomialTerm> = Vec::with_capacity(terms.len());
        let mut i = 0;
        while i < terms.len() {
            let mut acc = ComplexSum::new();
            let mut j = i;
            while j < terms.len() && same_shape(&terms[i], &terms[j]) {
                acc.add(terms[j].coeff);
                j += 1;
            }
            let c = acc.value();
            if c != Complex64::new(0.0, 0.0) {
                merged.push(terms[i].with_coeff(c));
            }
            i = j;
        }
        Self { terms: merged }
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(other.terms.iter()).copied())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|t| t.with_coeff(t.coeff * c)))
    }

    /// Largest outer radius of the support.
    pub fn outer_radius(&self) -> LogRadius {
        self.terms
            .iter()
            .map(|t| t.r_out)
            .fold(LogRadius::ZERO, |a, b| if b > a { b } else { a })
    }

    /// Sorted distinct finite radial breakpoints.
    pub fn breakpoints(&self) -> Vec<LogRadius> {
        let mut v: Vec<LogRadius> = self
            .terms
            .iter()
            .flat_map(|t| [t.r_in, t.r_out])
            .filter(|r| !r.is_zero() && !r.is_infinite())
            .collect();
        v.sort_by(|a, b| a.ln().total_cmp(&b.ln()));
        v.dedup();
        v
    }

    pub fn eval_polar(&self, ln_t: f64, theta: f64) -> Complex64 {
        let mut acc = ComplexSum::new();
        for t in &self.terms {
            if t.contains(ln_t) {
                acc.add(t.eval_unrestricted(ln_t, theta));
            }
        }
        acc.value()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_polar(z.norm().ln(), z.arg())
    }

    fn require_bounded(&self) -> Result<()> {
        match self.terms.iter().find(|t| t.r_out.is_infinite()) {
            Some(t) => Err(Error::UnboundedSupport(format!(
                "term with frequency {} extends to infinity",
                t.nu
            ))),
            None => Ok(()),
        }
    }

    /// Exterior Laurent series of the Cauchy transform beyond the support.
    /// Only terms with `nu <= 0` survive, each at frequency `1 - nu`.
    pub fn cauchy_exterior(&self) -> Result<ExteriorLaurent> {
        self.require_bounded()?;
        let mut out = Vec::new();
        for t in &self.terms {
            if t.nu > 0 {
                continue;
            }
            let k = 1u64
                .checked_add(t.nu.unsigned_abs())
                .ok_or_else(|| Error::Capacity("Cauchy frequency".into()))?;
            out.push((k, t.moment(-t.nu)?));
        }
        Ok(ExteriorLaurent::from_terms(out, u64::MAX))
    }

    /// Cauchy transform on the whole plane as a piecewise field vanishing at
    /// infinity. A term with `nu <= 0` only feels the region inside `|z|`,
    /// one with `nu >= 1` only the region outside, so every piece stays a
    /// monomial. Radial exponents `e = 0` would need `log |z|` and are
    /// rejected; the building blocks always have `e = n > 0`.
    pub fn cauchy_full(&self) -> Result<PiecewiseField> {
        self.require_bounded()?;
        let mut out = Vec::with_capacity(3 * self.terms.len());
        for t in &self.terms {
            let e = t.moment_exponent();
            if e == 0.0 {
                return Err(Error::UnsupportedTerm);
            }
            let (a, b) = (t.r_in, t.r_out);
            let c2 = t.coeff * (2.0 / e);
            let nu1 = checked(t.nu.checked_sub(1), "Cauchy frequency")?;
            let plain = |c: Complex64, lo: LogRadius, hi: LogRadius| {
                MonomialTerm::from_shape(c, nu1, nu1 as f64, lo, hi)
            };
            let radial = |c: Complex64, lo: LogRadius, hi: LogRadius| {
                MonomialTerm::from_shape(c, nu1, nu1 as f64 + e, lo, hi)
            };
            if t.nu <= 0 {
                if a.is_zero() && e < 0.0 {
                    return Err(Error::DivergentMoment { exponent: e });
                }
                out.push(radial(c2, a, b)?);
                if !a.is_zero() {
                    out.push(plain(-c2 * a.pow(e), a, b)?);
                }
                out.push(plain(c2 * LogRadius::pow_diff(b, a, e), b, LogRadius::INFINITY)?);
            } else {
                if !a.is_zero() {
                    out.push(plain(-c2 * LogRadius::pow_diff(b, a, e), LogRadius::ZERO, a)?);
                }
                out.push(plain(-c2 * b.pow(e), a, b)?);
                out.push(radial(c2, a, b)?);
            }
        }
        Ok(PiecewiseField::from_terms(out))
    }

    /// Termwise `d/dz`, valid off the breakpoint circles:
    /// `d/dz (t^m e^{i nu theta}) = ((m + nu)/2) t^{m-1} e^{i (nu-1) theta}`.
    pub fn derivative_z(&self) -> Result<PiecewiseField> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let factor = (t.degree + t.nu as f64) / 2.0;
            if factor == 0.0 {
                continue;
            }
            let nu1 = checked(t.nu.checked_sub(1), "derivative frequency")?;
            out.push(MonomialTerm::from_shape(
                t.coeff * factor,
                nu1,
                t.degree - 1.0,
                t.r_in,
                t.r_out,
            )?);
        }
        Ok(PiecewiseField::from_terms(out))
    }

    /// Beurling transform, as the `z`-derivative of the Cauchy transform.
    pub fn beurling(&self) -> Result<PiecewiseField> {
        self.cauchy_full()?.derivative_z()
    }

    /// Beurling transform on the exterior of the support, via the Laurent
    /// series of the Cauchy transform.
    pub fn beurling_exterior(&self) -> Result<ExteriorLaurent> {
        self.cauchy_exterior()?.derivative()
    }

    /// Taylor coefficients `c_k = (k+1)/pi int mu conj(w)^k dm` of the
    /// Bergman projection.
    pub fn bergman_project(&self) -> Result<TaylorSeries> {
        let mut out = Vec::new();
        for t in &self.terms {
            if t.r_out.ln() > 0.0 {
                return Err(Error::invalid("support", "Bergman projection needs support in the closed unit disk"));
            }
            if t.nu < 0 {
                continue;
            }
            let k = t.nu as u64;
            let e = t.degree + t.nu as f64 + 2.0;
            out.push((k, t.radial_integral(e)? * (k as f64 + 1.0)));
        }
        Ok(TaylorSeries::from_terms(out))
    }

    /// Pointwise product; supports intersect, exponents add.
    pub fn multiply(&self, other: &Self) -> Result<PiecewiseField> {
        let mut out = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let lo = if a.r_in > b.r_in { a.r_in } else { b.r_in };
                let hi = if a.r_out < b.r_out { a.r_out } else { b.r_out };
                if lo >= hi {
                    continue;
                }
                let nu = checked(a.nu.checked_add(b.nu), "product frequency")?;
                out.push(MonomialTerm::from_shape(
                    a.coeff * b.coeff,
                    nu,
                    a.degree + b.degree,
                    lo,
                    hi,
                )?);
            }
        }
        Ok(PiecewiseField::from_terms(out))
    }

    /// `(f^* mu)(z) = mu(z^d) conj(f'(z)) / f'(z)` for `f(z) = z^d`.
    pub fn pullback_power(&self, d: u64) -> Result<PiecewiseField> {
        if d < 2 {
            return Err(Error::invalid("d", format!("pullback degree {d} < 2")));
        }
        let di = i64::try_from(d).map_err(|_| Error::Capacity(format!("degree {d}")))?;
        let df = d as f64;
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let nu = checked(
                t.nu.checked_mul(di).and_then(|v| v.checked_sub(2 * (di - 1))),
                "pullback frequency",
            )?;
            out.push(MonomialTerm::from_shape(
                t.coeff,
                nu,
                t.degree * df,
                t.r_in.root(df),
                t.r_out.root(df),
            )?);
        }
        Ok(PiecewiseField::from_terms(out))
    }

    /// `z -> mu(conj(z))`.
    pub fn conj_argument(&self) -> Result<PiecewiseField> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let nu = checked(t.nu.checked_neg(), "conjugated frequency")?;
            out.push(MonomialTerm::from_shape(t.coeff, nu, t.degree, t.r_in, t.r_out)?);
        }
        Ok(PiecewiseField::from_terms(out))
    }

    /// Restriction to `[lo, hi)`.
    pub fn restrict(&self, lo: LogRadius, hi: LogRadius) -> PiecewiseField {
        PiecewiseField::from_terms(self.terms.iter().filter_map(|t| {
            let a = if t.r_in > lo { t.r_in } else { lo };
            let b = if t.r_out < hi { t.r_out } else { hi };
            (a < b).then_some(MonomialTerm { r_in: a, r_out: b, ..*t })
        }))
    }

    /// Largest modulus over `n_radii` radii per shell (log-spaced) and
    /// `n_angles` angles. A lower bound for the sup norm.
    pub fn sampled_sup(&self, n_radii: usize, n_angles: usize) -> f64 {
        let mut best: f64 = 0.0;
        let mut bps = self.breakpoints();
        if let Some(first) = self.terms.iter().find(|t| t.r_in.is_zero()) {
            bps.insert(0, LogRadius::from_ln(first.r_out.ln() - 1.0));
        }
        for w in bps.windows(2) {
            let (lo, hi) = (w[0].ln(), w[1].ln());
            for i in 0..n_radii {
                let ln_t = lo + (hi - lo) * (i as f64 + 0.5) / n_radii as f64;
                for k in 0..n_angles {
                    let theta = std::f64::consts::TAU * k as f64 / n_angles as f64;
                    best = best.max(self.eval_polar(ln_t, theta).norm());
                }
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FieldDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: FieldDoc = serde_json::from_str(s)?;
        doc.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    re: f64,
    im: f64,
    p: i64,
    q: i64,
    gamma: f64,
    r_in: f64,
    /// `null` encodes an unbounded shell.
    r_out: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ln_r_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ln_r_out: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDoc {
    terms: Vec<TermDoc>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&PiecewiseField> for FieldDoc {
    fn from(f: &PiecewiseField) -> Self {
        FieldDoc {
            terms: f
                .terms
                .iter()
                .map(|t| TermDoc {
                    re: t.coeff.re,
                    im: t.coeff.im,
                    p: t.p(),
                    q: t.q(),
                    gamma: t.gamma(),
                    r_in: t.r_in.radius(),
                    r_out: (!t.r_out.is_infinite()).then(|| t.r_out.radius()),
                    ln_r_in: finite(t.r_in.ln()),
                    ln_r_out: finite(t.r_out.ln()),
                })
                .collect(),
        }
    }
}

impl TryFrom<FieldDoc> for PiecewiseField {
    type Error = Error;

    fn try_from(doc: FieldDoc) -> Result<Self> {
        let mut terms = Vec::with_capacity(doc.terms.len());
        for t in doc.terms {
            let r_in = match t.ln_r_in {
                Some(l) => LogRadius::from_ln(l),
                None if t.r_in >= 0.0 => LogRadius::from_radius(t.r_in),
                None => return Err(Error::invalid("r_in", "negative radius")),
            };
            let r_out = match (t.ln_r_out, t.r_out) {
                (Some(l), _) => LogRadius::from_ln(l),
                (None, Some(r)) if r > 0.0 => LogRadius::from_radius(r),
                (None, Some(_)) => return Err(Error::invalid("r_out", "non-positive radius")),
                (None, None) => LogRadius::INFINITY,
            };
            if t.p < 0 {
                return Err(Error::invalid("p", "power of conj(z) must be non-negative"));
            }
            terms.push(MonomialTerm::new(
                Complex64::new(t.re, t.im),
                t.p,
                t.q,
                t.gamma,
                r_in,
                r_out,
            )?);
        }
        Ok(PiecewiseField::from_terms(terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lr(r: f64) -> LogRadius {
        LogRadius::from_radius(r)
    }

    fn block(n: u64, r: f64, rho: f64) -> PiecewiseField {
        PiecewiseField::from_terms([MonomialTerm::unit_block(n, lr(r), lr(rho)).unwrap()])
    }

    #[test]
    fn unit_block_has_unit_modulus() {
        let mu = block(4, 0.5, 0.8);
        let z = Complex64::from_polar(0.6, 0.4);
        let v = mu.eval(z);
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!((v - Complex64::from_polar(1.0, -0.8)).norm() < 1e-15);
        assert_eq!(mu.eval(Complex64::new(0.8, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(mu.eval(Complex64::new(0.5, 0.0)).norm(), 1.0);
    }

    #[test]
    fn canonical_form_drops_common_powers() {
        let t = MonomialTerm::new(Complex64::new(1.0, 0.0), 3, 5, -1.0, lr(0.1), lr(0.2)).unwrap();
        assert_eq!((t.p(), t.q(), t.gamma()), (0, 2, 5.0));
        let t = MonomialTerm::new(Complex64::new(1.0, 0.0), -2, 0, 0.0, lr(0.1), lr(0.2)).unwrap();
        assert_eq!((t.p(), t.q(), t.gamma()), (0, 2, -4.0));
    }

    #[test]
    fn moment_closed_forms() {
        let t = MonomialTerm::unit_block(4, lr(0.5), lr(0.8)).unwrap();
        let m = t.moment(2).unwrap();
        assert!((m.re - 0.5 * (0.8f64.powi(4) - 0.5f64.powi(4))).abs() < 1e-15);
        assert_eq!(t.moment(1).unwrap(), Complex64::new(0.0, 0.0));
        let ind = MonomialTerm::new(Complex64::new(1.0, 0.0), 0, 0, 0.0, lr(0.3), lr(0.7)).unwrap();
        assert!((ind.moment(0).unwrap().re - (0.49 - 0.09)).abs() < 1e-15);
        let ext = MonomialTerm::new(Complex64::new(1.0, 0.0), 0, 0, 0.0, lr(0.3), LogRadius::INFINITY).unwrap();
        assert!(matches!(ext.moment(0), Err(Error::DivergentMoment { .. })));
    }

    #[test]
    fn block_cauchy_coefficient() {
        let (n, r, rho) = (5u64, 0.4, 0.9);
        let c = block(n, r, rho).cauchy_exterior().unwrap();
        assert_eq!(c.len(), 1);
        let want = 2.0 / n as f64 * (rho.powi(5) - r.powi(5));
        assert!((c.coeff(n - 1).re - want).abs() < 1e-15);
    }

    #[test]
    fn cauchy_full_matches_exterior_and_vanishes_at_origin() {
        let mu = block(4, 0.5, 0.8);
        let f = mu.cauchy_full().unwrap();
        let ext = mu.cauchy_exterior().unwrap();
        let z = Complex64::from_polar(1.3, 2.1);
        assert!((f.eval(z) - ext.eval(z)).norm() < 1e-15);
        assert_eq!(f.eval(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(f.eval(Complex64::new(0.2, 0.1)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cauchy_full_is_continuous_across_breakpoints() {
        let mu = PiecewiseField::from_terms([
            MonomialTerm::unit_block(3, lr(0.3), lr(0.6)).unwrap(),
            MonomialTerm::new(Complex64::new(0.2, 0.1), 0, 2, -1.0, lr(0.4), lr(0.9)).unwrap(),
        ]);
        let f = mu.cauchy_full().unwrap();
        for r in [0.3f64, 0.4, 0.6, 0.9] {
            for k in 0..16 {
                let th = k as f64 * PI / 8.0;
                let a = f.eval_polar(r.ln() - 1e-13, th);
                let b = f.eval_polar(r.ln() + 1e-13, th);
                assert!((a - b).norm() < 1e-9, "jump at {r}");
            }
        }
    }

    #[test]
    fn derivative_rule() {
        let radial = PiecewiseField::from_terms([
            MonomialTerm::new(Complex64::new(1.0, 0.0), 0, 0, 3.0, lr(0.1), lr(1.0)).unwrap(),
        ]);
        let d = radial.derivative_z().unwrap();
        assert_eq!(d.len(), 1);
        let t = d.terms()[0];
        assert_eq!((t.p(), t.q(), t.gamma(), t.coeff().re), (1, 0, 1.0, 1.5));
        let constant = PiecewiseField::from_terms([
            MonomialTerm::new(Complex64::new(2.0, 0.0), 0, 0, 0.0, lr(0.1), lr(1.0)).unwrap(),
        ]);
        assert!(constant.derivative_z().unwrap().is_empty());
    }

    #[test]
    fn beurling_interior_closed_form() {
        let (n, r, rho) = (6u64, 0.5, 0.8);
        let s = block(n, r, rho).beurling().unwrap();
        let nf = n as f64;
        for (t, th) in [(0.55, 0.3), (0.7, -1.2), (0.79, 2.0)] {
            let z = Complex64::from_polar(t, th);
            let got = s.eval(z);
            let want = -(2.0 * (nf - 1.0) / nf) * z.powi(-(n as i32)) * (t.powi(n as i32) - r.powi(n as i32))
                + z.conj() * z.powi(-(n as i32 - 1)) * t.powi(n as i32 - 2);
            assert!((got - want).norm() < 1e-13, "{got} vs {want}");
        }
        let z = Complex64::from_polar(1.1, 0.4);
        let want = -(2.0 * (nf - 1.0) / nf) * (rho.powi(6) - r.powi(6)) * z.powi(-6);
        assert!((s.eval(z) - want).norm() < 1e-15);
    }

    #[test]
    fn exterior_routes_agree() {
        let mu = PiecewiseField::from_terms([
            MonomialTerm::unit_block(3, lr(0.3), lr(0.6)).unwrap(),
            MonomialTerm::unit_block(7, lr(0.6), lr(0.85)).unwrap(),
        ]);
        let lau = mu.beurling_exterior().unwrap();
        let s = mu.beurling().unwrap();
        for th in [0.0, 1.0, 2.5] {
            let z = Complex64::from_polar(1.2, th);
            assert!((lau.eval(z) - s.eval(z)).norm() < 1e-14);
        }
        assert_eq!(lau.coeff(3), Complex64::new(-(4.0 / 3.0) * (0.6f64.powi(3) - 0.3f64.powi(3)), 0.0));
    }

    #[test]
    fn bergman_relation_with_beurling() {
        let mu = PiecewiseField::from_terms([
            MonomialTerm::unit_block(4, lr(0.5), lr(0.8)).unwrap(),
            MonomialTerm::new(Complex64::new(0.3, -0.2), 0, 3, -3.0, lr(0.2), lr(0.5)).unwrap(),
        ]);
        let p = mu.bergman_project().unwrap();
        let s0 = mu.conj_argument().unwrap().beurling_exterior().unwrap();
        for th in [0.2, 1.7, 4.0] {
            let z = Complex64::from_polar(2.0, th);
            let lhs = p.eval(z.inv());
            let rhs = -z * z * s0.eval(z);
            assert!((lhs - rhs).norm() < 1e-8, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn radial_real_field_projects_to_constant() {
        let mu = PiecewiseField::from_terms([
            MonomialTerm::new(Complex64::new(0.7, 0.0), 0, 0, 1.5, lr(0.2), lr(0.9)).unwrap(),
        ]);
        let p = mu.bergman_project().unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.coeff(0).norm() > 0.0);
    }

    #[test]
    fn products() {
        let n = 5u64;
        let mu = block(n, 0.5, 0.8);
        let sq = mu.multiply(&mu).unwrap();
        let t = sq.terms()[0];
        assert_eq!((t.p(), t.gamma()), (2 * (n as i64 - 2), -2.0 * (n as f64 - 2.0)));
        assert!(mu.multiply(&block(3, 0.8, 0.9)).unwrap().is_empty());
    }

    #[test]
    fn pullback_shape_and_modulus() {
        let mu = block(4, 0.5, 0.8);
        let pb = mu.pullback_power(3).unwrap();
        let t = pb.terms()[0];
        // p' = 3*2 + 2 = 8, q' = -2, which is conj(z)^10 |z|^{-10} in canonical form
        assert_eq!(t.nu(), -10);
        assert_eq!(t.degree(), 0.0);
        assert!((t.r_in().radius() - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-15);
        let z = Complex64::from_polar(0.85, 0.3);
        assert!((pb.eval(z).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unsupported_and_unbounded_inputs() {
        // nu = 0, degree = -2 gives e = 0
        let bad = PiecewiseField::from_terms([
            MonomialTerm::new(Complex64::new(1.0, 0.0), 0, 0, -2.0, lr(0.2), lr(0.4)).unwrap(),
        ]);
        assert_eq!(bad.cauchy_full(), Err(Error::UnsupportedTerm));
        let ext = PiecewiseField::from_terms([
            MonomialTerm::new(Complex64::new(1.0, 0.0), 0, 0, -3.0, lr(0.2), LogRadius::INFINITY).unwrap(),
        ]);
        assert!(matches!(ext.cauchy_exterior(), Err(Error::UnboundedSupport(_))));
    }

    #[test]
    fn json_round_trip() {
        let mu = PiecewiseField::from_terms([
            MonomialTerm::unit_block(7, LogRadius::from_ln(-1e-13), LogRadius::from_ln(-1e-14)).unwrap(),
            MonomialTerm::new(Complex64::new(0.1, 1.0 / 3.0), 0, 2, -0.5, LogRadius::ZERO, lr(0.3)).unwrap(),
        ]);
        let f = mu.cauchy_full().unwrap();
        for field in [mu, f] {
            let back = PiecewiseField::from_json(&field.to_json().unwrap()).unwrap();
            assert_eq!(back, field);
        }
    }

    #[test]
    fn merging_is_order_independent() {
        let a = MonomialTerm::unit_block(4, lr(0.5), lr(0.8)).unwrap();
        let b = MonomialTerm::new(Complex64::new(0.25, 0.0), 2, 0, -2.0, lr(0.5), lr(0.8)).unwrap();
        let c = MonomialTerm::unit_block(3, lr(0.1), lr(0.2)).unwrap();
        let f1 = PiecewiseField::from_terms([a, b, c]);
        let f2 = PiecewiseField::from_terms([c, b, a]);
        assert_eq!(f1, f2);
        assert_eq!(f1.len(), 2);
    }
}
