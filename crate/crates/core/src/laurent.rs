//! Sparse series on the exterior disk `|z| > 1` and on the unit disk.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radius::LogRadius;
use crate::summation::{sum_complex, ComplexSum, NeumaierSum};

/// Eventual self-similarity of a lacunary series under `z -> z^base`:
/// block edges sit at `first * base^l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfSimilarity {
    pub base: u64,
    pub first: u64,
}

impl SelfSimilarity {
    /// Block edges `first * base^l` not exceeding `limit`.
    pub fn edges(&self, limit: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut n = self.first;
        while n <= limit {
            out.push(n);
            match n.checked_mul(self.base) {
                Some(next) if self.base > 1 => n = next,
                _ => break,
            }
        }
        out
    }
}

/// `g(z) = sum_k b_k z^{-k}` on `|z| > 1`.
///
/// `max_freq` records up to which frequency the stored coefficients are
/// exact; anything above it has been truncated away. Frequency zero (a
/// constant) is admitted because the degree-two lacunary field carries one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorLaurent {
    coeffs: BTreeMap<u64, Complex64>,
    max_freq: u64,
    self_similarity: Option<SelfSimilarity>,
}

impl ExteriorLaurent {
    pub fn zero(max_freq: u64) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            max_freq,
            self_similarity: None,
        }
    }

    /// Builds a series from `(k, b_k)` pairs; repeated frequencies are summed
    /// with compensation, frequencies above `max_freq` and exact zeros are
    /// dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = (u64, Complex64)>, max_freq: u64) -> Self {
        let mut acc: BTreeMap<u64, ComplexSum> = BTreeMap::new();
        for (k, b) in terms {
            if k <= max_freq {
                acc.entry(k).or_default().add(b);
            }
        }
        let coeffs = acc
            .into_iter()
            .map(|(k, s)| (k, s.value()))
            .filter(|(_, b)| *b != Complex64::new(0.0, 0.0))
            .collect();
        Self {
            coeffs,
            max_freq,
            self_similarity: None,
        }
    }

    pub fn with_self_similarity(mut self, s: SelfSimilarity) -> Self {
        self.self_similarity = Some(s);
        self
    }

    pub fn self_similarity(&self) -> Option<SelfSimilarity> {
        self.self_similarity
    }

    pub fn max_freq(&self) -> u64 {
        self.max_freq
    }

    pub fn coeff(&self, k: u64) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.coeffs.iter().map(|(k, b)| (*k, *b))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_freq(&self) -> Option<u64> {
        self.coeffs.keys().next().copied()
    }

    /// Evaluation at `|z| = e^{ln_r}`, `arg z = theta`.
    pub fn eval_polar(&self, ln_r: f64, theta: f64) -> Complex64 {
        sum_complex(self.iter().map(|(k, b)| {
            let kf = k as f64;
            b * Complex64::from_polar((-kf * ln_r).exp(), (-kf * theta).rem_euclid(std::f64::consts::TAU))
        }))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_polar(z.norm().ln(), z.arg())
    }

    /// Upper bound `sum |b_k| R^{-k}` for `|g|` on `|z| = R`.
    pub fn modulus_bound(&self, r: LogRadius) -> f64 {
        crate::summation::sum(self.iter().map(|(k, b)| b.norm() * (-(k as f64) * r.ln()).exp()))
    }

    /// `g'`; `b_k z^{-k}` becomes `-k b_k z^{-k-1}`.
    pub fn derivative(&self) -> Result<Self> {
        let max_freq = self.max_freq.saturating_add(1);
        let mut terms = Vec::with_capacity(self.len());
        for (k, b) in self.iter() {
            if k == 0 {
                continue;
            }
            let k1 = k
                .checked_add(1)
                .ok_or_else(|| Error::Capacity(format!("derivative of frequency {k}")))?;
            terms.push((k1, b * -(k as f64)));
        }
        let mut out = Self::from_terms(terms, max_freq);
        out.self_similarity = self.self_similarity;
        Ok(out)
    }

    /// `g'''` termwise: `b_k (-k)(-k-1)(-k-2)` at frequency `k+3`.
    pub fn third_derivative(&self) -> Result<Self> {
        let max_freq = self.max_freq.saturating_add(3);
        let mut terms = Vec::with_capacity(self.len());
        for (k, b) in self.iter() {
            if k == 0 {
                continue;
            }
            let k3 = k
                .checked_add(3)
                .ok_or_else(|| Error::Capacity(format!("third derivative of frequency {k}")))?;
            let kf = k as f64;
            terms.push((k3, b * (-kf * (kf + 1.0) * (kf + 2.0))));
        }
        let mut out = Self::from_terms(terms, max_freq);
        out.self_similarity = self.self_similarity;
        Ok(out)
    }

    /// Antiderivative vanishing at infinity. Frequencies 0 and 1 have no
    /// such primitive (they integrate to `z` and `log z`).
    pub fn antiderivative(&self) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.len());
        for (k, b) in self.iter() {
            if k < 2 {
                return Err(Error::invalid(
                    "series",
                    format!("frequency {k} has no primitive vanishing at infinity"),
                ));
            }
            terms.push((k - 1, b / -((k - 1) as f64)));
        }
        let mut out = Self::from_terms(terms, self.max_freq.saturating_sub(1));
        out.self_similarity = self.self_similarity;
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::from_terms(self.iter().map(|(k, b)| (k, b * c)), self.max_freq);
        out.self_similarity = self.self_similarity;
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let max_freq = self.max_freq.min(other.max_freq);
        let mut out = Self::from_terms(self.iter().chain(other.iter()), max_freq);
        out.self_similarity = self.self_similarity.or(other.self_similarity);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Cauchy product. The result is exact up to
    /// `min(max_a + min_b, max_b + min_a)`; coefficients smaller than
    /// `floor` in modulus are dropped.
    pub fn mul(&self, other: &Self, floor: f64) -> Result<Self> {
        let (Some(min_a), Some(min_b)) = (self.min_freq(), other.min_freq()) else {
            return Ok(Self::zero(self.max_freq.min(other.max_freq)));
        };
        let max_freq = self
            .max_freq
            .saturating_add(min_b)
            .min(other.max_freq.saturating_add(min_a));
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (ka, a) in self.iter() {
            for (kb, b) in other.iter() {
                let k = ka
                    .checked_add(kb)
                    .ok_or_else(|| Error::Capacity(format!("product frequency {ka}+{kb}")))?;
                if k <= max_freq {
                    terms.push((k, a * b));
                }
            }
        }
        let mut out = Self::from_terms(terms, max_freq);
        out.coeffs.retain(|_, b| b.norm() >= floor);
        out.self_similarity = self.self_similarity.or(other.self_similarity);
        Ok(out)
    }

    /// Keeps frequencies `<= max_freq`; returns the series and the dropped
    /// l2 coefficient mass.
    pub fn truncated(&self, max_freq: u64) -> (Self, f64) {
        let mut dropped = NeumaierSum::new();
        let mut out = Self::zero(max_freq.min(self.max_freq));
        out.self_similarity = self.self_similarity;
        for (k, b) in self.iter() {
            if k <= max_freq {
                out.coeffs.insert(k, b);
            } else {
                dropped.add(b.norm_sqr());
            }
        }
        (out, dropped.value())
    }

    /// `sum |b_k|^2` over `lo <= k < hi`.
    pub fn mass(&self, lo: u64, hi: u64) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        crate::summation::sum(self.coeffs.range(lo..hi).map(|(_, b)| b.norm_sqr()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&LaurentDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: LaurentDoc = serde_json::from_str(s)?;
        Ok(doc.into())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaurentDoc {
    coeffs: Vec<(u64, f64, f64)>,
    max_freq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    self_similarity: Option<SelfSimilarity>,
}

impl From<&ExteriorLaurent> for LaurentDoc {
    fn from(g: &ExteriorLaurent) -> Self {
        LaurentDoc {
            coeffs: g.iter().map(|(k, b)| (k, b.re, b.im)).collect(),
            max_freq: g.max_freq,
            self_similarity: g.self_similarity,
        }
    }
}

impl From<LaurentDoc> for ExteriorLaurent {
    fn from(doc: LaurentDoc) -> Self {
        let coeffs = doc
            .coeffs
            .into_iter()
            .filter(|(k, _, _)| *k <= doc.max_freq)
            .map(|(k, re, im)| (k, Complex64::new(re, im)))
            .collect();
        ExteriorLaurent {
            coeffs,
            max_freq: doc.max_freq,
            self_similarity: doc.self_similarity,
        }
    }
}

/// `f(z) = sum_k a_k z^k` on the unit disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaylorSeries {
    coeffs: BTreeMap<u64, Complex64>,
}

impl TaylorSeries {
    pub fn from_terms(terms: impl IntoIterator<Item = (u64, Complex64)>) -> Self {
        let mut acc: BTreeMap<u64, ComplexSum> = BTreeMap::new();
        for (k, a) in terms {
            acc.entry(k).or_default().add(a);
        }
        Self {
            coeffs: acc
                .into_iter()
                .map(|(k, s)| (k, s.value()))
                .filter(|(_, a)| *a != Complex64::new(0.0, 0.0))
                .collect(),
        }
    }

    pub fn coeff(&self, k: u64) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.coeffs.iter().map(|(k, a)| (*k, *a))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let ln_r = z.norm().ln();
        let theta = z.arg();
        sum_complex(self.iter().map(|(k, a)| {
            if k == 0 {
                a
            } else {
                let kf = k as f64;
                a * Complex64::from_polar((kf * ln_r).exp(), (kf * theta).rem_euclid(std::f64::consts::TAU))
            }
        }))
    }

    pub fn derivative(&self) -> Self {
        Self::from_terms(
            self.iter()
                .filter(|(k, _)| *k > 0)
                .map(|(k, a)| (k - 1, a * k as f64)),
        )
    }
}
