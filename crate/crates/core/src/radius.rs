use serde::{Deserialize, Serialize};

/// A radius stored through its natural logarithm.
///
/// Shell radii of the lacunary constructions sit at distance `1e-12` and
/// below from the unit circle, and their high powers `r^n` are the only
/// quantities that matter. Keeping `ln r` makes `r^n = exp(n ln r)` exact to
/// rounding. Zero is `ln r = -inf` and the point at infinity is `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogRadius(f64);

impl LogRadius {
    pub const ZERO: LogRadius = LogRadius(f64::NEG_INFINITY);
    pub const UNIT: LogRadius = LogRadius(0.0);
    pub const INFINITY: LogRadius = LogRadius(f64::INFINITY);

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogRadius(ln)
    }

    pub fn from_radius(r: f64) -> Self {
        debug_assert!(r >= 0.0);
        LogRadius(r.ln())
    }

    /// Radius `1 + excess`, accurate for tiny excesses.
    pub fn from_excess(excess: f64) -> Self {
        LogRadius(excess.ln_1p())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn radius(self) -> f64 {
        self.0.exp()
    }

    /// `r - 1`, accurate near the unit circle.
    #[inline]
    pub fn excess(self) -> f64 {
        self.0.exp_m1()
    }

    /// `r^(1/d)`.
    #[inline]
    pub fn root(self, d: f64) -> Self {
        LogRadius(self.0 / d)
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// `r^e` with the conventions `0^e = 0` and `inf^e = 0` for the
    /// convergent signs, `r^0 = 1`.
    pub fn pow(self, e: f64) -> f64 {
        if e == 0.0 {
            1.0
        } else {
            (e * self.0).exp()
        }
    }

    /// `hi^e - lo^e` without cancellation when both radii are close.
    pub fn pow_diff(hi: LogRadius, lo: LogRadius, e: f64) -> f64 {
        if e == 0.0 {
            return 0.0;
        }
        let a = e * hi.0;
        let b = e * lo.0;
        if a.is_finite() && b.is_finite() {
            // exp(a) - exp(b) = exp(a) * (-(expm1(b - a)))
            -a.exp() * (b - a).exp_m1()
        } else {
            a.exp() - b.exp()
        }
    }
}

impl std::fmt::Display for LogRadius {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.radius())
    }
}
