//! Brute-force reference computations.
//!
//! Everything here evaluates the defining integrals directly by quadrature
//! or finite differences, sharing no code with `bvlab-core`, so agreement
//! between the two is evidence rather than tautology.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    (x, w)
}

/// Composite Gauss-Legendre rule: `pieces` equal panels of `order` nodes.
pub fn composite_rule(a: f64, b: f64, pieces: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / pieces as f64;
    let mut out = Vec::with_capacity(pieces * order);
    for p in 0..pieces {
        let lo = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, pieces: usize, order: usize, mut f: F) -> f64 {
    composite_rule(a, b, pieces, order)
        .into_iter()
        .map(|(x, w)| w * f(x))
        .sum()
}

pub fn integrate_complex<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    pieces: usize,
    order: usize,
    mut f: F,
) -> Complex64 {
    composite_rule(a, b, pieces, order)
        .into_iter()
        .map(|(x, w)| f(x) * w)
        .sum()
}

/// A function on the plane that is smooth away from finitely many circles
/// `|w| = radii[i]` and vanishes for `|w| >= radii.last()`.
pub struct AnnularData<'a> {
    pub f: &'a dyn Fn(Complex64) -> Complex64,
    /// Sorted circles where `f` may jump. The last one bounds the support.
    pub radii: Vec<f64>,
    /// Smallest circle inside which `f` vanishes (0 if none).
    pub inner: f64,
}

/// Rule for `int_A g dm` over annuli, Gauss-Legendre in `log r` between
/// breakpoints and uniform in angle.
pub struct PolarRule {
    pub radial_order: usize,
    pub radial_pieces: usize,
    pub angles: usize,
}

impl Default for PolarRule {
    fn default() -> Self {
        Self {
            radial_order: 20,
            radial_pieces: 4,
            angles: 256,
        }
    }
}

impl PolarRule {
    /// `int_{lo <= |w| < hi} g(w) dm(w)` for `0 < lo < hi`.
    pub fn annulus<F: FnMut(Complex64) -> Complex64>(&self, lo: f64, hi: f64, mut g: F) -> Complex64 {
        let nodes = composite_rule(lo.ln(), hi.ln(), self.radial_pieces, self.radial_order);
        let mut acc = Complex64::new(0.0, 0.0);
        let dth = TAU / self.angles as f64;
        for (s, w) in nodes {
            let r = s.exp();
            let mut ring = Complex64::new(0.0, 0.0);
            for k in 0..self.angles {
                let th = dth * (k as f64 + 0.5);
                ring += g(Complex64::from_polar(r, th));
            }
            // dm = r dr dth = r^2 ds dth
            acc += ring * (w * r * r * dth);
        }
        acc
    }

    /// `int g dm` over the support of `data`, split at its circles.
    pub fn over<F: FnMut(Complex64) -> Complex64>(&self, data: &AnnularData, mut g: F) -> Complex64 {
        let mut edges = vec![data.inner];
        edges.extend(data.radii.iter().copied().filter(|&r| r > data.inner));
        let mut acc = Complex64::new(0.0, 0.0);
        for w in edges.windows(2) {
            if w[0] > 0.0 {
                acc += self.annulus(w[0], w[1], &mut g);
            } else {
                acc += self.disk(w[1], &mut g);
            }
        }
        acc
    }

    fn disk<F: FnMut(Complex64) -> Complex64>(&self, hi: f64, mut g: F) -> Complex64 {
        let nodes = composite_rule(0.0, hi, self.radial_pieces, self.radial_order);
        let dth = TAU / self.angles as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, w) in nodes {
            let mut ring = Complex64::new(0.0, 0.0);
            for k in 0..self.angles {
                ring += g(Complex64::from_polar(r, dth * (k as f64 + 0.5)));
            }
            acc += ring * (w * r * dth);
        }
        acc
    }
}

/// `(1/pi) int f(w) w^j dm(w)`.
pub fn moment(data: &AnnularData, j: i32, rule: &PolarRule) -> Complex64 {
    rule.over(data, |w| (data.f)(w) * w.powi(j)) / PI
}

/// Cauchy transform `(1/pi) int f(w)/(z-w) dm(w)` at any `z`, using polar
/// coordinates centred at `z` so the `1/|z-w|` singularity is absorbed by
/// the Jacobian.
pub fn cauchy(data: &AnnularData, z: Complex64, rays: usize, order: usize) -> Complex64 {
    if z.norm() >= outer_radius(data) {
        return exterior_rule(rays, order).over(data, |w| (data.f)(w) / (z - w)) / PI;
    }
    // 1/(z-w) = -e^{-i phi}/rho for w = z + rho e^{i phi}; the Jacobian is rho
    local_polar(data, z, rays, order, |fw, _rho, phi| -fw * Complex64::from_polar(1.0, -phi)) / PI
}

/// Beurling transform `-(1/pi) p.v. int f(w)/(z-w)^2 dm(w)`. The value
/// `f(z)` is subtracted inside the disk `|w| < radii.last()`, whose own
/// principal value integral vanishes for interior `z`.
pub fn beurling(data: &AnnularData, z: Complex64, rays: usize, order: usize) -> Complex64 {
    let outer = outer_radius(data);
    if z.norm() >= outer {
        return -exterior_rule(rays, order).over(data, |w| (data.f)(w) / ((z - w) * (z - w))) / PI;
    }
    let fz = (data.f)(z);
    let subtracted = AnnularData {
        f: &|w: Complex64| if w.norm() < outer { (data.f)(w) - fz } else { Complex64::new(0.0, 0.0) },
        radii: data.radii.clone(),
        inner: 0.0,
    };
    let val = local_polar(&subtracted, z, rays, order, |fw, rho, phi| {
        fw * Complex64::from_polar(1.0 / rho, -2.0 * phi)
    });
    -val / PI
}

fn outer_radius(data: &AnnularData) -> f64 {
    *data.radii.last().expect("support radius")
}

/// Off the support the kernels are smooth and the plain polar rule is
/// spectrally accurate; the local rays would meet tangencies instead.
fn exterior_rule(rays: usize, order: usize) -> PolarRule {
    PolarRule {
        radial_order: order,
        radial_pieces: 4,
        angles: rays.max(64),
    }
}

/// `int_{|w| < R} K(f(w), rho, phi) d rho d phi` with `w = z + rho e^{i phi}`,
/// where the kernel already includes the Jacobian `rho`. Each ray is split
/// where it crosses a circle of `data`. In angle the ray integral has
/// square-root kinks at the directions tangent to circles inside `|z|`; the
/// angle is split there and each arc mapped by `u^2 (3 - 2u)`, which
/// smooths both ends. About `rays` angles are used in all.
fn local_polar<K>(data: &AnnularData, z: Complex64, rays: usize, order: usize, kernel: K) -> Complex64
where
    K: Fn(Complex64, f64, f64) -> Complex64,
{
    let (gx, gw) = gauss_legendre(order);
    let outer = *data.radii.last().expect("support radius");
    let mut circles: Vec<f64> = data.radii.clone();
    if data.inner > 0.0 {
        circles.push(data.inner);
    }
    let c0 = z.norm_sqr();
    let ray_integral = |phi: f64| -> Complex64 {
        let dir = Complex64::from_polar(1.0, phi);
        // crossings of |z + rho dir| = R for every circle R
        let b = (z.conj() * dir).re;
        let disc = b * b - (c0 - outer * outer);
        if disc < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let rho_max = -b + disc.sqrt();
        if rho_max <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut cuts = vec![0.0];
        for &r in &circles {
            let disc = b * b - (c0 - r * r);
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for rho in [-b - sq, -b + sq] {
                    if rho > 0.0 && rho < rho_max {
                        cuts.push(rho);
                    }
                }
            }
        }
        cuts.push(rho_max);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut ray = Complex64::new(0.0, 0.0);
        for seg in cuts.windows(2) {
            let (a, bb) = (seg[0], seg[1]);
            if bb - a <= 0.0 {
                continue;
            }
            // refine geometrically toward rho = 0 on the first segment
            let pieces = if a == 0.0 { 12 } else { 2 };
            let mut edges = Vec::with_capacity(pieces + 1);
            if a == 0.0 {
                edges.push(0.0);
                for i in (0..pieces).rev() {
                    edges.push(bb * 0.25f64.powi(i as i32));
                }
            } else {
                for i in 0..=pieces {
                    edges.push(a + (bb - a) * i as f64 / pieces as f64);
                }
            }
            for e in edges.windows(2) {
                let h = 0.5 * (e[1] - e[0]);
                let mid = 0.5 * (e[1] + e[0]);
                for (x, w) in gx.iter().zip(&gw) {
                    let rho = mid + h * x;
                    ray += kernel((data.f)(z + dir * rho), rho, phi) * (w * h);
                }
            }
        }
        ray
    };
    // directions tangent to circles of radius <= |z|
    let tz = z.arg();
    let mut breaks = vec![tz];
    for &r in &circles {
        if r * r <= c0 && c0 > 0.0 {
            let s = (1.0 - r * r / c0).max(0.0).sqrt();
            for a in [s.acos(), (-s).acos()] {
                for phi in [tz + a, tz - a] {
                    breaks.push(tz + (phi - tz).rem_euclid(TAU));
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    breaks.push(tz + TAU);
    let panels_total = (rays / order).max(breaks.len());
    let mut total = Complex64::new(0.0, 0.0);
    for arc in breaks.windows(2) {
        let len = arc[1] - arc[0];
        if len <= 0.0 {
            continue;
        }
        let panels = ((panels_total as f64 * len / TAU).ceil() as usize).max(1);
        for p in 0..panels {
            let (u0, u1) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            let (hu, mu) = (0.5 * (u1 - u0), 0.5 * (u1 + u0));
            for (x, w) in gx.iter().zip(&gw) {
                let u = mu + hu * x;
                let phi = arc[0] + len * u * u * (3.0 - 2.0 * u);
                let jac = len * 6.0 * u * (1.0 - u);
                total += ray_integral(phi) * (w * hu * jac);
            }
        }
    }
    total
}

/// Centred finite difference of `f` along `direction`.
pub fn directional_derivative<F: Fn(Complex64) -> Complex64>(f: F, z: Complex64, direction: Complex64, h: f64) -> Complex64 {
    (f(z + direction * h) - f(z - direction * h)) / (2.0 * h)
}

/// Wirtinger derivatives `(d/dz, d/dzbar)` by centred differences.
pub fn wirtinger<F: Fn(Complex64) -> Complex64>(f: F, z: Complex64, h: f64) -> (Complex64, Complex64) {
    let fx = directional_derivative(&f, z, Complex64::new(1.0, 0.0), h);
    let fy = directional_derivative(&f, z, Complex64::new(0.0, 1.0), h);
    let i = Complex64::new(0.0, 1.0);
    ((fx - i * fy) * 0.5, (fx + i * fy) * 0.5)
}

/// `(1/2pi) int |g(R e^{i theta})|^2 d theta` with the uniform rule.
pub fn circle_mean_sq<F: Fn(Complex64) -> Complex64>(g: F, r: f64, points: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..points {
        let th = TAU * k as f64 / points as f64;
        acc += g(Complex64::from_polar(r, th)).norm_sqr();
    }
    acc / points as f64
}

/// `(1/2pi) int h(e^{i theta}) d theta` with the uniform rule.
pub fn circle_mean<F: Fn(Complex64) -> Complex64>(h: F, r: f64, points: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..points {
        let th = TAU * k as f64 / points as f64;
        acc += h(Complex64::from_polar(r, th));
    }
    acc / points as f64
}

/// Maximiser of `f` on an evenly spaced grid of `[a, b]`, refined by
/// repeated zooming around the best node.
pub fn grid_argmax<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize, rounds: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    let mut best = (a, f(a));
    for _ in 0..rounds {
        let h = (hi - lo) / (points - 1) as f64;
        for i in 0..points {
            let x = lo + h * i as f64;
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        lo = (best.0 - 2.0 * h).max(a);
        hi = (best.0 + 2.0 * h).min(b);
    }
    best
}

/// Sum of the lacunary series `sum_i coeffs_i z^{-freq_i}` evaluated
/// naively in extended steps.
pub fn laurent_naive(terms: &[(u64, Complex64)], z: Complex64) -> Complex64 {
    let ln = z.ln();
    terms
        .iter()
        .map(|(k, b)| b * (-(*k as f64) * ln).exp())
        .sum()
}

/// `profile(t) e^{i freq theta}` on `lo <= t < hi`.
pub struct RotationalPiece<'a> {
    pub lo: f64,
    pub hi: f64,
    pub freq: i32,
    pub profile: &'a dyn Fn(f64) -> Complex64,
}

impl RotationalPiece<'_> {
    fn eval(&self, w: Complex64) -> Complex64 {
        let t = w.norm();
        if t >= self.lo && t < self.hi {
            (self.profile)(t) * Complex64::from_polar(1.0, self.freq as f64 * w.arg())
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// `S f` at `t > 0` on the positive axis for a single rotational piece,
/// from the radial form of its Cauchy transform: `C f(z) = z^{k-1} G(|z|)`
/// with `G` a one-dimensional integral of the profile, so
/// `S f(t) = f(t) + (k - 1) t^{k-2} G(t)`. Exact up to the radial rule, also
/// next to the jump circles where plane quadrature degrades.
pub fn rotational_beurling_profile(piece: &RotationalPiece, t: f64, pieces: usize, order: usize) -> Complex64 {
    let k = piece.freq;
    let moment = |a: f64, b: f64| -> Complex64 {
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        composite_rule(a.ln(), b.ln(), pieces, order)
            .into_iter()
            .map(|(ls, wt)| {
                let s = ls.exp();
                (piece.profile)(s) * s.powi(2 - k) * wt
            })
            .sum()
    };
    let g = if k <= 0 {
        2.0 * moment(piece.lo, t.min(piece.hi))
    } else {
        -2.0 * moment(t.max(piece.lo), piece.hi)
    };
    let local = if t >= piece.lo && t < piece.hi {
        (piece.profile)(t)
    } else {
        Complex64::new(0.0, 0.0)
    };
    local + (k - 1) as f64 * t.powi(k - 2) * g
}

/// `S(mu S mu)(z) - (S mu)(z)^2 / 2` at exterior points for `mu` a sum of
/// rotational pieces. `S mu` on the support comes from
/// [`rotational_beurling_profile`] on the positive axis, rotated: a piece of
/// frequency `k` has `S f(e^{ia} z) = e^{i(k-2)a} S f(z)`. The outer
/// transform is the polar rule on each piece's annulus; the square uses
/// [`beurling`] with `rays` and `order`.
pub fn second_neumann_exterior(
    pieces: &[RotationalPiece],
    zs: &[Complex64],
    rule: &PolarRule,
    rays: usize,
    order: usize,
) -> Vec<Complex64> {
    let dth = TAU / rule.angles as f64;
    let mut outer = vec![Complex64::new(0.0, 0.0); zs.len()];
    for host in pieces {
        let nodes = composite_rule(host.lo.ln(), host.hi.ln(), rule.radial_pieces, rule.radial_order);
        for (s, wt) in nodes {
            let t = s.exp();
            let profiles: Vec<Complex64> = pieces
                .iter()
                .map(|p| rotational_beurling_profile(p, t, 8, order))
                .collect();
            for m in 0..rule.angles {
                let th = dth * (m as f64 + 0.5);
                let w = Complex64::from_polar(t, th);
                let s_mu: Complex64 = pieces
                    .iter()
                    .zip(&profiles)
                    .map(|(p, v)| v * Complex64::from_polar(1.0, (p.freq - 2) as f64 * th))
                    .sum();
                // each piece integrates only its own share of mu
                let f = host.eval(w) * s_mu;
                let jac = wt * t * t * dth;
                for (acc, z) in outer.iter_mut().zip(zs) {
                    *acc -= f / ((z - w) * (z - w)) * jac / PI;
                }
            }
        }
    }
    let total = |w: Complex64| -> Complex64 { pieces.iter().map(|p| p.eval(w)).sum() };
    let mut radii: Vec<f64> = pieces.iter().flat_map(|p| [p.lo, p.hi]).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let inner = radii[0];
    let data = AnnularData { f: &total, radii, inner };
    zs.iter()
        .zip(outer)
        .map(|(&z, nested)| {
            let s = beurling(&data, z, rays, order);
            nested - 0.5 * s * s
        })
        .collect()
}
