//! Strategies shared by the property tests.

#![allow(dead_code)]

use bvlab_core::annular::{MonomialTerm, PiecewiseField};
use bvlab_core::radius::LogRadius;
use num_complex::Complex64;
use proptest::prelude::*;

/// Unit blocks with random phases on adjacent annuli filling `[lo, hi)`.
#[derive(Debug, Clone)]
pub struct BlockField {
    pub field: PiecewiseField,
    pub circles: Vec<f64>,
}

pub fn block_field(max_blocks: usize, max_index: u64) -> impl Strategy<Value = BlockField> {
    (
        0.05f64..0.5,
        0.55f64..0.98,
        prop::collection::vec((2..=max_index, 0.0f64..std::f64::consts::TAU, 0.1f64..1.0), 1..=max_blocks),
    )
        .prop_map(|(lo, hi, blocks)| {
            let total: f64 = blocks.iter().map(|b| b.2).sum();
            let mut circles = vec![lo];
            let mut terms = Vec::new();
            let mut at = lo;
            for (n, phase, share) in blocks {
                let next = (at + (hi - lo) * share / total).min(hi);
                if next - at < 1e-3 {
                    continue;
                }
                let t = MonomialTerm::unit_block(n, LogRadius::from_radius(at), LogRadius::from_radius(next))
                    .expect("valid block")
                    .with_coeff(Complex64::from_polar(1.0, phase));
                terms.push(t);
                circles.push(next);
                at = next;
            }
            BlockField {
                field: PiecewiseField::from_terms(terms),
                circles,
            }
        })
}

/// `count` probe points with modulus in `[lo, hi)` kept `margin` away from
/// every circle, spread deterministically from `salt`.
pub fn probes(circles: &[f64], lo: f64, hi: f64, margin: f64, count: usize, salt: u64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    let mut k = salt;
    while out.len() < count {
        k += 1;
        // low-discrepancy points from the golden ratio
        let u = (k as f64 * 0.618_033_988_749_894_9).fract();
        let v = (k as f64 * 0.754_877_666_246_692_7).fract();
        let t = lo + (hi - lo) * u;
        if circles.iter().all(|c| (t - c).abs() > margin) {
            out.push(Complex64::from_polar(t, std::f64::consts::TAU * v));
        }
    }
    out
}
