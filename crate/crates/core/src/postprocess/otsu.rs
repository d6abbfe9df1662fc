use std::cmp::Ordering;

use num_bigint::BigUint;

use crate::raster::GrayImage;

/// Otsu level over a 256-bin histogram: the `t` maximizing the
/// between-class variance of `{v <= t}` vs `{v > t}`, smallest `t` on ties.
/// A histogram with a single occupied bin returns that bin.
///
/// Scores are compared exactly. With `n0` pixels and sum `s0` at or below
/// `t` (totals `n`, `s`), the variance is proportional to
/// `(s0 n - s n0)^2 / (n0 (n - n0))`.
pub fn otsu_from_histogram(hist: &[u64; 256]) -> u8 {
    let n: u128 = hist.iter().map(|&c| u128::from(c)).sum();
    let s: u128 = hist.iter().enumerate().map(|(v, &c)| v as u128 * u128::from(c)).sum();

    let mut best: Option<(u8, BigUint, BigUint)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for (t, &count) in hist.iter().enumerate() {
        n0 += u128::from(count);
        s0 += t as u128 * u128::from(count);
        if n0 == 0 || n0 == n {
            continue;
        }
        let (a, b) = (s0 * n, s * n0);
        let diff = BigUint::from(a.abs_diff(b));
        let num = &diff * &diff;
        let den = BigUint::from(n0) * BigUint::from(n - n0);
        let better = match &best {
            None => true,
            Some((_, bn, bd)) => (&num * bd).cmp(&(bn * &den)) == Ordering::Greater,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    match best {
        Some((t, _, _)) => t,
        // Zero or one occupied bin.
        None => hist.iter().position(|&c| c > 0).unwrap_or(0) as u8,
    }
}

pub fn otsu_threshold(img: &GrayImage) -> u8 {
    otsu_from_histogram(&img.histogram())
}
