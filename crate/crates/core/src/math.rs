//! Float functions that `core` does not provide.

pub(crate) use libm::{cos, erfc, exp, expm1, fabs, log, log1p, pow, sin, sqrt};

/// `x^n` for integer `n`.
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    pow(x, n as f64)
}

pub(crate) const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Probabilists' Hermite polynomial `He_k(t)`.
pub(crate) fn hermite_he(k: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = t * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Standard normal upper tail `P(Z > t)`.
pub(crate) fn normal_sf(t: f64) -> f64 {
    0.5 * erfc(t / core::f64::consts::SQRT_2)
}

/// `P(a < Z < b)` for a standard normal, computed on the tail that avoids
/// cancellation.
pub(crate) fn normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_sf(-b) - normal_sf(-a)
    } else {
        1.0 - normal_sf(-a) - normal_sf(b)
    }
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = digits.max(1) as usize;
    alloc::format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}
