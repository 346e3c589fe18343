//! Scalar special functions not covered by `statrs`.

use statrs::function::erf::erfc;
use std::f64::consts::FRAC_1_SQRT_2;

pub use statrs::function::gamma::{digamma, ln_gamma};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Trigamma function ψ₁(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv
        * (1.0
            + inv
                * (0.5
                    + inv
                        * (1.0 / 6.0
                            + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0))))));
    acc + tail
}

/// Standard normal log-density.
#[inline]
pub fn ln_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Continued-fraction remainder c(u) with Φ(−u)/φ(u) = 1/(u + c(u)), for u ≥ 5.
fn mills_remainder(u: f64) -> f64 {
    let mut frac = 0.0;
    for k in (1..=60).rev() {
        frac = k as f64 / (u + frac);
    }
    frac
}

/// Mills ratio Φ(−u)/φ(u).
fn mills_ratio(u: f64) -> f64 {
    1.0 / (u + mills_remainder(u))
}

/// log Φ(z), accurate deep into the lower tail.
pub fn ln_norm_cdf(z: f64) -> f64 {
    if z > -5.0 {
        norm_cdf(z).ln()
    } else {
        ln_norm_pdf(z) + mills_ratio(-z).ln()
    }
}

/// log(aΦ(a) + φ(a)), the scaled first partial moment of a standard normal.
pub fn ln_partial_moment(a: f64) -> f64 {
    if a > -5.0 {
        (a * norm_cdf(a) + (ln_norm_pdf(a)).exp()).ln()
    } else {
        // 1 - u·M(u) = c(u)·M(u)
        let u = -a;
        let c = mills_remainder(u);
        ln_norm_pdf(a) + c.ln() - (u + c).ln()
    }
}

/// log(2π)/2 re-exported for density code.
pub const HALF_LN_2PI: f64 = LN_SQRT_2PI;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trigamma_known_values() {
        // ψ₁(1) = π²/6, ψ₁(1/2) = π²/2
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn trigamma_is_derivative_of_digamma() {
        for &x in &[0.3, 1.7, 4.0, 25.0] {
            let h = 1e-5;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((fd - trigamma(x)).abs() < 1e-6 * (1.0 + fd.abs()), "x={x}");
        }
    }

    #[test]
    fn ln_norm_cdf_matches_direct_in_overlap() {
        for &z in &[-4.0, -6.0, -9.0, -20.0] {
            let direct = norm_cdf(z).ln();
            let mills = ln_norm_pdf(z) + mills_ratio(-z).ln();
            assert!((direct - mills).abs() < 1e-9 * direct.abs(), "z={z}");
            assert!((ln_norm_cdf(z) - direct).abs() < 1e-9 * direct.abs());
        }
        assert!(ln_norm_cdf(-40.0).is_finite());
    }

    #[test]
    fn partial_moment_branches_agree() {
        for &a in &[-5.5, -7.0, -10.0] {
            let direct = (a * norm_cdf(a) + ln_norm_pdf(a).exp()).ln();
            assert!((ln_partial_moment(a) - direct).abs() < 1e-6, "a={a}");
        }
        assert!(ln_partial_moment(-200.0).is_finite());
    }
}
