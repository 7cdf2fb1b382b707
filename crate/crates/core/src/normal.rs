//! Standard normal distribution helpers with tail-stable logarithms.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this the log-CDF switches to its asymptotic expansion.
const TAIL_CUTOFF: f64 = -30.0;

#[inline]
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

#[inline]
pub fn log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 - 1/z^2 + 3/z^4 - 15/z^6 + ..., the Mills-ratio series: Phi(z) ~ phi(z)/(-z) * series.
#[inline]
fn mills_series(z: f64) -> f64 {
    let inv = 1.0 / (z * z);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=7 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
    }
    sum
}

/// ln Phi(z), accurate in both tails.
#[inline]
pub fn log_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-0.5 * erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else if z >= TAIL_CUTOFF {
        (0.5 * erfc(-z * FRAC_1_SQRT_2)).ln()
    } else if z.is_infinite() {
        f64::NEG_INFINITY
    } else {
        log_pdf(z) - (-z).ln() + mills_series(z).ln()
    }
}

/// phi(z) / Phi(z), the inverse Mills ratio. Finite for every finite z.
#[inline]
pub fn inverse_mills(z: f64) -> f64 {
    if z >= TAIL_CUTOFF {
        (log_pdf(z) - log_cdf(z)).exp()
    } else {
        -z / mills_series(z)
    }
}

/// `(ln Phi(z), phi(z) / Phi(z))` sharing a single CDF evaluation.
#[inline]
pub fn log_cdf_and_mills(z: f64) -> (f64, f64) {
    let lc = log_cdf(z);
    let mills = if z >= TAIL_CUTOFF {
        (log_pdf(z) - lc).exp()
    } else {
        -z / mills_series(z)
    };
    (lc, mills)
}

/// Inverse CDF. Returns -inf / +inf at 0 / 1.
pub fn quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    -SQRT_2 * erfc_inv(2.0 * p)
}
