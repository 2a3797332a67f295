//! Scalar standard normal distribution.
//!
//! Both tails go through `libm::erfc` (the FreeBSD/Sun rational
//! approximations), which keeps relative accuracy deep into the tails rather
//! than computing `1 - Phi` by cancellation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// `Phi(x)`.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).clamp(0.0, 1.0)
}

/// Upper tail `1 - Phi(x)`, computed without cancellation.
#[inline]
pub fn std_normal_sf(x: f64) -> f64 {
    (0.5 * libm::erfc(x * FRAC_1_SQRT_2)).clamp(0.0, 1.0)
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `P(lo < eps < hi)` for `eps ~ N(0, 1)`, evaluated on whichever tail keeps
/// the subtraction well conditioned.
#[inline]
pub fn normal_mass(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        std_normal_sf(lo) - std_normal_sf(hi)
    } else if hi <= 0.0 {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    } else {
        1.0 - std_normal_cdf(lo) - std_normal_sf(hi)
    }
}

/// Upper bound `exp(-t^2/2) / t` on `P(eps > t)`, valid for `t > 0`.
pub fn gaussian_tail_bound(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(
            "t",
            format!("tail bound needs t > 0, got {t}"),
        ));
    }
    Ok((-0.5 * t * t).exp() / t)
}
