//! Gauss error function.
//!
//! For `|x| < 3` the positive-term series
//! `erf(x) = 2x/√π · e^{-x²} · Σ (2x²)ⁿ / (1·3·…·(2n+1))` is summed directly; it has
//! no cancellation. For `|x| ≥ 3` the complement is evaluated from its continued
//! fraction and subtracted from one. Beyond [`ERF_SATURATION`] the result is ±1.

use crate::error::{Error, Result};

/// |x| above which `erf(x)` rounds to ±1 in double precision.
pub const ERF_SATURATION: f64 = 6.0;

const SERIES_SWITCHOVER: f64 = 3.0;
const FRAC_2_SQRT_PI: f64 = core::f64::consts::FRAC_2_SQRT_PI;

/// Gauss error function, absolute error below 1e-12 on `|x| ≤ 6`.
pub fn erf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("erf", "argument must be finite"));
    }
    let ax = x.abs();
    let v = if ax >= ERF_SATURATION {
        1.0
    } else if ax < SERIES_SWITCHOVER {
        erf_series(ax)
    } else {
        1.0 - erfc_continued_fraction(ax)
    };
    Ok(if x < 0.0 { -v } else { v })
}

/// Complementary error function `1 - erf(x)` for finite `x`.
pub fn erfc(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("erfc", "argument must be finite"));
    }
    if x >= SERIES_SWITCHOVER {
        Ok(erfc_continued_fraction(x))
    } else {
        Ok(1.0 - erf(x)?)
    }
}

fn erf_series(x: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    while term > sum * 1e-17 {
        n += 1.0;
        term *= two_x2 / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * x * libm::exp(-x * x) * sum
}

/// `erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`, modified Lentz.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..200 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    0.5 * FRAC_2_SQRT_PI * libm::exp(-x * x) / f
}
