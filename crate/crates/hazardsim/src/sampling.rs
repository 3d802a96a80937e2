//! Bounded continuous samplers.
//!
//! Truncated gaussians are drawn by rejection (resample until the value falls
//! inside the bounds), never by clamping: clamping would pile probability mass
//! onto the bounds and distort the distribution shape. The rejection loop is
//! guarded by an interval-mass check so it cannot run unbounded.

use crate::rng::RandomStream;
use thiserror::Error;

/// Minimum probability mass the truncation interval must carry before
/// rejection sampling is attempted.
pub const MIN_INTERVAL_MASS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("sampling interval is empty: lo {lo} must be strictly below hi {hi}")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("standard deviation must be positive, got {sd}")]
    NonPositiveSd { sd: f64 },
    #[error(
        "interval [{lo}, {hi}] carries mass {mass:.3e} under N({mean}, {sd}^2), \
         below the {MIN_INTERVAL_MASS:.0e} floor for rejection sampling"
    )]
    VanishingMass {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
        mass: f64,
    },
}

/// Uniform draw in `[lo, hi)`.
pub fn draw_uniform(stream: &mut RandomStream, lo: f64, hi: f64) -> Result<f64, SampleError> {
    if !(lo < hi) {
        return Err(SampleError::EmptyInterval { lo, hi });
    }
    Ok(uniform_in(stream, lo, hi))
}

/// Gaussian draw restricted to `(lo, hi)` by rejection.
pub fn draw_truncated_gaussian(
    stream: &mut RandomStream,
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, SampleError> {
    if !(sd > 0.0) {
        return Err(SampleError::NonPositiveSd { sd });
    }
    if !(lo < hi) {
        return Err(SampleError::EmptyInterval { lo, hi });
    }
    let mass = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
    if !(mass >= MIN_INTERVAL_MASS) {
        return Err(SampleError::VanishingMass {
            mean,
            sd,
            lo,
            hi,
            mass,
        });
    }
    Ok(truncated_gaussian_in(stream, mean, sd, lo, hi))
}

/// Pre-validated uniform in `[lo, hi)`.
#[inline]
pub(crate) fn uniform_in(stream: &mut RandomStream, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    lo + stream.next_unit() * (hi - lo)
}

/// Pre-validated rejection loop; caller has checked the interval mass.
#[inline]
pub(crate) fn truncated_gaussian_in(
    stream: &mut RandomStream,
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    loop {
        let x = mean + sd * standard_normal(stream);
        if x > lo && x < hi {
            return x;
        }
    }
}

/// One standard-normal draw via Box-Muller. Consumes exactly two uniforms, so
/// independent reimplementations can replay a stream draw-for-draw. Uses libm
/// for the transcendentals to keep values bit-identical across platforms.
#[inline]
pub fn standard_normal(stream: &mut RandomStream) -> f64 {
    let u1 = stream.next_unit_open();
    let u2 = stream.next_unit();
    (-2.0 * libm::log(u1)).sqrt() * libm::cos(2.0 * std::f64::consts::PI * u2)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}
