//! Special functions shared by the simulator and the fitters.

use statrs::distribution::{DiscreteCDF, Poisson};
use statrs::function::erf::erfc;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        (x * x).exp() * erfc(x)
    } else {
        // asymptotic expansion; relative error below 1e-12 for x >= 25
        let x2 = x * x;
        let inv = 1.0 / (2.0 * x2);
        (1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv) / (x * SQRT_PI)
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Density of `Normal(mu, sigma) + Exponential(tau)`.
pub fn emg_pdf(t: f64, mu: f64, sigma: f64, tau: f64) -> f64 {
    let lambda = 1.0 / tau;
    let u = (t - mu) / sigma;
    let w = (lambda * sigma - u) / std::f64::consts::SQRT_2;
    if w >= 0.0 {
        0.5 * lambda * (-0.5 * u * u).exp() * erfcx(w)
    } else {
        0.5 * lambda * (0.5 * (lambda * sigma).powi(2) - lambda * sigma * u).exp() * erfc(w)
    }
}

/// Cumulative distribution of `Normal(mu, sigma) + Exponential(tau)`.
pub fn emg_cdf(t: f64, mu: f64, sigma: f64, tau: f64) -> f64 {
    let lambda = 1.0 / tau;
    let u = (t - mu) / sigma;
    let w = (lambda * sigma - u) / std::f64::consts::SQRT_2;
    let tail = if w >= 0.0 {
        0.5 * (-0.5 * u * u).exp() * erfcx(w)
    } else {
        0.5 * (0.5 * (lambda * sigma).powi(2) - lambda * sigma * u).exp() * erfc(w)
    };
    (normal_cdf(u) - tail).clamp(0.0, 1.0)
}

/// `P(N < k)` for `N ~ Poisson(mean)`.
pub fn poisson_below(k: u64, mean: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if mean <= 0.0 {
        return 1.0;
    }
    Poisson::new(mean).map(|d| d.cdf(k - 1)).unwrap_or(1.0)
}

/// `P(N >= k)` for `N ~ Poisson(mean)`.
pub fn poisson_at_least(k: u64, mean: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sf(k - 1)).unwrap_or(0.0)
}
