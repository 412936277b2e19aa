//! Scalar statistics helpers: standard normal cdf/quantile (self-contained,
//! double precision), pairwise-tree summation for deterministic aggregation,
//! and simple moment summaries.

use crate::{Error, Result};

/// erf on x >= 0 via the cancellation-free confluent series
/// erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_n (2x^2)^n / (1*3*...*(2n+1)).
fn erf_series(x: f64) -> f64 {
    let xx = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut odd = 1.0;
    for _ in 0..200 {
        odd += 2.0;
        term *= 2.0 * xx / odd;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * x * (-xx).exp() * sum
}

/// erfc on x >= 1.5 via the Laplace continued fraction (modified Lentz).
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x.max(tiny);
    let mut c = f;
    let mut d = 0.0;
    let mut numer = 0.5;
    for _ in 0..300 {
        // erfc(x)*sqrt(pi)*e^{x^2} = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        d = x + numer * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + numer / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
        numer += 0.5;
    }
    (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}

fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x < 1.5 {
        1.0 - erf_series(x)
    } else if x > 27.0 {
        0.0
    } else {
        erfc_cf(x)
    }
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile. Acklam's rational initializer polished with
/// Newton steps against [`norm_cdf`]; accurate to ~1e-14 in the central
/// range used here.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantile level must be in (0,1), got {p}"
        )));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    for _ in 0..3 {
        let f = norm_cdf(x) - p;
        let df = norm_pdf(x);
        if df <= 0.0 {
            break;
        }
        x -= f / df;
    }
    Ok(x)
}

/// Sum by a pairwise tree: deterministic and more accurate than a left fold.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let devs: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&devs) / (n - 1) as f64
}

/// Monte Carlo standard error of the sample mean.
pub fn mc_standard_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Ordinary least squares slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("need at least two points for a slope"));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate x grid".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_anchors() {
        assert_relative_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-16);
        // Known double-precision anchors.
        assert_relative_eq!(norm_cdf(1.0), 0.841344746068543, epsilon = 1e-13);
        assert_relative_eq!(norm_cdf(-1.0), 1.0 - 0.841344746068543, epsilon = 1e-13);
        assert_relative_eq!(norm_cdf(1.959963984540054), 0.975, epsilon = 1e-13);
        assert_relative_eq!(norm_cdf(3.0), 0.9986501019683699, epsilon = 1e-13);
        assert!(norm_cdf(-40.0) >= 0.0);
        assert_relative_eq!(norm_cdf(40.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cdf_symmetry() {
        for i in 0..200 {
            let x = -6.0 + 0.06 * i as f64;
            assert_relative_eq!(norm_cdf(x) + norm_cdf(-x), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn quantile_anchors() {
        assert_relative_eq!(norm_quantile(0.5).unwrap(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(
            norm_quantile(0.975).unwrap(),
            1.959963984540054,
            epsilon = 1e-11
        );
        assert_relative_eq!(
            norm_quantile(0.95).unwrap(),
            1.6448536269514722,
            epsilon = 1e-11
        );
        assert!(norm_quantile(0.0).is_err());
        assert!(norm_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_cdf_roundtrip() {
        for i in 1..999 {
            let p = i as f64 / 1000.0;
            let x = norm_quantile(p).unwrap();
            assert_relative_eq!(norm_cdf(x), p, epsilon = 1e-12);
        }
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1023).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert_relative_eq!(pairwise_sum(&xs), naive, epsilon = 1e-9);
    }

    #[test]
    fn variance_of_known_sample() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(mean(&xs), 2.5, epsilon = 1e-15);
        assert_relative_eq!(sample_variance(&xs), 5.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn slope_of_exact_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert_relative_eq!(ols_slope(&x, &y).unwrap(), 2.0, epsilon = 1e-14);
    }
}
