//! Kernel estimators of the long-run variance parameters and the trace-norm
//! confidence interval.
//!
//! Two families of empirical autocovariances appear:
//!
//! * `gamma_hat` centers the *squared* coordinate series
//!   (for beta^2(i,j), the trace theory), and
//! * `cap_gamma_hat` centers the coordinate *product* series
//!   (for sigma^2(i,j), the shrinkage-weight numerator).
//!
//! Both are smoothed the same way: hat(0) + 2 sum_{tau<=m} w_{m tau} hat(tau)
//! with a Bartlett, rectangular or Parzen window of bandwidth m. The d^2
//! sweeps are sharded across workers with a deterministic reduction order.

use crate::covest::{sample_cov, trace_star};
use crate::model::SeriesPanel;
use crate::stats::{norm_quantile, pairwise_sum};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Lag window family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelWindow {
    Bartlett,
    Rectangular,
    Parzen,
}

impl std::str::FromStr for KernelWindow {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bartlett" => Ok(KernelWindow::Bartlett),
            "rectangular" => Ok(KernelWindow::Rectangular),
            "parzen" => Ok(KernelWindow::Parzen),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel window '{other}'"
            ))),
        }
    }
}

/// Window plus lag-truncation bandwidth m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub window: KernelWindow,
    pub bandwidth: usize,
}

impl KernelSpec {
    pub fn bartlett(bandwidth: usize) -> Self {
        KernelSpec {
            window: KernelWindow::Bartlett,
            bandwidth,
        }
    }

    pub fn rectangular(bandwidth: usize) -> Self {
        KernelSpec {
            window: KernelWindow::Rectangular,
            bandwidth,
        }
    }

    pub fn parzen(bandwidth: usize) -> Self {
        KernelSpec {
            window: KernelWindow::Parzen,
            bandwidth,
        }
    }

    /// Lag weight w_{m tau}; zero beyond the bandwidth.
    pub fn weight(&self, tau: usize) -> f64 {
        let m = self.bandwidth;
        if tau > m {
            return 0.0;
        }
        match self.window {
            KernelWindow::Rectangular => 1.0,
            KernelWindow::Bartlett => 1.0 - tau as f64 / (m as f64 + 1.0),
            KernelWindow::Parzen => {
                let u = tau as f64 / (m as f64 + 1.0);
                if u <= 0.5 {
                    1.0 - 6.0 * u * u + 6.0 * u * u * u
                } else {
                    2.0 * (1.0 - u).powi(3)
                }
            }
        }
    }
}

/// Bandwidth m = ceil(n^{1/3}); satisfies m^2/n -> 0. Requires n >= 8.
pub fn default_bandwidth(n: usize) -> Result<usize> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!(
            "default bandwidth needs n >= 8, got {n}"
        )));
    }
    let r = (n as f64).powf(1.0 / 3.0);
    // snap to integer cube roots before taking the ceiling
    let m = if (r - r.round()).abs() < 1e-9 {
        r.round()
    } else {
        r.ceil()
    };
    Ok(m as usize)
}

fn check_lag(n: usize, tau: usize) -> Result<()> {
    if tau >= n {
        return Err(Error::LagOutOfRange { tau, n });
    }
    Ok(())
}

fn check_bandwidth(n: usize, m: usize) -> Result<()> {
    if m >= n {
        return Err(Error::BandwidthTooLarge { m, n });
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Centered empirical cross-covariance at lag tau >= 0 of two series,
/// each centered by its own mean, divided by n.
fn lagged_cov(x: &[f64], mx: f64, y: &[f64], my: f64, tau: usize) -> f64 {
    let n = x.len();
    let acc: f64 = (0..n - tau).map(|k| (x[k] - mx) * (y[k + tau] - my)).sum();
    acc / n as f64
}

/// gamma_hat^{(i,j)}(tau): lag-tau cross-covariance of the centered squared
/// series of coordinates i and j.
pub fn gamma_hat(panel: &SeriesPanel, i: usize, j: usize, tau: usize) -> Result<f64> {
    check_lag(panel.n(), tau)?;
    let si: Vec<f64> = panel.column(i)?.iter().map(|y| y * y).collect();
    let sj: Vec<f64> = panel.column(j)?.iter().map(|y| y * y).collect();
    let mi = mean(&si);
    let mj = mean(&sj);
    Ok(lagged_cov(&si, mi, &sj, mj, tau))
}

/// Kernel-smoothed beta_hat^2(i,j) = gamma_hat(0) + 2 sum w_{m tau} gamma_hat(tau).
pub fn beta_hat_sq(panel: &SeriesPanel, i: usize, j: usize, kernel: &KernelSpec) -> Result<f64> {
    check_bandwidth(panel.n(), kernel.bandwidth)?;
    let si: Vec<f64> = panel.column(i)?.iter().map(|y| y * y).collect();
    let sj: Vec<f64> = panel.column(j)?.iter().map(|y| y * y).collect();
    let mi = mean(&si);
    let mj = mean(&sj);
    let mut acc = lagged_cov(&si, mi, &sj, mj, 0);
    for tau in 1..=kernel.bandwidth {
        acc += 2.0 * kernel.weight(tau) * lagged_cov(&si, mi, &sj, mj, tau);
    }
    Ok(acc)
}

/// Gamma_hat^{(i,j)}(tau): lag-tau autocovariance of the product series
/// Y^(i) Y^(j), centered by kappa_hat(i,j) = mean of the products.
pub fn cap_gamma_hat(panel: &SeriesPanel, i: usize, j: usize, tau: usize) -> Result<f64> {
    check_lag(panel.n(), tau)?;
    let ci = panel.column(i)?;
    let cj = panel.column(j)?;
    let prod: Vec<f64> = ci.iter().zip(&cj).map(|(a, b)| a * b).collect();
    let kappa = mean(&prod);
    Ok(lagged_cov(&prod, kappa, &prod, kappa, tau))
}

/// Kernel-smoothed long-run variance sigma_hat^2(i,j) of the product series.
/// Symmetric in (i,j) exactly, the products being commutative.
pub fn sigma_hat_sq(panel: &SeriesPanel, i: usize, j: usize, kernel: &KernelSpec) -> Result<f64> {
    check_bandwidth(panel.n(), kernel.bandwidth)?;
    let ci = panel.column(i)?;
    let cj = panel.column(j)?;
    let prod: Vec<f64> = ci.iter().zip(&cj).map(|(a, b)| a * b).collect();
    let kappa = mean(&prod);
    let mut acc = lagged_cov(&prod, kappa, &prod, kappa, 0);
    for tau in 1..=kernel.bandwidth {
        acc += 2.0 * kernel.weight(tau) * lagged_cov(&prod, kappa, &prod, kappa, tau);
    }
    Ok(acc)
}

/// Centered squared columns: s[t][i] = Y_t^(i)^2 - mean_i, stored per column.
fn centered_squares(panel: &SeriesPanel) -> Result<Vec<Vec<f64>>> {
    (0..panel.dim())
        .map(|i| {
            let mut s: Vec<f64> = panel.column(i)?.iter().map(|y| y * y).collect();
            let m = mean(&s);
            for x in &mut s {
                *x -= m;
            }
            Ok(s)
        })
        .collect()
}

/// sigma_tr_hat^2 = d^{-2} sum_{i,j} beta_hat^2(i,j). The d^2 sweep shards
/// unordered pairs across workers; the reduction is a fixed-order pairwise
/// sum, so the result does not depend on the worker count.
pub fn sigma_tr_hat_sq(panel: &SeriesPanel, kernel: &KernelSpec) -> Result<f64> {
    check_bandwidth(panel.n(), kernel.bandwidth)?;
    let d = panel.dim();
    let n = panel.n();
    let s = centered_squares(panel)?;
    let m = kernel.bandwidth;
    let weights: Vec<f64> = (0..=m).map(|tau| kernel.weight(tau)).collect();

    // unordered pairs (i <= j); each contributes beta(i,j) + beta(j,i)
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let contributions: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let si = &s[i];
            let sj = &s[j];
            let g0: f64 = si.iter().zip(sj).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            // beta(i,j) uses gamma_ij(tau) = <si[0..], sj[tau..]>,
            // beta(j,i) the transposed lags.
            let mut bij = g0;
            let mut bji = g0;
            for tau in 1..=m {
                let w = weights[tau];
                let fwd: f64 = (0..n - tau).map(|k| si[k] * sj[k + tau]).sum::<f64>() / n as f64;
                let bwd: f64 = (0..n - tau).map(|k| sj[k] * si[k + tau]).sum::<f64>() / n as f64;
                bij += 2.0 * w * fwd;
                bji += 2.0 * w * bwd;
            }
            if i == j {
                bij
            } else {
                bij + bji
            }
        })
        .collect();
    Ok(pairwise_sum(&contributions) / (d * d) as f64)
}

/// (n d)^{-1} sum_{i,j} sigma_hat^2(i,j): the numerator of the estimated
/// optimal shrinkage weight. Sharded like [`sigma_tr_hat_sq`].
pub fn mean_sigma_hat_sq(panel: &SeriesPanel, kernel: &KernelSpec) -> Result<f64> {
    check_bandwidth(panel.n(), kernel.bandwidth)?;
    let d = panel.dim();
    let n = panel.n();
    let cols: Vec<Vec<f64>> = (0..d).map(|i| panel.column(i)).collect::<Result<_>>()?;
    let m = kernel.bandwidth;
    let weights: Vec<f64> = (0..=m).map(|tau| kernel.weight(tau)).collect();

    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let contributions: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let prod: Vec<f64> = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).collect();
            let kappa = mean(&prod);
            let centered: Vec<f64> = prod.iter().map(|p| p - kappa).collect();
            let mut acc: f64 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
            for tau in 1..=m {
                let lag: f64 = (0..n - tau)
                    .map(|k| centered[k] * centered[k + tau])
                    .sum::<f64>()
                    / n as f64;
                acc += 2.0 * weights[tau] * lag;
            }
            // the product series is symmetric in (i,j): off-diagonal pairs
            // count twice
            if i == j {
                acc
            } else {
                2.0 * acc
            }
        })
        .collect();
    Ok(pairwise_sum(&contributions) / (n * d) as f64)
}

/// Two-sided asymptotic confidence interval for the scaled trace norm.
#[derive(Debug, Clone, Serialize)]
pub struct TraceCi {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    /// sqrt of the variance estimate, floored at zero.
    pub sigma_hat: f64,
    /// Raw (possibly negative) kernel variance estimate, for diagnostics.
    pub sigma_sq_raw: f64,
    pub level: f64,
    pub n: usize,
    pub d: usize,
    pub bandwidth: usize,
}

/// CI: tr*(sample cov) +/- z_{(1+level)/2} sigma_tr_hat / sqrt(n). Negative
/// variance estimates are floored at zero (the raw value is reported).
pub fn trace_ci(panel: &SeriesPanel, kernel: &KernelSpec, level: f64) -> Result<TraceCi> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must be in (0,1), got {level}"
        )));
    }
    let center = trace_star(&sample_cov(panel)?.matrix)?;
    let raw = sigma_tr_hat_sq(panel, kernel)?;
    let sigma_hat = raw.max(0.0).sqrt();
    let z = norm_quantile(0.5 * (1.0 + level))?;
    let half = z * sigma_hat / (panel.n() as f64).sqrt();
    Ok(TraceCi {
        center,
        lo: center - half,
        hi: center + half,
        sigma_hat,
        sigma_sq_raw: raw,
        level,
        n: panel.n(),
        d: panel.dim(),
        bandwidth: kernel.bandwidth,
    })
}

/// Oracle CI around the same center but with a known sigma_tr.
pub fn trace_ci_with_sigma(
    panel: &SeriesPanel,
    sigma_tr: f64,
    level: f64,
) -> Result<(f64, f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must be in (0,1), got {level}"
        )));
    }
    let center = trace_star(&sample_cov(panel)?.matrix)?;
    let z = norm_quantile(0.5 * (1.0 + level))?;
    let half = z * sigma_tr / (panel.n() as f64).sqrt();
    Ok((center - half, center, center + half))
}
