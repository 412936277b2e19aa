//! Sample covariance matrices, partial-sum paths, bilinear-form statistics,
//! scaled matrix norms and the trace process.
//!
//! The central objects are the centered forms
//!
//! ```text
//!   D_nk(v, w)  = v' (S_nk - k Sigma) w         (S_nk = sum_{i<=k} Y_i Y_i')
//!   D_n(t;v,w)  = n^{-1/2} D_{n, floor(nt)}(v, w)
//! ```
//!
//! evaluated via prefix sums of the centered products
//! `xi_i = (v'Y_i)(w'Y_i) - v' Sigma w`.

use crate::mat::{jacobi_eigen, Mat};
use crate::model::SeriesPanel;
use crate::weights::{WeightPairSet, WeightVector};
use crate::{util, Error, Result};
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// Maximum number of grid points kept by [`default_grid`].
pub const MAX_GRID_POINTS: usize = 2048;

/// A sample (or partial-sum) covariance matrix.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub matrix: Mat,
    /// Number of observations entering the sum.
    pub n_used: usize,
    /// True when divided by n.
    pub normalized: bool,
}

/// Scaling convention of a form path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathScaling {
    /// sqrt(n): a single bilinear form.
    Single,
    /// sqrt(n L): L jointly scaled forms.
    Multi,
}

/// Step values of one or more scaled form processes on a time grid.
#[derive(Debug, Clone)]
pub struct FormPath {
    pub grid: Vec<f64>,
    /// `values[g][j]`: form j at grid point g.
    pub values: Vec<Vec<f64>>,
    pub scaling: PathScaling,
}

impl FormPath {
    pub fn num_forms(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    /// Write as CSV `t,value_1,...,value_L`.
    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.num_forms()).map(|k| format!("value_{k}")))
            .collect();
        writeln!(buf, "{}", header.join(","))?;
        for (t, row) in self.grid.iter().zip(&self.values) {
            let mut line = format!("{t:.16e}");
            for v in row {
                line.push(',');
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(buf, "{line}")?;
        }
        util::write_atomic(path.as_ref(), &buf)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("time grid"));
    }
    for pair in grid.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidParameter(
                "time grid must be strictly increasing".into(),
            ));
        }
    }
    if grid[0] < 0.0 || *grid.last().unwrap() > 1.0 {
        return Err(Error::InvalidParameter(
            "time grid must lie in [0,1]".into(),
        ));
    }
    Ok(())
}

/// The canonical grid {k/n : k = 0..n}, downsampled to at most
/// [`MAX_GRID_POINTS`] points (always keeping 0 and 1).
pub fn default_grid(n: usize) -> Vec<f64> {
    let stride = n.div_ceil(MAX_GRID_POINTS).max(1);
    let mut grid: Vec<f64> = (0..=n)
        .step_by(stride)
        .map(|k| k as f64 / n as f64)
        .collect();
    if *grid.last().unwrap() < 1.0 {
        grid.push(1.0);
    }
    grid
}

/// Uncentered sample covariance (1/n) sum_i Y_i Y_i'. The model is mean
/// zero, so no mean is subtracted.
pub fn sample_cov(panel: &SeriesPanel) -> Result<CovarianceEstimate> {
    let sums = accumulate_outer(panel, panel.n());
    Ok(CovarianceEstimate {
        matrix: sums.scale(1.0 / panel.n() as f64),
        n_used: panel.n(),
        normalized: true,
    })
}

/// Unnormalized partial sum sum_{i<=k} Y_i Y_i'; k = 0 gives the zero matrix.
pub fn partial_sum_cov(panel: &SeriesPanel, k: usize) -> Result<CovarianceEstimate> {
    if k > panel.n() {
        return Err(Error::IndexOutOfRange {
            index: k,
            dim: panel.n(),
        });
    }
    Ok(CovarianceEstimate {
        matrix: accumulate_outer(panel, k),
        n_used: k,
        normalized: false,
    })
}

fn accumulate_outer(panel: &SeriesPanel, k: usize) -> Mat {
    let d = panel.dim();
    let mut acc = Mat::zeros(d, d);
    for i in 0..k {
        let y = panel.observation(i);
        for a in 0..d {
            let ya = y[a];
            if ya == 0.0 {
                continue;
            }
            for b in a..d {
                let v = acc.get(a, b) + ya * y[b];
                acc.set(a, b, v);
            }
        }
    }
    for a in 0..d {
        for b in (a + 1)..d {
            acc.set(b, a, acc.get(a, b));
        }
    }
    acc
}

/// Centered products xi_i = (v'Y_i)(w'Y_i) - v' Sigma w, i = 1..n, with the
/// population covariance supplied by the caller. Partial sums of these
/// reproduce D_nk.
pub fn xi_terms(
    panel: &SeriesPanel,
    sigma: &Mat,
    v: &WeightVector,
    w: &WeightVector,
) -> Result<Vec<f64>> {
    let d = panel.dim();
    if sigma.rows() != d || sigma.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: sigma.rows(),
        });
    }
    let center = sigma.quad_form(v.coords(), w.coords())?;
    let a = panel.project(v)?;
    let b = panel.project(w)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x * y - center).collect())
}

/// Single-form path D_n(t) = n^{-1/2} v'(S_{n,floor(nt)} - floor(nt) Sigma) w.
pub fn d_path(
    panel: &SeriesPanel,
    sigma: &Mat,
    v: &WeightVector,
    w: &WeightVector,
    grid: &[f64],
) -> Result<FormPath> {
    validate_grid(grid)?;
    let xi = xi_terms(panel, sigma, v, w)?;
    let prefix = prefix_sums(&xi);
    let n = panel.n();
    let scale = 1.0 / (n as f64).sqrt();
    let values = grid
        .iter()
        .map(|&t| {
            let k = (n as f64 * t).floor() as usize;
            vec![scale * prefix[k.min(n)]]
        })
        .collect();
    Ok(FormPath {
        grid: grid.to_vec(),
        values,
        scaling: PathScaling::Single,
    })
}

/// L jointly scaled form paths, coordinate j carrying (nL)^{-1/2} D(v_j,w_j).
/// The forms are evaluated in parallel with deterministic output order.
pub fn multi_d_path(
    panel: &SeriesPanel,
    sigma: &Mat,
    pairs: &WeightPairSet,
    grid: &[f64],
) -> Result<FormPath> {
    validate_grid(grid)?;
    let n = panel.n();
    let l = pairs.len();
    let scale = 1.0 / ((n * l) as f64).sqrt();
    let per_form: Vec<Vec<f64>> = pairs
        .pairs()
        .par_iter()
        .map(|(v, w)| {
            let xi = xi_terms(panel, sigma, v, w)?;
            let prefix = prefix_sums(&xi);
            Ok(grid
                .iter()
                .map(|&t| {
                    let k = (n as f64 * t).floor() as usize;
                    scale * prefix[k.min(n)]
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<_>>()?;
    let values = (0..grid.len())
        .map(|g| per_form.iter().map(|f| f[g]).collect())
        .collect();
    Ok(FormPath {
        grid: grid.to_vec(),
        values,
        scaling: PathScaling::Multi,
    })
}

fn prefix_sums(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for x in xs {
        acc += x;
        out.push(acc);
    }
    out
}

// ---------------------------------------------------------------------------
// Scaled norms
// ---------------------------------------------------------------------------

/// Scaled trace operator tr*(A) = d^{-1} sum lambda_i(A). The eigenvalue sum
/// equals the diagonal sum for any square matrix, so this is d^{-1} tr(A).
pub fn trace_star(a: &Mat) -> Result<f64> {
    let d = a.require_square()?;
    Ok(a.trace() / d as f64)
}

/// Trace norm sum |lambda_i| via symmetric eigendecomposition.
pub fn trace_norm(a: &Mat) -> Result<f64> {
    let eig = jacobi_eigen(a)?;
    Ok(eig.values.iter().map(|l| l.abs()).sum())
}

/// Scaled Frobenius norm squared: d^{-1} sum a_ij^2.
pub fn frobenius_star_sq(a: &Mat) -> Result<f64> {
    let d = a.require_square()?;
    let f = a.frobenius();
    Ok(f * f / d as f64)
}

/// Scaled Frobenius norm.
pub fn frobenius_star(a: &Mat) -> Result<f64> {
    Ok(frobenius_star_sq(a)?.sqrt())
}

/// Schatten-p norm via singular values (p >= 1). Symmetric input uses
/// |eigenvalues| directly; general square input goes through A'A.
pub fn schatten(a: &Mat, p: f64) -> Result<f64> {
    a.require_square()?;
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "schatten norm requires p >= 1, got {p}"
        )));
    }
    let singulars: Vec<f64> = if a.is_symmetric(1e-12) {
        jacobi_eigen(a)?.values.iter().map(|l| l.abs()).collect()
    } else {
        let ata = a.transpose().matmul(a)?;
        jacobi_eigen(&ata)?
            .values
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect()
    };
    Ok(singulars
        .iter()
        .map(|s| s.powf(p))
        .sum::<f64>()
        .powf(1.0 / p))
}

/// The bilinear pseudometric |v'(A - B)w|.
pub fn pseudometric(a: &Mat, b: &Mat, v: &WeightVector, w: &WeightVector) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(diff.quad_form(v.coords(), w.coords())?.abs())
}

/// Scaled trace norm process
/// T_n(t) = sqrt(n) (tr*(S_n(t)) - tr*(Sigma_n(t))) with
/// Sigma_n(t) = (floor(nt)/n) Sigma under stationarity.
pub fn trace_process(panel: &SeriesPanel, sigma: &Mat, grid: &[f64]) -> Result<FormPath> {
    validate_grid(grid)?;
    let d = panel.dim();
    if sigma.rows() != d || sigma.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: sigma.rows(),
        });
    }
    let n = panel.n();
    let tau = trace_star(sigma)?;
    // prefix sums of squared row norms
    let sq_norms: Vec<f64> = (0..n)
        .map(|i| panel.observation(i).iter().map(|y| y * y).sum())
        .collect();
    let prefix = prefix_sums(&sq_norms);
    let scale = 1.0 / (n as f64).sqrt();
    let values = grid
        .iter()
        .map(|&t| {
            let k = (n as f64 * t).floor() as usize;
            let k = k.min(n);
            vec![scale * (prefix[k] / d as f64 - k as f64 * tau)]
        })
        .collect();
    Ok(FormPath {
        grid: grid.to_vec(),
        values,
        scaling: PathScaling::Single,
    })
}
