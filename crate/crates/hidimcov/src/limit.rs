//! Simulation of the Gaussian objects arising as large-sample limits of
//! the bilinear-form statistics:
//! the joint (d+1)-dimensional Brownian motion whose covariances all carry
//! the (d+1)^{-1} scaling, the two-block construction (scalar block with
//! variance alpha^2, d-block with covariances d^{-1} beta^2(i,j), cross
//! covariances d^{-1/2} beta^2(v,w,e_j,e_j)), the shrinkage and trace
//! functionals of the endpoint, and the approximating martingale used for
//! gap diagnostics.

use crate::asymvar::{alpha_sq, beta_matrix, beta_sq, f_table};
use crate::mat::{cholesky_with_jitter, Mat};
use crate::model::{CoefficientScheme, InnovationSpec};
use crate::weights::{WeightPairSet, WeightVector};
use crate::{util, Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which Brownian construction the model carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// One (d+1)-dimensional Brownian motion, all covariances / (d+1).
    Joint,
    /// Scalar block with Var = alpha^2 plus d-block with Cov = beta^2/d and
    /// cross covariances beta^2(v,w,e_j,e_j)/sqrt(d).
    TwoBlock,
}

/// Assembled limit covariance with its factor, ready for path sampling.
/// Coordinate 0 is the scalar (nonparametric) block; coordinates 1..=d are
/// the unit-pair block.
#[derive(Debug, Clone)]
pub struct LimitModel {
    pub construction: Construction,
    pub alpha_sq: f64,
    /// d x d matrix of beta^2(i,j) (unscaled).
    pub beta: Mat,
    /// beta^2(v, w, e_j, e_j), j = 0..d-1 (unscaled).
    pub cross: Vec<f64>,
    pub vw_inner: f64,
    pub d: usize,
    /// Assembled (d+1) x (d+1) covariance of the endpoint at t = 1.
    pub cov: Mat,
    /// Lower-triangular factor with factor * factor' = cov (+ jitter).
    pub factor: Mat,
    /// Diagonal jitter that was needed, as an absolute value.
    pub jitter: f64,
}

/// Build the limit model for a projection pair under either construction.
pub fn build_limit_model(
    scheme: &CoefficientScheme,
    innov: &InnovationSpec,
    v: &WeightVector,
    w: &WeightVector,
    construction: Construction,
) -> Result<LimitModel> {
    let d = scheme.dim();
    let l_max = scheme.truncation();
    let a2 = alpha_sq(scheme, innov, v, w, l_max)?;
    let kernel = beta_matrix(scheme, innov, &WeightPairSet::unit_pairs(d)?, l_max)?;
    let cross: Vec<f64> = (0..d)
        .map(|j| {
            let ej = WeightVector::unit(j, d)?;
            beta_sq(scheme, innov, v, w, &ej, &ej, l_max)
        })
        .collect::<Result<_>>()?;
    let vw_inner = v.inner(w)?;

    let dim = d + 1;
    let mut cov = Mat::zeros(dim, dim);
    match construction {
        Construction::Joint => {
            let s = 1.0 / (d as f64 + 1.0);
            cov.set(0, 0, a2 * s);
            for j in 0..d {
                cov.set(0, j + 1, cross[j] * s);
                cov.set(j + 1, 0, cross[j] * s);
                for k in 0..d {
                    cov.set(j + 1, k + 1, kernel.beta.get(j, k) * s);
                }
            }
        }
        Construction::TwoBlock => {
            let sd = d as f64;
            cov.set(0, 0, a2);
            for j in 0..d {
                let c = cross[j] / sd.sqrt();
                cov.set(0, j + 1, c);
                cov.set(j + 1, 0, c);
                for k in 0..d {
                    cov.set(j + 1, k + 1, kernel.beta.get(j, k) / sd);
                }
            }
        }
    }
    let (factor, jitter) = cholesky_with_jitter(&cov)?;
    Ok(LimitModel {
        construction,
        alpha_sq: a2,
        beta: kernel.beta,
        cross,
        vw_inner,
        d,
        cov,
        factor,
        jitter,
    })
}

impl LimitModel {
    /// Closed-form Var(B_n(W)) for this model: the quadratic form of the
    /// assembled covariance with the functional's loading vector.
    pub fn functional_variance(&self, w: f64) -> Result<f64> {
        let q = self.functional_loading(w)?;
        self.cov.quad_form(&q, &q)
    }

    /// Loading vector of the shrinkage functional:
    /// (1-W) on coordinate 0, W (v'w) d^{-1/2} on each of 1..=d.
    fn functional_loading(&self, w: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "shrinkage weight must lie in [0,1], got {w}"
            )));
        }
        let mut q = vec![w * self.vw_inner / (self.d as f64).sqrt(); self.d + 1];
        q[0] = 1.0 - w;
        Ok(q)
    }

    /// The three O(1) terms of the two-block variance decomposition:
    /// nonparametric (1-W)^2 alpha^2, target W^2 (v'w)^2 d^{-2} sum beta,
    /// and the cross term. Errors for the joint construction, whose
    /// (d+1)-scaling distorts the split.
    pub fn variance_decomposition(&self, w: f64) -> Result<(f64, f64, f64)> {
        if self.construction != Construction::TwoBlock {
            return Err(Error::InvalidParameter(
                "variance decomposition is defined for the two_block construction".into(),
            ));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "shrinkage weight must lie in [0,1], got {w}"
            )));
        }
        let d = self.d as f64;
        let sum_beta: f64 = (0..self.d)
            .flat_map(|i| (0..self.d).map(move |j| (i, j)))
            .map(|(i, j)| self.beta.get(i, j))
            .sum();
        let sum_cross: f64 = self.cross.iter().sum();
        let nonparam = (1.0 - w) * (1.0 - w) * self.alpha_sq;
        let target = w * w * self.vw_inner * self.vw_inner * sum_beta / (d * d);
        let cross = 2.0 * (1.0 - w) * w * self.vw_inner * sum_cross / d;
        Ok((nonparam, target, cross))
    }

    // --- persistence -------------------------------------------------------

    /// Save as `<prefix>.json` (metadata) + `<prefix>.cov.csv` (covariance).
    pub fn save<P: AsRef<Path>>(&self, prefix: P) -> Result<()> {
        let prefix = prefix.as_ref();
        let cov_path = prefix.with_extension("cov.csv");
        crate::mat::save_matrix_csv(&cov_path, &self.cov)?;
        let meta = LimitModelMeta {
            construction: self.construction,
            alpha_sq: self.alpha_sq,
            cross: self.cross.clone(),
            vw_inner: self.vw_inner,
            d: self.d,
            jitter: self.jitter,
            beta: (0..self.beta.rows())
                .map(|i| self.beta.row(i).to_vec())
                .collect(),
        };
        let text = serde_json::to_string_pretty(&meta)?;
        util::write_atomic(&prefix.with_extension("json"), text.as_bytes())
    }

    pub fn load<P: AsRef<Path>>(prefix: P) -> Result<Self> {
        let prefix = prefix.as_ref();
        let meta: LimitModelMeta =
            serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json"))?)?;
        let cov = crate::mat::read_matrix_csv(prefix.with_extension("cov.csv"))?;
        let (factor, jitter) = cholesky_with_jitter(&cov)?;
        Ok(LimitModel {
            construction: meta.construction,
            alpha_sq: meta.alpha_sq,
            beta: Mat::from_rows(&meta.beta)?,
            cross: meta.cross,
            vw_inner: meta.vw_inner,
            d: meta.d,
            cov,
            factor,
            jitter,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LimitModelMeta {
    construction: Construction,
    alpha_sq: f64,
    beta: Vec<Vec<f64>>,
    cross: Vec<f64>,
    vw_inner: f64,
    d: usize,
    jitter: f64,
}

/// An ensemble of Brownian paths sampled from a limit model.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub t_grid: Vec<f64>,
    /// Coordinates per path point (d + 1).
    pub dim: usize,
    pub reps: usize,
    /// Layout: `data[rep][grid_idx * dim + coord]`.
    data: Vec<Vec<f64>>,
}

impl PathEnsemble {
    pub fn value(&self, rep: usize, grid_idx: usize, coord: usize) -> f64 {
        self.data[rep][grid_idx * self.dim + coord]
    }

    /// The path values at one grid point for one replication.
    pub fn at(&self, rep: usize, grid_idx: usize) -> &[f64] {
        &self.data[rep][grid_idx * self.dim..(grid_idx + 1) * self.dim]
    }

    /// Endpoint (last grid point) of one replication.
    pub fn endpoint(&self, rep: usize) -> &[f64] {
        self.at(rep, self.t_grid.len() - 1)
    }
}

/// Sample Brownian paths: increments X(t_{k+1}) - X(t_k) ~ N(0, dt * C),
/// independent across intervals, X(0) = 0. Replication r derives its
/// generator from (seed, r), so results are reproducible for any thread
/// count.
pub fn sample_paths(
    model: &LimitModel,
    t_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if t_grid.is_empty() {
        return Err(Error::EmptyInput("time grid"));
    }
    let mut prev = -f64::INFINITY;
    for &t in t_grid {
        if !(t > prev) || !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(
                "time grid must be strictly increasing within [0,1]".into(),
            ));
        }
        prev = t;
    }
    let dim = model.d + 1;
    let factor = &model.factor;
    let data: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut path = vec![0.0; t_grid.len() * dim];
            let mut state = vec![0.0; dim];
            let mut last_t = 0.0;
            for (g, &t) in t_grid.iter().enumerate() {
                let dt = t - last_t;
                if dt > 0.0 {
                    let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let sdt = dt.sqrt();
                    for i in 0..dim {
                        let mut inc = 0.0;
                        for k in 0..=i {
                            inc += factor.get(i, k) * z[k];
                        }
                        state[i] += sdt * inc;
                    }
                }
                path[g * dim..(g + 1) * dim].copy_from_slice(&state);
                last_t = t;
            }
            path
        })
        .collect();
    Ok(PathEnsemble {
        t_grid: t_grid.to_vec(),
        dim,
        reps,
        data,
    })
}

/// The shrinkage functional B(W) = (1-W) X_0 + W (v'w) d^{-1/2} sum_j X_j
/// evaluated on a sampled point (scalar coordinate first).
pub fn shrink_functional(model: &LimitModel, sample: &[f64], w: f64) -> Result<f64> {
    if sample.len() != model.d + 1 {
        return Err(Error::DimensionMismatch {
            expected: model.d + 1,
            actual: sample.len(),
        });
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!(
            "shrinkage weight must lie in [0,1], got {w}"
        )));
    }
    let tail: f64 = sample[1..].iter().sum();
    Ok((1.0 - w) * sample[0] + w * model.vw_inner * tail / (model.d as f64).sqrt())
}

/// The trace limit functional d^{-1/2} sum_j X_j over the unit-pair block.
/// Restricted to the two_block construction: the joint construction's
/// (d+1)^{-1} scaling would reproduce sigma_tr^2 d/(d+1) instead of
/// sigma_tr^2.
pub fn trace_limit_functional(model: &LimitModel, sample: &[f64]) -> Result<f64> {
    if model.construction != Construction::TwoBlock {
        return Err(Error::InvalidParameter(
            "trace limit functional requires the two_block construction".into(),
        ));
    }
    if sample.len() != model.d + 1 {
        return Err(Error::DimensionMismatch {
            expected: model.d + 1,
            actual: sample.len(),
        });
    }
    let tail: f64 = sample[1..].iter().sum();
    Ok(tail / (model.d as f64).sqrt())
}

/// Analytic variance of the trace limit functional under two_block:
/// d^{-2} sum_{i,j} beta^2(i,j) = sigma_tr^2, recovered from the assembled
/// covariance as a linear-form identity.
pub fn trace_limit_variance(model: &LimitModel) -> Result<f64> {
    if model.construction != Construction::TwoBlock {
        return Err(Error::InvalidParameter(
            "trace limit functional requires the two_block construction".into(),
        ));
    }
    let d = model.d;
    let mut q = vec![1.0 / (d as f64).sqrt(); d + 1];
    q[0] = 0.0;
    model.cov.quad_form(&q, &q)
}

/// The approximating martingale
///
/// ```text
///   M_m = sum_{k=0}^{m} [ ft_00 (eps_k^2 - sigma^2)
///                         + eps_k sum_{l=1}^{J} ft_{l,0} eps_{k-l} ],
/// ```
///
/// returned as the sequence M_0..M_len. The stream is indexed by t + J
/// (as produced by `CoefficientScheme::draw_innovations`), so it must cover
/// indices -J..=len.
pub fn martingale_path(
    scheme: &CoefficientScheme,
    innov: &InnovationSpec,
    eps: &[f64],
    v: &WeightVector,
    w: &WeightVector,
    len: usize,
) -> Result<Vec<f64>> {
    let j_max = scheme.truncation();
    if eps.len() < len + j_max + 1 {
        return Err(Error::InvalidParameter(format!(
            "innovation stream too short: need {} values, got {}",
            len + j_max + 1,
            eps.len()
        )));
    }
    let ft = f_table(scheme, v, w, j_max)?;
    let s2 = innov.sigma_sq;
    let mut out = Vec::with_capacity(len + 1);
    let mut acc = 0.0;
    for k in 0..=len {
        let ek = eps[k + j_max];
        let mut lagged = 0.0;
        for l in 1..=j_max {
            lagged += ft.at(l) * eps[k + j_max - l];
        }
        acc += ft.at(0) * (ek * ek - s2) + ek * lagged;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientScheme, InnovationSpec};
    use crate::stats::{mean, sample_variance};
    use approx::assert_relative_eq;

    fn gauss() -> InnovationSpec {
        InnovationSpec::gaussian(1.0).unwrap()
    }

    #[test]
    fn joint_model_white_noise_d1() {
        // d = 1, white noise, v = w = e_0: all beta^2 = alpha^2 = 2, joint
        // scaling divides by d+1 = 2.
        let s = CoefficientScheme::white_noise(1, 8, 0.25).unwrap();
        let e0 = WeightVector::unit(0, 1).unwrap();
        let m = build_limit_model(&s, &gauss(), &e0, &e0, Construction::Joint).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(m.cov.get(i, j), 1.0, epsilon = 1e-12);
            }
        }
        // factorization reproduces the covariance
        let rec = m.factor.matmul(&m.factor.transpose()).unwrap();
        let err = rec.sub(&m.cov).unwrap().frobenius();
        assert!(err <= 1e-8 * (1.0 + m.cov.frobenius()));
    }

    #[test]
    fn two_block_model_white_noise_d1() {
        let s = CoefficientScheme::white_noise(1, 8, 0.25).unwrap();
        let e0 = WeightVector::unit(0, 1).unwrap();
        let m = build_limit_model(&s, &gauss(), &e0, &e0, Construction::TwoBlock).unwrap();
        assert_relative_eq!(m.cov.get(0, 0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.cov.get(1, 1), 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.cov.get(0, 1), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn factorization_contract_random_scheme() {
        let s = CoefficientScheme::ar1(vec![0.6, -0.3, 0.4, 0.1], 4, 64, 0.25).unwrap();
        let v = WeightVector::new(vec![0.4, 0.1, -0.2, 0.3]);
        let w = WeightVector::new(vec![0.2, -0.5, 0.1, 0.0]);
        for c in [Construction::Joint, Construction::TwoBlock] {
            let m = build_limit_model(&s, &gauss(), &v, &w, c).unwrap();
            let rec = m.factor.matmul(&m.factor.transpose()).unwrap();
            let err = rec.sub(&m.cov).unwrap().frobenius();
            assert!(
                err <= 1e-8 * (1.0 + m.cov.frobenius()),
                "factor error {err} for {c:?}"
            );
        }
    }

    #[test]
    fn paths_start_at_zero_and_match_variance() {
        let s = CoefficientScheme::ar1(vec![0.5, 0.2], 2, 32, 0.25).unwrap();
        let e0 = WeightVector::unit(0, 2).unwrap();
        let m = build_limit_model(&s, &gauss(), &e0, &e0, Construction::TwoBlock).unwrap();
        let grid = [0.0, 0.5, 1.0];
        let reps = 100_000;
        let ens = sample_paths(&m, &grid, reps, 4242).unwrap();
        for r in 0..5 {
            for c in 0..m.d + 1 {
                assert_eq!(ens.value(r, 0, c), 0.0);
            }
        }
        // empirical endpoint variance within 3% of the diagonal
        for c in 0..m.d + 1 {
            let xs: Vec<f64> = (0..reps).map(|r| ens.value(r, 2, c)).collect();
            let var = sample_variance(&xs);
            let target = m.cov.get(c, c);
            assert!(
                (var - target).abs() <= 0.03 * target,
                "coord {c}: var {var} vs {target}"
            );
        }
        // increments over disjoint intervals are uncorrelated
        let inc1: Vec<f64> = (0..reps)
            .map(|r| ens.value(r, 1, 0) - ens.value(r, 0, 0))
            .collect();
        let inc2: Vec<f64> = (0..reps)
            .map(|r| ens.value(r, 2, 0) - ens.value(r, 1, 0))
            .collect();
        let m1 = mean(&inc1);
        let m2 = mean(&inc2);
        let cov12: f64 = inc1
            .iter()
            .zip(&inc2)
            .map(|(a, b)| (a - m1) * (b - m2))
            .sum::<f64>()
            / reps as f64;
        let corr = cov12 / (sample_variance(&inc1) * sample_variance(&inc2)).sqrt();
        assert!(corr.abs() < 0.02, "increment correlation {corr}");
    }

    #[test]
    fn sampling_is_deterministic_and_stream_separated() {
        let s = CoefficientScheme::white_noise(2, 8, 0.25).unwrap();
        let e0 = WeightVector::unit(0, 2).unwrap();
        let m = build_limit_model(&s, &gauss(), &e0, &e0, Construction::TwoBlock).unwrap();
        let a = sample_paths(&m, &[1.0], 8, 7).unwrap();
        let b = sample_paths(&m, &[1.0], 8, 7).unwrap();
        for r in 0..8 {
            assert_eq!(a.endpoint(r), b.endpoint(r));
        }
        let c = sample_paths(&m, &[1.0], 8, 8).unwrap();
        assert_ne!(a.endpoint(0), c.endpoint(0));
    }

    #[test]
    fn shrink_functional_endpoints() {
        let s = CoefficientScheme::ar1(vec![0.5, -0.5], 2, 32, 0.25).unwrap();
        let e0 = WeightVector::unit(0, 2).unwrap();
        let e1 = WeightVector::unit(1, 2).unwrap();
        let m = build_limit_model(&s, &gauss(), &e0, &e0, Construction::TwoBlock).unwrap();
        let sample = vec![1.5, -0.3, 0.8];
        // W = 0 returns the scalar coordinate
        assert_relative_eq!(
            shrink_functional(&m, &sample, 0.0).unwrap(),
            1.5,
            epsilon = 1e-15
        );
        // affinity in W
        let b0 = shrink_functional(&m, &sample, 0.0).unwrap();
        let b1 = shrink_functional(&m, &sample, 1.0).unwrap();
        for w in [0.25, 0.5, 0.75] {
            let bw = shrink_functional(&m, &sample, w).unwrap();
            assert_relative_eq!(bw, (1.0 - w) * b0 + w * b1, epsilon = 1e-12);
        }
        // orthogonal pair kills the target term at W = 1
        let mo = build_limit_model(&s, &gauss(), &e0, &e1, Construction::TwoBlock).unwrap();
        assert_relative_eq!(mo.vw_inner, 0.0, epsilon = 1e-15);
        assert_relative_eq!(
            shrink_functional(&mo, &sample, 1.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(shrink_functional(&m, &sample, 1.2).is_err());
        assert!(shrink_functional(&m, &sample[..2], 0.5).is_err());
    }

    #[test]
    fn functional_variance_matches_decomposition() {
        let s = CoefficientScheme::ar1(vec![0.5, 0.3, -0.2], 3, 64, 0.25).unwrap();
        let v = WeightVector::new(vec![0.5, 0.3, 0.2]);
        let w = WeightVector::new(vec![0.4, 0.4, 0.2]);
        let m = build_limit_model(&s, &gauss(), &v, &w, Construction::TwoBlock).unwrap();
        for wt in [0.0, 0.3, 0.7, 1.0] {
            let (a, b, c) = m.variance_decomposition(wt).unwrap();
            let total = m.functional_variance(wt).unwrap();
            assert_relative_eq!(a + b + c, total, epsilon = 1e-10 * (1.0 + total.abs()));
        }
        let joint = build_limit_model(&s, &gauss(), &v, &w, Construction::Joint).unwrap();
        assert!(joint.variance_decomposition(0.5).is_err());
    }

    #[test]
    fn trace_functional_variance_identity() {
        let s = CoefficientScheme::ar1(vec![0.5, -0.4, 0.3, 0.2], 4, 64, 0.25).unwrap();
        let g = gauss();
        let e0 = WeightVector::unit(0, 4).unwrap();
        let m = build_limit_model(&s, &g, &e0, &e0, Construction::TwoBlock).unwrap();
        // analytic identity against sigma_tr^2
        let kernel = beta_matrix(&s, &g, &WeightPairSet::unit_pairs(4).unwrap(), 64).unwrap();
        let st = crate::asymvar::sigma_tr_sq(&kernel).unwrap();
        let var = trace_limit_variance(&m).unwrap();
        assert!((var - st).abs() <= 1e-8 * st);

        // d = 1: the functional is the block coordinate itself
        let s1 = CoefficientScheme::white_noise(1, 8, 0.25).unwrap();
        let e = WeightVector::unit(0, 1).unwrap();
        let m1 = build_limit_model(&s1, &g, &e, &e, Construction::TwoBlock).unwrap();
        let sample = vec![0.3, -1.2];
        assert_relative_eq!(
            trace_limit_functional(&m1, &sample).unwrap(),
            -1.2,
            epsilon = 1e-15
        );

        // joint construction is rejected
        let mj = build_limit_model(&s1, &g, &e, &e, Construction::Joint).unwrap();
        assert!(trace_limit_functional(&mj, &sample).is_err());
    }

    #[test]
    fn trace_functional_empirical_variance() {
        let s = CoefficientScheme::ar1(vec![0.5, 0.2], 2, 32, 0.25).unwrap();
        let e0 = WeightVector::unit(0, 2).unwrap();
        let m = build_limit_model(&s, &gauss(), &e0, &e0, Construction::TwoBlock).unwrap();
        let reps = 100_000;
        let ens = sample_paths(&m, &[1.0], reps, 31).unwrap();
        let vals: Vec<f64> = (0..reps)
            .map(|r| trace_limit_functional(&m, ens.endpoint(r)).unwrap())
            .collect();
        let var = sample_variance(&vals);
        let target = trace_limit_variance(&m).unwrap();
        assert!(
            (var - target).abs() <= 0.03 * target,
            "empirical {var} vs analytic {target}"
        );
    }

    #[test]
    fn martingale_white_noise_is_centered_square_sum() {
        let s = CoefficientScheme::white_noise(1, 8, 0.25).unwrap();
        let g = gauss();
        let e0 = WeightVector::unit(0, 1).unwrap();
        let n = 50;
        let eps = s.draw_innovations(&g, n, 3);
        let m = martingale_path(&s, &g, &eps, &e0, &e0, n).unwrap();
        assert_eq!(m.len(), n + 1);
        let j = s.truncation();
        let mut acc = 0.0;
        for k in 0..=n {
            let ek = eps[k + j];
            acc += ek * ek - 1.0;
            assert_relative_eq!(m[k], acc, epsilon = 1e-12);
        }
    }

    #[test]
    fn martingale_zero_mean_and_uncorrelated_increments() {
        let s = CoefficientScheme::ar1(vec![0.5], 1, 32, 0.25).unwrap();
        let g = gauss();
        let e0 = WeightVector::unit(0, 1).unwrap();
        let reps = 20_000;
        let n = 64;
        let mut endpoints = Vec::with_capacity(reps);
        let mut inc_first = Vec::with_capacity(reps);
        let mut inc_second = Vec::with_capacity(reps);
        for r in 0..reps {
            let eps = s.draw_innovations(&g, n, 10_000 + r as u64);
            let m = martingale_path(&s, &g, &eps, &e0, &e0, n).unwrap();
            endpoints.push(m[n]);
            inc_first.push(m[n / 2] - m[0]);
            inc_second.push(m[n] - m[n / 2]);
        }
        let mu = mean(&endpoints);
        let se = (sample_variance(&endpoints) / reps as f64).sqrt();
        assert!(mu.abs() <= 3.0 * se, "mean {mu}, se {se}");

        let m1 = mean(&inc_first);
        let m2 = mean(&inc_second);
        let cov: f64 = inc_first
            .iter()
            .zip(&inc_second)
            .map(|(a, b)| (a - m1) * (b - m2))
            .sum::<f64>()
            / reps as f64;
        let corr = cov / (sample_variance(&inc_first) * sample_variance(&inc_second)).sqrt();
        assert!(corr.abs() < 0.02, "increment correlation {corr}");
    }

    #[test]
    fn martingale_stream_length_check() {
        let s = CoefficientScheme::ar1(vec![0.5], 1, 16, 0.25).unwrap();
        let g = gauss();
        let e0 = WeightVector::unit(0, 1).unwrap();
        let eps = vec![0.0; 10];
        assert!(martingale_path(&s, &g, &eps, &e0, &e0, 10).is_err());
    }

    #[test]
    fn model_save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let s = CoefficientScheme::ar1(vec![0.5, -0.2], 2, 32, 0.25).unwrap();
        let e0 = WeightVector::unit(0, 2).unwrap();
        let m = build_limit_model(&s, &gauss(), &e0, &e0, Construction::TwoBlock).unwrap();
        let prefix = dir.path().join("model");
        m.save(&prefix).unwrap();
        let back = LimitModel::load(&prefix).unwrap();
        assert_eq!(back.construction, Construction::TwoBlock);
        assert_relative_eq!(back.alpha_sq, m.alpha_sq, epsilon = 1e-12);
        assert_relative_eq!(back.vw_inner, m.vw_inner, epsilon = 1e-12);
        let err = back.cov.sub(&m.cov).unwrap().frobenius();
        assert!(err < 1e-12 * (1.0 + m.cov.frobenius()));
    }
}
