//! Analytic asymptotic variance machinery for the bilinear forms.
//!
//! With one shared i.i.d. innovation stream (variance sigma^2, fourth moment
//! gamma) and projected coefficients a_j = sum_nu v_nu c_j^(nu),
//! b_j = sum_nu w_nu c_j^(nu), define
//!
//! ```text
//!   f_{0,j} = a_j b_j
//!   f_{l,j} = a_j b_{j+l} + b_j a_{j+l}          (l >= 1)
//!   ft_{l,i} = sum_{j>=i} f_{l,j}                ("f tilde")
//! ```
//!
//! The stationary per-step limits of the block-sum bounds that define the
//! asymptotic parameters then take the closed forms
//!
//! ```text
//!   alpha^2          = ft_00^2 (gamma - sigma^4) + sigma^4 sum_{l>=1} ft_{l,0}^2
//!   beta^2(p1; p2)   = ft_00(p1) ft_00(p2) (gamma - sigma^4)
//!                      + sigma^4 sum_{l>=1} ft_{l,0}(p1) ft_{l,0}(p2)
//! ```
//!
//! (divide the block bound by the block length and let it grow; with i.i.d.
//! innovations the Cesàro averages are constant). Third moments vanish for
//! every provided innovation family, so no skewness term appears. The
//! independent check is [`isserlis_lrv_oracle`], which expands the same
//! long-run variance directly by the Gaussian fourth-moment identity.

use crate::mat::Mat;
use crate::model::{CoefficientScheme, InnovationSpec};
use crate::weights::{WeightPairSet, WeightVector};
use crate::{Error, Result};
use rayon::prelude::*;

/// Table of ft_{l,0} values for one projection pair.
#[derive(Debug, Clone)]
pub struct FTable {
    /// ft_{l,0} for l = 0..=l_max.
    pub f_tilde_0: Vec<f64>,
    pub l_max: usize,
    /// Truncation horizon inherited from the scheme.
    pub truncation: usize,
}

impl FTable {
    #[inline]
    pub fn at(&self, l: usize) -> f64 {
        self.f_tilde_0.get(l).copied().unwrap_or(0.0)
    }
}

/// Analytic asymptotic covariance parameters for a pair family.
#[derive(Debug, Clone)]
pub struct AsymCovKernel {
    /// alpha^2 of the single pair, when L = 1.
    pub alpha_sq: Option<f64>,
    /// L x L matrix of beta^2(j,k).
    pub beta: Mat,
    /// (sigma^2, gamma).
    pub moments: (f64, f64),
    /// Whether the family is exactly the ordered unit pairs (e_j, e_j).
    unit_pairs: bool,
}

impl AsymCovKernel {
    pub fn len(&self) -> usize {
        self.beta.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.rows() == 0
    }

    pub fn is_unit_family(&self) -> bool {
        self.unit_pairs
    }
}

fn projected_pair(
    scheme: &CoefficientScheme,
    v: &WeightVector,
    w: &WeightVector,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((scheme.projected_coef(v)?, scheme.projected_coef(w)?))
}

/// ft_{l,i} = sum_{j=i}^{J} f_{l,j} for one pair.
pub fn f_tilde(
    scheme: &CoefficientScheme,
    v: &WeightVector,
    w: &WeightVector,
    l: usize,
    i: usize,
) -> Result<f64> {
    let (a, b) = projected_pair(scheme, v, w)?;
    Ok(f_tilde_from_coefs(&a, &b, l, i))
}

fn f_tilde_from_coefs(a: &[f64], b: &[f64], l: usize, i: usize) -> f64 {
    let jlen = a.len();
    if i >= jlen {
        return 0.0;
    }
    if l == 0 {
        (i..jlen).map(|j| a[j] * b[j]).sum()
    } else {
        (i..jlen)
            .map(|j| {
                let jl = j + l;
                if jl >= jlen {
                    0.0
                } else {
                    a[j] * b[jl] + b[j] * a[jl]
                }
            })
            .sum()
    }
}

/// All ft_{l,0}, l = 0..=l_max, for one pair.
pub fn f_table(
    scheme: &CoefficientScheme,
    v: &WeightVector,
    w: &WeightVector,
    l_max: usize,
) -> Result<FTable> {
    let (a, b) = projected_pair(scheme, v, w)?;
    Ok(f_table_from_coefs(&a, &b, l_max, scheme.truncation()))
}

fn f_table_from_coefs(a: &[f64], b: &[f64], l_max: usize, truncation: usize) -> FTable {
    let f_tilde_0: Vec<f64> = (0..=l_max)
        .map(|l| f_tilde_from_coefs(a, b, l, 0))
        .collect();
    FTable {
        f_tilde_0,
        l_max,
        truncation,
    }
}

fn kernel_product(ft1: &FTable, ft2: &FTable, sigma_sq: f64, gamma: f64) -> f64 {
    let s4 = sigma_sq * sigma_sq;
    let mut acc = ft1.at(0) * ft2.at(0) * (gamma - s4);
    let lmax = ft1.l_max.min(ft2.l_max);
    for l in 1..=lmax {
        acc += s4 * ft1.at(l) * ft2.at(l);
    }
    acc
}

/// Asymptotic variance alpha^2(v, w) of the scaled bilinear form.
pub fn alpha_sq(
    scheme: &CoefficientScheme,
    innov: &InnovationSpec,
    v: &WeightVector,
    w: &WeightVector,
    l_max: usize,
) -> Result<f64> {
    if l_max < 1 {
        return Err(Error::InvalidParameter("l_max must be >= 1".into()));
    }
    let ft = f_table(scheme, v, w, l_max)?;
    Ok(kernel_product(&ft, &ft, innov.sigma_sq, innov.gamma4))
}

/// Asymptotic covariance beta^2(v, w, vt, wt) of two scaled bilinear forms.
pub fn beta_sq(
    scheme: &CoefficientScheme,
    innov: &InnovationSpec,
    v: &WeightVector,
    w: &WeightVector,
    vt: &WeightVector,
    wt: &WeightVector,
    l_max: usize,
) -> Result<f64> {
    if l_max < 1 {
        return Err(Error::InvalidParameter("l_max must be >= 1".into()));
    }
    let ft1 = f_table(scheme, v, w, l_max)?;
    let ft2 = f_table(scheme, vt, wt, l_max)?;
    Ok(kernel_product(&ft1, &ft2, innov.sigma_sq, innov.gamma4))
}

/// beta^2 over all pair combinations of a family. Each entry is an inner
/// product of per-pair f-tables, so the matrix is a Gram matrix and hence
/// positive semidefinite by construction.
pub fn beta_matrix(
    scheme: &CoefficientScheme,
    innov: &InnovationSpec,
    pairs: &WeightPairSet,
    l_max: usize,
) -> Result<AsymCovKernel> {
    if l_max < 1 {
        return Err(Error::InvalidParameter("l_max must be >= 1".into()));
    }
    if pairs.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            expected: scheme.dim(),
            actual: pairs.dim(),
        });
    }
    let tables: Vec<FTable> = pairs
        .pairs()
        .par_iter()
        .map(|(v, w)| f_table(scheme, v, w, l_max))
        .collect::<Result<_>>()?;
    let l = tables.len();
    let mut beta = Mat::zeros(l, l);
    let entries: Vec<(usize, usize, f64)> = (0..l)
        .into_par_iter()
        .flat_map_iter(|j| {
            let tables = &tables;
            let (s2, g4) = (innov.sigma_sq, innov.gamma4);
            (j..l).map(move |k| (j, k, kernel_product(&tables[j], &tables[k], s2, g4)))
        })
        .collect();
    for (j, k, val) in entries {
        beta.set(j, k, val);
        beta.set(k, j, val);
    }
    let alpha = if l == 1 { Some(beta.get(0, 0)) } else { None };
    Ok(AsymCovKernel {
        alpha_sq: alpha,
        beta,
        moments: (innov.sigma_sq, innov.gamma4),
        unit_pairs: pairs.is_unit_family(),
    })
}

/// sigma_tr^2 = d^{-2} sum_{j,k} beta^2(j,k), the variance of the limiting
/// trace functional. Requires a kernel built on the unit pairs (e_j, e_j).
pub fn sigma_tr_sq(kernel: &AsymCovKernel) -> Result<f64> {
    if !kernel.is_unit_family() {
        return Err(Error::InvalidParameter(
            "sigma_tr_sq needs a kernel built on the unit pairs (e_j, e_j)".into(),
        ));
    }
    let d = kernel.len();
    let mut acc = 0.0;
    for j in 0..d {
        for k in 0..d {
            acc += kernel.beta.get(j, k);
        }
    }
    Ok(acc / (d * d) as f64)
}

/// Cross covariance of two projected series at lag tau >= 0:
/// c_{x,y}(tau) = sigma^2 sum_j x_j y_{j+tau}.
fn cross_cov(coefs_x: &[f64], coefs_y: &[f64], tau: usize, sigma_sq: f64) -> f64 {
    let jlen = coefs_x.len();
    if tau >= jlen {
        return 0.0;
    }
    let dot: f64 = (0..jlen - tau).map(|j| coefs_x[j] * coefs_y[j + tau]).sum();
    sigma_sq * dot
}

/// Brute-force long-run covariance of the product series
/// {Y_0(v) Y_0(w)} and {Y_tau(vt) Y_tau(wt)} for gaussian innovations,
/// expanding each lag covariance by the Isserlis identity
///
/// ```text
///   Cov(Y_0(v)Y_0(w), Y_t(vt)Y_t(wt))
///     = c_{v,vt}(t) c_{w,wt}(t) + c_{v,wt}(t) c_{w,vt}(t),
/// ```
///
/// summed over t = -tau_max..=tau_max (negative lags via transposition).
/// Entirely independent of the f-table route: this is the oracle the
/// analytic formulas are validated against.
pub fn isserlis_lrv_oracle(
    scheme: &CoefficientScheme,
    innov: &InnovationSpec,
    v: &WeightVector,
    w: &WeightVector,
    vt: &WeightVector,
    wt: &WeightVector,
    tau_max: usize,
) -> Result<f64> {
    if !innov.is_gaussian() {
        return Err(Error::GaussianRequired("isserlis_lrv_oracle"));
    }
    let s2 = innov.sigma_sq;
    let a = scheme.projected_coef(v)?;
    let b = scheme.projected_coef(w)?;
    let at = scheme.projected_coef(vt)?;
    let bt = scheme.projected_coef(wt)?;

    let term = |tau: i64| -> f64 {
        let (cv_vt, cw_wt, cv_wt, cw_vt) = if tau >= 0 {
            let t = tau as usize;
            (
                cross_cov(&a, &at, t, s2),
                cross_cov(&b, &bt, t, s2),
                cross_cov(&a, &bt, t, s2),
                cross_cov(&b, &at, t, s2),
            )
        } else {
            let t = (-tau) as usize;
            (
                cross_cov(&at, &a, t, s2),
                cross_cov(&bt, &b, t, s2),
                cross_cov(&bt, &a, t, s2),
                cross_cov(&at, &b, t, s2),
            )
        };
        cv_vt * cw_wt + cv_wt * cw_vt
    };

    let mut acc = term(0);
    for tau in 1..=tau_max as i64 {
        acc += term(tau) + term(-tau);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::jacobi_eigen;
    use crate::model::{CoefficientScheme, InnovationSpec};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn gauss() -> InnovationSpec {
        InnovationSpec::gaussian(1.0).unwrap()
    }

    fn e(j: usize, d: usize) -> WeightVector {
        WeightVector::unit(j, d).unwrap()
    }

    #[test]
    fn f_tilde_white_noise() {
        let s = CoefficientScheme::white_noise(1, 8, 0.25).unwrap();
        let e0 = e(0, 1);
        assert_relative_eq!(f_tilde(&s, &e0, &e0, 0, 0).unwrap(), 1.0);
        for l in 1..5 {
            assert_relative_eq!(f_tilde(&s, &e0, &e0, l, 0).unwrap(), 0.0);
        }
    }

    #[test]
    fn f_tilde_ar1_closed_form() {
        let rho: f64 = 0.5;
        let j_max = 512;
        let s = CoefficientScheme::ar1(vec![rho], 1, j_max, 0.25).unwrap();
        let e0 = e(0, 1);
        for l in 1..6i32 {
            let exact = 2.0 * rho.powi(l) / (1.0 - rho * rho);
            assert_relative_eq!(
                f_tilde(&s, &e0, &e0, l as usize, 0).unwrap(),
                exact,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn f_tilde_start_index() {
        let rho: f64 = 0.6;
        let j_max = 256;
        let s = CoefficientScheme::ar1(vec![rho], 1, j_max, 0.25).unwrap();
        let e0 = e(0, 1);
        // ft_{0,i} = sum_{j>=i} rho^{2j} = rho^{2i}/(1-rho^2) up to truncation
        for i in [0usize, 1, 5] {
            let expect = rho.powi(2 * i as i32) / (1.0 - rho * rho);
            assert_relative_eq!(
                f_tilde(&s, &e0, &e0, 0, i).unwrap(),
                expect,
                epsilon = 1e-10
            );
        }
        // beyond the truncation horizon the tail is empty
        assert_relative_eq!(f_tilde(&s, &e0, &e0, 0, j_max + 1).unwrap(), 0.0);
    }

    #[test]
    fn f_tilde_bilinear() {
        let s = CoefficientScheme::ar1(vec![0.4, -0.6], 2, 32, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = WeightVector::new(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            let v = WeightVector::new(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            let w = WeightVector::new(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            let a: f64 = rng.random_range(-2.0..2.0);
            let comb = WeightVector::new(
                u.coords()
                    .iter()
                    .zip(v.coords())
                    .map(|(x, y)| a * x + y)
                    .collect::<Vec<f64>>(),
            );
            for l in [0usize, 1, 3] {
                let lhs = f_tilde(&s, &comb, &w, l, 0).unwrap();
                let rhs =
                    a * f_tilde(&s, &u, &w, l, 0).unwrap() + f_tilde(&s, &v, &w, l, 0).unwrap();
                assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn f_table_decay_envelope() {
        let s = CoefficientScheme::ar1(vec![0.8], 1, 256, 0.25).unwrap();
        let e0 = e(0, 1);
        let ft = f_table(&s, &e0, &e0, 64).unwrap();
        for l in 4..64 {
            assert!(ft.at(l).abs() <= ft.at(l - 1).abs() + 1e-15);
        }
        assert!(ft.at(60).abs() < ft.at(1).abs() * 1e-4);
    }

    #[test]
    fn alpha_white_noise_is_excess_kurtosis() {
        let s = CoefficientScheme::white_noise(1, 16, 0.25).unwrap();
        let e0 = e(0, 1);
        let a = alpha_sq(&s, &gauss(), &e0, &e0, 16).unwrap();
        assert_relative_eq!(a, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_ar1_closed_form() {
        let s = CoefficientScheme::ar1(vec![0.5], 1, 512, 0.25).unwrap();
        let e0 = e(0, 1);
        let a = alpha_sq(&s, &gauss(), &e0, &e0, 512).unwrap();
        assert_relative_eq!(a, 160.0 / 27.0, epsilon = 1e-10);
    }

    #[test]
    fn alpha_quadratic_scaling() {
        let s = CoefficientScheme::ar1(vec![0.5, -0.3], 2, 64, 0.25).unwrap();
        let v = WeightVector::new(vec![0.4, 0.2]);
        let w = WeightVector::new(vec![-0.1, 0.7]);
        let base = alpha_sq(&s, &gauss(), &v, &w, 64).unwrap();
        let scaled = alpha_sq(&s, &gauss(), &v, &w.scale(3.0), 64).unwrap();
        assert_relative_eq!(scaled, 9.0 * base, epsilon = 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn beta_specializations() {
        let s = CoefficientScheme::ar1(vec![0.5, 0.2], 2, 64, 0.25).unwrap();
        let g = gauss();
        let v = WeightVector::new(vec![0.3, -0.2]);
        let w = WeightVector::new(vec![0.5, 0.1]);
        let a = alpha_sq(&s, &g, &v, &w, 64).unwrap();
        let b = beta_sq(&s, &g, &v, &w, &v, &w, 64).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);

        // identical white-noise coordinates driven by the shared stream
        let wn = CoefficientScheme::white_noise(2, 16, 0.25).unwrap();
        let b12 = beta_sq(&wn, &g, &e(0, 2), &e(0, 2), &e(1, 2), &e(1, 2), 16).unwrap();
        assert_relative_eq!(b12, 2.0, epsilon = 1e-12);

        // symmetry in the pair arguments
        let vt = WeightVector::new(vec![-0.6, 0.9]);
        let wt = WeightVector::new(vec![0.2, 0.2]);
        let b1 = beta_sq(&s, &g, &v, &w, &vt, &wt, 64).unwrap();
        let b2 = beta_sq(&s, &g, &vt, &wt, &v, &w, 64).unwrap();
        assert_relative_eq!(b1, b2, epsilon = 1e-15);
    }

    #[test]
    fn beta_matrix_structure() {
        let g = gauss();
        let s = CoefficientScheme::ar1(vec![0.5, -0.4, 0.3], 3, 64, 0.25).unwrap();

        // single pair reduces to alpha
        let v = WeightVector::new(vec![0.2, 0.3, -0.1]);
        let single = WeightPairSet::new(vec![(v.clone(), v.clone())]).unwrap();
        let k = beta_matrix(&s, &g, &single, 64).unwrap();
        assert_eq!(k.len(), 1);
        assert_relative_eq!(
            k.alpha_sq.unwrap(),
            alpha_sq(&s, &g, &v, &v, 64).unwrap(),
            epsilon = 1e-14
        );

        // white noise unit pairs: all entries 2
        let wn = CoefficientScheme::white_noise(4, 16, 0.25).unwrap();
        let pairs = WeightPairSet::unit_pairs(4).unwrap();
        let k = beta_matrix(&wn, &g, &pairs, 16).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(k.beta.get(i, j), 2.0, epsilon = 1e-12);
            }
        }

        // permuting pairs permutes rows/columns identically
        let p0 = WeightPairSet::new(vec![
            (e(0, 3), e(0, 3)),
            (e(1, 3), e(2, 3)),
            (e(2, 3), e(2, 3)),
        ])
        .unwrap();
        let p1 = WeightPairSet::new(vec![
            (e(2, 3), e(2, 3)),
            (e(0, 3), e(0, 3)),
            (e(1, 3), e(2, 3)),
        ])
        .unwrap();
        let k0 = beta_matrix(&s, &g, &p0, 64).unwrap();
        let k1 = beta_matrix(&s, &g, &p1, 64).unwrap();
        let perm = [2usize, 0, 1]; // p1[i] = p0[perm[i]]
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(
                    k1.beta.get(i, j),
                    k0.beta.get(perm[i], perm[j]),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn beta_matrix_is_psd() {
        let g = gauss();
        let s = CoefficientScheme::ar1(vec![0.7, -0.5, 0.3, 0.1], 4, 64, 0.25).unwrap();
        let pairs = WeightPairSet::unit_pairs(4).unwrap();
        let k = beta_matrix(&s, &g, &pairs, 64).unwrap();
        let eig = jacobi_eigen(&k.beta).unwrap();
        assert!(eig.values[0] >= -1e-8 * k.beta.trace());
    }

    #[test]
    fn sigma_tr_examples() {
        let g = gauss();
        // d = 1: reduces to alpha^2
        let s1 = CoefficientScheme::ar1(vec![0.5], 1, 512, 0.25).unwrap();
        let k1 = beta_matrix(&s1, &g, &WeightPairSet::unit_pairs(1).unwrap(), 512).unwrap();
        assert_relative_eq!(sigma_tr_sq(&k1).unwrap(), 160.0 / 27.0, epsilon = 1e-10);

        // white noise: all-2s matrix, mean 2 for any d
        let wn = CoefficientScheme::white_noise(5, 16, 0.25).unwrap();
        let kw = beta_matrix(&wn, &g, &WeightPairSet::unit_pairs(5).unwrap(), 16).unwrap();
        assert_relative_eq!(sigma_tr_sq(&kw).unwrap(), 2.0, epsilon = 1e-12);

        // one ar1 coordinate replicated d times
        let rep = CoefficientScheme::ar1(vec![0.5, 0.5, 0.5], 3, 512, 0.25).unwrap();
        let kr = beta_matrix(&rep, &g, &WeightPairSet::unit_pairs(3).unwrap(), 512).unwrap();
        assert_relative_eq!(sigma_tr_sq(&kr).unwrap(), 160.0 / 27.0, epsilon = 1e-10);

        // wrong family is rejected
        let bad = WeightPairSet::new(vec![(e(0, 5), e(1, 5))]).unwrap();
        let kb = beta_matrix(&wn, &g, &bad, 16).unwrap();
        assert!(sigma_tr_sq(&kb).is_err());
    }

    #[test]
    fn oracle_white_noise_and_ar1() {
        let g = gauss();
        let wn = CoefficientScheme::white_noise(1, 16, 0.25).unwrap();
        let e0 = e(0, 1);
        let o = isserlis_lrv_oracle(&wn, &g, &e0, &e0, &e0, &e0, 16).unwrap();
        assert_relative_eq!(o, 2.0, epsilon = 1e-13);

        let ar = CoefficientScheme::ar1(vec![0.5], 1, 512, 0.25).unwrap();
        let o = isserlis_lrv_oracle(&ar, &g, &e0, &e0, &e0, &e0, 512).unwrap();
        assert_relative_eq!(o, 160.0 / 27.0, epsilon = 1e-8);
        let a = alpha_sq(&ar, &g, &e0, &e0, 512).unwrap();
        assert!((o - a).abs() <= 1e-8 * a.max(1.0));
    }

    #[test]
    fn oracle_requires_gaussian() {
        let s = CoefficientScheme::white_noise(1, 8, 0.25).unwrap();
        let t = InnovationSpec::student_t(8.0, 1.0).unwrap();
        let e0 = e(0, 1);
        assert!(matches!(
            isserlis_lrv_oracle(&s, &t, &e0, &e0, &e0, &e0, 8),
            Err(Error::GaussianRequired(_))
        ));
    }

    #[test]
    fn oracle_cross_validates_beta_on_random_pairs() {
        let g = gauss();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..50 {
            let d = rng.random_range(1..=4usize);
            let j_max = 64;
            let scheme = match trial % 3 {
                0 => CoefficientScheme::white_noise(d, j_max, 0.25).unwrap(),
                1 => {
                    let rho: Vec<f64> = (0..d).map(|_| rng.random_range(-0.8..0.8)).collect();
                    CoefficientScheme::ar1(rho, d, j_max, 0.25).unwrap()
                }
                _ => {
                    let scale: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.5)).collect();
                    CoefficientScheme::power_decay(scale, d, j_max, 0.3).unwrap()
                }
            };
            // l1-normalized random weights
            let rand_w = |rng: &mut ChaCha8Rng| {
                let coords: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let w = WeightVector::new(coords);
                if w.l1() > 0.0 {
                    w.scale(1.0 / w.l1())
                } else {
                    w
                }
            };
            let v = rand_w(&mut rng);
            let w = rand_w(&mut rng);
            let vt = rand_w(&mut rng);
            let wt = rand_w(&mut rng);
            let ana = beta_sq(&scheme, &g, &v, &w, &vt, &wt, j_max).unwrap();
            let orc = isserlis_lrv_oracle(&scheme, &g, &v, &w, &vt, &wt, j_max).unwrap();
            assert!(
                (ana - orc).abs() <= 1e-8 * ana.abs().max(1.0),
                "trial {trial}: analytic {ana} vs oracle {orc}"
            );
        }
    }

    #[test]
    fn truncation_stability_geometric() {
        let g = gauss();
        let s = CoefficientScheme::ar1(vec![0.9], 1, 512, 0.25).unwrap();
        let e0 = e(0, 1);
        let a256 = alpha_sq(&s, &g, &e0, &e0, 256).unwrap();
        let a512 = alpha_sq(&s, &g, &e0, &e0, 512).unwrap();
        assert!((a512 - a256).abs() <= 1e-6 * a512.abs());
    }

    #[test]
    fn l_max_validation() {
        let s = CoefficientScheme::white_noise(1, 8, 0.25).unwrap();
        let e0 = e(0, 1);
        assert!(alpha_sq(&s, &gauss(), &e0, &e0, 0).is_err());
    }
}
