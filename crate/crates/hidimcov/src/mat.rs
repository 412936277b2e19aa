//! Dense row-major matrices with the small-scale numerical kernels the rest
//! of the crate builds on: cyclic Jacobi eigendecomposition for symmetric
//! matrices and Cholesky factorization with a diagonal jitter ladder.
//!
//! Dimensions here stay in the hundreds, so a plain `Vec<f64>` carrier beats
//! pulling in a linear-algebra stack.

use crate::{Error, Result};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Off-diagonal mass threshold for Jacobi convergence, relative to ||A||_F.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Jitter ladder for Cholesky repair, as multiples of trace/dim.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a row-major buffer. Length must equal rows*cols.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("matrix rows"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Mat::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Max |a_ij - a_ji| over all pairs.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= tol * (1.0 + self.frobenius())
    }

    pub fn trace(&self) -> f64 {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scale(&self, c: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    fn check_same_shape(&self, other: &Mat) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Quadratic form v' A w.
    pub fn quad_form(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: v.len(),
            });
        }
        if w.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: w.len(),
            });
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            if v[i] == 0.0 {
                continue;
            }
            let row = self.row(i);
            let mut inner = 0.0;
            for j in 0..self.cols {
                inner += row[j] * w[j];
            }
            acc += v[i] * inner;
        }
        Ok(acc)
    }

    /// Force exact symmetry by averaging with the transpose.
    pub fn symmetrized(&self) -> Result<Mat> {
        self.require_square()?;
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, m);
                out.set(j, i, m);
            }
        }
        Ok(out)
    }
}

/// Eigen-decomposition of a symmetric matrix: `a = V diag(values) V'`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: Mat,
}

/// Cyclic Jacobi eigendecomposition for symmetric matrices.
///
/// Sweeps stop once the off-diagonal Frobenius mass drops below
/// 1e-12 times ||A||_F. Fine for the dimensions used here (d up to a few
/// hundred).
pub fn jacobi_eigen(a: &Mat) -> Result<SymEigen> {
    let n = a.require_square()?;
    if !a.is_symmetric(1e-9) {
        return Err(Error::NotSymmetric);
    }
    let mut w = a.symmetrized()?;
    let mut v = Mat::identity(n);
    let fro = w.frobenius().max(f64::MIN_POSITIVE);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * w.get(i, j) * w.get(i, j);
            }
        }
        if off.sqrt() <= JACOBI_TOL * fro {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                // Skip rotations that cannot move anything at this precision.
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() + aqq.abs()) {
                    w.set(p, q, 0.0);
                    w.set(q, p, 0.0);
                    continue;
                }
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                w.set(p, p, app - t * apq);
                w.set(q, q, aqq + t * apq);
                w.set(p, q, 0.0);
                w.set(q, p, 0.0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w.get(k, p);
                    let akq = w.get(k, q);
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    w.set(k, p, nkp);
                    w.set(p, k, nkp);
                    w.set(k, q, nkq);
                    w.set(q, k, nkq);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, new_col, v.get(k, old_col));
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Plain lower Cholesky. Returns `None` on a non-positive pivot.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.is_square().then_some(a.rows())?;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Cholesky with an escalating diagonal jitter ladder
/// (0, 1e-12, 1e-10, 1e-8 times trace/dim). Returns the factor and the
/// jitter that was needed; errors if the whole ladder fails.
pub fn cholesky_with_jitter(a: &Mat) -> Result<(Mat, f64)> {
    let n = a.require_square()?;
    if a.as_slice().iter().all(|&x| x == 0.0) {
        // degenerate zero covariance: the zero factor reproduces it
        return Ok((Mat::zeros(n, n), 0.0));
    }
    let scale = (a.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    for &mult in &JITTER_LADDER {
        let jitter = mult * scale;
        let mut work = a.clone();
        for i in 0..n {
            work.set(i, i, work.get(i, i) + jitter);
        }
        if let Some(l) = cholesky(&work) {
            return Ok((l, jitter));
        }
    }
    Err(Error::FactorizationFailed)
}

/// Write a matrix as CSV, row-major, no header, 17 significant digits.
pub fn write_matrix_csv<W: Write>(out: &mut W, m: &Mat) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_matrix_csv<P: AsRef<Path>>(path: P, m: &Mat) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, m)?;
    crate::util::write_atomic(path.as_ref(), &buf)
}

/// Read a CSV matrix written by [`write_matrix_csv`] (no header).
pub fn read_matrix_csv<P: AsRef<Path>>(path: P) -> Result<Mat> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect();
        rows.push(row.map_err(|e| Error::Format(format!("bad matrix entry: {e}")))?);
    }
    Mat::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.random_range(-1.0..1.0);
                m.set(i, j, x);
                m.set(j, i, x);
            }
        }
        m
    }

    #[test]
    fn jacobi_diagonal_matrix() {
        let m = Mat::diag(&[3.0, -1.0, 2.0]);
        let e = jacobi_eigen(&m).unwrap();
        assert_relative_eq!(e.values[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_two_by_two_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = jacobi_eigen(&m).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_random_matrix() {
        for seed in 0..4 {
            let m = random_symmetric(12, seed);
            let e = jacobi_eigen(&m).unwrap();
            // V D V' == m
            let d = Mat::diag(&e.values);
            let rec = e
                .vectors
                .matmul(&d)
                .unwrap()
                .matmul(&e.vectors.transpose())
                .unwrap();
            let err = rec.sub(&m).unwrap().frobenius();
            assert!(err < 1e-10 * (1.0 + m.frobenius()), "err={err}");
            // columns orthonormal
            let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
            let dev = vtv.sub(&Mat::identity(12)).unwrap().frobenius();
            assert!(dev < 1e-10, "dev={dev}");
        }
    }

    #[test]
    fn jacobi_rejects_nonsymmetric() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(jacobi_eigen(&m), Err(Error::NotSymmetric)));
    }

    #[test]
    fn cholesky_spd_roundtrip() {
        // A = L0 L0' for a fixed lower factor.
        let l0 = Mat::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![0.5, 1.5, 0.0],
            vec![-0.3, 0.2, 1.0],
        ])
        .unwrap();
        let a = l0.matmul(&l0.transpose()).unwrap();
        let l = cholesky(&a).unwrap();
        let rec = l.matmul(&l.transpose()).unwrap();
        assert!(rec.sub(&a).unwrap().frobenius() < 1e-12);
    }

    #[test]
    fn cholesky_jitter_repairs_singular_psd() {
        // Rank-1 PSD matrix u u'.
        let u = [1.0, 2.0, -1.0];
        let mut a = Mat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, u[i] * u[j]);
            }
        }
        assert!(cholesky(&a).is_none());
        let (l, jitter) = cholesky_with_jitter(&a).unwrap();
        assert!(jitter > 0.0);
        let rec = l.matmul(&l.transpose()).unwrap();
        assert!(rec.sub(&a).unwrap().frobenius() < 1e-6 * a.frobenius());
    }

    #[test]
    fn cholesky_jitter_zero_matrix() {
        let z = Mat::zeros(3, 3);
        let (l, jitter) = cholesky_with_jitter(&z).unwrap();
        assert_eq!(jitter, 0.0);
        assert_eq!(l, Mat::zeros(3, 3));
    }

    #[test]
    fn quad_form_matches_manual() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let q = a.quad_form(&[1.0, -1.0], &[0.5, 2.0]).unwrap();
        // v'Aw = [1,-1] [[1,2],[3,4]] [0.5,2]' = [1-3, 2-4]·[0.5,2] = -1 -4 = -5
        assert_relative_eq!(q, -5.0, epsilon = 1e-14);
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = random_symmetric(5, 99);
        save_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
    }
}
