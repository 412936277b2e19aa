//! The data-generating model: a d-dimensional mean-zero vector time series
//! whose coordinates are causal linear (moving-average) processes driven by
//! one shared innovation stream,
//!
//! ```text
//!   Y_i^(nu) = sum_{j=0}^{J} c_j^(nu) eps_{i-j},   nu = 0..d-1.
//! ```
//!
//! The infinite MA sum is truncated at a horizon `J`; all analytic
//! quantities elsewhere in the crate use the same `J`, so analytic-vs-
//! empirical comparisons stay internally consistent. With exactly `J`
//! pre-sample innovations the truncated process is stationary from i = 1.

use crate::mat::Mat;
use crate::weights::WeightVector;
use crate::{util, Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// Default truncation horizon for the MA(∞) sums.
pub const DEFAULT_TRUNCATION: usize = 512;

const PANEL_MAGIC: &[u8; 4] = b"HDCV";
const PANEL_VERSION: u8 = 1;

// ---------------------------------------------------------------------------
// Innovations
// ---------------------------------------------------------------------------

/// Innovation distribution family. All provided families are symmetric, so
/// E eps^3 = 0 holds by construction (the analytic asymptotic covariances
/// rely on vanishing third moments).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnovationFamily {
    Gaussian,
    /// Student t with df > 4, rescaled to the requested variance.
    StudentT {
        df: f64,
    },
    /// Symmetric two-point distribution +/- scale.
    TwoPointSymmetric {
        scale: f64,
    },
}

/// Innovation specification: family plus its first even moments.
///
/// `sigma_sq` is E eps^2, `gamma4` is E eps^4 (derived from the family), and
/// `delta_margin` is a certified delta with E |eps|^(4+delta) finite.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationSpec {
    pub family: InnovationFamily,
    pub sigma_sq: f64,
    pub gamma4: f64,
    pub delta_margin: f64,
}

impl InnovationSpec {
    pub fn gaussian(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_sq must be positive, got {sigma_sq}"
            )));
        }
        Ok(InnovationSpec {
            family: InnovationFamily::Gaussian,
            sigma_sq,
            gamma4: 3.0 * sigma_sq * sigma_sq,
            delta_margin: 1.0,
        })
    }

    /// Standardized Student t: E eps^2 = sigma_sq exactly. Requires df > 4
    /// so the fourth moment exists with margin.
    pub fn student_t(df: f64, sigma_sq: f64) -> Result<Self> {
        if !(df > 4.0) {
            return Err(Error::InvalidParameter(format!(
                "student_t requires df > 4, got {df}"
            )));
        }
        if !(sigma_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_sq must be positive, got {sigma_sq}"
            )));
        }
        let delta_margin = 0.5 * (df - 4.0);
        // E t^4 = 3 df^2 / ((df-2)(df-4)); standardization divides by
        // (df/(df-2))^2, leaving gamma4 = 3 sigma^4 (df-2)/(df-4).
        let gamma4 = 3.0 * sigma_sq * sigma_sq * (df - 2.0) / (df - 4.0);
        Ok(InnovationSpec {
            family: InnovationFamily::StudentT { df },
            sigma_sq,
            gamma4,
            delta_margin,
        })
    }

    pub fn two_point(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "two_point scale must be positive, got {scale}"
            )));
        }
        let s2 = scale * scale;
        Ok(InnovationSpec {
            family: InnovationFamily::TwoPointSymmetric { scale },
            sigma_sq: s2,
            gamma4: s2 * s2,
            delta_margin: 1.0,
        })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, InnovationFamily::Gaussian)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            InnovationFamily::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                z * self.sigma_sq.sqrt()
            }
            InnovationFamily::StudentT { df } => {
                let t: f64 = StudentT::new(df).expect("df validated").sample(rng);
                t * (self.sigma_sq * (df - 2.0) / df).sqrt()
            }
            InnovationFamily::TwoPointSymmetric { scale } => {
                if rng.random::<bool>() {
                    scale
                } else {
                    -scale
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Coefficient schemes
// ---------------------------------------------------------------------------

/// Generator of the linear-process coefficients c_j^(nu).
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    /// c_0 = 1, c_j = 0: every coordinate equals the shared innovation.
    WhiteNoise,
    /// c_j^(nu) = rho_nu^j with |rho_nu| < 1; `rho` is cycled over coords.
    Ar1Geometric { rho: Vec<f64> },
    /// c_j^(nu) = scale_nu * (j v 1)^(-(3/4 + theta/2)), the square root of
    /// the admissibility envelope, for long-memory stress tests.
    PowerDecay { scale: Vec<f64> },
    /// Explicit coefficient table, one row per coordinate, row length <= J+1.
    Table { coefficients: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientScheme {
    kind: SchemeKind,
    d: usize,
    j_max: usize,
    theta: f64,
}

/// Report of the coefficient-decay admissibility check.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    /// max over j in 1..=J and nu of coef(nu,j)^2 * j^(3/2+theta).
    pub c_bound: f64,
    /// Lag attaining the bound.
    pub worst_j: usize,
    /// False when the envelope is still growing at the truncation horizon.
    pub pass: bool,
}

impl CoefficientScheme {
    pub fn new(kind: SchemeKind, d: usize, j_max: usize, theta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension d must be >= 1".into()));
        }
        if j_max == 0 {
            return Err(Error::InvalidParameter(
                "truncation horizon J must be >= 1".into(),
            ));
        }
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1/2), got {theta}"
            )));
        }
        match &kind {
            SchemeKind::Ar1Geometric { rho } => {
                if rho.is_empty() {
                    return Err(Error::InvalidParameter("rho list is empty".into()));
                }
                for &r in rho {
                    if !(r.abs() < 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "ar1 requires |rho| < 1, got {r}"
                        )));
                    }
                }
            }
            SchemeKind::PowerDecay { scale } => {
                if scale.is_empty() {
                    return Err(Error::InvalidParameter("scale list is empty".into()));
                }
            }
            SchemeKind::Table { coefficients } => {
                if coefficients.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: coefficients.len(),
                    });
                }
                for row in coefficients {
                    if row.len() > j_max + 1 {
                        return Err(Error::InvalidParameter(format!(
                            "table row longer than J+1 = {}",
                            j_max + 1
                        )));
                    }
                }
            }
            SchemeKind::WhiteNoise => {}
        }
        Ok(CoefficientScheme {
            kind,
            d,
            j_max,
            theta,
        })
    }

    pub fn white_noise(d: usize, j_max: usize, theta: f64) -> Result<Self> {
        Self::new(SchemeKind::WhiteNoise, d, j_max, theta)
    }

    pub fn ar1(rho: Vec<f64>, d: usize, j_max: usize, theta: f64) -> Result<Self> {
        Self::new(SchemeKind::Ar1Geometric { rho }, d, j_max, theta)
    }

    pub fn power_decay(scale: Vec<f64>, d: usize, j_max: usize, theta: f64) -> Result<Self> {
        Self::new(SchemeKind::PowerDecay { scale }, d, j_max, theta)
    }

    pub fn table(coefficients: Vec<Vec<f64>>, j_max: usize, theta: f64) -> Result<Self> {
        let d = coefficients.len();
        Self::new(SchemeKind::Table { coefficients }, d, j_max, theta)
    }

    pub fn kind(&self) -> &SchemeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Truncation horizon J.
    pub fn truncation(&self) -> usize {
        self.j_max
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Coefficient c_j^(nu); zero beyond the truncation horizon.
    pub fn coef(&self, nu: usize, j: usize) -> Result<f64> {
        if nu >= self.d {
            return Err(Error::IndexOutOfRange {
                index: nu,
                dim: self.d,
            });
        }
        if j > self.j_max {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            SchemeKind::WhiteNoise => {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            SchemeKind::Ar1Geometric { rho } => rho[nu % rho.len()].powi(j as i32),
            SchemeKind::PowerDecay { scale } => {
                let base = (j.max(1)) as f64;
                scale[nu % scale.len()] * base.powf(-(0.75 + 0.5 * self.theta))
            }
            SchemeKind::Table { coefficients } => coefficients[nu].get(j).copied().unwrap_or(0.0),
        })
    }

    /// Full coefficient row of a coordinate, length J+1.
    pub fn coef_row(&self, nu: usize) -> Result<Vec<f64>> {
        if nu >= self.d {
            return Err(Error::IndexOutOfRange {
                index: nu,
                dim: self.d,
            });
        }
        let len = self.j_max + 1;
        Ok(match &self.kind {
            SchemeKind::WhiteNoise => {
                let mut row = vec![0.0; len];
                row[0] = 1.0;
                row
            }
            SchemeKind::Ar1Geometric { rho } => {
                let r = rho[nu % rho.len()];
                let mut row = Vec::with_capacity(len);
                let mut cur = 1.0;
                for _ in 0..len {
                    row.push(cur);
                    cur *= r;
                }
                row
            }
            SchemeKind::PowerDecay { scale } => {
                let s = scale[nu % scale.len()];
                let expo = -(0.75 + 0.5 * self.theta);
                (0..len)
                    .map(|j| s * ((j.max(1)) as f64).powf(expo))
                    .collect()
            }
            SchemeKind::Table { coefficients } => {
                let mut row = coefficients[nu].clone();
                row.resize(len, 0.0);
                row
            }
        })
    }

    /// Projected coefficients c_j^(w) = sum_nu w_nu c_j^(nu), j = 0..=J.
    pub fn projected_coef(&self, w: &WeightVector) -> Result<Vec<f64>> {
        if w.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: w.dim(),
            });
        }
        let mut out = vec![0.0; self.j_max + 1];
        for (nu, &wv) in w.coords().iter().enumerate() {
            if wv == 0.0 {
                continue;
            }
            let row = self.coef_row(nu)?;
            for (o, c) in out.iter_mut().zip(&row) {
                *o += wv * c;
            }
        }
        Ok(out)
    }

    /// Check the decay condition coef(nu,j)^2 <= C (j v 1)^(-3/2-theta) over
    /// the truncated range, reporting the tightest constant. Fails when the
    /// envelope is maximized at the horizon and still growing there, the
    /// numerical signature of an inadmissible (too slowly decaying) table.
    pub fn verify_assumption_a(&self) -> Result<DecayReport> {
        if self.j_max < 2 {
            return Err(Error::InvalidParameter(
                "assumption check needs J >= 2".into(),
            ));
        }
        let expo = 1.5 + self.theta;
        let mut c_bound = 0.0f64;
        let mut worst_j = 1usize;
        let mut envelope = vec![0.0f64; self.j_max + 1];
        for nu in 0..self.d {
            let row = self.coef_row(nu)?;
            for j in 1..=self.j_max {
                let g = row[j] * row[j] * (j as f64).powf(expo);
                if g > envelope[j] {
                    envelope[j] = g;
                }
            }
        }
        for j in 1..=self.j_max {
            if envelope[j] > c_bound {
                c_bound = envelope[j];
                worst_j = j;
            }
        }
        let mid = (self.j_max / 2).max(1);
        let growing_at_horizon = worst_j == self.j_max && envelope[self.j_max] > envelope[mid];
        Ok(DecayReport {
            c_bound,
            worst_j,
            pass: c_bound.is_finite() && !growing_at_horizon,
        })
    }

    /// Population covariance of the truncated process:
    /// Sigma(nu,mu) = sigma^2 sum_j c_j^(nu) c_j^(mu). Symmetric PSD by
    /// construction (Gram matrix of the coefficient rows).
    pub fn true_covariance(&self, innov: &InnovationSpec) -> Result<Mat> {
        let rows: Vec<Vec<f64>> = (0..self.d)
            .map(|nu| self.coef_row(nu))
            .collect::<Result<_>>()?;
        let mut sigma = Mat::zeros(self.d, self.d);
        for a in 0..self.d {
            for b in a..self.d {
                let dot: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
                let v = innov.sigma_sq * dot;
                sigma.set(a, b, v);
                sigma.set(b, a, v);
            }
        }
        Ok(sigma)
    }

    /// Simulate a panel of n observations. Innovations eps_{-J}..eps_n are
    /// drawn i.i.d. from `innov`; one stream drives all coordinates, so any
    /// cross-sectional dependence comes only through the shared shocks.
    pub fn simulate(&self, innov: &InnovationSpec, n: usize, seed: u64) -> Result<SeriesPanel> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be >= 1".into()));
        }
        let eps = self.draw_innovations(innov, n, seed);
        let mut data = Mat::zeros(n, self.d);
        // Reverse rows once so each observation is a plain forward dot.
        let mut rrows: Vec<Vec<f64>> = Vec::with_capacity(self.d);
        for nu in 0..self.d {
            let mut r = self.coef_row(nu)?;
            r.reverse();
            rrows.push(r);
        }
        let jlen = self.j_max + 1;
        for i in 1..=n {
            let window = &eps[i..i + jlen];
            for (nu, rrow) in rrows.iter().enumerate() {
                let y: f64 = rrow.iter().zip(window).map(|(c, e)| c * e).sum();
                data.set(i - 1, nu, y);
            }
        }
        Ok(SeriesPanel {
            data,
            n,
            d: self.d,
            seed: Some(seed),
            scheme_digest: None,
        })
    }

    /// Innovation stream eps_{-J}..eps_n as a vector indexed by t + J.
    pub fn draw_innovations(&self, innov: &InnovationSpec, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n + self.j_max + 1)
            .map(|_| innov.sample(&mut rng))
            .collect()
    }

    /// Simulate just the projected series v'Y_i, i = 1..n, from a given
    /// innovation stream (as produced by [`CoefficientScheme::draw_innovations`]).
    pub fn project_stream(&self, eps: &[f64], w: &WeightVector) -> Result<Vec<f64>> {
        let coefs = self.projected_coef(w)?;
        Ok(project_coef_stream(&coefs, eps, self.j_max))
    }
}

/// Convolve a coefficient row (length J+1) against a stream indexed by t+J.
pub(crate) fn project_coef_stream(coefs: &[f64], eps: &[f64], j_max: usize) -> Vec<f64> {
    let jlen = j_max + 1;
    assert!(eps.len() >= jlen, "stream shorter than truncation window");
    let n = eps.len() - jlen;
    let mut rr: Vec<f64> = coefs.to_vec();
    rr.reverse();
    (1..=n)
        .map(|i| {
            let window = &eps[i..i + jlen];
            rr.iter().zip(window).map(|(c, e)| c * e).sum()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Panels
// ---------------------------------------------------------------------------

/// An n x d block of observations (row i = Y_i') plus provenance metadata.
#[derive(Debug, Clone)]
pub struct SeriesPanel {
    data: Mat,
    n: usize,
    d: usize,
    seed: Option<u64>,
    scheme_digest: Option<String>,
}

impl SeriesPanel {
    pub fn from_matrix(data: Mat) -> Result<Self> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(Error::EmptyInput("panel"));
        }
        Ok(SeriesPanel {
            n: data.rows(),
            d: data.cols(),
            data,
            seed: None,
            scheme_digest: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn scheme_digest(&self) -> Option<&str> {
        self.scheme_digest.as_deref()
    }

    pub fn set_scheme_digest(&mut self, digest: String) {
        self.scheme_digest = Some(digest);
    }

    pub fn matrix(&self) -> &Mat {
        &self.data
    }

    /// Observation i (0-based), a length-d slice.
    pub fn observation(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    /// Column nu as an owned vector.
    pub fn column(&self, nu: usize) -> Result<Vec<f64>> {
        if nu >= self.d {
            return Err(Error::IndexOutOfRange {
                index: nu,
                dim: self.d,
            });
        }
        Ok((0..self.n).map(|i| self.data.get(i, nu)).collect())
    }

    /// Projected series w'Y_i, i = 1..n.
    pub fn project(&self, w: &WeightVector) -> Result<Vec<f64>> {
        if w.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: w.dim(),
            });
        }
        Ok((0..self.n)
            .map(|i| {
                self.data
                    .row(i)
                    .iter()
                    .zip(w.coords())
                    .map(|(y, c)| y * c)
                    .sum()
            })
            .collect())
    }

    pub fn all_finite(&self) -> bool {
        self.data.as_slice().iter().all(|x| x.is_finite())
    }

    // --- persistence -------------------------------------------------------

    /// CSV with header y1,...,yd, one row per time index.
    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        let header: Vec<String> = (1..=self.d).map(|k| format!("y{k}")).collect();
        writeln!(buf, "{}", header.join(","))?;
        for i in 0..self.n {
            let line: Vec<String> = self
                .data
                .row(i)
                .iter()
                .map(|x| format!("{x:.16e}"))
                .collect();
            writeln!(buf, "{}", line.join(","))?;
        }
        util::write_atomic(path.as_ref(), &buf)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if lineno == 0 && trimmed.starts_with('y') {
                continue; // header
            }
            let row: std::result::Result<Vec<f64>, _> = trimmed
                .split(',')
                .map(|tok| tok.trim().parse::<f64>())
                .collect();
            rows.push(row.map_err(|e| Error::Format(format!("bad panel entry: {e}")))?);
        }
        let data = Mat::from_rows(&rows)?;
        let panel = SeriesPanel::from_matrix(data)?;
        if !panel.all_finite() {
            return Err(Error::Format("panel contains non-finite entries".into()));
        }
        Ok(panel)
    }

    /// Binary format: magic `HDCV`, version byte, little-endian u64 n, u64 d,
    /// u64 seed, then row-major 64-bit floats.
    pub fn save_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::with_capacity(4 + 1 + 24 + 8 * self.n * self.d);
        buf.extend_from_slice(PANEL_MAGIC);
        buf.push(PANEL_VERSION);
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        buf.extend_from_slice(&(self.d as u64).to_le_bytes());
        buf.extend_from_slice(&self.seed.unwrap_or(0).to_le_bytes());
        for x in self.data.as_slice() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        util::write_atomic(path.as_ref(), &buf)
    }

    pub fn load_binary<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut header = [0u8; 4 + 1 + 24];
        f.read_exact(&mut header)
            .map_err(|_| Error::Format("panel file truncated".into()))?;
        if &header[0..4] != PANEL_MAGIC {
            return Err(Error::Format("bad magic, not an HDCV panel".into()));
        }
        if header[4] != PANEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported panel version {}",
                header[4]
            )));
        }
        let n = u64::from_le_bytes(header[5..13].try_into().unwrap()) as usize;
        let d = u64::from_le_bytes(header[13..21].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(header[21..29].try_into().unwrap());
        let mut raw = Vec::new();
        f.read_to_end(&mut raw)?;
        if raw.len() != 8 * n * d {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                8 * n * d,
                raw.len()
            )));
        }
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut panel = SeriesPanel::from_matrix(Mat::from_vec(n, d, data)?)?;
        if !panel.all_finite() {
            return Err(Error::Format("panel contains non-finite entries".into()));
        }
        panel.seed = Some(seed);
        Ok(panel)
    }

    /// Dispatch on extension: `.csv` text, anything else binary.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        match path.as_ref().extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::load_csv(path),
            _ => Self::load_binary(path),
        }
    }
}

/// Store a bare matrix in the panel binary container (rows as n, cols as d,
/// seed zero).
pub fn save_matrix_binary<P: AsRef<Path>>(path: P, m: &Mat) -> Result<()> {
    SeriesPanel::from_matrix(m.clone())?.save_binary(path)
}

pub fn load_matrix_binary<P: AsRef<Path>>(path: P) -> Result<Mat> {
    Ok(SeriesPanel::load_binary(path)?.matrix().clone())
}

// ---------------------------------------------------------------------------
// JSON configuration (external interface)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKindConfig {
    WhiteNoise,
    Ar1Geometric { rho: Vec<f64> },
    PowerDecay { scale: Vec<f64> },
    Table { coefficients: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InnovationConfig {
    Gaussian { sigma_sq: f64 },
    StudentT { sigma_sq: f64, df: f64 },
    TwoPointSymmetric { scale: f64 },
}

impl InnovationConfig {
    pub fn build(&self) -> Result<InnovationSpec> {
        match self {
            InnovationConfig::Gaussian { sigma_sq } => InnovationSpec::gaussian(*sigma_sq),
            InnovationConfig::StudentT { sigma_sq, df } => {
                InnovationSpec::student_t(*df, *sigma_sq)
            }
            InnovationConfig::TwoPointSymmetric { scale } => InnovationSpec::two_point(*scale),
        }
    }
}

/// On-disk description of a scheme plus its innovations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub kind: SchemeKindConfig,
    pub theta: f64,
    #[serde(rename = "J")]
    pub j_max: usize,
    pub d: usize,
    pub innovations: InnovationConfig,
}

impl ModelConfig {
    pub fn build(&self) -> Result<(CoefficientScheme, InnovationSpec)> {
        self.build_with_dim(self.d)
    }

    /// Build with an overridden dimension (per-coordinate parameter lists are
    /// cycled), used by experiments that sweep d.
    pub fn build_with_dim(&self, d: usize) -> Result<(CoefficientScheme, InnovationSpec)> {
        let kind = match &self.kind {
            SchemeKindConfig::WhiteNoise => SchemeKind::WhiteNoise,
            SchemeKindConfig::Ar1Geometric { rho } => SchemeKind::Ar1Geometric { rho: rho.clone() },
            SchemeKindConfig::PowerDecay { scale } => SchemeKind::PowerDecay {
                scale: scale.clone(),
            },
            SchemeKindConfig::Table { coefficients } => SchemeKind::Table {
                coefficients: coefficients.clone(),
            },
        };
        let scheme = CoefficientScheme::new(kind, d, self.j_max, self.theta)?;
        let innov = self.innovations.build()?;
        Ok((scheme, innov))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Content hash used as panel provenance.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        util::digest_hex(canonical.as_bytes())
    }
}
