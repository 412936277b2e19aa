//! Projection-vector machinery: the ℓ1-bounded weighting class the limit
//! theory quantifies over, ℓ2-rescaling into it, regular (non-orthogonal)
//! pairs, and rejection-sampled nearly orthogonal families.

use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_TRIES: u64 = 1_000_000;

/// A projection vector with cached ℓ1/ℓ2 norms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    coords: Vec<f64>,
    l1: f64,
    l2: f64,
}

impl WeightVector {
    pub fn new(coords: Vec<f64>) -> Self {
        let l1 = coords.iter().map(|x| x.abs()).sum();
        let l2 = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        WeightVector { coords, l1, l2 }
    }

    /// Unit vector e_j (0-based) in dimension d.
    pub fn unit(j: usize, d: usize) -> Result<Self> {
        if j >= d {
            return Err(Error::IndexOutOfRange { index: j, dim: d });
        }
        let mut coords = vec![0.0; d];
        coords[j] = 1.0;
        Ok(WeightVector {
            coords,
            l1: 1.0,
            l2: 1.0,
        })
    }

    pub fn zero(d: usize) -> Self {
        WeightVector {
            coords: vec![0.0; d],
            l1: 0.0,
            l2: 0.0,
        }
    }

    /// Sparse constructor: distinct in-range support indices with values.
    pub fn sparse(d: usize, support: &[usize], values: &[f64]) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                actual: values.len(),
            });
        }
        let mut coords = vec![0.0; d];
        let mut seen = vec![false; d];
        for (&idx, &val) in support.iter().zip(values) {
            if idx >= d {
                return Err(Error::IndexOutOfRange { index: idx, dim: d });
            }
            if seen[idx] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate support index {idx}"
                )));
            }
            seen[idx] = true;
            coords[idx] = val;
        }
        Ok(WeightVector::new(coords))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn scale(&self, c: f64) -> WeightVector {
        WeightVector::new(self.coords.iter().map(|x| c * x).collect())
    }

    /// The ℓ2-to-ℓ1 rescaling w -> w/d. By Jensen the result satisfies
    /// l1(w/d) <= l2(w)/sqrt(d), so uniformly ℓ2-bounded families land in
    /// the admissible ℓ1 class.
    pub fn l2_rescale(&self) -> WeightVector {
        let d = self.dim() as f64;
        self.scale(1.0 / d)
    }

    pub fn inner(&self, other: &WeightVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Regular pair check: v'w >= c_lower, i.e. the pair is bounded away
    /// from orthogonality. No canonical constant exists, so it is an
    /// explicit argument.
    pub fn is_regular(&self, other: &WeightVector, c_lower: f64) -> Result<bool> {
        Ok(self.inner(other)? >= c_lower)
    }

    /// ℓ2-normalized copy; zero vectors are rejected.
    pub fn normalized(&self) -> Result<WeightVector> {
        if self.l2 == 0.0 {
            return Err(Error::InvalidParameter(
                "cannot normalize the zero vector".into(),
            ));
        }
        Ok(self.scale(1.0 / self.l2))
    }
}

/// An ordered set of (v, w) projection pairs for L-form statistics.
#[derive(Debug, Clone)]
pub struct WeightPairSet {
    pairs: Vec<(WeightVector, WeightVector)>,
    l1_bound: f64,
}

impl WeightPairSet {
    pub fn new(pairs: Vec<(WeightVector, WeightVector)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("weight pair set"));
        }
        let d = pairs[0].0.dim();
        let mut l1_bound = 0.0f64;
        for (v, w) in &pairs {
            if v.dim() != d || w.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: v.dim().max(w.dim()),
                });
            }
            l1_bound = l1_bound.max(v.l1()).max(w.l1());
        }
        Ok(WeightPairSet { pairs, l1_bound })
    }

    /// The d unit pairs (e_j, e_j), j = 0..d-1, used by the trace theory.
    pub fn unit_pairs(d: usize) -> Result<Self> {
        let pairs = (0..d)
            .map(|j| {
                let e = WeightVector::unit(j, d)?;
                Ok((e.clone(), e))
            })
            .collect::<Result<Vec<_>>>()?;
        WeightPairSet::new(pairs)
    }

    /// Pair up a vector family with itself elementwise (v_i, v_i).
    pub fn from_vector_family(vectors: &[WeightVector]) -> Result<Self> {
        WeightPairSet::new(
            vectors
                .iter()
                .map(|v| (v.clone(), v.clone()))
                .collect::<Vec<_>>(),
        )
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.pairs[0].0.dim()
    }

    pub fn l1_bound(&self) -> f64 {
        self.l1_bound
    }

    pub fn pairs(&self) -> &[(WeightVector, WeightVector)] {
        &self.pairs
    }

    pub fn pair(&self, j: usize) -> &(WeightVector, WeightVector) {
        &self.pairs[j]
    }

    /// True when the set is exactly the ordered unit pairs (e_j, e_j).
    pub fn is_unit_family(&self) -> bool {
        let d = self.dim();
        if self.len() != d {
            return false;
        }
        self.pairs.iter().enumerate().all(|(j, (v, w))| {
            v == w
                && v.coords()
                    .iter()
                    .enumerate()
                    .all(|(k, &x)| if k == j { x == 1.0 } else { x == 0.0 })
        })
    }
}

/// Max |v_i'v_j| over distinct members.
pub fn coherence(vectors: &[WeightVector]) -> Result<f64> {
    if vectors.len() < 2 {
        return Err(Error::EmptyInput("coherence needs at least two vectors"));
    }
    let mut worst = 0.0f64;
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            worst = worst.max(vectors[i].inner(&vectors[j])?.abs());
        }
    }
    Ok(worst)
}

/// Rejection-sample `m` unit vectors on the sphere in dimension `d` with
/// pairwise coherence at most `a * d^(-1/2)`, where `1/2 <= a <= sqrt(d)/2`.
///
/// Uniform directions are drawn as normalized gaussians and accepted if they
/// keep the running coherence below the target. Failure after `max_tries`
/// rejections per vector signals that `m` is too large for `(d, a)` — the
/// sphere-packing ceiling — and reports the best family coherence seen.
pub fn near_orthogonal_family(
    d: usize,
    m: usize,
    a: f64,
    seed: u64,
    max_tries: u64,
) -> Result<Vec<WeightVector>> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidParameter("d and m must be positive".into()));
    }
    let a_max = 0.5 * (d as f64).sqrt();
    if !(0.5..=a_max).contains(&a) {
        return Err(Error::InvalidParameter(format!(
            "coherence parameter must satisfy 1/2 <= A <= sqrt(d)/2, got {a} (d = {d})"
        )));
    }
    let threshold = a / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<WeightVector> = Vec::with_capacity(m);
    while accepted.len() < m {
        let mut tries = 0u64;
        // Best (smallest) max-inner-product achieved for this slot, so a
        // failure can report how close the sampler got.
        let mut best_excess = f64::INFINITY;
        loop {
            if tries >= max_tries {
                let prefix_coh = if accepted.len() >= 2 {
                    coherence(&accepted)?
                } else {
                    0.0
                };
                return Err(Error::CoherenceUnreachable {
                    tries,
                    best_coherence: prefix_coh.max(best_excess),
                });
            }
            tries += 1;
            let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let cand = WeightVector::new(raw).normalized()?;
            let mut max_inner = 0.0f64;
            for v in &accepted {
                max_inner = max_inner.max(v.inner(&cand)?.abs());
            }
            if max_inner <= threshold {
                accepted.push(cand);
                break;
            }
            best_excess = best_excess.min(max_inner);
        }
    }
    Ok(accepted)
}

// ---------------------------------------------------------------------------
// JSON interface
// ---------------------------------------------------------------------------

/// One vector in a weights file: dense coords or sparse support/values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightVectorConfig {
    Sparse {
        d: usize,
        support: Vec<usize>,
        values: Vec<f64>,
    },
    Dense {
        coords: Vec<f64>,
    },
}

impl WeightVectorConfig {
    pub fn build(&self) -> Result<WeightVector> {
        match self {
            WeightVectorConfig::Dense { coords } => Ok(WeightVector::new(coords.clone())),
            WeightVectorConfig::Sparse { d, support, values } => {
                WeightVector::sparse(*d, support, values)
            }
        }
    }

    pub fn from_vector(v: &WeightVector) -> Self {
        WeightVectorConfig::Dense {
            coords: v.coords().to_vec(),
        }
    }
}

/// Weights file: `{"vectors": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsFile {
    pub vectors: Vec<WeightVectorConfig>,
}

impl WeightsFile {
    pub fn build(&self) -> Result<Vec<WeightVector>> {
        self.vectors.iter().map(|c| c.build()).collect()
    }

    pub fn from_vectors(vectors: &[WeightVector]) -> Self {
        WeightsFile {
            vectors: vectors
                .iter()
                .map(WeightVectorConfig::from_vector)
                .collect(),
        }
    }

    pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        crate::util::write_atomic(path.as_ref(), text.as_bytes())
    }
}
