//! Diagonal quadratic forms of signature `(p, q)` and causal classification.
//!
//! A [`PseudoMetric`] evaluates `Q(v) = sum a_i v+_i^2 - sum b_j v-_j^2` on a vector
//! split into its spatial block `v+` (length `p`) and temporal block `v-` (length `q`).
//! The zero vector is classified as lightlike.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Default relative tolerance for sign decisions.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricRepr", into = "MetricRepr")]
pub struct PseudoMetric {
    spatial_weights: Vec<f64>,
    temporal_weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MetricRepr {
    p: usize,
    q: usize,
    spatial_weights: Vec<f64>,
    temporal_weights: Vec<f64>,
}

impl TryFrom<MetricRepr> for PseudoMetric {
    type Error = Error;

    fn try_from(r: MetricRepr) -> Result<Self> {
        if r.spatial_weights.len() != r.p || r.temporal_weights.len() != r.q {
            return Err(Error::InvalidMetric(format!(
                "declared signature ({}, {}) but weights have lengths ({}, {})",
                r.p,
                r.q,
                r.spatial_weights.len(),
                r.temporal_weights.len()
            )));
        }
        PseudoMetric::new(r.spatial_weights, r.temporal_weights)
    }
}

impl From<PseudoMetric> for MetricRepr {
    fn from(g: PseudoMetric) -> Self {
        MetricRepr {
            p: g.p(),
            q: g.q(),
            spatial_weights: g.spatial_weights,
            temporal_weights: g.temporal_weights,
        }
    }
}

impl PseudoMetric {
    pub fn new(spatial_weights: Vec<f64>, temporal_weights: Vec<f64>) -> Result<Self> {
        if spatial_weights.is_empty() || temporal_weights.is_empty() {
            return Err(Error::InvalidMetric(
                "both p and q must be positive".to_string(),
            ));
        }
        if let Some(w) = spatial_weights
            .iter()
            .chain(&temporal_weights)
            .find(|w| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidMetric(format!(
                "weights must be finite and strictly positive, got {w}"
            )));
        }
        Ok(Self {
            spatial_weights,
            temporal_weights,
        })
    }

    /// The standard form of `R^{p,q}`, all weights 1.
    pub fn standard(p: usize, q: usize) -> Result<Self> {
        Self::new(vec![1.0; p], vec![1.0; q])
    }

    /// Constant temporal weight `b` with unit spatial weights, e.g. `g_-` for `b = 2`.
    pub fn with_temporal_scale(p: usize, q: usize, b: f64) -> Result<Self> {
        Self::new(vec![1.0; p], vec![b; q])
    }

    pub fn p(&self) -> usize {
        self.spatial_weights.len()
    }

    pub fn q(&self) -> usize {
        self.temporal_weights.len()
    }

    pub fn dim(&self) -> usize {
        self.p() + self.q()
    }

    pub fn spatial_weights(&self) -> &[f64] {
        &self.spatial_weights
    }

    pub fn temporal_weights(&self) -> &[f64] {
        &self.temporal_weights
    }

    pub fn has_unit_weights(&self) -> bool {
        self.spatial_weights
            .iter()
            .chain(&self.temporal_weights)
            .all(|&w| w == 1.0)
    }

    /// Diagonal entry of the form on axis `i` (negative on temporal axes).
    pub fn diagonal(&self, i: usize) -> f64 {
        let p = self.p();
        if i < p {
            self.spatial_weights[i]
        } else {
            -self.temporal_weights[i - p]
        }
    }

    pub fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `Q(v)`. The caller guarantees `v.len() == p + q`.
    pub fn quadratic(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        (0..self.dim()).map(|i| self.diagonal(i) * v[i] * v[i]).sum()
    }

    /// Polarization `B(u, v)` of `Q`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        (0..self.dim()).map(|i| self.diagonal(i) * u[i] * v[i]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalClass {
    Spacelike,
    Lightlike,
    Timelike,
}

impl CausalClass {
    pub fn is_causal(self) -> bool {
        matches!(self, CausalClass::Lightlike | CausalClass::Timelike)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubspaceClass {
    Spacelike,
    Lightlike,
    /// Negative semi-definite with at least one strictly negative direction.
    Causal,
    Timelike,
    Mixed,
}

impl SubspaceClass {
    pub fn is_causal(self) -> bool {
        matches!(
            self,
            SubspaceClass::Lightlike | SubspaceClass::Causal | SubspaceClass::Timelike
        )
    }
}

fn classify_value(value: f64, scale: f64, tol: f64) -> CausalClass {
    if value < -tol * scale {
        CausalClass::Timelike
    } else if value > tol * scale {
        CausalClass::Spacelike
    } else {
        CausalClass::Lightlike
    }
}

pub fn classify_vector(g: &PseudoMetric, v: &[f64], tol: f64) -> Result<CausalClass> {
    g.check_dim(v)?;
    Ok(classify_value(g.quadratic(v), linalg::norm_sq(v), tol))
}

/// Class of the segment `[x, y]`, i.e. of `y - x`.
pub fn classify_segment(g: &PseudoMetric, x: &[f64], y: &[f64], tol: f64) -> Result<CausalClass> {
    g.check_dim(x)?;
    g.check_dim(y)?;
    classify_vector(g, &linalg::sub(y, x), tol)
}

/// Classifies `span(basis)` by the eigenvalue signs of its Gram matrix.
pub fn classify_subspace(g: &PseudoMetric, basis: &[Vec<f64>], tol: f64) -> Result<SubspaceClass> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("empty basis".to_string()));
    }
    let n = g.dim();
    for v in basis {
        g.check_dim(v)?;
    }
    let k = basis.len();
    if k > n {
        return Err(Error::DependentBasis);
    }
    let flat: Vec<f64> = basis.iter().flatten().copied().collect();
    let sv = linalg::singular_values(k, n, &flat);
    let rank_tol = tol.max(1e-12) * sv[0];
    if sv.len() < k || sv[k - 1] <= rank_tol {
        return Err(Error::DependentBasis);
    }

    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = g.bilinear(&basis[i], &basis[j]);
        }
    }
    let scale = basis.iter().map(|v| linalg::norm_sq(v)).fold(0.0, f64::max);
    let band = tol * scale;
    let ev = linalg::symmetric_eigenvalues(k, &gram);

    let class = if ev.iter().all(|&l| l < -band) {
        SubspaceClass::Timelike
    } else if ev.iter().all(|&l| l.abs() <= band) {
        SubspaceClass::Lightlike
    } else if ev.iter().all(|&l| l <= band) {
        SubspaceClass::Causal
    } else if ev.iter().all(|&l| l > band) {
        SubspaceClass::Spacelike
    } else {
        SubspaceClass::Mixed
    };
    Ok(class)
}

/// `true` iff every causal vector of `g2` is causal for `g1`.
///
/// For diagonal forms this is `max_i a1_i / a2_i <= min_j b1_j / b2_j`; the
/// comparison accepts a relative band of [`DEFAULT_TOL`].
pub fn metric_leq(g1: &PseudoMetric, g2: &PseudoMetric) -> Result<bool> {
    if g1.p() != g2.p() || g1.q() != g2.q() {
        return Err(Error::SignatureMismatch(g1.p(), g1.q(), g2.p(), g2.q()));
    }
    let max_spatial = g1
        .spatial_weights
        .iter()
        .zip(&g2.spatial_weights)
        .map(|(a1, a2)| a1 / a2)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_temporal = g1
        .temporal_weights
        .iter()
        .zip(&g2.temporal_weights)
        .map(|(b1, b2)| b1 / b2)
        .fold(f64::INFINITY, f64::min);
    Ok(max_spatial <= min_temporal * (1.0 + DEFAULT_TOL))
}

/// Unit vectors drawn direction-uniformly from the causal cone of `g`.
///
/// Rejection sampling from the uniform sphere; the output depends only on `seed`.
pub fn cone_sample(g: &PseudoMetric, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = linalg::norm(&v);
        if r < 1e-300 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= r);
        if g.quadratic(&v) <= 0.0 {
            out.push(v);
        }
    }
    out
}
