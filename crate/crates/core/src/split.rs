//! Product examples: speed bound, path lifting, and the splitting map on shift foliations.
//!
//! The time function is the projection onto the temporal block. A foliation is
//! given by a shift `W: R^q -> R^p` with constant below 1; its leaves are the
//! timelike graphs `{(p0 + W(y), y)}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cauchy::{intersect_fixed_point, FixedPointOptions, SpacelikeMap};
use crate::linalg;
use crate::lipgraph::{LipMap, LipschitzEval};
use crate::pqform::{classify_vector, CausalClass, PseudoMetric};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedBound {
    /// `|v+|^2 + |v-|^2`.
    pub lhs: f64,
    /// `2 |v-|^2`.
    pub rhs: f64,
    pub ok: bool,
}

/// Compares the Euclidean norm of a causal vector with twice its temporal part.
pub fn check_speed_bound(g: &PseudoMetric, v: &[f64], tol: f64) -> Result<SpeedBound> {
    if !g.has_unit_weights() {
        return Err(Error::InvalidMetric("speed bound needs unit weights".into()));
    }
    if classify_vector(g, v, tol)? == CausalClass::Spacelike {
        return Err(Error::SpacelikeInput);
    }
    let p = g.p();
    let spatial = linalg::norm_sq(&v[..p]);
    let temporal = linalg::norm_sq(&v[p..]);
    let lhs = spatial + temporal;
    let rhs = 2.0 * temporal;
    Ok(SpeedBound { lhs, rhs, ok: lhs <= rhs + tol })
}

/// Lifts a path in `R^q` to the graph of `section`, as points `(section(y), y)`.
pub fn lift_path(section: &LipMap, base_path: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if base_path.is_empty() {
        return Err(Error::InvalidArgument("empty base path".into()));
    }
    let values = section.eval_batch(base_path)?;
    Ok(values
        .into_iter()
        .zip(base_path)
        .map(|(v, y)| v.into_iter().chain(y.iter().copied()).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FoliationRepr", into = "FoliationRepr")]
pub struct FoliationWitness {
    shift: LipMap,
}

#[derive(Serialize, Deserialize)]
struct FoliationRepr {
    shift: LipMap,
}

impl TryFrom<FoliationRepr> for FoliationWitness {
    type Error = Error;

    fn try_from(repr: FoliationRepr) -> Result<Self> {
        Self::new(repr.shift)
    }
}

impl From<FoliationWitness> for FoliationRepr {
    fn from(fol: FoliationWitness) -> Self {
        Self { shift: fol.shift }
    }
}

impl FoliationWitness {
    pub fn new(shift: LipMap) -> Result<Self> {
        let k = shift.certified_constant();
        if k >= 1.0 {
            return Err(Error::NotStrictlyContracting { constant: k });
        }
        Ok(Self { shift })
    }

    pub fn shift(&self) -> &LipMap {
        &self.shift
    }

    pub fn p(&self) -> usize {
        self.shift.target_dim()
    }

    pub fn q(&self) -> usize {
        self.shift.source_dim()
    }

    /// Label `p0 = pt+ - W(pt-)` of the leaf through `pt`.
    pub fn leaf_id(&self, pt: &[f64]) -> Result<Vec<f64>> {
        let p = self.p();
        if pt.len() != p + self.q() {
            return Err(Error::DimensionMismatch { expected: p + self.q(), found: pt.len() });
        }
        let shift = self.shift.eval(&pt[p..])?;
        Ok(pt[..p].iter().zip(&shift).map(|(a, b)| a - b).collect())
    }

    pub fn leaf(&self, leaf_id: Vec<f64>) -> Leaf<'_> {
        Leaf { shift: &self.shift, leaf_id }
    }

    /// The point `(p0 + W(time), time)` of leaf `p0`.
    pub fn leaf_point(&self, leaf_id: &[f64], time: &[f64]) -> Result<Vec<f64>> {
        let shift = self.shift.eval(time)?;
        Ok(leaf_id.iter().zip(&shift).map(|(a, b)| a + b).chain(time.iter().copied()).collect())
    }
}

/// One leaf `y -> p0 + W(y)` as a map from the temporal base.
pub struct Leaf<'a> {
    shift: &'a LipMap,
    leaf_id: Vec<f64>,
}

impl LipschitzEval for Leaf<'_> {
    fn source_dim(&self) -> usize {
        self.shift.source_dim()
    }

    fn target_dim(&self) -> usize {
        self.shift.target_dim()
    }

    fn lipschitz_bound(&self) -> f64 {
        self.shift.certified_constant()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.shift.eval(x)?;
        Ok(self.leaf_id.iter().zip(&s).map(|(a, b)| a + b).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelSetSurface(pub SpacelikeMap);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    /// Where the leaf through the input meets the level set.
    pub leaf_point: Vec<f64>,
    pub time: Vec<f64>,
}

fn check_pair(fol: &FoliationWitness, level: &LevelSetSurface) -> Result<()> {
    let w = level.0.map();
    if w.source_dim() != fol.p() || w.target_dim() != fol.q() {
        return Err(Error::DimensionMismatch { expected: fol.p(), found: w.source_dim() });
    }
    Ok(())
}

/// Sends `pt` to the intersection of its leaf with the level set, paired with `pt-`.
pub fn splitting_map(fol: &FoliationWitness, level: &LevelSetSurface, pt: &[f64], tol: f64) -> Result<SplitPoint> {
    check_pair(fol, level)?;
    let p = fol.p();
    let leaf_id = fol.leaf_id(pt)?;
    let leaf = fol.leaf(leaf_id);
    let opts = FixedPointOptions { tol, ..FixedPointOptions::default() };
    let hit = intersect_fixed_point(&leaf, &level.0, &pt[p..], &opts)?;
    Ok(SplitPoint { leaf_point: hit.point, time: pt[p..].to_vec() })
}

/// Inverse of [`splitting_map`]: the point at `time` on the leaf through `leaf_point`.
pub fn reconstruct(fol: &FoliationWitness, split: &SplitPoint) -> Result<Vec<f64>> {
    let leaf_id = fol.leaf_id(&split.leaf_point)?;
    fol.leaf_point(&leaf_id, &split.time)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub samples: usize,
    pub max_error: f64,
    pub collisions: usize,
    pub failures: Vec<String>,
    pub tol: f64,
}

impl SplitReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.collisions == 0 && self.max_error <= 10.0 * self.tol
    }
}

/// Round-trips random points of `[-2, 2]^{p+q}` through the splitting map.
pub fn verify_splitting_bijectivity(
    fol: &FoliationWitness,
    level: &LevelSetSurface,
    sample_count: usize,
    seed: u64,
    tol: f64,
) -> Result<SplitReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be positive".into()));
    }
    check_pair(fol, level)?;
    let n = fol.p() + fol.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(sample_count);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(sample_count);
    let mut max_error = 0.0f64;
    let mut failures = Vec::new();
    for k in 0..sample_count {
        let pt: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        match splitting_map(fol, level, &pt, tol).and_then(|s| Ok((reconstruct(fol, &s)?, s))) {
            Ok((back, s)) => {
                max_error = max_error.max(linalg::dist(&back, &pt));
                images.push(s.leaf_point.into_iter().chain(s.time).collect());
                inputs.push(pt);
            }
            Err(e) => failures.push(format!("sample {k}: {e}")),
        }
    }
    let mut collisions = 0;
    for i in 0..images.len() {
        for j in 0..i {
            if linalg::dist(&images[i], &images[j]) <= tol && linalg::dist(&inputs[i], &inputs[j]) > 10.0 * tol {
                collisions += 1;
            }
        }
    }
    Ok(SplitReport { samples: sample_count, max_error, collisions, failures, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipgraph::GraphSamples;

    fn g11() -> PseudoMetric {
        PseudoMetric::standard(1, 1).unwrap()
    }

    fn flat(p: usize, q: usize) -> LevelSetSurface {
        LevelSetSurface(SpacelikeMap::new(LipMap::constant(vec![0.0; q], p).unwrap()).unwrap())
    }

    #[test]
    fn speed_bound_examples() {
        let b = check_speed_bound(&g11(), &[1.0, 1.0], 1e-12).unwrap();
        assert_eq!((b.lhs, b.rhs, b.ok), (2.0, 2.0, true));
        let b = check_speed_bound(&g11(), &[0.0, 1.0], 1e-12).unwrap();
        assert_eq!((b.lhs, b.rhs, b.ok), (1.0, 2.0, true));
        assert!(matches!(check_speed_bound(&g11(), &[1.0, 0.0], 1e-12), Err(Error::SpacelikeInput)));
    }

    #[test]
    fn lift_examples() {
        let c = LipMap::constant(vec![0.7], 1).unwrap();
        let lifted = lift_path(&c, &[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(lifted, vec![vec![0.7, 0.0], vec![0.7, 1.0]]);

        let a = LipMap::affine(vec![vec![0.5]], vec![0.0]).unwrap();
        let lifted = lift_path(&a, &[vec![0.0], vec![2.0]]).unwrap();
        let d: Vec<f64> = lifted[1].iter().zip(&lifted[0]).map(|(x, y)| x - y).collect();
        assert!((g11().quadratic(&d) - (0.25 - 1.0) * 4.0).abs() < 1e-12);
        assert!(lift_path(&a, &[]).is_err());
    }

    #[test]
    fn pure_product() {
        let fol = FoliationWitness::new(LipMap::constant(vec![0.0, 0.0], 1).unwrap()).unwrap();
        let level = flat(2, 1);
        let s = splitting_map(&fol, &level, &[1.0, -2.0, 3.0], 1e-12).unwrap();
        assert_eq!(s.leaf_point, vec![1.0, -2.0, 0.0]);
        assert_eq!(s.time, vec![3.0]);
        assert_eq!(reconstruct(&fol, &s).unwrap(), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn sheared_leaf() {
        let fol = FoliationWitness::new(LipMap::affine(vec![vec![0.5]], vec![0.0]).unwrap()).unwrap();
        let level = flat(1, 1);
        assert_eq!(fol.leaf_id(&[1.0, 2.0]).unwrap(), vec![0.0]);
        let s = splitting_map(&fol, &level, &[1.0, 2.0], 1e-12).unwrap();
        assert!(linalg::norm(&s.leaf_point) < 1e-12);
        assert_eq!(s.time, vec![2.0]);
        assert!(linalg::dist(&reconstruct(&fol, &s).unwrap(), &[1.0, 2.0]) < 1e-12);

        let other = splitting_map(&fol, &level, &[1.5, 3.0], 1e-12).unwrap();
        assert!(linalg::dist(&other.leaf_point, &s.leaf_point) < 1e-12);
        assert_ne!(other.time, s.time);
    }

    #[test]
    fn bijectivity_reports() {
        let fol = FoliationWitness::new(LipMap::constant(vec![0.0], 1).unwrap()).unwrap();
        let r = verify_splitting_bijectivity(&fol, &flat(1, 1), 1000, 3, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(verify_splitting_bijectivity(&fol, &flat(1, 1), 0, 3, 1e-10).is_err());

        let samples = GraphSamples::new(
            vec![vec![0.0], vec![1.0], vec![-1.0]],
            vec![vec![0.0], vec![0.9], vec![0.3]],
        )
        .unwrap();
        let twisted = FoliationWitness::new(LipMap::interpolant(samples, 0.9).unwrap()).unwrap();
        let tilted = LevelSetSurface(SpacelikeMap::new(LipMap::affine(vec![vec![0.4]], vec![0.1]).unwrap()).unwrap());
        let r = verify_splitting_bijectivity(&twisted, &tilted, 200, 4, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn rejects_non_contracting_shift() {
        assert!(FoliationWitness::new(LipMap::affine(vec![vec![1.0]], vec![0.0]).unwrap()).is_err());
    }
}
