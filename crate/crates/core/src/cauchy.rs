//! Spacelike Cauchy surfaces and their intersection with inextendible causal graphs.
//!
//! A causal graph `{(f(x), x)}` with `f` 1-Lipschitz and a surface `{(y, w(y))}` with
//! `w` k-contracting meet where `x = w(f(x))`. The composition is a k-contraction,
//! so Picard iteration converges to the unique intersection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::lipgraph::{lipschitz_constant, GraphSamples, LipMap, LipRepr, LipschitzEval};
use crate::{Error, Result};

/// Slack below 1 required of a spacelike map's certified constant.
pub const SPACELIKE_MARGIN: f64 = 1e-9;

/// Slack above 1 tolerated on a causal map's certified constant.
pub const CAUSAL_SLACK: f64 = 1e-9;

/// A map `R^p -> R^q` with certified constant `k < 1`, whose graph is spacelike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LipMap", into = "LipMap")]
pub struct SpacelikeMap(LipMap);

impl TryFrom<LipMap> for SpacelikeMap {
    type Error = Error;

    fn try_from(map: LipMap) -> Result<Self> {
        SpacelikeMap::new(map)
    }
}

impl From<SpacelikeMap> for LipMap {
    fn from(s: SpacelikeMap) -> Self {
        s.0
    }
}

impl SpacelikeMap {
    pub fn new(map: LipMap) -> Result<Self> {
        let k = map.certified_constant();
        if k >= 1.0 - SPACELIKE_MARGIN {
            return Err(Error::NotStrictlyContracting { constant: k });
        }
        if let LipRepr::Interpolant { samples, .. } = map.repr() {
            let data = lipschitz_constant(samples);
            if data >= 1.0 {
                return Err(Error::NotStrictlyContracting { constant: data });
            }
        }
        Ok(Self(map))
    }

    pub fn map(&self) -> &LipMap {
        &self.0
    }

    pub fn constant(&self) -> f64 {
        self.0.certified_constant()
    }

    /// `w(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.eval(x)
    }

    /// The point `(x, w(x))` of the surface.
    pub fn graph_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let t = self.0.eval(x)?;
        Ok(x.iter().chain(&t).copied().collect())
    }
}

impl LipschitzEval for SpacelikeMap {
    fn source_dim(&self) -> usize {
        self.0.source_dim()
    }

    fn target_dim(&self) -> usize {
        self.0.target_dim()
    }

    fn lipschitz_bound(&self) -> f64 {
        self.constant()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    /// Temporal coordinates `x*` of the intersection.
    pub time: Vec<f64>,
    /// The intersection point `(f(x*), x*)`.
    pub point: Vec<f64>,
    pub iterations: usize,
    /// `|x_{n+1} - x_n|` for every step taken.
    pub steps: Vec<f64>,
    /// Contraction constant of the composition `w o f`.
    pub contraction: f64,
}

/// Meets the graph of `f: R^q -> R^p` with the graph of `w: R^p -> R^q`.
///
/// Stops once `|x_{n+1} - x_n| <= tol (1 - k) / k`, which bounds the distance to the
/// true fixed point by `tol`.
pub fn intersect_fixed_point<F, W>(f: &F, w: &W, x0: &[f64], opts: &FixedPointOptions) -> Result<Intersection>
where
    F: LipschitzEval + ?Sized,
    W: LipschitzEval + ?Sized,
{
    let q = f.source_dim();
    let p = f.target_dim();
    if w.source_dim() != p {
        return Err(Error::DimensionMismatch { expected: p, found: w.source_dim() });
    }
    if w.target_dim() != q {
        return Err(Error::DimensionMismatch { expected: q, found: w.target_dim() });
    }
    if x0.len() != q {
        return Err(Error::DimensionMismatch { expected: q, found: x0.len() });
    }
    let kf = f.lipschitz_bound();
    if kf > 1.0 + CAUSAL_SLACK {
        return Err(Error::LipschitzViolation { constant: kf, bound: 1.0 });
    }
    let kw = w.lipschitz_bound();
    if kw >= 1.0 - SPACELIKE_MARGIN {
        return Err(Error::NotStrictlyContracting { constant: kw });
    }
    let k = kf * kw;
    let threshold = if k > 0.0 { opts.tol * (1.0 - k) / k } else { opts.tol };

    let mut x = x0.to_vec();
    let mut steps = Vec::new();
    for it in 1..=opts.max_iter {
        let y = f.eval(&x)?;
        let next = w.eval(&y)?;
        let step = linalg::dist(&next, &x);
        steps.push(step);
        x = next;
        if step <= threshold {
            let y = f.eval(&x)?;
            let point = y.into_iter().chain(x.iter().copied()).collect();
            return Ok(Intersection {
                time: x,
                point,
                iterations: it,
                steps,
                contraction: k,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: steps.last().copied().unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub trials: usize,
    /// Trials whose two starts met the surface at the same point (within `10 tol`).
    pub unique_intersections: usize,
    /// Largest number of distinct intersection points seen in one trial.
    pub max_intersections: usize,
    pub max_discrepancy: f64,
    /// Largest `|w(f(x*)) - x*|`.
    pub max_residual: f64,
    pub failures: Vec<String>,
}

impl CauchyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.unique_intersections == self.trials && self.max_intersections <= 1
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random affine map `R^q -> R^p` with operator norm `norm`.
pub fn random_affine(rng: &mut ChaCha8Rng, rows: usize, cols: usize, norm: f64) -> LipMap {
    let mut matrix: Vec<Vec<f64>> = (0..rows).map(|_| random_vec(rng, cols)).collect();
    let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
    let current = linalg::operator_norm(rows, cols, &flat);
    if current > 0.0 {
        let s = norm / current;
        matrix.iter_mut().flatten().for_each(|a| *a *= s);
    }
    let offset = random_vec(rng, rows);
    LipMap::affine(matrix, offset).expect("well-formed random affine map")
}

/// Random Kirszbraun interpolant `R^q -> R^p` whose data constant is at most `bound`.
pub fn random_interpolant(rng: &mut ChaCha8Rng, source_dim: usize, target_dim: usize, n: usize, bound: f64) -> LipMap {
    let sources: Vec<Vec<f64>> = (0..n).map(|_| random_vec(rng, source_dim)).collect();
    let mut targets: Vec<Vec<f64>> = (0..n).map(|_| random_vec(rng, target_dim)).collect();
    let raw = GraphSamples::new(sources.clone(), targets.clone()).expect("distinct random sources");
    let k = lipschitz_constant(&raw);
    if k > 0.0 {
        let s = bound * rng.random_range(0.5..1.0) / k;
        targets.iter_mut().flatten().for_each(|v| *v *= s);
    }
    let samples = GraphSamples::new(sources, targets).expect("distinct random sources");
    LipMap::interpolant(samples, bound).expect("data within bound")
}

/// Checks that random causal graphs meet the surface `graph(w)` exactly once.
pub fn verify_cauchy_surface(w: &SpacelikeMap, trial_count: usize, seed: u64, opts: &FixedPointOptions) -> Result<CauchyReport> {
    if trial_count == 0 {
        return Err(Error::InvalidArgument("trial_count must be positive".into()));
    }
    let p = w.source_dim();
    let q = w.target_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CauchyReport {
        trials: trial_count,
        unique_intersections: 0,
        max_intersections: 0,
        max_discrepancy: 0.0,
        max_residual: 0.0,
        failures: Vec::new(),
    };
    for trial in 0..trial_count {
        let f = if trial % 2 == 0 {
            let norm = rng.random_range(0.0..=1.0);
            random_affine(&mut rng, p, q, norm)
        } else {
            let n = rng.random_range(2..=8);
            random_interpolant(&mut rng, q, p, n, 1.0)
        };
        let starts = [vec![0.0; q], random_vec(&mut rng, q).iter().map(|v| 3.0 * v).collect()];
        let mut found: Vec<Vec<f64>> = Vec::new();
        for x0 in &starts {
            match intersect_fixed_point(&f, w, x0, opts) {
                Ok(hit) => {
                    let residual = linalg::dist(&w.eval(&f.eval(&hit.time)?)?, &hit.time);
                    report.max_residual = report.max_residual.max(residual);
                    found.push(hit.time);
                }
                Err(e) => report.failures.push(format!("trial {trial}: {e}")),
            }
        }
        if found.len() == 2 {
            let d = linalg::dist(&found[0], &found[1]);
            report.max_discrepancy = report.max_discrepancy.max(d);
            let distinct = if d <= 10.0 * opts.tol { 1 } else { 2 };
            report.max_intersections = report.max_intersections.max(distinct);
            if distinct == 1 {
                report.unique_intersections += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(slope: f64, offset: f64) -> LipMap {
        LipMap::affine(vec![vec![slope]], vec![offset]).unwrap()
    }

    #[test]
    fn constant_maps_meet_in_one_step() {
        let f = line(0.0, 3.0);
        let w = SpacelikeMap::new(line(0.0, -2.0)).unwrap();
        let hit = intersect_fixed_point(&f, &w, &[0.0], &FixedPointOptions::default()).unwrap();
        assert_eq!(hit.time, vec![-2.0]);
        assert_eq!(hit.point, vec![3.0, -2.0]);
        assert!(hit.iterations <= 2);
    }

    #[test]
    fn linear_contraction_to_origin() {
        let f = line(1.0, 0.0);
        let w = SpacelikeMap::new(line(0.5, 0.0)).unwrap();
        let hit = intersect_fixed_point(&f, &w, &[5.0], &FixedPointOptions::default()).unwrap();
        assert!(hit.time[0].abs() <= 1e-10);
    }

    #[test]
    fn shifted_line() {
        // x = (x + 1) / 2
        let f = line(1.0, 1.0);
        let w = SpacelikeMap::new(line(0.5, 0.0)).unwrap();
        let hit = intersect_fixed_point(&f, &w, &[0.0], &FixedPointOptions::default()).unwrap();
        assert!((hit.time[0] - 1.0).abs() <= 1e-10);
        assert!((hit.point[0] - 2.0).abs() <= 1e-10);
        for pair in hit.steps.windows(2) {
            assert!(pair[1] <= 0.5 * pair[0] + 1e-12);
        }
    }

    #[test]
    fn rejects_non_contracting_surface() {
        assert!(matches!(SpacelikeMap::new(line(1.0, 0.0)), Err(Error::NotStrictlyContracting { .. })));
        let steep = line(1.5, 0.0);
        let w = SpacelikeMap::new(line(0.5, 0.0)).unwrap();
        assert!(matches!(
            intersect_fixed_point(&steep, &w, &[0.0], &FixedPointOptions::default()),
            Err(Error::LipschitzViolation { .. })
        ));
    }

    #[test]
    fn iteration_budget_exhausted() {
        let f = line(1.0, 1.0);
        let w = SpacelikeMap::new(line(0.999, 0.0)).unwrap();
        let opts = FixedPointOptions { tol: 1e-12, max_iter: 10 };
        let err = intersect_fixed_point(&f, &w, &[0.0], &opts).unwrap_err();
        assert!(err.is_convergence_failure());
    }

    #[test]
    fn flat_surface_report() {
        let w = SpacelikeMap::new(LipMap::constant(vec![0.0, 0.0], 2).unwrap()).unwrap();
        let report = verify_cauchy_surface(&w, 20, 1, &FixedPointOptions::default()).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(verify_cauchy_surface(&w, 0, 1, &FixedPointOptions::default()).is_err());
    }

    #[test]
    fn tilted_surface_report() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = SpacelikeMap::new(random_affine(&mut rng, 2, 3, 0.9)).unwrap();
        let opts = FixedPointOptions::default();
        let report = verify_cauchy_surface(&w, 40, 9, &opts).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.max_discrepancy <= 10.0 * opts.tol);
    }
}
