//! Inextendible causal maps as graphs of Lipschitz maps `R^q -> R^p`.
//!
//! A causal map is stored through a finite witness of its graph ([`GraphSamples`])
//! and evaluated anywhere by Kirszbraun extension: the value at `x` is a point of
//! the intersection of the balls `B(y_i, L |x - x_i|)`, found by extrapolated
//! averaged projections started from the inverse-distance-weighted mean of targets.
//!
//! A single [`LipMap::eval`] is a deterministic function of the query. Two separate
//! evaluations are each consistent with the witness but not necessarily with each
//! other; [`LipMap::eval_batch`] and [`ExtensionSession`] extend one point at a time
//! so that all values of a batch are mutually consistent.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::pqform::{classify_segment, CausalClass, PseudoMetric};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendOptions {
    /// Residual tolerance on the ball constraints.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100_000,
        }
    }
}

/// Finite graph witness: `sources[i] -> targets[i]`, sources pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SamplesRepr", into = "SamplesRepr")]
pub struct GraphSamples {
    sources: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SamplesRepr {
    sources: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl TryFrom<SamplesRepr> for GraphSamples {
    type Error = Error;

    fn try_from(r: SamplesRepr) -> Result<Self> {
        GraphSamples::new(r.sources, r.targets)
    }
}

impl From<GraphSamples> for SamplesRepr {
    fn from(s: GraphSamples) -> Self {
        SamplesRepr {
            sources: s.sources,
            targets: s.targets,
        }
    }
}

impl GraphSamples {
    pub fn new(sources: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::InvalidArgument("graph samples must be nonempty".into()));
        }
        if sources.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} sources but {} targets",
                sources.len(),
                targets.len()
            )));
        }
        let sd = sources[0].len();
        let td = targets[0].len();
        if sd == 0 || td == 0 {
            return Err(Error::InvalidArgument("zero-dimensional samples".into()));
        }
        for (s, t) in sources.iter().zip(&targets) {
            if s.len() != sd {
                return Err(Error::DimensionMismatch { expected: sd, found: s.len() });
            }
            if t.len() != td {
                return Err(Error::DimensionMismatch { expected: td, found: t.len() });
            }
            if s.iter().chain(t).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite sample coordinate".into()));
            }
        }
        for i in 0..sources.len() {
            for j in 0..i {
                if sources[i] == sources[j] {
                    return Err(Error::DuplicateSource(j, i));
                }
            }
        }
        Ok(Self { sources, targets })
    }

    /// Reads a point set of `R^{p,q}` as the graph of a map from the temporal block
    /// to the spatial block.
    pub fn from_lifted(points: &[Vec<f64>], p: usize) -> Result<Self> {
        let (sources, targets) = points
            .iter()
            .map(|pt| (pt[p..].to_vec(), pt[..p].to_vec()))
            .unzip();
        Self::new(sources, targets)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn source_dim(&self) -> usize {
        self.sources[0].len()
    }

    pub fn target_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn sources(&self) -> &[Vec<f64>] {
        &self.sources
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    /// Graph points `(target, source)` in `R^{p,q}`: target spatial, source temporal.
    pub fn lifted(&self) -> Vec<Vec<f64>> {
        self.sources
            .iter()
            .zip(&self.targets)
            .map(|(s, t)| t.iter().chain(s).copied().collect())
            .collect()
    }

    /// Adds one sample; the caller guarantees the source is new.
    pub fn push(&mut self, source: Vec<f64>, target: Vec<f64>) -> Result<()> {
        if source.len() != self.source_dim() {
            return Err(Error::DimensionMismatch { expected: self.source_dim(), found: source.len() });
        }
        if target.len() != self.target_dim() {
            return Err(Error::DimensionMismatch { expected: self.target_dim(), found: target.len() });
        }
        if let Some(i) = self.sources.iter().position(|s| *s == source) {
            return Err(Error::DuplicateSource(i, self.len()));
        }
        self.sources.push(source);
        self.targets.push(target);
        Ok(())
    }
}

/// Largest pairwise ratio `|y_i - y_j| / |x_i - x_j|`; zero for a single sample.
pub fn lipschitz_constant(samples: &GraphSamples) -> f64 {
    let (xs, ys) = (&samples.sources, &samples.targets);
    let mut best = 0.0f64;
    for i in 0..xs.len() {
        for j in 0..i {
            let r = linalg::dist(&ys[i], &ys[j]) / linalg::dist(&xs[i], &xs[j]);
            best = best.max(r);
        }
    }
    best
}

/// `true` iff every pairwise segment of `points` is causal (or timelike when `strict`).
pub fn is_causal_position(g: &PseudoMetric, points: &[Vec<f64>], strict: bool, tol: f64) -> Result<bool> {
    for pt in points {
        g.check_dim(pt)?;
    }
    for i in 0..points.len() {
        for j in 0..i {
            let class = classify_segment(g, &points[i], &points[j], tol)?;
            let ok = if strict {
                class == CausalClass::Timelike
            } else {
                class.is_causal()
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn residual_threshold(tol: f64, distance: f64, center: &[f64], radius: f64) -> f64 {
    let floor = 8.0 * f64::EPSILON * (1.0 + linalg::norm(center) + radius);
    (tol * distance.min(1.0)).max(floor)
}

/// Finds a point in `intersection B(centers[i], radii[i])` with every constraint
/// violated by at most `thresholds[i]`.
fn intersect_balls(
    centers: &[&[f64]],
    radii: &[f64],
    thresholds: &[f64],
    mut y: Vec<f64>,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let dim = y.len();
    let mut step = vec![0.0; dim];
    let mut worst = f64::INFINITY;
    for it in 0..max_iter {
        step.iter_mut().for_each(|s| *s = 0.0);
        let mut moved_sq = 0.0;
        let mut feasible = true;
        worst = 0.0f64;
        for ((c, &r), &thr) in centers.iter().zip(radii).zip(thresholds) {
            let d = linalg::dist(&y, c);
            let viol = d - r;
            worst = worst.max(viol);
            if viol > thr {
                feasible = false;
            }
            if viol > 0.0 {
                // P_i(y) - y = -(viol / d) (y - c)
                let f = viol / d;
                for k in 0..dim {
                    step[k] -= f * (y[k] - c[k]);
                }
                moved_sq += viol * viol;
            }
        }
        if feasible {
            return Ok(y);
        }
        if it % POLISH_EVERY == POLISH_EVERY - 1 {
            if let Some(z) = polish(centers, radii, &y) {
                if within(centers, radii, thresholds, &z) {
                    return Ok(z);
                }
            }
        }
        let denom = linalg::norm_sq(&step);
        if denom <= 0.0 {
            break;
        }
        // extrapolated parallel projection step
        let lambda = moved_sq / denom;
        for k in 0..dim {
            y[k] += lambda * step[k];
        }
    }
    Err(Error::Infeasible {
        iterations: max_iter,
        residual: worst,
    })
}

const POLISH_EVERY: usize = 500;
const POLISH_ACTIVE: usize = 10;

fn within(centers: &[&[f64]], radii: &[f64], thresholds: &[f64], y: &[f64]) -> bool {
    centers
        .iter()
        .zip(radii)
        .zip(thresholds)
        .all(|((c, &r), &thr)| linalg::dist(y, c) - r <= thr)
}

/// Exact minimizer of `max_i |y - c_i|^2 - r_i^2` over the most violated balls.
///
/// The power functions share their quadratic part, so on a support set `S` the
/// optimum is `y = sum mu_i c_i` with equal powers and `sum mu_i = 1`. Every small
/// support among the near-active balls is tried; one satisfying the optimality
/// conditions is returned. Coordinates are centered at `y` to limit cancellation.
fn polish(centers: &[&[f64]], radii: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let dim = y.len();
    let shifted: Vec<Vec<f64>> = centers.iter().map(|c| linalg::sub(c, y)).collect();
    let mut order: Vec<usize> = (0..centers.len()).collect();
    let viol: Vec<f64> = shifted.iter().zip(radii).map(|(c, r)| linalg::norm(c) - r).collect();
    order.sort_by(|&a, &b| viol[b].total_cmp(&viol[a]));
    order.truncate(POLISH_ACTIVE);
    let power = |z: &[f64], i: usize| linalg::norm_sq(&linalg::sub(z, &shifted[i])) - radii[i] * radii[i];
    let scale = 1.0 + radii.iter().fold(0.0f64, |m, r| m.max(r * r));

    let active = order.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << active) {
        let k = mask.count_ones() as usize;
        if k > dim + 1 {
            continue;
        }
        let support: Vec<usize> = (0..active).filter(|b| mask & (1 << b) != 0).map(|b| order[b]).collect();
        // [2 c_i.c_j, 1; 1, 0] [mu; nu] = [|c_i|^2 - r_i^2; 1]
        let n = k + 1;
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut rhs = nalgebra::DVector::<f64>::zeros(n);
        for (r, &i) in support.iter().enumerate() {
            for (s, &j) in support.iter().enumerate() {
                a[(r, s)] = 2.0 * linalg::dot(&shifted[i], &shifted[j]);
            }
            a[(r, k)] = 1.0;
            a[(k, r)] = 1.0;
            rhs[r] = linalg::norm_sq(&shifted[i]) - radii[i] * radii[i];
        }
        rhs[k] = 1.0;
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        if (0..k).any(|r| !sol[r].is_finite() || sol[r] < -1e-12) {
            continue;
        }
        let mut z = vec![0.0; dim];
        for (r, &i) in support.iter().enumerate() {
            for d in 0..dim {
                z[d] += sol[r] * shifted[i][d];
            }
        }
        let value = support.iter().map(|&i| power(&z, i)).fold(f64::NEG_INFINITY, f64::max);
        let top = (0..centers.len()).map(|i| power(&z, i)).fold(f64::NEG_INFINITY, f64::max);
        if top <= value + 1e-12 * scale && best.as_ref().is_none_or(|(v, _)| top < *v) {
            best = Some((top, z));
        }
    }
    best.map(|(_, z)| z.iter().zip(y).map(|(a, b)| a + b).collect())
}

fn idw_guess(sources: &[Vec<f64>], targets: &[Vec<f64>], dists: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; targets[0].len()];
    let mut total = 0.0;
    for (t, &d) in targets.iter().zip(dists) {
        let w = 1.0 / d;
        total += w;
        for (a, v) in acc.iter_mut().zip(t) {
            *a += w * v;
        }
    }
    debug_assert_eq!(sources.len(), targets.len());
    acc.iter_mut().for_each(|a| *a /= total);
    acc
}

fn extend_with_slack(
    sources: &[Vec<f64>],
    targets: &[Vec<f64>],
    slack: &[f64],
    lipschitz: f64,
    x: &[f64],
    opts: &ExtendOptions,
) -> Result<(Vec<f64>, f64)> {
    if x.len() != sources[0].len() {
        return Err(Error::DimensionMismatch { expected: sources[0].len(), found: x.len() });
    }
    if let Some(i) = sources.iter().position(|s| s.as_slice() == x) {
        return Ok((targets[i].clone(), slack[i]));
    }
    let dists: Vec<f64> = sources.iter().map(|s| linalg::dist(s, x)).collect();
    let radii: Vec<f64> = dists.iter().zip(slack).map(|(d, e)| lipschitz * d + e).collect();
    let thresholds: Vec<f64> = targets
        .iter()
        .zip(&dists)
        .zip(&radii)
        .map(|((t, &d), &r)| residual_threshold(opts.tol, d, t, r))
        .collect();
    let centers: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
    let y = intersect_balls(&centers, &radii, &thresholds, idw_guess(sources, targets, &dists), opts.max_iter)?;
    let excess = centers
        .iter()
        .zip(&radii)
        .map(|(c, r)| linalg::dist(&y, c) - r)
        .fold(0.0, f64::max);
    Ok((y, excess))
}

/// Kirszbraun extension of `L`-Lipschitz samples to the query `x`.
///
/// Returns `y` with `|y - y_i| <= L |x - x_i| + tol * min(1, |x - x_i|)` for every
/// sample, or exactly `y_i` when `x == x_i`.
pub fn kirszbraun_extend(samples: &GraphSamples, lipschitz: f64, x: &[f64], opts: &ExtendOptions) -> Result<Vec<f64>> {
    if !(lipschitz.is_finite() && lipschitz >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid Lipschitz bound {lipschitz}")));
    }
    let slack = vec![0.0; samples.len()];
    extend_with_slack(&samples.sources, &samples.targets, &slack, lipschitz, x, opts).map(|(y, _)| y)
}

/// Sequential extension: each evaluated point joins the witness, so all values
/// returned by one session are mutually `L`-Lipschitz up to the residual tolerance.
#[derive(Debug, Clone)]
pub struct ExtensionSession {
    sources: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    slack: Vec<f64>,
    lipschitz: f64,
    opts: ExtendOptions,
}

impl ExtensionSession {
    pub fn new(samples: &GraphSamples, lipschitz: f64, opts: ExtendOptions) -> Self {
        Self {
            sources: samples.sources.clone(),
            targets: samples.targets.clone(),
            slack: vec![0.0; samples.len()],
            lipschitz,
            opts,
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let (y, excess) = extend_with_slack(&self.sources, &self.targets, &self.slack, self.lipschitz, x, &self.opts)?;
        if !self.sources.iter().any(|s| s.as_slice() == x) {
            self.sources.push(x.to_vec());
            self.targets.push(y.clone());
            self.slack.push(excess.max(0.0));
        }
        Ok(y)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

/// Anything evaluable with a certified Lipschitz bound.
pub trait LipschitzEval {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn lipschitz_bound(&self) -> f64;
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LipRepr {
    /// `x -> A x + b`, `matrix` stored row by row (`target_dim` rows).
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    Interpolant { samples: GraphSamples, lipschitz: f64 },
}

/// A Lipschitz map defined on all of its source space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LipRepr", into = "LipRepr")]
pub struct LipMap {
    repr: LipRepr,
    certified_constant: f64,
    #[serde(skip)]
    opts: ExtendOptions,
}

impl TryFrom<LipRepr> for LipMap {
    type Error = Error;

    fn try_from(r: LipRepr) -> Result<Self> {
        match r {
            LipRepr::Affine { matrix, offset } => LipMap::affine(matrix, offset),
            LipRepr::Interpolant { samples, lipschitz } => LipMap::interpolant(samples, lipschitz),
        }
    }
}

impl From<LipMap> for LipRepr {
    fn from(m: LipMap) -> Self {
        m.repr
    }
}

impl LipMap {
    pub fn affine(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        if matrix.len() != offset.len() || offset.is_empty() {
            return Err(Error::DimensionMismatch { expected: offset.len(), found: matrix.len() });
        }
        let cols = matrix[0].len();
        if cols == 0 {
            return Err(Error::InvalidArgument("affine map with empty source".into()));
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: row.len() });
        }
        if matrix.iter().flatten().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite affine coefficient".into()));
        }
        let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
        let c = linalg::operator_norm(matrix.len(), cols, &flat);
        Ok(Self {
            repr: LipRepr::Affine { matrix, offset },
            certified_constant: c,
            opts: ExtendOptions::default(),
        })
    }

    pub fn constant(value: Vec<f64>, source_dim: usize) -> Result<Self> {
        let rows = value.len();
        Self::affine(vec![vec![0.0; source_dim]; rows], value)
    }

    /// Kirszbraun interpolant with bound `lipschitz`; the samples must respect it.
    pub fn interpolant(samples: GraphSamples, lipschitz: f64) -> Result<Self> {
        let opts = ExtendOptions::default();
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid Lipschitz bound {lipschitz}")));
        }
        let k = lipschitz_constant(&samples);
        if k > lipschitz + opts.tol {
            return Err(Error::LipschitzViolation { constant: k, bound: lipschitz });
        }
        Ok(Self {
            repr: LipRepr::Interpolant { samples, lipschitz },
            certified_constant: lipschitz,
            opts,
        })
    }

    pub fn with_options(mut self, opts: ExtendOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn options(&self) -> &ExtendOptions {
        &self.opts
    }

    pub fn repr(&self) -> &LipRepr {
        &self.repr
    }

    pub fn certified_constant(&self) -> f64 {
        self.certified_constant
    }

    pub fn source_dim(&self) -> usize {
        match &self.repr {
            LipRepr::Affine { matrix, .. } => matrix[0].len(),
            LipRepr::Interpolant { samples, .. } => samples.source_dim(),
        }
    }

    pub fn target_dim(&self) -> usize {
        match &self.repr {
            LipRepr::Affine { offset, .. } => offset.len(),
            LipRepr::Interpolant { samples, .. } => samples.target_dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.repr {
            LipRepr::Affine { matrix, offset } => {
                if x.len() != self.source_dim() {
                    return Err(Error::DimensionMismatch { expected: self.source_dim(), found: x.len() });
                }
                Ok(matrix
                    .iter()
                    .zip(offset)
                    .map(|(row, b)| linalg::dot(row, x) + b)
                    .collect())
            }
            LipRepr::Interpolant { samples, lipschitz } => kirszbraun_extend(samples, *lipschitz, x, &self.opts),
        }
    }

    /// Mutually consistent values at all of `xs`.
    pub fn eval_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        match &self.repr {
            LipRepr::Affine { .. } => xs.iter().map(|x| self.eval(x)).collect(),
            LipRepr::Interpolant { samples, lipschitz } => {
                let mut session = ExtensionSession::new(samples, *lipschitz, self.opts);
                xs.iter().map(|x| session.eval(x)).collect()
            }
        }
    }
}

impl LipschitzEval for LipMap {
    fn source_dim(&self) -> usize {
        LipMap::source_dim(self)
    }

    fn target_dim(&self) -> usize {
        LipMap::target_dim(self)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.certified_constant
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        LipMap::eval(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphMode {
    Causal,
    Timelike,
}

/// Extends sample data to an inextendible map over all of `R^q`.
///
/// Causal mode extends with bound 1. Timelike mode needs a data constant `k < 1 - tol`
/// and extends with bound `k`, which keeps every ratio strictly below 1.
pub fn build_inextendible(samples: GraphSamples, mode: GraphMode, tol: f64) -> Result<LipMap> {
    let k = lipschitz_constant(&samples);
    match mode {
        GraphMode::Causal => {
            if k > 1.0 + tol {
                return Err(Error::LipschitzViolation { constant: k, bound: 1.0 });
            }
            LipMap::interpolant(samples, k.max(1.0))
        }
        GraphMode::Timelike => {
            if k >= 1.0 - tol {
                return Err(Error::NotStrictlyContracting { constant: k });
            }
            LipMap::interpolant(samples, k)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    Hull { points: Vec<Vec<f64>> },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::MalformedDomain(m.to_string()));
        match self {
            Domain::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return bad("ball needs a center and a positive radius");
                }
            }
            Domain::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return bad("box corners must have equal nonzero dimension");
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return bad("box needs lo < hi componentwise");
                }
            }
            Domain::Annulus { center, r_in, r_out } => {
                if center.is_empty() || !(0.0 < *r_in && r_in < r_out) {
                    return bad("annulus needs 0 < r_in < r_out");
                }
            }
            Domain::Hull { points } => {
                let Some(first) = points.first() else {
                    return bad("hull of an empty set");
                };
                if first.is_empty() || points.iter().any(|p| p.len() != first.len()) {
                    return bad("hull points must share a nonzero dimension");
                }
            }
        }
        Ok(())
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Domain::Annulus { .. })
    }
}

/// Whether `T^{-1}(domain)` has the causal structure of the ambient space, which
/// holds exactly for convex domains.
pub fn same_causality_as_ambient(domain: &Domain) -> Result<bool> {
    domain.validate()?;
    Ok(domain.is_convex())
}
