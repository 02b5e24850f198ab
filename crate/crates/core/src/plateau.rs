//! Discrete Plateau problem over causal sections of a compact base.
//!
//! A section assigns a point of `R^p` to every node of a lattice over a box or a
//! ball in `R^q`. Each cell anchored at a node with all forward axis neighbors gets
//! the forward-difference Jacobian `J`, which is exact for affine data. The area of
//! the section is `sum_cells vol * sqrt(det(W_t - J^T W_s J))`, with cells whose
//! induced form is not positive definite contributing zero.
//!
//! Feasibility is the discrete 1-Lipschitz condition `|v_i - v_j| <= |x_i - x_j|`
//! on a pair set: axis and diagonal neighbors while iterating, all pairs for
//! verification.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::lipgraph::{build_inextendible, GraphMode, GraphSamples, LipMap};
use crate::pqform::PseudoMetric;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseShape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl BaseShape {
    pub fn dim(&self) -> usize {
        match self {
            BaseShape::Box { lo, .. } => lo.len(),
            BaseShape::Ball { center, .. } => center.len(),
        }
    }

    pub fn unit_square() -> Self {
        BaseShape::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub shape: BaseShape,
    /// Lattice nodes per axis of the bounding box.
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    anchor: usize,
    forward: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBase {
    spec: GridSpec,
    q: usize,
    spacing: Vec<f64>,
    positions: Vec<Vec<f64>>,
    boundary: Vec<bool>,
    cells: Vec<Cell>,
    neighbors: Vec<Pair>,
    /// Nodes adjacent along an axis, used by the Laplace solve and connectivity.
    axis_neighbors: Vec<Vec<usize>>,
    cell_volume: f64,
}

const MAX_BASE_DIM: usize = 3;

impl GridBase {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let q = spec.shape.dim();
        if q == 0 || q > MAX_BASE_DIM {
            return Err(Error::InvalidArgument(format!("base dimension must be in 1..={MAX_BASE_DIM}, got {q}")));
        }
        if spec.resolution < 3 {
            return Err(Error::InvalidArgument("resolution must be at least 3".into()));
        }
        let n = spec.resolution;
        let (lo, hi, inside): (Vec<f64>, Vec<f64>, Box<dyn Fn(&[f64]) -> bool>) = match &spec.shape {
            BaseShape::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::MalformedDomain("box needs lo < hi componentwise".into()));
                }
                (lo.clone(), hi.clone(), Box::new(|_: &[f64]| true))
            }
            BaseShape::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::MalformedDomain("ball needs a positive radius".into()));
                }
                let c = center.clone();
                let r = *radius;
                (
                    center.iter().map(|x| x - r).collect(),
                    center.iter().map(|x| x + r).collect(),
                    Box::new(move |x: &[f64]| linalg::dist(x, &c) <= r * (1.0 + 1e-12)),
                )
            }
        };
        let spacing: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / (n - 1) as f64).collect();

        let total = n.pow(q as u32);
        let unflatten = |mut s: usize| -> Vec<usize> {
            let mut idx = vec![0; q];
            for k in 0..q {
                idx[k] = s % n;
                s /= n;
            }
            idx
        };
        let flatten = |idx: &[usize]| -> usize { idx.iter().rev().fold(0, |acc, &i| acc * n + i) };

        let mut slot = vec![None; total];
        let mut lattice = Vec::new();
        let mut positions = Vec::new();
        for s in 0..total {
            let idx = unflatten(s);
            let x: Vec<f64> = (0..q).map(|k| lo[k] + idx[k] as f64 * spacing[k]).collect();
            if inside(&x) {
                slot[s] = Some(positions.len());
                lattice.push(idx);
                positions.push(x);
            }
        }
        let offset_node = |idx: &[usize], off: &[i64]| -> Option<usize> {
            let mut moved = vec![0; q];
            for k in 0..q {
                let v = idx[k] as i64 + off[k];
                if v < 0 || v >= n as i64 {
                    return None;
                }
                moved[k] = v as usize;
            }
            slot[flatten(&moved)]
        };

        let count = positions.len();
        let mut boundary = vec![false; count];
        let mut axis_neighbors = vec![Vec::new(); count];
        let mut cells = Vec::new();
        for (node, idx) in lattice.iter().enumerate() {
            let mut forward = Vec::with_capacity(q);
            for k in 0..q {
                for sign in [1i64, -1] {
                    let mut off = vec![0i64; q];
                    off[k] = sign;
                    match offset_node(idx, &off) {
                        Some(m) => {
                            axis_neighbors[node].push(m);
                            if sign == 1 {
                                forward.push(m);
                            }
                        }
                        None => boundary[node] = true,
                    }
                }
            }
            if forward.len() == q {
                cells.push(Cell { anchor: node, forward });
            }
        }

        // offsets in {-1, 0, 1}^q whose first nonzero entry is positive
        let mut neighbors = Vec::new();
        let offsets: Vec<Vec<i64>> = (0..3usize.pow(q as u32))
            .map(|mut s| {
                (0..q)
                    .map(|_| {
                        let d = (s % 3) as i64 - 1;
                        s /= 3;
                        d
                    })
                    .collect::<Vec<i64>>()
            })
            .filter(|o| o.iter().find(|&&d| d != 0).is_some_and(|&d| d > 0))
            .collect();
        for (node, idx) in lattice.iter().enumerate() {
            for off in &offsets {
                if let Some(m) = offset_node(idx, off) {
                    neighbors.push(Pair { i: node, j: m, dist: linalg::dist(&positions[node], &positions[m]) });
                }
            }
        }

        let base = Self {
            spec,
            q,
            cell_volume: spacing.iter().product(),
            spacing,
            positions,
            boundary,
            cells,
            neighbors,
            axis_neighbors,
        };
        base.check_interior()?;
        Ok(base)
    }

    fn check_interior(&self) -> Result<()> {
        let interior: Vec<usize> = (0..self.len()).filter(|&i| !self.boundary[i]).collect();
        let Some(&start) = interior.first() else {
            return Err(Error::MalformedDomain("base has no interior nodes".into()));
        };
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut reached = 1;
        while let Some(i) = queue.pop_front() {
            for &m in &self.axis_neighbors[i] {
                if !self.boundary[m] && !seen[m] {
                    seen[m] = true;
                    reached += 1;
                    queue.push_back(m);
                }
            }
        }
        if reached != interior.len() {
            return Err(Error::MalformedDomain("interior of the base is not connected".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.boundary[i])
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.boundary[i])
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total volume covered by cells.
    pub fn volume(&self) -> f64 {
        self.cell_volume * self.cells.len() as f64
    }

    pub fn neighbor_pairs(&self) -> &[Pair] {
        &self.neighbors
    }

    pub fn all_pairs(&self) -> Vec<Pair> {
        let mut out = Vec::with_capacity(self.len() * (self.len() - 1) / 2);
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                out.push(Pair { i, j, dist: linalg::dist(&self.positions[i], &self.positions[j]) });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    base: Arc<GridBase>,
    p: usize,
    /// Node-major values, `p` per node.
    values: Vec<f64>,
}

impl GridSection {
    pub fn new(base: Arc<GridBase>, p: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("sections need p >= 1".into()));
        }
        if values.len() != base.len() * p {
            return Err(Error::DimensionMismatch { expected: base.len() * p, found: values.len() });
        }
        Ok(Self { base, p, values })
    }

    pub fn from_fn(base: Arc<GridBase>, p: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(base.len() * p);
        for x in base.positions() {
            let v = f(x);
            if v.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: v.len() });
            }
            values.extend(v);
        }
        Self::new(base, p, values)
    }

    /// Evaluates `map` on every node.
    pub fn from_map(base: Arc<GridBase>, map: &LipMap) -> Result<Self> {
        if map.source_dim() != base.q() {
            return Err(Error::DimensionMismatch { expected: base.q(), found: map.source_dim() });
        }
        let values = map.eval_batch(base.positions())?.into_iter().flatten().collect();
        Self::new(base.clone(), map.target_dim(), values)
    }

    /// Harmonic interpolation of the boundary values of `self`, componentwise.
    pub fn harmonic(&self) -> GridSection {
        let base = &self.base;
        let p = self.p;
        let interior: Vec<usize> = base.interior_nodes().collect();
        let mut values = self.values.clone();
        let mut mean = vec![0.0; p];
        let nb = base.boundary_nodes().count() as f64;
        for i in base.boundary_nodes() {
            for c in 0..p {
                mean[c] += self.values[i * p + c] / nb;
            }
        }
        for &i in &interior {
            values[i * p..(i + 1) * p].copy_from_slice(&mean);
        }
        // axis weights 1/h_k^2; axis_neighbors lists +e_k then -e_k for each k
        let weights: Vec<f64> = base.spacing.iter().map(|h| 1.0 / (h * h)).collect();
        let wsum: f64 = 2.0 * weights.iter().sum::<f64>();
        let n_max = base.spec.resolution as f64;
        let omega = 2.0 / (1.0 + (std::f64::consts::PI / n_max).sin());
        for _ in 0..20_000 {
            let mut change = 0.0f64;
            for &i in &interior {
                for c in 0..p {
                    let mut acc = 0.0;
                    for (slot, &m) in base.axis_neighbors[i].iter().enumerate() {
                        acc += weights[slot / 2] * values[m * p + c];
                    }
                    let target = acc / wsum;
                    let old = values[i * p + c];
                    let new = old + omega * (target - old);
                    change = change.max((new - old).abs());
                    values[i * p + c] = new;
                }
            }
            if change < 1e-15 {
                break;
            }
        }
        GridSection { base: base.clone(), p, values }
    }

    pub fn base(&self) -> &Arc<GridBase> {
        &self.base
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.p..(node + 1) * self.p]
    }

    /// Max over nodes of `|self(x) - other(x)|`.
    pub fn sup_distance(&self, other: &GridSection) -> f64 {
        (0..self.base.len())
            .map(|i| linalg::dist(self.value(i), other.value(i)))
            .fold(0.0, f64::max)
    }

    pub fn boundary_matches(&self, other: &GridSection) -> bool {
        self.base.boundary_nodes().all(|i| self.value(i) == other.value(i))
    }

    pub fn max_violation(&self, pairs: PairSet) -> f64 {
        let check = |pr: &Pair| linalg::dist(self.value(pr.i), self.value(pr.j)) - pr.dist;
        match pairs {
            PairSet::Neighbors => self.base.neighbors.iter().map(check).fold(0.0, f64::max),
            PairSet::AllPairs => self.base.all_pairs().iter().map(check).fold(0.0, f64::max),
        }
    }

    fn boundary_violation(&self) -> f64 {
        let nodes: Vec<usize> = self.base.boundary_nodes().collect();
        let mut worst = 0.0f64;
        for (a, &i) in nodes.iter().enumerate() {
            for &j in &nodes[..a] {
                let d = linalg::dist(&self.base.positions[i], &self.base.positions[j]);
                worst = worst.max(linalg::dist(self.value(i), self.value(j)) - d);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSet {
    Neighbors,
    AllPairs,
}

fn check_metric(section: &GridSection, metric: &PseudoMetric) -> Result<()> {
    if metric.p() != section.p {
        return Err(Error::DimensionMismatch { expected: section.p, found: metric.p() });
    }
    if metric.q() != section.base.q {
        return Err(Error::DimensionMismatch { expected: section.base.q, found: metric.q() });
    }
    Ok(())
}

/// Per-cell quantities of the induced form `M = W_t - J^T W_s J`.
struct CellForm {
    min_eigenvalue: f64,
    det: f64,
    /// Row-major `q x q`.
    m: Vec<f64>,
}

fn cell_jacobian(section: &GridSection, cell: &Cell, jac: &mut [f64]) {
    let (p, q) = (section.p, section.base.q);
    let a = section.value(cell.anchor);
    for (k, &fwd) in cell.forward.iter().enumerate() {
        let b = section.value(fwd);
        let h = section.base.spacing[k];
        for c in 0..p {
            jac[c * q + k] = (b[c] - a[c]) / h;
        }
    }
}

fn cell_form(metric: &PseudoMetric, p: usize, q: usize, jac: &[f64]) -> CellForm {
    let aw = metric.spatial_weights();
    let bw = metric.temporal_weights();
    let mut m = vec![0.0; q * q];
    for k in 0..q {
        for l in 0..q {
            let s: f64 = (0..p).map(|c| aw[c] * jac[c * q + k] * jac[c * q + l]).sum();
            m[k * q + l] = if k == l { bw[k] } else { 0.0 } - s;
        }
    }
    let (min_eigenvalue, det) = match q {
        1 => (m[0], m[0]),
        2 => {
            let half_tr = 0.5 * (m[0] + m[3]);
            let half_gap = 0.5 * (m[0] - m[3]);
            let r = (half_gap * half_gap + m[1] * m[1]).sqrt();
            (half_tr - r, m[0] * m[3] - m[1] * m[2])
        }
        _ => (linalg::symmetric_eigenvalues(q, &m)[0], linalg::determinant(q, &m)),
    };
    CellForm { min_eigenvalue, det, m }
}

/// Eigenvalues this close to zero are rounding noise from lightlike differences.
const ZERO_BAND: f64 = 64.0 * f64::EPSILON;

fn cell_sqrt_det(form: &CellForm, floor: f64) -> f64 {
    if form.min_eigenvalue <= floor.max(ZERO_BAND) || form.det <= 0.0 {
        0.0
    } else {
        form.det.sqrt()
    }
}

/// Area with cells whose induced form has minimum eigenvalue at most `floor` dropped.
fn area_with_floor(section: &GridSection, metric: &PseudoMetric, floor: f64) -> f64 {
    let (p, q) = (section.p, section.base.q);
    let mut jac = vec![0.0; p * q];
    let mut total = 0.0;
    for cell in &section.base.cells {
        cell_jacobian(section, cell, &mut jac);
        total += cell_sqrt_det(&cell_form(metric, p, q, &jac), floor);
    }
    total * section.base.cell_volume
}

/// Discrete area functional; negative eigenvalues of the induced form clamp to zero.
pub fn area(section: &GridSection, metric: &PseudoMetric) -> Result<f64> {
    check_metric(section, metric)?;
    Ok(area_with_floor(section, metric, 0.0))
}

fn gradient_impl(section: &GridSection, metric: &PseudoMetric, floor: f64, strict: bool) -> Result<Vec<f64>> {
    let (p, q) = (section.p, section.base.q);
    let base = &section.base;
    let aw = metric.spatial_weights();
    let mut grad = vec![0.0; base.len() * p];
    let mut jac = vec![0.0; p * q];
    for (index, cell) in base.cells.iter().enumerate() {
        cell_jacobian(section, cell, &mut jac);
        let form = cell_form(metric, p, q, &jac);
        if form.min_eigenvalue < floor || form.det <= 0.0 {
            if strict {
                return Err(Error::DegenerateCell { cell: index, min_eigenvalue: form.min_eigenvalue });
            }
            continue;
        }
        let sqrt_det = form.det.sqrt();
        let inv = match q {
            1 => vec![1.0 / form.m[0]],
            2 => {
                let d = form.det;
                vec![form.m[3] / d, -form.m[1] / d, -form.m[2] / d, form.m[0] / d]
            }
            _ => linalg::inverse(q, &form.m).ok_or(Error::DegenerateCell {
                cell: index,
                min_eigenvalue: form.min_eigenvalue,
            })?,
        };
        // dA/dJ = -vol sqrt(det M) W_s J M^{-1}
        for c in 0..p {
            for k in 0..q {
                let jm: f64 = (0..q).map(|l| jac[c * q + l] * inv[l * q + k]).sum();
                let d_jac = -base.cell_volume * sqrt_det * aw[c] * jm;
                let g = d_jac / base.spacing[k];
                grad[cell.forward[k] * p + c] += g;
                grad[cell.anchor * p + c] -= g;
            }
        }
    }
    for i in base.boundary_nodes() {
        grad[i * p..(i + 1) * p].iter_mut().for_each(|g| *g = 0.0);
    }
    Ok(grad)
}

/// Analytic gradient of [`area`] with respect to node values; zero on the boundary.
///
/// Every cell must have an induced form with minimum eigenvalue at least `grad_floor`.
pub fn area_gradient(section: &GridSection, metric: &PseudoMetric, grad_floor: f64) -> Result<Vec<f64>> {
    check_metric(section, metric)?;
    gradient_impl(section, metric, grad_floor, true)
}

/// Enforces `|v_i - v_j| <= |x_i - x_j|` on `pairs` by symmetric pair contractions.
///
/// Interior pairs move both endpoints toward their midpoint; a pair with one
/// boundary endpoint moves only the other one. Boundary values are never touched.
pub fn project_lipschitz(section: &GridSection, pairs: PairSet, feas_tol: f64, max_sweeps: usize) -> Result<GridSection> {
    let violation = section.boundary_violation();
    if violation > feas_tol {
        return Err(Error::InfeasibleBoundary { violation });
    }
    let owned_all;
    let list: &[Pair] = match pairs {
        PairSet::Neighbors => &section.base.neighbors,
        PairSet::AllPairs => {
            owned_all = section.base.all_pairs();
            &owned_all
        }
    };
    let p = section.p;
    let boundary = &section.base.boundary;
    let mut out = section.clone();
    let worst = |v: &[f64]| {
        list.iter()
            .map(|pr| linalg::dist(&v[pr.i * p..(pr.i + 1) * p], &v[pr.j * p..(pr.j + 1) * p]) - pr.dist)
            .fold(0.0, f64::max)
    };
    let mut current = worst(&out.values);
    let mut diff = vec![0.0; p];
    for _ in 0..max_sweeps {
        if current <= feas_tol {
            return Ok(out);
        }
        for pr in list {
            if boundary[pr.i] && boundary[pr.j] {
                continue;
            }
            let v = &mut out.values;
            for c in 0..p {
                diff[c] = v[pr.j * p + c] - v[pr.i * p + c];
            }
            let len = linalg::norm(&diff);
            let excess = len - pr.dist;
            if excess <= 0.0 {
                continue;
            }
            let (move_i, move_j) = match (boundary[pr.i], boundary[pr.j]) {
                (false, false) => (0.5 * excess, 0.5 * excess),
                (true, false) => (0.0, excess),
                (false, true) => (excess, 0.0),
                (true, true) => unreachable!(),
            };
            // boundary entries are never written, so even a signed zero survives
            for c in 0..p {
                let dir = diff[c] / len;
                if move_i > 0.0 {
                    v[pr.i * p + c] += move_i * dir;
                }
                if move_j > 0.0 {
                    v[pr.j * p + c] -= move_j * dir;
                }
            }
        }
        current = worst(&out.values);
    }
    if current <= feas_tol {
        return Ok(out);
    }
    Err(Error::NoConvergence { iterations: max_sweeps, residual: current })
}

fn project_full(section: &GridSection, feas_tol: f64, max_sweeps: usize) -> Result<GridSection> {
    let out = project_lipschitz(section, PairSet::Neighbors, feas_tol, max_sweeps)?;
    if out.max_violation(PairSet::AllPairs) > feas_tol {
        return project_lipschitz(&out, PairSet::AllPairs, feas_tol, max_sweeps);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySpec {
    /// Graph samples, extended as a causal map with bound 1.
    Samples(GraphSamples),
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    Constant { value: Vec<f64> },
}

impl BoundarySpec {
    pub fn to_map(&self, q: usize) -> Result<LipMap> {
        match self {
            BoundarySpec::Samples(s) => build_inextendible(s.clone(), GraphMode::Causal, 1e-9),
            BoundarySpec::Affine { matrix, offset } => LipMap::affine(matrix.clone(), offset.clone()),
            BoundarySpec::Constant { value } => LipMap::constant(value.clone(), q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Initial ascent step.
    pub step: f64,
    /// Relative area improvement over `patience` iterations that counts as converged.
    pub stop_tol: f64,
    pub patience: usize,
    pub max_iter: usize,
    pub feas_tol: f64,
    pub grad_floor: f64,
    pub max_sweeps: usize,
    pub max_backtracks: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            step: 1.0,
            stop_tol: 1e-9,
            patience: 20,
            max_iter: 100_000,
            feas_tol: 1e-10,
            grad_floor: 1e-8,
            max_sweeps: 10_000,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauProblem {
    pub base: GridSpec,
    pub metric: PseudoMetric,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverParams,
}

impl PlateauProblem {
    /// Builds the base grid and the section carrying the boundary data.
    pub fn boundary_section(&self) -> Result<GridSection> {
        let base = Arc::new(GridBase::new(self.base.clone())?);
        let map = self.boundary.to_map(base.q())?;
        if map.target_dim() != self.metric.p() {
            return Err(Error::DimensionMismatch { expected: self.metric.p(), found: map.target_dim() });
        }
        let boundary: Vec<Vec<f64>> = base.boundary_nodes().map(|i| base.positions()[i].clone()).collect();
        let vals = map.eval_batch(&boundary)?;
        let p = map.target_dim();
        let mut values = vec![0.0; base.len() * p];
        for (i, v) in base.boundary_nodes().zip(vals) {
            values[i * p..(i + 1) * p].copy_from_slice(&v);
        }
        GridSection::new(base, p, values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateauSolution {
    pub section: GridSection,
    pub area: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Stopped by the improvement criterion or a vanishing ascent direction.
    pub converged: bool,
    /// All-pairs feasibility residual of the returned section.
    pub max_violation: f64,
    /// Cells whose induced form fell below the gradient floor.
    pub degenerate_cells: usize,
}

/// Maximizes the area from the projected harmonic interpolation of the boundary.
pub fn solve_plateau(problem: &PlateauProblem) -> Result<PlateauSolution> {
    let boundary = problem.boundary_section()?;
    let params = &problem.solver;
    let violation = boundary.boundary_violation();
    if violation > params.feas_tol {
        return Err(Error::InfeasibleBoundary { violation });
    }
    let init = project_full(&boundary.harmonic(), params.feas_tol, params.max_sweeps)?;
    solve_plateau_from(problem, init)
}

/// Projected gradient ascent from a given initial section.
pub fn solve_plateau_from(problem: &PlateauProblem, initial: GridSection) -> Result<PlateauSolution> {
    let metric = &problem.metric;
    let params = &problem.solver;
    check_metric(&initial, metric)?;
    if !metric.has_unit_weights() {
        return Err(Error::InvalidArgument(
            "the solver's Lipschitz constraint assumes unit weights".into(),
        ));
    }
    let mut current = project_full(&initial, params.feas_tol, params.max_sweeps)?;
    let objective = |s: &GridSection| area_with_floor(s, metric, params.grad_floor);
    let mut value = objective(&current);
    let mut history = vec![value];
    let mut step = params.step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let grad = gradient_impl(&current, metric, params.grad_floor, false)?;
        if grad.iter().all(|&g| g == 0.0) {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..params.max_backtracks {
            let values: Vec<f64> = current.values.iter().zip(&grad).map(|(v, g)| v + step * g).collect();
            let trial = GridSection { base: current.base.clone(), p: current.p, values };
            let trial = project_full(&trial, params.feas_tol, params.max_sweeps)?;
            let trial_value = objective(&trial);
            if trial_value > value {
                accepted = Some((trial, trial_value));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            converged = true;
            break;
        };
        current = next;
        value = next_value;
        history.push(value);
        step = (step * 2.0).min(params.step * 1e3);
        if history.len() > params.patience {
            let old = history[history.len() - 1 - params.patience];
            if value - old <= params.stop_tol * value.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }

    let degenerate_cells = {
        let (p, q) = (current.p, current.base.q);
        let mut jac = vec![0.0; p * q];
        current
            .base
            .cells
            .iter()
            .filter(|cell| {
                cell_jacobian(&current, cell, &mut jac);
                cell_form(metric, p, q, &jac).min_eigenvalue < params.grad_floor
            })
            .count()
    };
    let max_violation = current.max_violation(PairSet::AllPairs);
    Ok(PlateauSolution {
        area: value,
        section: current,
        history,
        iterations,
        converged,
        max_violation,
        degenerate_cells,
    })
}

/// Bolzano-Weierstrass extraction on a finite sequence of sections.
///
/// Node by node and coordinate by coordinate, keeps the larger half of the current
/// index set (ties go to the half holding the earliest index) until the spread of
/// that coordinate is at most `tol / sqrt(p)`. The returned subsequence is mutually
/// within `tol` in sup norm; its last member stands for the limit.
pub fn extract_limit_section(sequence: &[GridSection], tol: f64) -> Result<(Vec<usize>, GridSection)> {
    let first = sequence
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty section sequence".into()))?;
    for (k, s) in sequence.iter().enumerate() {
        if !(Arc::ptr_eq(&s.base, &first.base) || s.base == first.base) || s.p != first.p {
            return Err(Error::MismatchedSections(format!("section {k} has a different base")));
        }
        if !s.boundary_matches(first) {
            return Err(Error::MismatchedSections(format!("section {k} has different boundary data")));
        }
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let coord_tol = tol / (first.p as f64).sqrt();
    let mut keep: Vec<usize> = (0..sequence.len()).collect();
    for entry in 0..first.values.len() {
        loop {
            let vals = keep.iter().map(|&k| sequence[k].values[entry]);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= coord_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (lower, upper): (Vec<usize>, Vec<usize>) =
                keep.iter().partition(|&&k| sequence[k].values[entry] <= mid);
            keep = match lower.len().cmp(&upper.len()) {
                std::cmp::Ordering::Greater => lower,
                std::cmp::Ordering::Less => upper,
                std::cmp::Ordering::Equal => {
                    if lower[0] < upper[0] {
                        lower
                    } else {
                        upper
                    }
                }
            };
        }
    }
    let limit = sequence[*keep.last().expect("nonempty")].clone();
    Ok((keep, limit))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemicontinuityReport {
    pub scale: f64,
    pub trials: usize,
    pub base_area: f64,
    pub best_area: f64,
    /// `best_area - base_area`.
    pub improvement: f64,
}

/// Samples feasible sections within sup distance `scale` and reports the best area gain.
pub fn upper_semicontinuity_probe(
    section: &GridSection,
    metric: &PseudoMetric,
    scale: f64,
    trials: usize,
    seed: u64,
    feas_tol: f64,
) -> Result<SemicontinuityReport> {
    check_metric(section, metric)?;
    let base_area = area(section, metric)?;
    let mut best_area = base_area;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = section.p;
    for _ in 0..trials {
        if scale <= 0.0 {
            break;
        }
        let mut values = section.values.clone();
        for i in section.base.interior_nodes() {
            let dir: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let r = scale * rng.random::<f64>().powf(1.0 / p as f64) / linalg::norm(&dir).max(1e-300);
            for c in 0..p {
                values[i * p + c] += r * dir[c];
            }
        }
        let trial = GridSection { base: section.base.clone(), p, values };
        let trial = project_full(&trial, feas_tol, 10_000)?;
        let d = trial.sup_distance(section);
        let theta = if d > scale { scale / d } else { 1.0 };
        let values = section
            .values
            .iter()
            .zip(&trial.values)
            .map(|(a, b)| a + theta * (b - a))
            .collect();
        let trial = GridSection { base: section.base.clone(), p, values };
        best_area = best_area.max(area(&trial, metric)?);
    }
    Ok(SemicontinuityReport { scale, trials, base_area, best_area, improvement: best_area - base_area })
}
