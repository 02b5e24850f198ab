//! Flat causal diamonds, the future of a timelike hyperplane, and the conformal maps
//! between them and `H^p x H^q`.
//!
//! The canonical diamond `Diam_{p,q}` is bounded by the joint of the unit temporal
//! sphere `S-` and the unit spatial sphere `S+`; its closed form is
//! `|x+| + |x-| < 1`. The distinguished temporal axis `e1` is the first temporal
//! coordinate (index `p`), and `L` is spanned by the remaining temporal axes.

use std::cell::RefCell;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::pqform::{classify_segment, CausalClass, PseudoMetric};
use crate::{Error, Result};

fn check_len(pt: &[f64], n: usize) -> Result<()> {
    if pt.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pt.len() });
    }
    Ok(())
}

fn check_signature(p: usize, q: usize) -> Result<()> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidArgument(format!("signature ({p}, {q}) needs p, q >= 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatDiamond {
    p: usize,
    q: usize,
    center: Vec<f64>,
    scale: f64,
}

impl FlatDiamond {
    pub fn canonical(p: usize, q: usize) -> Result<Self> {
        check_signature(p, q)?;
        Ok(Self { p, q, center: vec![0.0; p + q], scale: 1.0 })
    }

    /// The image of the canonical diamond under `x -> center + scale x`.
    pub fn placed(p: usize, q: usize, center: Vec<f64>, scale: f64) -> Result<Self> {
        check_signature(p, q)?;
        check_len(&center, p + q)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("diamond scale must be positive, got {scale}")));
        }
        Ok(Self { p, q, center, scale })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn metric(&self) -> PseudoMetric {
        PseudoMetric::standard(self.p, self.q).expect("p, q >= 1")
    }

    pub fn to_canonical(&self, pt: &[f64]) -> Result<Vec<f64>> {
        check_len(pt, self.p + self.q)?;
        Ok(pt.iter().zip(&self.center).map(|(x, c)| (x - c) / self.scale).collect())
    }

    /// Closed-form membership `|x+| + |x-| < 1 - tol` in the canonical frame.
    pub fn contains(&self, pt: &[f64], tol: f64) -> Result<bool> {
        let c = self.to_canonical(pt)?;
        let (sp, tm) = c.split_at(self.p);
        Ok(linalg::norm(sp) + linalg::norm(tm) < 1.0 - tol)
    }

    /// Signed distance-like gap `1 - |x+| - |x-|` in the canonical frame.
    pub fn boundary_gap(&self, pt: &[f64]) -> Result<f64> {
        let c = self.to_canonical(pt)?;
        let (sp, tm) = c.split_at(self.p);
        Ok(1.0 - linalg::norm(sp) - linalg::norm(tm))
    }

    /// Brute-force membership: the temporal projection lies in the unit disk and
    /// the segment to every sampled point of `S-` is timelike.
    ///
    /// The sample contains the `2q` axis points, `sphere_samples - 2q` seeded random
    /// points, and the worst sample after local refinement on the sphere.
    pub fn membership_oracle(&self, pt: &[f64], sphere_samples: usize, tol: f64) -> Result<bool> {
        let q = self.q;
        if sphere_samples < 2 * q {
            return Err(Error::InvalidArgument(format!(
                "need at least {} sphere samples, got {sphere_samples}",
                2 * q
            )));
        }
        let c = self.to_canonical(pt)?;
        if linalg::norm(&c[self.p..]) >= 1.0 {
            return Ok(false);
        }
        let g = self.metric();
        let mut lifted = vec![0.0; self.p + q];
        let mut timelike_to = |s: &[f64]| -> Result<bool> {
            lifted[self.p..].copy_from_slice(s);
            Ok(classify_segment(&g, &c, &lifted, tol)? == CausalClass::Timelike)
        };

        let tm = &c[self.p..];
        let sphere = cached_sphere(q, sphere_samples);
        let mut worst: Option<(f64, &[f64])> = None;
        for s in sphere.iter() {
            if !timelike_to(s)? {
                return Ok(false);
            }
            let d = linalg::dist(tm, s);
            if worst.is_none_or(|(best, _)| d < best) {
                worst = Some((d, s));
            }
        }
        if q >= 2 {
            let mut s = worst.expect("nonempty sample").1.to_vec();
            // gradient steps on s -> -|tm - s|^2 restricted to the sphere
            for _ in 0..200 {
                let moved: Vec<f64> = s.iter().zip(tm).map(|(si, ti)| si + 0.5 * (ti - si)).collect();
                let r = linalg::norm(&moved);
                if r == 0.0 {
                    break;
                }
                let next: Vec<f64> = moved.iter().map(|v| v / r).collect();
                let change = linalg::dist(&next, &s);
                s = next;
                if change < 1e-15 {
                    break;
                }
            }
            if !timelike_to(&s)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn cached_sphere(q: usize, count: usize) -> Rc<Vec<Vec<f64>>> {
    thread_local! {
        static LAST: RefCell<Option<(usize, usize, Rc<Vec<Vec<f64>>>)>> = const { RefCell::new(None) };
    }
    LAST.with(|cell| {
        let mut last = cell.borrow_mut();
        match last.as_ref() {
            Some((lq, lc, pts)) if *lq == q && *lc == count => pts.clone(),
            _ => {
                let pts = Rc::new(sphere_points(q, count));
                *last = Some((q, count, pts.clone()));
                pts
            }
        }
    })
}

/// Deterministic sample of the unit sphere in `R^q`: axis points first.
pub fn sphere_points(q: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count.max(2 * q));
    for j in 0..q {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; q];
            e[j] = sign;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5feb);
    while out.len() < count {
        let v: Vec<f64> = (0..q).map(|_| rng.sample(StandardNormal)).collect();
        let r = linalg::norm(&v);
        if r > 1e-12 {
            out.push(v.iter().map(|x| x / r).collect());
        }
    }
    out
}

/// The future `J+(L)`: points with `|x+| < <x-, e1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfSpaceFuture {
    p: usize,
    q: usize,
}

impl HalfSpaceFuture {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        check_signature(p, q)?;
        Ok(Self { p, q })
    }

    pub fn contains(&self, pt: &[f64], tol: f64) -> Result<bool> {
        check_len(pt, self.p + self.q)?;
        Ok(linalg::norm(&pt[..self.p]) < pt[self.p] - tol)
    }
}

fn e1(p: usize, q: usize) -> Vec<f64> {
    let mut e = vec![0.0; p + q];
    e[p] = 1.0;
    e
}

/// Raw inversion `x -> -(x - e1) / Q(x - e1)` in the standard form of `R^{p,q}`.
pub fn inversion_raw(p: usize, q: usize, pt: &[f64]) -> Result<Vec<f64>> {
    check_signature(p, q)?;
    check_len(pt, p + q)?;
    let g = PseudoMetric::standard(p, q)?;
    let mut v = pt.to_vec();
    v[p] -= 1.0;
    let qv = g.quadratic(&v);
    if qv.abs() <= 1e-14 * linalg::norm_sq(&v).max(f64::MIN_POSITIVE) {
        return Err(Error::LightConeSingularity);
    }
    Ok(v.iter().map(|x| -x / qv).collect())
}

/// Normalized inversion: the raw image translated by `e1 / 2` with the `e1` axis
/// reflected, so that `S- \ {e1}` lands on `L` and the diamond on the future of `L`.
pub fn inversion_phi(p: usize, q: usize, pt: &[f64]) -> Result<Vec<f64>> {
    let mut y = inversion_raw(p, q, pt)?;
    y[p] = -(y[p] + 0.5);
    Ok(y)
}

/// A point of `H^p x H^q`: `x` on the upper sheet of the hyperboloid in
/// `R^{p,0} + R e1` (stored spatial block first, `e1` component last), `y` in
/// `L ~ R^{q-1}` and half-space height `t > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductModelPoint {
    x: Vec<f64>,
    y: Vec<f64>,
    t: f64,
}

impl ProductModelPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidArgument("hyperboloid point needs p >= 1".into()));
        }
        let (sp, apex) = x.split_at(x.len() - 1);
        let form = linalg::norm_sq(sp) - apex[0] * apex[0];
        if (form + 1.0).abs() > 1e-12 * (1.0 + apex[0] * apex[0]) || apex[0] < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "x is not on the upper hyperboloid sheet (Q(x) = {form})"
            )));
        }
        if !(t > 0.0) {
            return Err(Error::NonPositiveHeight(t));
        }
        Ok(Self { x, y, t })
    }

    /// Chart coordinates: spatial part `u` of `x`, position `y` in `L`, height `t`.
    pub fn from_chart(u: &[f64], y: &[f64], t: f64) -> Result<Self> {
        let apex = (1.0 + linalg::norm_sq(u)).sqrt();
        let x = u.iter().copied().chain(std::iter::once(apex)).collect();
        Self::new(x, y.to_vec(), t)
    }

    /// Inverse of [`psi_product`] on the future of `L`.
    pub fn from_ambient(p: usize, q: usize, pt: &[f64]) -> Result<Self> {
        check_signature(p, q)?;
        check_len(pt, p + q)?;
        let time = pt[p];
        let t_sq = time * time - linalg::norm_sq(&pt[..p]);
        if !(time > 0.0 && t_sq > 0.0) {
            return Err(Error::InvalidArgument("point is not in the future of L".into()));
        }
        let t = t_sq.sqrt();
        let u: Vec<f64> = pt[..p].iter().map(|v| v / t).collect();
        Self::from_chart(&u, &pt[p + 1..], t)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn chart(&self) -> Vec<f64> {
        let p = self.x.len() - 1;
        self.x[..p].iter().chain(&self.y).copied().chain(std::iter::once(self.t)).collect()
    }
}

/// `(x, y, t) -> t x + y`.
pub fn psi_product(m: &ProductModelPoint) -> Result<Vec<f64>> {
    if !(m.t > 0.0) {
        return Err(Error::NonPositiveHeight(m.t));
    }
    let p = m.x.len() - 1;
    let mut out: Vec<f64> = m.x[..p].iter().map(|v| m.t * v).collect();
    out.push(m.t * m.x[p]);
    out.extend_from_slice(&m.y);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConformalMap {
    /// Normalized inversion on ambient coordinates.
    Phi,
    /// Product model map on chart coordinates `(u, y, t)`.
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalFit {
    /// `mu` in `J^T G_target J = mu G_source`.
    pub pullback_factor: f64,
    /// `mu^{-1/2}`: the map pushes the source metric forward to `factor^2 g`.
    pub factor: f64,
    /// `|J^T G_target J - mu G_source|_F / |mu G_source|_F`.
    pub residual: f64,
}

fn product_metric(p: usize, q: usize, chart: &[f64]) -> Vec<f64> {
    let n = p + q;
    let u = &chart[..p];
    let t = chart[n - 1];
    let s = 1.0 + linalg::norm_sq(u);
    let mut m = vec![0.0; n * n];
    for i in 0..p {
        for j in 0..p {
            m[i * n + j] = if i == j { 1.0 } else { 0.0 } - u[i] * u[j] / s;
        }
    }
    for i in p..n {
        m[i * n + i] = -1.0 / (t * t);
    }
    m
}

fn psi_chart(p: usize, q: usize, chart: &[f64]) -> Result<Vec<f64>> {
    let m = ProductModelPoint::from_chart(&chart[..p], &chart[p..p + q - 1], chart[p + q - 1])?;
    psi_product(&m)
}

/// Fits a conformal factor to the central-difference Jacobian of `map` at `pt`.
///
/// For [`ConformalMap::Phi`], `pt` is an ambient point and both metrics are the
/// standard form. For [`ConformalMap::Psi`], `pt` holds chart coordinates
/// `(u, y, t)` and the source metric is `g_{H^p} - g_{H^q}` with the hyperboloid
/// chart on the first factor and the half-space chart on the second.
pub fn conformality_check(map: ConformalMap, p: usize, q: usize, pt: &[f64], fd_step: f64) -> Result<ConformalFit> {
    check_signature(p, q)?;
    let n = p + q;
    check_len(pt, n)?;
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let margin = 10.0 * fd_step;
    let source_metric = match map {
        ConformalMap::Phi => {
            let v = linalg::sub(pt, &e1(p, q));
            let gap = (linalg::norm(&v[..p]) - linalg::norm(&v[p..])).abs() / 2f64.sqrt();
            if gap < margin {
                return Err(Error::SingularProximity { distance: gap });
            }
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                m[i * n + i] = if i < p { 1.0 } else { -1.0 };
            }
            m
        }
        ConformalMap::Psi => {
            let t = pt[n - 1];
            if t < margin {
                return Err(Error::SingularProximity { distance: t });
            }
            product_metric(p, q, pt)
        }
    };
    let eval = |x: &[f64]| -> Result<Vec<f64>> {
        match map {
            ConformalMap::Phi => inversion_phi(p, q, x),
            ConformalMap::Psi => psi_chart(p, q, x),
        }
    };

    // jac[i * n + k] = d out_i / d in_k
    let mut jac = vec![0.0; n * n];
    let mut probe = pt.to_vec();
    for k in 0..n {
        probe[k] = pt[k] + fd_step;
        let plus = eval(&probe)?;
        probe[k] = pt[k] - fd_step;
        let minus = eval(&probe)?;
        probe[k] = pt[k];
        for i in 0..n {
            jac[i * n + k] = (plus[i] - minus[i]) / (2.0 * fd_step);
        }
    }
    let mut pulled = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            pulled[a * n + b] = (0..n)
                .map(|i| if i < p { 1.0 } else { -1.0 } * jac[i * n + a] * jac[i * n + b])
                .sum();
        }
    }
    let mu = linalg::dot(&pulled, &source_metric) / linalg::norm_sq(&source_metric);
    let diff: Vec<f64> = pulled.iter().zip(&source_metric).map(|(a, s)| a - mu * s).collect();
    let residual = linalg::norm(&diff) / (mu.abs() * linalg::norm(&source_metric));
    Ok(ConformalFit {
        pullback_factor: mu,
        factor: if mu > 0.0 { mu.powf(-0.5) } else { f64::NAN },
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize, s: f64) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = s;
        v
    }

    #[test]
    fn diamond_examples() {
        let d = FlatDiamond::canonical(2, 2).unwrap();
        assert!(d.contains(&[0.0; 4], 0.0).unwrap());
        assert!(!d.contains(&[0.6, 0.0, 0.6, 0.0], 0.0).unwrap());
        assert!(d.contains(&[0.3, 0.0, 0.3, 0.0], 0.0).unwrap());
        assert!(!d.membership_oracle(&[0.6, 0.0, 0.6, 0.0], 64, 0.0).unwrap());
        assert!(d.membership_oracle(&[0.3, 0.0, 0.3, 0.0], 64, 0.0).unwrap());
        assert!(d.membership_oracle(&[0.0; 4], 4, 0.0).unwrap());
        assert!(d.contains(&[0.0; 3], 0.0).is_err());
    }

    #[test]
    fn oracle_boundary_and_outside() {
        let d = FlatDiamond::canonical(2, 2).unwrap();
        for s in sphere_points(2, 16) {
            let pt = [s[0], s[1], 0.0, 0.0];
            assert!(!d.membership_oracle(&pt, 64, 0.0).unwrap());
        }
        assert!(!d.membership_oracle(&[0.0, 0.0, 1.0, 0.0], 64, 0.0).unwrap());
        assert!(!d.membership_oracle(&[0.0, 0.0, 0.8, 0.7], 64, 0.0).unwrap());
        assert!(d.membership_oracle(&[0.0; 4], 3, 0.0).is_err());
    }

    #[test]
    fn placed_diamond() {
        let d = FlatDiamond::placed(1, 1, vec![5.0, 5.0], 2.0).unwrap();
        assert!(d.contains(&[5.9, 5.9], 0.0).unwrap());
        assert!(!d.contains(&[6.1, 6.1], 0.0).unwrap());
        assert!(FlatDiamond::placed(1, 1, vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn half_space_examples() {
        let h = HalfSpaceFuture::new(1, 2).unwrap();
        assert!(h.contains(&[0.0, 1.0, 0.0], 0.0).unwrap());
        assert!(!h.contains(&[1.0, 0.5, 0.0], 0.0).unwrap());
        assert!(!h.contains(&[0.0, -1.0, 0.0], 0.0).unwrap());
    }

    #[test]
    fn inversion_examples() {
        let (p, q) = (2, 2);
        let n = p + q;
        let img = inversion_phi(p, q, &unit(n, p, -1.0)).unwrap();
        assert!(linalg::norm(&img) < 1e-15);
        let raw = inversion_raw(p, q, &unit(n, p + 1, 1.0)).unwrap();
        assert!(linalg::max_abs_diff(&raw, &[0.0, 0.0, -0.5, 0.5]) < 1e-15);
        let img = inversion_phi(p, q, &unit(n, p + 1, 1.0)).unwrap();
        assert!(linalg::max_abs_diff(&img, &[0.0, 0.0, 0.0, 0.5]) < 1e-15);
        let raw = inversion_raw(p, q, &[0.0; 4]).unwrap();
        assert!(linalg::max_abs_diff(&raw, &unit(n, p, -1.0)) < 1e-15);
        let img = inversion_phi(p, q, &[0.0; 4]).unwrap();
        assert!(linalg::max_abs_diff(&img, &unit(n, p, 0.5)) < 1e-15);
        assert_eq!(inversion_phi(p, q, &[1.0, 0.0, 0.0, 0.0]), Err(Error::LightConeSingularity));
    }

    #[test]
    fn psi_examples() {
        let apex = ProductModelPoint::from_chart(&[0.0], &[0.0], 1.0).unwrap();
        assert_eq!(psi_product(&apex).unwrap(), vec![0.0, 1.0, 0.0]);
        let m = ProductModelPoint::from_chart(&[0.0], &[1.0], 2.0).unwrap();
        assert_eq!(psi_product(&m).unwrap(), vec![0.0, 2.0, 1.0]);
        assert_eq!(
            ProductModelPoint::from_chart(&[0.0], &[0.0], 0.0),
            Err(Error::NonPositiveHeight(0.0))
        );
        assert!(ProductModelPoint::new(vec![1.0, 1.0], vec![], 1.0).is_err());
    }

    #[test]
    fn chart_round_trip() {
        let m = ProductModelPoint::from_chart(&[0.3, -1.2], &[0.7], 1.7).unwrap();
        let pt = psi_product(&m).unwrap();
        assert!(HalfSpaceFuture::new(2, 2).unwrap().contains(&pt, 0.0).unwrap());
        let back = ProductModelPoint::from_ambient(2, 2, &pt).unwrap();
        assert!(linalg::max_abs_diff(&back.chart(), &m.chart()) < 1e-12);
    }

    #[test]
    fn conformal_factors() {
        let fit = conformality_check(ConformalMap::Psi, 2, 2, &[0.4, -0.3, 0.2, 1.0], 1e-5).unwrap();
        assert!((fit.factor - 1.0).abs() < 1e-6, "{fit:?}");
        assert!(fit.residual < 1e-6);
        let fit = conformality_check(ConformalMap::Psi, 2, 2, &[0.4, -0.3, 0.2, 2.0], 1e-5).unwrap();
        assert!((fit.factor - 0.5).abs() < 1e-6, "{fit:?}");
        let fit = conformality_check(ConformalMap::Phi, 2, 2, &[0.0; 4], 1e-5).unwrap();
        assert!(fit.residual < 1e-6 && fit.factor > 0.0, "{fit:?}");
        // inversion rescales the form by 1 / Q(x - e1)^2 = 1 at the center
        assert!((fit.pullback_factor - 1.0).abs() < 1e-6);
        assert!(matches!(
            conformality_check(ConformalMap::Psi, 2, 2, &[0.0, 0.0, 0.0, 1e-5], 1e-5),
            Err(Error::SingularProximity { .. })
        ));
    }
}
