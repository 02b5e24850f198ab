//! Deterministic SVG and CSV output.

use std::fmt::Write as _;

use pqcausal::diamond::FlatDiamond;
use pqcausal::plateau::GridSection;
use pqcausal::Result;

const SIZE: f64 = 400.0;
const EXTENT: f64 = 1.5;
const BOUNDARY_RAYS: usize = 256;

/// A 2-D slice through the first spatial and first temporal axes of a diamond.
pub struct DiamondSlice<'a> {
    pub diamond: &'a FlatDiamond,
    /// Full point supplying the fixed coordinates; entries 0 and p are overwritten.
    pub anchor: Vec<f64>,
    pub resolution: usize,
}

impl DiamondSlice<'_> {
    fn point(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pt = self.anchor.clone();
        pt[0] = a;
        pt[self.diamond.p()] = b;
        pt
    }

    pub fn member(&self, a: f64, b: f64) -> Result<bool> {
        self.diamond.contains(&self.point(a, b), 0.0)
    }

    /// Grid of `(x1, y1, member)` over `[-1.5, 1.5]^2`.
    pub fn grid(&self) -> Result<Vec<(f64, f64, bool)>> {
        let n = self.resolution.max(2);
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            let b = EXTENT - 2.0 * EXTENT * j as f64 / (n - 1) as f64;
            for i in 0..n {
                let a = -EXTENT + 2.0 * EXTENT * i as f64 / (n - 1) as f64;
                out.push((a, b, self.member(a, b)?));
            }
        }
        Ok(out)
    }

    /// Boundary by bisection along rays from the origin; empty if the origin is outside.
    pub fn boundary(&self) -> Result<Vec<(f64, f64)>> {
        if !self.member(0.0, 0.0)? {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(BOUNDARY_RAYS);
        for k in 0..BOUNDARY_RAYS {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / BOUNDARY_RAYS as f64;
            let (c, s) = (theta.cos(), theta.sin());
            let (mut lo, mut hi) = (0.0, 2.0 * EXTENT);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.member(mid * c, mid * s)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((lo * c, lo * s));
        }
        Ok(out)
    }
}

fn to_px(a: f64, b: f64) -> (f64, f64) {
    ((a + EXTENT) / (2.0 * EXTENT) * SIZE, (EXTENT - b) / (2.0 * EXTENT) * SIZE)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(out, "<title>{title}</title>");
    let _ = writeln!(out, "<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>");
    let mid = SIZE / 2.0;
    let _ = writeln!(out, "<line x1=\"0\" y1=\"{mid}\" x2=\"{SIZE}\" y2=\"{mid}\" stroke=\"gray\" stroke-width=\"1\"/>");
    let _ = writeln!(out, "<line x1=\"{mid}\" y1=\"0\" x2=\"{mid}\" y2=\"{SIZE}\" stroke=\"gray\" stroke-width=\"1\"/>");
}

pub fn diamond_svg(slice: Option<&DiamondSlice<'_>>) -> Result<String> {
    let mut out = String::new();
    header(&mut out, "diamond slice (x1, y1)");
    if let Some(slice) = slice {
        for (a, b, member) in slice.grid()? {
            if member {
                let (x, y) = to_px(a, b);
                let _ = writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"1\" fill=\"#9ecae1\"/>");
            }
        }
        let boundary = slice.boundary()?;
        if !boundary.is_empty() {
            let pts: Vec<String> = boundary
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = to_px(a, b);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(
                out,
                "<polygon points=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn diamond_csv(slice: &DiamondSlice<'_>) -> Result<String> {
    let mut out = String::from("x1,y1,member\n");
    for (a, b, member) in slice.grid()? {
        let _ = writeln!(out, "{a:.6},{b:.6},{}", u8::from(member));
    }
    Ok(out)
}

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

/// Heightfield of the first component of a section over a 1-D or 2-D base.
pub fn section_svg(section: &GridSection) -> String {
    let mut out = String::new();
    header(&mut out, "plateau section");
    let base = section.base();
    let positions = base.positions();
    let (lo, hi) = bounds(positions.iter().flat_map(|x| x.iter().copied()));
    let (vlo, vhi) = bounds((0..base.len()).map(|i| section.value(i)[0]));
    let span = (hi - lo).max(1e-300);
    let vspan = (vhi - vlo).max(1e-300);
    // base coordinates map to [-1.2, 1.2]
    let scale = |x: f64| 2.4 * (x - lo) / span - 1.2;
    match base.q() {
        1 => {
            let pts: Vec<String> = (0..base.len())
                .map(|i| {
                    let v = 2.4 * (section.value(i)[0] - vlo) / vspan - 1.2;
                    let (x, y) = to_px(scale(positions[i][0]), v);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>", pts.join(" "));
        }
        _ => {
            let cell = 2.4 / (base.spec().resolution - 1) as f64 / (2.0 * EXTENT) * SIZE;
            for i in 0..base.len() {
                let (x, y) = to_px(scale(positions[i][0]), scale(positions[i][1]));
                let t = if vhi > vlo { (section.value(i)[0] - vlo) / vspan } else { 0.5 };
                let stroke = if base.is_boundary(i) { " stroke=\"black\" stroke-width=\"0.5\"" } else { "" };
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{cell:.3}\" height=\"{cell:.3}\" fill=\"{}\"{stroke}/>",
                    x - cell / 2.0,
                    y - cell / 2.0,
                    color(t)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
