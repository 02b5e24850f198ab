//! Reduced invariant suite behind `verify-all`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pqcausal::cauchy::{random_affine, random_interpolant, verify_cauchy_surface, FixedPointOptions, SpacelikeMap};
use pqcausal::diamond::{conformality_check, inversion_phi, sphere_points, ConformalMap, FlatDiamond};
use pqcausal::linalg;
use pqcausal::lipgraph::{is_causal_position, kirszbraun_extend, lipschitz_constant, ExtendOptions, GraphSamples};
use pqcausal::plateau::{
    area, area_gradient, solve_plateau, BaseShape, BoundarySpec, GridBase, GridSection, GridSpec, PlateauProblem,
    SolverParams,
};
use pqcausal::pqform::{classify_vector, cone_sample, metric_leq, CausalClass, PseudoMetric};
use pqcausal::split::{check_speed_bound, verify_splitting_bijectivity, FoliationWitness, LevelSetSurface};
use pqcausal::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(module: &'static str, name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { module, name, passed, detail },
        Err(e) => Check { module, name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn run_suite(seed: u64) -> Vec<Check> {
    vec![
        check("pqform", "classification examples", pqform_examples()),
        check("pqform", "cone samples are causal", cone_causal(seed)),
        check("lipgraph", "graph iff causal position", graph_characterization(seed)),
        check("lipgraph", "extension keeps the constant", extension_constant(seed)),
        check("cauchy", "unique intersection", cauchy_uniqueness(seed)),
        check("diamond", "closed form matches oracle", diamond_oracle(seed)),
        check("diamond", "conformal factors", conformal(seed)),
        check("plateau", "constant boundary", plateau_constant()),
        check("plateau", "gradient matches differences", plateau_gradient(seed)),
        check("split", "splitting round trip", split_round_trip(seed)),
        check("split", "speed bound", speed_bound(seed)),
    ]
}

fn sub_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k)
}

fn pqform_examples() -> Result<(bool, String)> {
    let g = PseudoMetric::standard(2, 2)?;
    let ok = classify_vector(&g, &[1.0, 0.0, 1.0, 0.0], 1e-12)? == CausalClass::Lightlike
        && classify_vector(&g, &[0.0, 0.0, 1.0, 0.0], 1e-12)? == CausalClass::Timelike
        && classify_vector(&g, &[1.0, 0.0, 0.0, 0.0], 1e-12)? == CausalClass::Spacelike
        && metric_leq(&g, &PseudoMetric::with_temporal_scale(2, 2, 0.5)?)?
        && !metric_leq(&PseudoMetric::with_temporal_scale(2, 2, 0.5)?, &g)?;
    Ok((ok, "4 vectors and 2 comparisons".into()))
}

fn cone_causal(seed: u64) -> Result<(bool, String)> {
    let g = PseudoMetric::standard(2, 3)?;
    let samples = cone_sample(&g, 500, sub_seed(seed, 1));
    let bad = samples.iter().filter(|v| !classify_vector(&g, v, 1e-12).is_ok_and(|c| c.is_causal())).count();
    Ok((bad == 0, format!("{bad} of 500 not causal")))
}

fn random_points(rng: &mut ChaCha8Rng, count: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect()).collect()
}

fn graph_characterization(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 2));
    let mut disagreements = 0;
    for _ in 0..200 {
        let (p, q) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let n = rng.random_range(2..=6);
        let sources = random_points(&mut rng, n, q, 1.0);
        let targets = random_points(&mut rng, n, p, 0.6);
        let samples = GraphSamples::new(sources, targets)?;
        let g = PseudoMetric::standard(p, q)?;
        let lipschitz = lipschitz_constant(&samples) <= 1.0;
        let causal = is_causal_position(&g, &samples.lifted(), false, 0.0)?;
        if lipschitz != causal {
            disagreements += 1;
        }
    }
    Ok((disagreements == 0, format!("{disagreements} disagreements in 200 sets")))
}

fn extension_constant(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 3));
    let opts = ExtendOptions::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (p, q) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let n = rng.random_range(2..=10);
        let sources = random_points(&mut rng, n, q, 1.0);
        let targets = random_points(&mut rng, n, p, 1.0);
        let samples = GraphSamples::new(sources, targets)?;
        let l = lipschitz_constant(&samples).max(1e-3);
        let x: Vec<f64> = (0..q).map(|_| rng.random_range(-1.5..1.5)).collect();
        let y = kirszbraun_extend(&samples, l, &x, &opts)?;
        let mut augmented = samples.clone();
        if augmented.push(x, y).is_ok() {
            worst = worst.max(lipschitz_constant(&augmented) - l);
        }
    }
    Ok((worst <= 1e-8, format!("max excess {worst:.3e}")))
}

fn cauchy_uniqueness(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 4));
    let w = SpacelikeMap::new(random_affine(&mut rng, 2, 2, 0.7))?;
    let report = verify_cauchy_surface(&w, 20, sub_seed(seed, 5), &FixedPointOptions::default())?;
    Ok((report.passed(), format!("{} of {} unique", report.unique_intersections, report.trials)))
}

fn diamond_oracle(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 6));
    let d = FlatDiamond::canonical(2, 2)?;
    let mut disagreements = 0;
    let mut counted = 0;
    for pt in random_points(&mut rng, 300, 4, 1.5) {
        if d.boundary_gap(&pt)?.abs() <= 1e-6 {
            continue;
        }
        counted += 1;
        if d.contains(&pt, 0.0)? != d.membership_oracle(&pt, 1000, 0.0)? {
            disagreements += 1;
        }
    }
    Ok((disagreements == 0, format!("{disagreements} disagreements in {counted} points")))
}

fn conformal(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 7));
    let (p, q) = (2, 2);
    let mut worst_factor = 0.0f64;
    let mut worst_residual = 0.0f64;
    for _ in 0..5 {
        let mut chart: Vec<f64> = (0..p + q - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = rng.random_range(0.5..2.0);
        chart.push(t);
        let fit = conformality_check(ConformalMap::Psi, p, q, &chart, 1e-5)?;
        worst_factor = worst_factor.max((fit.factor - 1.0 / t).abs() * t);
        worst_residual = worst_residual.max(fit.residual);
        let pt: Vec<f64> = (0..p + q).map(|_| rng.random_range(-0.3..0.3)).collect();
        worst_residual = worst_residual.max(conformality_check(ConformalMap::Phi, p, q, &pt, 1e-5)?.residual);
    }
    let mut off_l = 0.0f64;
    for s in sphere_points(q, 50) {
        if linalg::dist(&s, &[1.0, 0.0]) < 1e-6 {
            continue;
        }
        let pt: Vec<f64> = vec![0.0; p].into_iter().chain(s).collect();
        let img = inversion_phi(p, q, &pt)?;
        let off = linalg::norm(&img[..p]).max(img[p].abs());
        off_l = off_l.max(off / linalg::norm(&img).max(1.0));
    }
    let ok = worst_factor <= 1e-6 && worst_residual <= 1e-6 && off_l <= 1e-12;
    Ok((ok, format!("factor {worst_factor:.2e}, residual {worst_residual:.2e}, off L {off_l:.2e}")))
}

fn plateau_constant() -> Result<(bool, String)> {
    let problem = PlateauProblem {
        base: GridSpec { shape: BaseShape::unit_square(), resolution: 9 },
        metric: PseudoMetric::standard(1, 2)?,
        boundary: BoundarySpec::Constant { value: vec![0.25] },
        solver: SolverParams::default(),
    };
    let sol = solve_plateau(&problem)?;
    let ok = (sol.area - 1.0).abs() <= 1e-6 && sol.max_violation <= 1e-10;
    Ok((ok, format!("area {:.9}", sol.area)))
}

fn plateau_gradient(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 8));
    let base = std::sync::Arc::new(GridBase::new(GridSpec { shape: BaseShape::unit_square(), resolution: 5 })?);
    let g = PseudoMetric::standard(1, 2)?;
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let (a, b, c) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4), rng.random_range(1.0..3.0));
        let s = GridSection::from_fn(base.clone(), 1, |x| vec![a * (c * x[0]).sin() + b * x[1] * x[1]])?;
        let grad = area_gradient(&s, &g, 1e-8)?;
        for i in base.interior_nodes() {
            let mut plus = s.values().to_vec();
            plus[i] += 1e-6;
            let mut minus = s.values().to_vec();
            minus[i] -= 1e-6;
            let fd = (area(&GridSection::new(base.clone(), 1, plus)?, &g)?
                - area(&GridSection::new(base.clone(), 1, minus)?, &g)?)
                / 2e-6;
            worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1e-3));
        }
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.2e}")))
}

fn split_round_trip(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 9));
    let fol = FoliationWitness::new(random_interpolant(&mut rng, 1, 2, 4, 0.9))?;
    let level = LevelSetSurface(SpacelikeMap::new(random_affine(&mut rng, 1, 2, 0.8))?);
    let report = verify_splitting_bijectivity(&fol, &level, 100, sub_seed(seed, 10), 1e-10)?;
    Ok((report.passed(), format!("max error {:.2e}, {} collisions", report.max_error, report.collisions)))
}

fn speed_bound(seed: u64) -> Result<(bool, String)> {
    let g = PseudoMetric::standard(2, 2)?;
    let mut bad = 0;
    for v in cone_sample(&g, 1000, sub_seed(seed, 11)) {
        if !check_speed_bound(&g, &v, 1e-12)?.ok {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} violations in 1000 samples")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(0, 1), sub_seed(0, 2));
        assert_ne!(sub_seed(1, 1), sub_seed(2, 1));
    }

    #[test]
    fn failed_outcomes_are_reported() {
        let c = check("m", "n", Err(pqcausal::Error::InvalidArgument("x".into())));
        assert!(!c.passed && c.detail.starts_with("error"));
    }
}
