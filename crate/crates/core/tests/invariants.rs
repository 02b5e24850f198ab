use std::sync::Arc;

use proptest::prelude::*;

use pqcausal::diamond::{inversion_phi, psi_product, FlatDiamond, HalfSpaceFuture, ProductModelPoint};
use pqcausal::linalg;
use pqcausal::lipgraph::{is_causal_position, kirszbraun_extend, lipschitz_constant, ExtendOptions, GraphSamples, LipMap};
use pqcausal::plateau::{
    area, project_lipschitz, solve_plateau, upper_semicontinuity_probe, BaseShape, BoundarySpec, GridBase,
    GridSection, GridSpec, PairSet, PlateauProblem, SolverParams,
};
use pqcausal::pqform::{
    classify_subspace, classify_vector, cone_sample, metric_leq, CausalClass, PseudoMetric, SubspaceClass,
};
use pqcausal::split::{lift_path, FoliationWitness};

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn signature() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=3)
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..5.0, n)
}

fn metric() -> impl Strategy<Value = PseudoMetric> {
    signature().prop_flat_map(|(p, q)| (weights(p), weights(q)))
        .prop_map(|(a, b)| PseudoMetric::new(a, b).unwrap())
}

fn point_sets() -> impl Strategy<Value = (usize, usize, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (signature(), 2usize..7).prop_flat_map(|((p, q), n)| {
        (
            Just(p),
            Just(q),
            prop::collection::vec(vector(q), n),
            prop::collection::vec(prop::collection::vec(-1.2f64..1.2, p), n),
        )
    })
}

fn unit_grid(resolution: usize) -> Arc<GridBase> {
    Arc::new(GridBase::new(GridSpec { shape: BaseShape::unit_square(), resolution }).unwrap())
}

fn affine_problem(a: f64, b: f64, resolution: usize) -> PlateauProblem {
    PlateauProblem {
        base: GridSpec { shape: BaseShape::unit_square(), resolution },
        metric: PseudoMetric::standard(1, 2).unwrap(),
        boundary: BoundarySpec::Affine { matrix: vec![vec![a, b]], offset: vec![0.1] },
        solver: SolverParams { max_iter: 3000, ..SolverParams::default() },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn classification_is_scale_invariant(g in metric(), seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let v = cone_sample(&g, 1, seed).pop().unwrap();
        let mixed: Vec<f64> = v.iter().enumerate().map(|(i, x)| if i == 0 { x + 0.3 } else { *x }).collect();
        for u in [v, mixed] {
            prop_assume!(g.quadratic(&u).abs() > 1e-6 * linalg::norm_sq(&u));
            let scaled: Vec<f64> = u.iter().map(|x| scale * x).collect();
            prop_assert_eq!(classify_vector(&g, &u, 1e-12)?, classify_vector(&g, &scaled, 1e-12)?);
        }
    }

    #[test]
    fn one_dimensional_subspace_matches_vector((p, q) in signature(), raw in vector(6)) {
        let g = PseudoMetric::standard(p, q)?;
        let v = raw[..p + q].to_vec();
        prop_assume!(linalg::norm(&v) > 1e-3);
        prop_assume!(g.quadratic(&v).abs() > 1e-9 * linalg::norm_sq(&v));
        let expected = match classify_vector(&g, &v, 1e-12)? {
            CausalClass::Spacelike => SubspaceClass::Spacelike,
            CausalClass::Lightlike => SubspaceClass::Lightlike,
            CausalClass::Timelike => SubspaceClass::Timelike,
        };
        prop_assert_eq!(classify_subspace(&g, &[v], 1e-12)?, expected);
    }

    #[test]
    fn metric_order_matches_cone_oracle(p in 1usize..=3, q in 1usize..=3, w in weights(12), seed in any::<u64>()) {
        let g1 = PseudoMetric::new(w[..p].to_vec(), w[3..3 + q].to_vec())?;
        let g2 = PseudoMetric::new(w[6..6 + p].to_vec(), w[9..9 + q].to_vec())?;
        let ratio = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x / y).collect::<Vec<_>>();
        let spatial = ratio(g1.spatial_weights(), g2.spatial_weights());
        let temporal = ratio(g1.temporal_weights(), g2.temporal_weights());
        let i = (0..p).max_by(|&a, &b| spatial[a].total_cmp(&spatial[b])).unwrap();
        let j = (0..q).min_by(|&a, &b| temporal[a].total_cmp(&temporal[b])).unwrap();
        prop_assume!((spatial[i] - temporal[j]).abs() > 1e-9);
        if metric_leq(&g1, &g2)? {
            for v in cone_sample(&g2, 200, seed) {
                prop_assert!(g1.quadratic(&v) <= 1e-12);
            }
        } else {
            // lightlike for g2, spacelike for g1
            let mut v = vec![0.0; p + q];
            v[i] = 1.0 / g2.spatial_weights()[i].sqrt();
            v[p + j] = 1.0 / g2.temporal_weights()[j].sqrt();
            prop_assert!(g2.quadratic(&v).abs() < 1e-12);
            prop_assert!(g1.quadratic(&v) > 0.0);
        }
    }

    #[test]
    fn graph_iff_causal_position((p, q, sources, targets) in point_sets()) {
        let samples = match GraphSamples::new(sources, targets) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let l = lipschitz_constant(&samples);
        prop_assume!((l - 1.0).abs() > 1e-9);
        let g = PseudoMetric::standard(p, q)?;
        prop_assert_eq!(l <= 1.0, is_causal_position(&g, &samples.lifted(), false, 0.0)?);
    }

    #[test]
    fn extension_is_consistent((_p, _q, sources, targets) in point_sets(), query in vector(3)) {
        let samples = match GraphSamples::new(sources, targets) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let l = lipschitz_constant(&samples).max(0.1);
        let opts = ExtendOptions::default();
        for (x, y) in samples.sources().iter().zip(samples.targets()) {
            let at_node = kirszbraun_extend(&samples, l, x, &opts)?;
            prop_assert!(linalg::dist(&at_node, y) <= 1e-9 * (1.0 + linalg::norm(y)));
        }
        let x = query[..samples.source_dim()].to_vec();
        let y = kirszbraun_extend(&samples, l, &x, &opts)?;
        prop_assert_eq!(&y, &kirszbraun_extend(&samples, l, &x, &opts)?);
        let mut augmented = samples.clone();
        if augmented.push(x, y).is_ok() {
            prop_assert!(lipschitz_constant(&augmented) <= l + 1e-8);
        }
    }

    #[test]
    fn leaf_id_is_constant_along_leaves(a in -0.9f64..0.9, b in -0.9f64..0.9, id in vector(1), time in vector(2)) {
        let norm = (a * a + b * b).sqrt();
        prop_assume!(norm < 0.95);
        let fol = FoliationWitness::new(LipMap::affine(vec![vec![a, b]], vec![0.2])?)?;
        let pt = fol.leaf_point(&id, &time)?;
        let back = fol.leaf_id(&pt)?;
        prop_assert!((back[0] - id[0]).abs() <= 1e-12 * (1.0 + id[0].abs()));
    }

    #[test]
    fn lifted_paths_have_no_spacelike_chords(a in -0.7f64..0.7, b in -0.7f64..0.7, path in prop::collection::vec(vector(2), 2..8)) {
        let section = LipMap::affine(vec![vec![a, b]], vec![0.0])?;
        let g = PseudoMetric::standard(1, 2)?;
        let lifted = lift_path(&section, &path)?;
        for u in &lifted {
            for v in &lifted {
                prop_assert_ne!(classify_vector(&g, &linalg::sub(u, v), 1e-12)?, CausalClass::Spacelike);
            }
        }
    }

    #[test]
    fn psi_lands_in_the_future_of_l((p, q) in (1usize..=3, 2usize..=3), u in vector(3), y in vector(2), t in 0.05f64..5.0) {
        let m = ProductModelPoint::from_chart(&u[..p], &y[..q - 1], t)?;
        let img = psi_product(&m)?;
        prop_assert!(HalfSpaceFuture::new(p, q)?.contains(&img, 0.0)?);
        let back = ProductModelPoint::from_ambient(p, q, &img)?;
        let scale = 1.0 + linalg::norm(&m.chart());
        prop_assert!(linalg::max_abs_diff(&back.chart(), &m.chart()) <= 1e-9 * scale);
    }

    #[test]
    fn phi_maps_the_diamond_into_the_future((p, q) in signature(), raw in vector(6), shrink in 0.0f64..0.98) {
        let pt: Vec<f64> = raw[..p + q].to_vec();
        let r = linalg::norm(&pt[..p]) + linalg::norm(&pt[p..]);
        prop_assume!(r > 1e-9);
        let inside: Vec<f64> = pt.iter().map(|x| x * shrink / r).collect();
        prop_assert!(FlatDiamond::canonical(p, q)?.contains(&inside, 0.0)?);
        let img = inversion_phi(p, q, &inside)?;
        prop_assert!(HalfSpaceFuture::new(p, q)?.contains(&img, -1e-12 * linalg::norm(&img))?);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_feasible_and_keeps_the_boundary(a in -0.7f64..0.7, b in -0.7f64..0.7, noise in prop::collection::vec(-1.0f64..1.0, 36)) {
        let base = unit_grid(6);
        let mut values: Vec<f64> = base.positions().iter().map(|x| a * x[0] + b * x[1]).collect();
        for i in base.interior_nodes() {
            values[i] += noise[i];
        }
        let raw = GridSection::new(base.clone(), 1, values)?;
        let projected = project_lipschitz(&raw, PairSet::AllPairs, 1e-10, 10_000)?;
        prop_assert!(projected.max_violation(PairSet::AllPairs) <= 1e-9);
        for i in base.boundary_nodes() {
            prop_assert_eq!(projected.value(i)[0].to_bits(), raw.value(i)[0].to_bits());
        }
        let g = PseudoMetric::standard(1, 2)?;
        prop_assert!(area(&projected, &g)? <= base.volume() * (1.0 + 1e-12));
    }

    #[test]
    fn ascent_history_is_monotone(a in -0.8f64..0.8, b in -0.8f64..0.8) {
        prop_assume!((a * a + b * b).sqrt() < 0.95);
        let sol = solve_plateau(&affine_problem(a, b, 5))?;
        for w in sol.history.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!(sol.area <= 1.0 + 1e-12);
    }
}

#[test]
fn maximizer_is_locally_upper_semicontinuous() {
    let problem = affine_problem(0.4, -0.3, 6);
    let sol = solve_plateau(&problem).unwrap();
    let g = PseudoMetric::standard(1, 2).unwrap();
    for scale in [1e-1, 1e-2, 1e-3] {
        let probe = upper_semicontinuity_probe(&sol.section, &g, scale, 50, 11, 1e-10).unwrap();
        assert!(probe.improvement <= 1e-9, "scale {scale}: {probe:?}");
    }
}

#[test]
fn lightlike_boundary_is_rigid() {
    // slope 1 along x: every 1-Lipschitz extension is the affine map itself
    let problem = affine_problem(1.0, 0.0, 6);
    let sol = solve_plateau(&problem).unwrap();
    let exact = GridSection::from_fn(sol.section.base().clone(), 1, |x| vec![x[0] + 0.1]).unwrap();
    assert!(sol.section.sup_distance(&exact) <= 1e-9);
    assert_eq!(sol.area, 0.0);
}
