use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sagraph::bridge::{affine_energy, discrete_to_metric, eta_distances, metric_to_discrete};
use sagraph::families::{antitree, antitree_family, AntitreeSpec, PathLaplacian};
use sagraph::metrics::{check_intrinsic_weight, jump_size, path_metric, wouk_weight};
use sagraph::operators::{
    apply_schrodinger, assemble_truncation, lambda_min_sequence, operator_norm_bounds, plain_compression,
    quadratic_form, SpectralConfig,
};
use sagraph::selfadjoint::deficiency::jacobi_deficiency_evidence;
use sagraph::selfadjoint::jacobi::truncation_lambda_min;
use sagraph::selfadjoint::{degree_weight, DeficiencyConfig, JacobiData};
use sagraph::{
    analyze, AnalysisOptions, EdgeWeightFunction, MetricEdge, MetricGraphModel, Subject, VertexId,
    WeightedGraph,
};

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Connected graph on `n` vertices: a random tree plus extra edges.
fn graph(seed: u64, n: usize, unit: bool, potential: bool, spread: f64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = BTreeMap::new();
    for v in 1..n {
        pairs.insert(
            (rng.gen_range(0..v), v),
            log_uniform(&mut rng, 1.0 / spread, spread),
        );
    }
    for _ in 0..rng.gen_range(0..=n) {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            pairs.insert((u.min(v), u.max(v)), log_uniform(&mut rng, 1.0 / spread, spread));
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs.into_iter().map(|((u, v), b)| (u, v, b)).collect();
    let m = (0..n)
        .map(|_| {
            if unit {
                1.0
            } else {
                log_uniform(&mut rng, 1.0 / spread, spread)
            }
        })
        .collect();
    let alpha = potential.then(|| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
    WeightedGraph::from_dense(m, &edges, alpha).unwrap()
}

fn function(seed: u64, g: &WeightedGraph) -> BTreeMap<VertexId, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut f = BTreeMap::new();
    for &v in g.ids() {
        if rng.gen_bool(0.8) {
            f.insert(v, rng.gen_range(-1.0..1.0));
        }
    }
    f
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_lookup_is_symmetric(seed in any::<u64>(), n in 2usize..30) {
        let g = graph(seed, n, false, false, 100.0);
        for e in g.edges() {
            let (u, v) = (g.id(e.u), g.id(e.v));
            prop_assert_eq!(g.edge_weight(u, v).unwrap(), g.edge_weight(v, u).unwrap());
        }
        for k in 0..g.len() {
            let mut nb: Vec<usize> = g.neighbors(k).iter().map(|x| x.vertex).collect();
            nb.dedup();
            prop_assert_eq!(g.degree(g.id(k)).unwrap(), nb.len());
        }
    }

    #[test]
    fn path_metric_is_a_metric(seed in any::<u64>(), n in 2usize..25) {
        let g = graph(seed, n, false, false, 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = EdgeWeightFunction::new(&g, g.edges().iter().map(|_| log_uniform(&mut rng, 0.01, 10.0)).collect()).unwrap();
        let d: Vec<Vec<f64>> = g.ids().iter().map(|&s| path_metric(&g, &p, s).unwrap().by_position().to_vec()).collect();
        for x in 0..n {
            prop_assert_eq!(d[x][x], 0.0);
            for y in 0..n {
                prop_assert!(rel(d[x][y], d[y][x]) <= 1e-12);
                for z in 0..n {
                    prop_assert!(d[x][z] <= (d[x][y] + d[y][z]) * (1.0 + 1e-12));
                }
            }
        }
        for (k, e) in g.edges().iter().enumerate() {
            prop_assert!(d[e.u][e.v] <= p.at_edge(k));
        }
    }

    #[test]
    fn capping_keeps_intrinsic_and_bounds_jumps(seed in any::<u64>(), n in 2usize..30) {
        let g = graph(seed, n, false, false, 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = degree_weight(&g).unwrap();
        let p = EdgeWeightFunction::new(&g, base.values().iter().map(|x| x * rng.gen_range(0.1..=1.0)).collect()).unwrap();
        prop_assert!(check_intrinsic_weight(&g, &p).holds);
        let capped = p.capped();
        prop_assert!(check_intrinsic_weight(&g, &capped).holds);
        prop_assert!(jump_size(&capped) <= 1.0);
        let wild = EdgeWeightFunction::new(&g, g.edges().iter().map(|_| log_uniform(&mut rng, 0.01, 100.0)).collect()).unwrap();
        prop_assert!(jump_size(&wild.capped()) <= 1.0);
    }

    #[test]
    fn wouk_weight_is_intrinsic(seed in any::<u64>(), n in 2usize..40) {
        let g = graph(seed, n, true, false, 100.0);
        let check = check_intrinsic_weight(&g, &wouk_weight(&g).unwrap());
        prop_assert!(check.holds, "worst slack {}", check.worst_slack);
    }

    #[test]
    fn form_matches_operator(seed in any::<u64>(), n in 2usize..40) {
        let g = graph(seed, n, false, true, 100.0);
        let f = function(seed, &g);
        let lf = apply_schrodinger(&g, &f).unwrap();
        let pairing: f64 = f.iter().map(|(v, x)| lf[v] * x * g.measure(g.position(*v).unwrap())).sum();
        prop_assert!(rel(quadratic_form(&g, &f).unwrap(), pairing) <= 1e-12);
    }

    #[test]
    fn degree_sandwich(seed in any::<u64>(), n in 2usize..60) {
        let g = graph(seed, n, false, false, 100.0);
        let b = operator_norm_bounds(&g, &Default::default()).unwrap();
        let norm = b.exact.unwrap();
        prop_assert!(b.lower <= norm + 1e-9 && norm <= b.upper + 1e-9);
    }

    #[test]
    fn truncations_are_symmetric_and_unitarily_equivalent(seed in any::<u64>(), n in 2usize..14) {
        let g = graph(seed, n, false, true, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega: Vec<VertexId> = g.ids().iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
        prop_assume!(!omega.is_empty());
        let dense = assemble_truncation(&g, &omega).unwrap().to_dense();
        prop_assert_eq!(&dense, &dense.transpose());
        let mut sym: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut plain: Vec<f64> = plain_compression(&g, &omega).unwrap().complex_eigenvalues().iter().map(|z| z.re).collect();
        sym.sort_by(f64::total_cmp);
        plain.sort_by(f64::total_cmp);
        let scale = sym.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        for (x, y) in sym.iter().zip(&plain) {
            prop_assert!((x - y).abs() <= 1e-8 * scale, "{sym:?} vs {plain:?}");
        }
    }

    #[test]
    fn nested_truncations_lower_lambda_min(seed in any::<u64>(), n in 2usize..40) {
        let g = graph(seed, n, false, true, 100.0);
        let sets: Vec<Vec<VertexId>> = (1..=n).map(|d| g.ids()[..d].to_vec()).collect();
        let values = lambda_min_sequence(&g, &sets, &SpectralConfig::default()).unwrap();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn factorized_jacobi_is_nonnegative(seed in any::<u64>(), rows in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<f64> = (0..=rows).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
        let l: Vec<f64> = (0..rows).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
        let data = JacobiData::from_factorization(m, l, rows).unwrap();
        for k in 1..=rows {
            prop_assert!(truncation_lambda_min(&data, k).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn analysis_certifies_only_with_verified_hypotheses(seed in any::<u64>(), n in 2usize..20, unit in any::<bool>()) {
        let g = graph(seed, n, unit, seed % 2 == 0, 100.0);
        let report = analyze(Subject::Graph(&g), &AnalysisOptions::default()).unwrap();
        for o in &report.outcomes {
            prop_assert!(o.is_consistent(), "{o:?}");
        }
    }

    #[test]
    fn realization_round_trip(seed in any::<u64>(), n in 2usize..40) {
        let g = graph(seed, n, true, seed % 2 == 0, 100.0);
        let p = wouk_weight(&g).unwrap().capped();
        let model = discrete_to_metric(&g, &p).unwrap();
        let back = metric_to_discrete(&model).unwrap();
        for (a, b) in back.measures().iter().zip(g.measures()) {
            prop_assert!(rel(*a, *b) <= 1e-12);
        }
        for (a, b) in back.edges().iter().zip(g.edges()) {
            prop_assert_eq!((a.u, a.v), (b.u, b.v));
            prop_assert!(rel(a.b, b.b) <= 1e-12);
        }
        let loop_eta = jump_size(&p).min(1.0);
        let sup_eta = model.edges().iter().map(MetricEdge::eta).fold(0.0, f64::max);
        prop_assert!(sup_eta <= jump_size(&p).max(loop_eta) * (1.0 + 1e-12));
        for &s in g.ids() {
            let rho = path_metric(&g, &p, s).unwrap();
            let eta = eta_distances(&model, s).unwrap();
            for (x, y) in rho.by_position().iter().zip(eta.by_position()) {
                prop_assert!(rel(*x, *y) <= 1e-12);
            }
        }
    }

    #[test]
    fn affine_energy_is_the_discrete_form(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: Vec<MetricEdge> = (1..n)
            .map(|v| MetricEdge {
                u: VertexId(rng.gen_range(0..v)),
                v: VertexId(v),
                length: log_uniform(&mut rng, 0.1, 10.0),
                mu: log_uniform(&mut rng, 0.1, 10.0),
                nu: log_uniform(&mut rng, 0.1, 10.0),
            })
            .collect();
        for _ in 0..rng.gen_range(0..n) {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            edges.push(MetricEdge {
                u: VertexId(u),
                v: VertexId(v),
                length: log_uniform(&mut rng, 0.1, 10.0),
                mu: log_uniform(&mut rng, 0.1, 10.0),
                nu: log_uniform(&mut rng, 0.1, 10.0),
            });
        }
        let model = MetricGraphModel::from_edges(edges).unwrap();
        let g = metric_to_discrete(&model).unwrap();
        let f = function(seed, &g);
        prop_assume!(f.values().any(|&x| x != 0.0));
        let energy = affine_energy(&model, &f).unwrap();
        prop_assert!(rel(energy, quadratic_form(&g, &f).unwrap()) <= 1e-12);
        let norm: f64 = f.iter().map(|(v, x)| x * x * g.measure(g.position(*v).unwrap())).sum();
        let lambda = assemble_truncation(&g, g.ids()).unwrap().lambda_min(&Default::default()).unwrap();
        prop_assert!(lambda <= energy / norm + 1e-9 * lambda.abs().max(1.0));
    }

    #[test]
    fn antitree_degrees(spheres in prop::collection::vec(1u64..6, 2..6)) {
        let mut s = vec![1];
        s.extend(spheres);
        let spec = AntitreeSpec::from_spheres(s.clone()).unwrap();
        let depth = s.len() - 1;
        let g = antitree(&spec, depth).unwrap();
        let mut offset = 0;
        for (n, &size) in s.iter().enumerate() {
            let expected = if n == 0 { 0 } else { s[n - 1] } + s.get(n + 1).copied().unwrap_or(0);
            for k in offset..offset + size as usize {
                prop_assert_eq!(g.degree(g.id(k)).unwrap() as u64, expected);
            }
            offset += size as usize;
        }
        let family = antitree_family(&spec);
        for d in 0..depth {
            let (small, large) = (family.truncate(d).unwrap(), family.truncate(d + 1).unwrap());
            for &v in small.graph.ids() {
                prop_assert!(large.graph.contains(v));
            }
            for e in small.graph.edges() {
                let (u, v) = (small.graph.id(e.u), small.graph.id(e.v));
                prop_assert_eq!(large.graph.edge_weight(u, v).unwrap(), e.b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conjugate_points_classify_alike(exponent in -1.0f64..3.0) {
        let source = PathLaplacian { exponent };
        let config = DeficiencyConfig { steps: 4000, max_steps: 8000, ..DeficiencyConfig::default() };
        let plus = jacobi_deficiency_evidence(&source, num_complex::Complex64::new(0.0, 1.0), &config).unwrap();
        let minus = jacobi_deficiency_evidence(&source, num_complex::Complex64::new(0.0, -1.0), &config).unwrap();
        prop_assert_eq!(plus.class, minus.class);
    }
}

#[test]
fn dense_oracle_agrees_with_sturm() {
    let data = JacobiData::new(vec![2.0; 30], vec![1.0; 29]).unwrap();
    let mut m = DMatrix::<f64>::zeros(30, 30);
    for k in 0..30 {
        m[(k, k)] = 2.0;
        if k + 1 < 30 {
            m[(k, k + 1)] = -1.0;
            m[(k + 1, k)] = -1.0;
        }
    }
    let dense = m.symmetric_eigen().eigenvalues.min();
    let closed = 2.0 - 2.0 * (std::f64::consts::PI / 31.0).cos();
    assert!((truncation_lambda_min(&data, 30).unwrap() - closed).abs() < 1e-12);
    assert!((dense - closed).abs() < 1e-12);
}
