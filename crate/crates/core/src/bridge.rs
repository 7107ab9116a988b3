//! Correspondence between metric-graph models with edgewise constant weights
//! and weighted discrete graphs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{MetricEdge, MetricGraphModel, VertexId, WeightedGraph};
use crate::metrics::{check_intrinsic_weight, jump_size, path_metric, Distances, EdgeWeightFunction};

/// The discrete graph of a model: `m(v) = Σ |e| μ(e)` over oriented edges
/// leaving `v` (a loop counts twice) and `b(u, v) = Σ ν(e)/|e|` over the
/// edges joining `u ≠ v`. A vertex without incident edges has zero measure
/// and is rejected.
pub fn metric_to_discrete(model: &MetricGraphModel) -> Result<WeightedGraph> {
    if !model.has_finite_intrinsic_size() {
        return Err(Error::InfiniteSizeModel);
    }
    let mut measure: BTreeMap<VertexId, f64> = model.vertices().iter().map(|&v| (v, 0.0)).collect();
    let mut weight: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
    for e in model.edges() {
        let mass = e.length * e.mu;
        *measure.get_mut(&e.u).expect("validated endpoint") += mass;
        *measure.get_mut(&e.v).expect("validated endpoint") += mass;
        if !e.is_loop() {
            let key = (e.u.min(e.v), e.u.max(e.v));
            *weight.entry(key).or_insert(0.0) += e.nu / e.length;
        }
    }
    let vertices: Vec<(VertexId, f64)> = measure.into_iter().collect();
    let edges: Vec<(VertexId, VertexId, f64)> = weight.into_iter().map(|((u, v), b)| (u, v, b)).collect();
    WeightedGraph::build(&vertices, &edges, model.potential())
}

/// Vertex-to-vertex distances in the η-metric, where an edge has length
/// `|e| √(μ(e)/ν(e))`. Unreachable vertices are at `+∞`.
pub fn eta_distances(model: &MetricGraphModel, source: VertexId) -> Result<Distances> {
    let ids = model.vertices();
    let position = |v: VertexId| ids.binary_search(&v).map_err(|_| Error::UnknownVertex(v));
    let start = position(source)?;
    // Shortest η-length per adjacent pair; loops never shorten a path.
    let mut shortest: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in model.edges().iter().filter(|e| !e.is_loop()) {
        let (pu, pv) = (position(e.u)?, position(e.v)?);
        let key = (pu.min(pv), pu.max(pv));
        let eta = e.eta();
        shortest.entry(key).and_modify(|x| *x = x.min(eta)).or_insert(eta);
    }
    let skeleton = WeightedGraph::build(
        &ids.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(),
        &shortest
            .keys()
            .map(|&(u, v)| (ids[u], ids[v], 1.0))
            .collect::<Vec<_>>(),
        None,
    )?;
    let lengths: Vec<(VertexId, VertexId, f64)> = shortest
        .iter()
        .map(|(&(u, v), &eta)| (ids[u], ids[v], eta))
        .collect();
    let eta = EdgeWeightFunction::from_pairs(&skeleton, &lengths)?;
    path_metric(&skeleton, &eta, ids[start])
}

pub fn eta_metric(model: &MetricGraphModel, u: VertexId, v: VertexId) -> Result<f64> {
    eta_distances(model, u)?.get(v)
}

/// Realizes `(V, m; b)` as a metric graph whose η-metric restricts to the
/// path metric of `p` on vertices.
///
/// Each discrete edge becomes one metric edge with `|e| = p`, `ν = b p` and
/// `μ = b p`, so that `η(e) = p` and `ν/|e| = b`. The leftover measure
/// `d(v) = m(v) − Σ_u b p²` is carried by a loop of length 1 with
/// `μ = d/2` and `ν = μ / min(1, s)²`, where `s` is the jump size of `p`.
pub fn discrete_to_metric(g: &WeightedGraph, p: &EdgeWeightFunction) -> Result<MetricGraphModel> {
    check_intrinsic_weight(g, p).require()?;
    let s = jump_size(p);
    if !s.is_finite() {
        return Err(Error::InfiniteJumpSize);
    }
    let loop_eta = s.min(1.0);
    let mut edges: Vec<MetricEdge> = g
        .edges()
        .iter()
        .zip(p.values())
        .map(|(e, &pe)| MetricEdge {
            u: g.id(e.u),
            v: g.id(e.v),
            length: pe,
            mu: e.b * pe,
            nu: e.b * pe,
        })
        .collect();
    for pos in 0..g.len() {
        let used: f64 = g
            .neighbors(pos)
            .iter()
            .map(|n| n.weight * p.at_edge(n.edge).powi(2))
            .sum();
        let deficit = g.measure(pos) - used;
        // Deficits at roundoff level are absorbed rather than turned into
        // tiny loops.
        if deficit > crate::metrics::INTRINSIC_RTOL * g.measure(pos) {
            let mu = deficit / 2.0;
            edges.push(MetricEdge {
                u: g.id(pos),
                v: g.id(pos),
                length: 1.0,
                mu,
                nu: mu / (loop_eta * loop_eta),
            });
        }
    }
    let model = MetricGraphModel::new(g.ids().to_vec(), edges)?;
    match g.potential() {
        Some(alpha) => model.with_potential(g.ids().iter().copied().zip(alpha.iter().copied()).collect()),
        None => Ok(model),
    }
}

/// Energy of the edgewise affine interpolation of `f`:
/// `Σ_e ν(e)(f(v) − f(u))²/|e| + Σ_v α(v) f(v)²`. Loops carry constants and
/// contribute nothing.
pub fn affine_energy(model: &MetricGraphModel, f: &BTreeMap<VertexId, f64>) -> Result<f64> {
    let value = |v: VertexId| -> Result<f64> {
        if model.vertices().binary_search(&v).is_err() {
            return Err(Error::UnknownVertex(v));
        }
        Ok(f.get(&v).copied().unwrap_or(0.0))
    };
    for &v in f.keys() {
        value(v)?;
    }
    let mut energy = 0.0;
    for e in model.edges().iter().filter(|e| !e.is_loop()) {
        let d = value(e.v)? - value(e.u)?;
        energy += e.nu * d * d / e.length;
    }
    for (&v, &x) in f {
        energy += model.alpha(v) * x * x;
    }
    Ok(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::wouk_weight;
    use crate::operators::quadratic_form;
    use approx::assert_relative_eq;

    fn v(i: usize) -> VertexId {
        VertexId(i)
    }

    fn edge(u: usize, w: usize, length: f64, mu: f64, nu: f64) -> MetricEdge {
        MetricEdge {
            u: v(u),
            v: v(w),
            length,
            mu,
            nu,
        }
    }

    #[test]
    fn single_edge() {
        let model = MetricGraphModel::from_edges(vec![edge(0, 1, 2.0, 3.0, 6.0)]).unwrap();
        let g = metric_to_discrete(&model).unwrap();
        assert_eq!(g.measures(), &[6.0, 6.0]);
        assert_eq!(g.edge_weight(v(0), v(1)).unwrap(), 3.0);
        assert_relative_eq!(
            eta_metric(&model, v(0), v(1)).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        let f = BTreeMap::from([(v(0), 0.0), (v(1), 1.0)]);
        assert_eq!(affine_energy(&model, &f).unwrap(), 3.0);
    }

    #[test]
    fn loop_adds_measure_only() {
        let model = MetricGraphModel::from_edges(vec![edge(0, 1, 2.0, 3.0, 6.0), edge(1, 1, 1.0, 0.25, 0.5)])
            .unwrap();
        let g = metric_to_discrete(&model).unwrap();
        assert_eq!(g.measures(), &[6.0, 6.5]);
        assert_eq!(g.edge_weight(v(0), v(1)).unwrap(), 3.0);
    }

    #[test]
    fn parallel_edges_sum() {
        let model =
            MetricGraphModel::from_edges(vec![edge(0, 1, 1.0, 1.0, 1.0), edge(0, 1, 1.0, 1.0, 2.0)]).unwrap();
        let g = metric_to_discrete(&model).unwrap();
        assert_eq!(g.edge_weight(v(0), v(1)).unwrap(), 3.0);
    }

    #[test]
    fn eta_triangle_and_length_metric() {
        let model = MetricGraphModel::from_edges(vec![
            edge(0, 1, 1.0, 2.0, 2.0),
            edge(1, 2, 1.0, 1.0, 1.0),
            edge(0, 2, 3.0, 5.0, 5.0),
        ])
        .unwrap();
        assert_eq!(eta_metric(&model, v(0), v(2)).unwrap(), 2.0);
        assert_eq!(eta_metric(&model, v(0), v(0)).unwrap(), 0.0);
    }

    #[test]
    fn disconnected_eta_is_infinite() {
        let model = MetricGraphModel::new(vec![v(0), v(1), v(2)], vec![edge(0, 1, 1.0, 1.0, 1.0)]).unwrap();
        assert_eq!(eta_metric(&model, v(0), v(2)).unwrap(), f64::INFINITY);
        assert!(matches!(
            metric_to_discrete(&model),
            Err(Error::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn path_realization_has_endpoint_loops() {
        let n = 6;
        let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let g = WeightedGraph::from_dense(vec![1.0; n], &edges, None).unwrap();
        let p = EdgeWeightFunction::from_fn(&g, |_, _, _| 0.5f64.sqrt()).unwrap();
        let model = discrete_to_metric(&g, &p).unwrap();
        let loops: Vec<&MetricEdge> = model.edges().iter().filter(|e| e.is_loop()).collect();
        assert_eq!(loops.len(), 2);
        for l in loops {
            assert!([v(0), v(n - 1)].contains(&l.u));
            assert_relative_eq!(l.mu, 0.25, epsilon = 1e-15);
            assert_relative_eq!(l.nu, 0.5, epsilon = 1e-15);
        }
        let back = metric_to_discrete(&model).unwrap();
        for (a, b) in back.measures().iter().zip(g.measures()) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn round_trip_star() {
        let g = WeightedGraph::from_dense(
            vec![1.0; 4],
            &[(0, 1, 2.0), (0, 2, 0.5), (0, 3, 1.0)],
            Some(vec![1.0, 0.0, -2.0, 0.5]),
        )
        .unwrap();
        let p = wouk_weight(&g).unwrap().capped();
        let model = discrete_to_metric(&g, &p).unwrap();
        let back = metric_to_discrete(&model).unwrap();
        assert_eq!(back.ids(), g.ids());
        for (a, b) in back.edges().iter().zip(g.edges()) {
            assert_relative_eq!(a.b, b.b, max_relative = 1e-12);
        }
        let rho = path_metric(&g, &p, v(1)).unwrap();
        let eta = eta_distances(&model, v(1)).unwrap();
        for (x, y) in rho.by_position().iter().zip(eta.by_position()) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
        let f = BTreeMap::from([(v(0), 1.0), (v(2), -0.5), (v(3), 2.0)]);
        assert_relative_eq!(
            affine_energy(&model, &f).unwrap(),
            quadratic_form(&g, &f).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_non_intrinsic() {
        let g = WeightedGraph::from_dense(vec![1.0; 3], &[(0, 1, 1.0), (1, 2, 1.0)], None).unwrap();
        let p = EdgeWeightFunction::from_fn(&g, |_, _, _| 1.0).unwrap();
        assert!(matches!(
            discrete_to_metric(&g, &p),
            Err(Error::NotIntrinsic { .. })
        ));
    }
}
