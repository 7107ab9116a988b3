//! Locally finite weighted graphs `(V, m; b)` with an optional potential, and
//! weighted metric-graph models with edgewise constant weights.
//!
//! Both structures are immutable once built. Vertices are addressed either by
//! their [`VertexId`] or by their *position*, the index into the id-sorted
//! vertex list. Numerical routines work on positions; ids are what callers see.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for VertexId {
    fn from(value: usize) -> Self {
        VertexId(value)
    }
}

/// An undirected edge stored by vertex positions with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub b: f64,
}

/// Adjacency entry: neighbor position, edge weight and edge index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub weight: f64,
    pub edge: usize,
}

pub(crate) fn check_positive(what: impl FnOnce() -> String, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveWeight { what: what(), value })
    }
}

/// A simple, locally finite weighted graph over a discrete measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<VertexId>,
    measure: Vec<f64>,
    alpha: Option<Vec<f64>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl WeightedGraph {
    /// Validates and builds a graph.
    ///
    /// Edges are unordered pairs; parallel edges and self-edges are rejected
    /// since the discrete model is always simple. Vertices missing from
    /// `alpha` get potential zero.
    pub fn build(
        vertices: &[(VertexId, f64)],
        edges: &[(VertexId, VertexId, f64)],
        alpha: Option<&BTreeMap<VertexId, f64>>,
    ) -> Result<Self> {
        let mut sorted: Vec<(VertexId, f64)> = vertices.to_vec();
        sorted.sort_by_key(|&(id, _)| id);
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateVertex(pair[0].0));
            }
        }
        for &(id, m) in &sorted {
            check_positive(|| format!("measure m({id})"), m)?;
        }
        let ids: Vec<VertexId> = sorted.iter().map(|&(id, _)| id).collect();
        let measure: Vec<f64> = sorted.iter().map(|&(_, m)| m).collect();
        let position =
            |id: VertexId| -> Result<usize> { ids.binary_search(&id).map_err(|_| Error::UnknownVertex(id)) };

        let alpha = match alpha {
            None => None,
            Some(map) => {
                let mut values = vec![0.0; ids.len()];
                for (&id, &a) in map {
                    if !a.is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "potential at {id} is not finite"
                        )));
                    }
                    values[position(id)?] = a;
                }
                Some(values)
            }
        };

        let mut stored: Vec<Edge> = Vec::with_capacity(edges.len());
        for &(a, b_id, w) in edges {
            if a == b_id {
                return Err(Error::SelfEdgeInDiscreteGraph(a));
            }
            check_positive(|| format!("edge weight b({a},{b_id})"), w)?;
            let (pu, pv) = (position(a)?, position(b_id)?);
            let (u, v) = if pu < pv { (pu, pv) } else { (pv, pu) };
            stored.push(Edge { u, v, b: w });
        }
        stored.sort_by_key(|e| (e.u, e.v));
        for pair in stored.windows(2) {
            if pair[0].u == pair[1].u && pair[0].v == pair[1].v {
                return Err(Error::DuplicateEdge(ids[pair[0].u], ids[pair[0].v]));
            }
        }

        let mut adjacency = vec![Vec::new(); ids.len()];
        for (k, e) in stored.iter().enumerate() {
            adjacency[e.u].push(Neighbor {
                vertex: e.v,
                weight: e.b,
                edge: k,
            });
            adjacency[e.v].push(Neighbor {
                vertex: e.u,
                weight: e.b,
                edge: k,
            });
        }
        for list in &mut adjacency {
            list.sort_by_key(|n| n.vertex);
        }

        Ok(WeightedGraph {
            ids,
            measure,
            alpha,
            edges: stored,
            adjacency,
        })
    }

    /// Graph on dense ids `0..n` from position-indexed data. Used by generators
    /// whose output is valid by construction; still validated.
    pub fn from_dense(
        measure: Vec<f64>,
        edges: &[(usize, usize, f64)],
        alpha: Option<Vec<f64>>,
    ) -> Result<Self> {
        let vertices: Vec<(VertexId, f64)> = measure
            .iter()
            .enumerate()
            .map(|(i, &m)| (VertexId(i), m))
            .collect();
        let edges: Vec<(VertexId, VertexId, f64)> = edges
            .iter()
            .map(|&(u, v, b)| (VertexId(u), VertexId(v), b))
            .collect();
        let alpha = alpha.map(|a| {
            a.into_iter()
                .enumerate()
                .map(|(i, x)| (VertexId(i), x))
                .collect::<BTreeMap<_, _>>()
        });
        Self::build(&vertices, &edges, alpha.as_ref())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn id(&self, position: usize) -> VertexId {
        self.ids[position]
    }

    pub fn position(&self, id: VertexId) -> Result<usize> {
        self.ids.binary_search(&id).map_err(|_| Error::UnknownVertex(id))
    }

    pub fn contains(&self, id: VertexId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn measure(&self, position: usize) -> f64 {
        self.measure[position]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    /// Potential at a position; zero when the graph carries none.
    pub fn alpha(&self, position: usize) -> f64 {
        self.alpha.as_ref().map_or(0.0, |a| a[position])
    }

    pub fn potential(&self) -> Option<&[f64]> {
        self.alpha.as_deref()
    }

    pub fn has_potential(&self) -> bool {
        self.alpha.is_some()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, position: usize) -> &[Neighbor] {
        &self.adjacency[position]
    }

    /// `b(u, v)`, zero for non-adjacent pairs.
    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> Result<f64> {
        let (pu, pv) = (self.position(u)?, self.position(v)?);
        Ok(self.adjacency[pu]
            .binary_search_by_key(&pv, |n| n.vertex)
            .map_or(0.0, |k| self.adjacency[pu][k].weight))
    }

    pub fn edge_index(&self, pu: usize, pv: usize) -> Option<usize> {
        self.adjacency[pu]
            .binary_search_by_key(&pv, |n| n.vertex)
            .ok()
            .map(|k| self.adjacency[pu][k].edge)
    }

    /// Number of neighbors of `v`.
    pub fn degree(&self, v: VertexId) -> Result<usize> {
        Ok(self.adjacency[self.position(v)?].len())
    }

    /// `Deg(v) = (1/m(v)) Σ_u b(u, v)`.
    pub fn weighted_degree(&self, v: VertexId) -> Result<f64> {
        Ok(self.weighted_degree_at(self.position(v)?))
    }

    pub fn weighted_degree_at(&self, position: usize) -> f64 {
        self.strength(position) / self.measure[position]
    }

    /// `Σ_u b(u, v)` at a position.
    pub fn strength(&self, position: usize) -> f64 {
        self.adjacency[position].iter().map(|n| n.weight).sum()
    }

    /// True iff every pair of vertices is joined by a path of positive weights.
    pub fn is_connected(&self) -> bool {
        if self.ids.len() <= 1 {
            return true;
        }
        let mut seen = vec![false; self.ids.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for n in &self.adjacency[u] {
                if !seen[n.vertex] {
                    seen[n.vertex] = true;
                    count += 1;
                    queue.push_back(n.vertex);
                }
            }
        }
        count == self.ids.len()
    }

    /// True when `m ≡ 1` up to a relative tolerance of `1e-12`.
    pub fn has_unit_measure(&self) -> bool {
        self.first_non_unit_measure().is_none()
    }

    pub(crate) fn first_non_unit_measure(&self) -> Option<(VertexId, f64)> {
        self.measure
            .iter()
            .position(|&m| (m - 1.0).abs() > 1e-12)
            .map(|k| (self.ids[k], self.measure[k]))
    }
}

/// One edge of a metric-graph model: length `|e|` and the constant weights
/// `μ(e)`, `ν(e)`. Loops (`u == v`) are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
    pub mu: f64,
    pub nu: f64,
}

impl MetricEdge {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    /// Intrinsic length `η(e) = |e| √(μ(e)/ν(e))`.
    pub fn eta(&self) -> f64 {
        self.length * (self.mu / self.nu).sqrt()
    }
}

/// A weighted metric graph with edgewise constant weights. Multi-edges and loops
/// are permitted.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraphModel {
    vertices: Vec<VertexId>,
    edges: Vec<MetricEdge>,
    alpha: Option<BTreeMap<VertexId, f64>>,
}

impl MetricGraphModel {
    /// Builds a model whose vertex set is the set of edge endpoints.
    pub fn from_edges(edges: Vec<MetricEdge>) -> Result<Self> {
        let mut vertices: Vec<VertexId> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
        vertices.sort();
        vertices.dedup();
        Self::new(vertices, edges)
    }

    /// Builds a model over an explicit vertex list (duplicates rejected).
    pub fn new(vertices: Vec<VertexId>, edges: Vec<MetricEdge>) -> Result<Self> {
        let mut sorted = vertices;
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateVertex(pair[0]));
            }
        }
        for e in &edges {
            for end in [e.u, e.v] {
                if sorted.binary_search(&end).is_err() {
                    return Err(Error::UnknownVertex(end));
                }
            }
            check_positive(|| format!("length of edge {}-{}", e.u, e.v), e.length)?;
            check_positive(|| format!("mu of edge {}-{}", e.u, e.v), e.mu)?;
            check_positive(|| format!("nu of edge {}-{}", e.u, e.v), e.nu)?;
        }
        Ok(MetricGraphModel {
            vertices: sorted,
            edges,
            alpha: None,
        })
    }

    /// Attaches a vertex potential (δ-coupling strengths).
    pub fn with_potential(mut self, alpha: BTreeMap<VertexId, f64>) -> Result<Self> {
        for (&id, a) in &alpha {
            if self.vertices.binary_search(&id).is_err() {
                return Err(Error::UnknownVertex(id));
            }
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "potential at {id} is not finite"
                )));
            }
        }
        self.alpha = Some(alpha);
        Ok(self)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[MetricEdge] {
        &self.edges
    }

    pub fn potential(&self) -> Option<&BTreeMap<VertexId, f64>> {
        self.alpha.as_ref()
    }

    pub fn alpha(&self, v: VertexId) -> f64 {
        self.alpha
            .as_ref()
            .and_then(|a| a.get(&v).copied())
            .unwrap_or(0.0)
    }

    /// `sup_e |e| √(μ(e)/ν(e))`; zero for a model without edges.
    pub fn intrinsic_size(&self) -> f64 {
        self.edges.iter().map(MetricEdge::eta).fold(0.0, f64::max)
    }

    pub fn has_finite_intrinsic_size(&self) -> bool {
        self.intrinsic_size().is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> VertexId {
        VertexId(i)
    }

    fn unit_vertices(n: usize) -> Vec<(VertexId, f64)> {
        (0..n).map(|i| (v(i), 1.0)).collect()
    }

    #[test]
    fn k2_is_valid() {
        let g = WeightedGraph::build(&unit_vertices(2), &[(v(0), v(1), 1.0)], None).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges().len(), 1);
        assert!(g.is_connected());
    }

    #[test]
    fn construction_errors() {
        let verts = unit_vertices(2);
        assert_eq!(
            WeightedGraph::build(&verts, &[(v(1), v(1), 1.0)], None),
            Err(Error::SelfEdgeInDiscreteGraph(v(1)))
        );
        assert!(matches!(
            WeightedGraph::build(&verts, &[(v(0), v(1), 0.0)], None),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert_eq!(
            WeightedGraph::build(&verts, &[(v(0), v(1), 1.0), (v(1), v(0), 2.0)], None),
            Err(Error::DuplicateEdge(v(0), v(1)))
        );
        assert_eq!(
            WeightedGraph::build(&[(v(3), 1.0), (v(3), 2.0)], &[], None),
            Err(Error::DuplicateVertex(v(3)))
        );
        assert_eq!(
            WeightedGraph::build(&verts, &[(v(0), v(7), 1.0)], None),
            Err(Error::UnknownVertex(v(7)))
        );
        assert!(matches!(
            WeightedGraph::build(&[(v(0), -1.0)], &[], None),
            Err(Error::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn degrees_on_star_and_path() {
        let star = WeightedGraph::build(
            &unit_vertices(4),
            &[(v(0), v(1), 1.0), (v(0), v(2), 1.0), (v(0), v(3), 1.0)],
            None,
        )
        .unwrap();
        assert_eq!(star.degree(v(0)).unwrap(), 3);
        assert_eq!(star.degree(v(2)).unwrap(), 1);
        assert_eq!(star.weighted_degree(v(0)).unwrap(), 3.0);
        assert_eq!(star.degree(v(9)), Err(Error::UnknownVertex(v(9))));

        let p2 = WeightedGraph::build(&unit_vertices(2), &[(v(0), v(1), 1.0)], None).unwrap();
        assert_eq!(p2.degree(v(1)).unwrap(), 1);

        let p3 = WeightedGraph::build(
            &[(v(0), 1.0), (v(1), 2.0), (v(2), 1.0)],
            &[(v(0), v(1), 1.0), (v(1), v(2), 1.0)],
            None,
        )
        .unwrap();
        assert_eq!(p3.weighted_degree(v(1)).unwrap(), 1.0);

        let k2 = WeightedGraph::build(&unit_vertices(2), &[(v(0), v(1), 5.0)], None).unwrap();
        assert_eq!(k2.weighted_degree(v(0)).unwrap(), 5.0);
    }

    #[test]
    fn connectivity() {
        let two_k2 =
            WeightedGraph::build(&unit_vertices(4), &[(v(0), v(1), 1.0), (v(2), v(3), 1.0)], None).unwrap();
        assert!(!two_k2.is_connected());
    }

    #[test]
    fn symmetric_lookup() {
        let g = WeightedGraph::build(
            &[(v(10), 1.0), (v(4), 2.0), (v(7), 1.0)],
            &[(v(10), v(4), 2.5), (v(7), v(4), 0.5)],
            None,
        )
        .unwrap();
        for e in g.edges() {
            let (a, b) = (g.id(e.u), g.id(e.v));
            assert_eq!(g.edge_weight(a, b).unwrap(), e.b);
            assert_eq!(g.edge_weight(b, a).unwrap(), e.b);
        }
        assert_eq!(g.edge_weight(v(10), v(7)).unwrap(), 0.0);
    }

    #[test]
    fn metric_models() {
        let single = MetricGraphModel::from_edges(vec![MetricEdge {
            u: v(0),
            v: v(1),
            length: 2.0,
            mu: 3.0,
            nu: 6.0,
        }])
        .unwrap();
        assert!((single.intrinsic_size() - 2.0f64.sqrt()).abs() < 1e-15);

        let looped = MetricGraphModel::from_edges(vec![MetricEdge {
            u: v(0),
            v: v(0),
            length: 1.0,
            mu: 0.25,
            nu: 0.5,
        }])
        .unwrap();
        assert_eq!(looped.edges().len(), 1);

        let zero = MetricGraphModel::from_edges(vec![MetricEdge {
            u: v(0),
            v: v(1),
            length: 0.0,
            mu: 1.0,
            nu: 1.0,
        }]);
        assert!(matches!(zero, Err(Error::NonPositiveWeight { .. })));

        assert_eq!(
            MetricGraphModel::new(vec![v(0), v(0)], vec![]),
            Err(Error::DuplicateVertex(v(0)))
        );
    }
}
