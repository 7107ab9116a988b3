//! Path metrics generated by edge weights, intrinsic-weight checks, jump sizes
//! and completeness evidence along rays.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{FamilyWeight, LazyFamily};
use crate::graph::{check_positive, VertexId, WeightedGraph};
use crate::series::fit_power_law;

/// Relative slack tolerated by the intrinsic check to absorb rounding.
pub const INTRINSIC_RTOL: f64 = 1e-12;

/// A positive weight on every edge of a graph, indexed like
/// [`WeightedGraph::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightFunction {
    values: Vec<f64>,
}

impl EdgeWeightFunction {
    pub fn new(g: &WeightedGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.edges().len() {
            return Err(Error::InvalidWeightFunction(format!(
                "{} values for {} edges",
                values.len(),
                g.edges().len()
            )));
        }
        for (e, &p) in g.edges().iter().zip(&values) {
            check_positive(|| format!("weight p({},{})", g.id(e.u), g.id(e.v)), p)?;
        }
        Ok(EdgeWeightFunction { values })
    }

    /// Evaluates `f(b, u, v)` on every edge.
    pub fn from_fn(g: &WeightedGraph, f: impl Fn(f64, VertexId, VertexId) -> f64) -> Result<Self> {
        let values = g.edges().iter().map(|e| f(e.b, g.id(e.u), g.id(e.v))).collect();
        Self::new(g, values)
    }

    /// Builds the function from unordered pairs. Every edge needs exactly one
    /// value and no pair may name a non-edge.
    pub fn from_pairs(g: &WeightedGraph, pairs: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let mut values = vec![None; g.edges().len()];
        for &(u, v, p) in pairs {
            let (pu, pv) = (g.position(u)?, g.position(v)?);
            let k = g
                .edge_index(pu, pv)
                .ok_or_else(|| Error::InvalidWeightFunction(format!("{u}-{v} is not an edge")))?;
            if values[k].replace(p).is_some() {
                return Err(Error::InvalidWeightFunction(format!("edge {u}-{v} given twice")));
            }
        }
        let values = values
            .into_iter()
            .zip(g.edges())
            .map(|(p, e)| p.ok_or(Error::MissingEdgeValue(g.id(e.u), g.id(e.v))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(g, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_edge(&self, edge: usize) -> f64 {
        self.values[edge]
    }

    /// `p(u, v)`, `None` when `u, v` are not adjacent.
    pub fn get(&self, g: &WeightedGraph, u: VertexId, v: VertexId) -> Result<Option<f64>> {
        let (pu, pv) = (g.position(u)?, g.position(v)?);
        Ok(g.edge_index(pu, pv).map(|k| self.values[k]))
    }

    /// Pointwise `min(1, p)`.
    pub fn capped(&self) -> Self {
        EdgeWeightFunction {
            values: self.values.iter().map(|&p| p.min(1.0)).collect(),
        }
    }

    /// `(u, v, p)` triples by vertex id.
    pub fn to_pairs(&self, g: &WeightedGraph) -> Vec<(VertexId, VertexId, f64)> {
        g.edges()
            .iter()
            .zip(&self.values)
            .map(|(e, &p)| (g.id(e.u), g.id(e.v), p))
            .collect()
    }
}

pub fn cap_weight(p: &EdgeWeightFunction) -> EdgeWeightFunction {
    p.capped()
}

/// Single-source shortest-path output.
#[derive(Debug, Clone, PartialEq)]
pub struct Distances {
    ids: Vec<VertexId>,
    dist: Vec<f64>,
    pred: Vec<Option<usize>>,
}

impl Distances {
    /// Distance to `v`; `+∞` when unreachable.
    pub fn get(&self, v: VertexId) -> Result<f64> {
        let k = self.ids.binary_search(&v).map_err(|_| Error::UnknownVertex(v))?;
        Ok(self.dist[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.ids.iter().copied().zip(self.dist.iter().copied())
    }

    pub fn by_position(&self) -> &[f64] {
        &self.dist
    }

    /// Vertices of a shortest path from the source to `v`, source first.
    pub fn path_to(&self, v: VertexId) -> Result<Option<Vec<VertexId>>> {
        let mut k = self.ids.binary_search(&v).map_err(|_| Error::UnknownVertex(v))?;
        if !self.dist[k].is_finite() {
            return Ok(None);
        }
        let mut path = vec![self.ids[k]];
        while let Some(prev) = self.pred[k] {
            k = prev;
            path.push(self.ids[k]);
        }
        path.reverse();
        Ok(Some(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    position: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.position.cmp(&self.position))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra. `step(u, k)` is the cost of moving from `u` to its
/// `k`-th neighbor. Ties are broken towards lower positions, hence lower ids.
pub(crate) fn dijkstra(
    g: &WeightedGraph,
    sources: &[usize],
    step: impl Fn(usize, usize) -> f64,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(State {
            cost: 0.0,
            position: s,
        });
    }
    while let Some(State { cost, position: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for (k, nb) in g.neighbors(u).iter().enumerate() {
            let candidate = cost + step(u, k);
            let better = candidate < dist[nb.vertex]
                || (candidate == dist[nb.vertex] && pred[nb.vertex].is_some_and(|p| u < p));
            if !done[nb.vertex] && better {
                dist[nb.vertex] = candidate;
                pred[nb.vertex] = Some(u);
                heap.push(State {
                    cost: candidate,
                    position: nb.vertex,
                });
            }
        }
    }
    (dist, pred)
}

/// Distances from `source` in the path metric generated by `p`.
pub fn path_metric(g: &WeightedGraph, p: &EdgeWeightFunction, source: VertexId) -> Result<Distances> {
    let s = g.position(source)?;
    let (dist, pred) = dijkstra(g, &[s], |u, k| p.at_edge(g.neighbors(u)[k].edge));
    Ok(Distances {
        ids: g.ids().to_vec(),
        dist,
        pred,
    })
}

/// Result of an intrinsic-weight check: `slack[v] = m(v) − Σ_u b(u,v) p(u,v)²`
/// by vertex position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicCheck {
    pub holds: bool,
    pub slack: Vec<f64>,
    pub worst_vertex: Option<VertexId>,
    pub worst_slack: f64,
}

impl IntrinsicCheck {
    fn from_slack(g: &WeightedGraph, slack: Vec<f64>) -> Self {
        let holds = slack
            .iter()
            .zip(g.measures())
            .all(|(&s, &m)| s >= -INTRINSIC_RTOL * m);
        let worst = slack
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)));
        IntrinsicCheck {
            holds,
            worst_vertex: worst.map(|(k, _)| g.id(k)),
            worst_slack: worst.map_or(f64::INFINITY, |(_, &s)| s),
            slack,
        }
    }

    /// Turns a failed check into [`Error::NotIntrinsic`].
    pub fn require(&self) -> Result<()> {
        match (self.holds, self.worst_vertex) {
            (false, Some(vertex)) => Err(Error::NotIntrinsic {
                vertex,
                excess: -self.worst_slack,
            }),
            _ => Ok(()),
        }
    }
}

pub fn check_intrinsic_weight(g: &WeightedGraph, p: &EdgeWeightFunction) -> IntrinsicCheck {
    let slack = (0..g.len())
        .map(|v| {
            let load: f64 = g
                .neighbors(v)
                .iter()
                .map(|nb| nb.weight * p.at_edge(nb.edge).powi(2))
                .sum();
            g.measure(v) - load
        })
        .collect();
    IntrinsicCheck::from_slack(g, slack)
}

/// Intrinsic check for a metric given only through its values on edges.
/// Keys are unordered: either orientation is accepted.
pub fn check_intrinsic_metric_on_edges(
    g: &WeightedGraph,
    values: &HashMap<(VertexId, VertexId), f64>,
) -> Result<IntrinsicCheck> {
    let mut per_edge = Vec::with_capacity(g.edges().len());
    for e in g.edges() {
        let (u, v) = (g.id(e.u), g.id(e.v));
        let d = values
            .get(&(u, v))
            .or_else(|| values.get(&(v, u)))
            .copied()
            .ok_or(Error::MissingEdgeValue(u, v))?;
        per_edge.push(d);
    }
    let slack = (0..g.len())
        .map(|v| {
            let load: f64 = g
                .neighbors(v)
                .iter()
                .map(|nb| nb.weight * per_edge[nb.edge].powi(2))
                .sum();
            g.measure(v) - load
        })
        .collect();
    Ok(IntrinsicCheck::from_slack(g, slack))
}

/// `p(u, v) = 1/√(b(u,v) · max(deg u, deg v))`. Requires `m ≡ 1`.
pub fn wouk_weight(g: &WeightedGraph) -> Result<EdgeWeightFunction> {
    if let Some((vertex, measure)) = g.first_non_unit_measure() {
        return Err(Error::NonUnitMeasure { vertex, measure });
    }
    let values = g
        .edges()
        .iter()
        .map(|e| {
            let deg = g.neighbors(e.u).len().max(g.neighbors(e.v).len()) as f64;
            1.0 / (e.b * deg).sqrt()
        })
        .collect();
    EdgeWeightFunction::new(g, values)
}

/// `sup p` over the edges; zero on an edgeless graph.
pub fn jump_size(p: &EdgeWeightFunction) -> f64 {
    p.values.iter().copied().fold(0.0, f64::max)
}

/// Jump size of a family's weight from its closed-form supremum.
pub fn family_jump_size(family: &LazyFamily, weight: FamilyWeight) -> Result<f64> {
    family
        .summary()
        .and_then(|s| s.weight_sup(weight))
        .ok_or(Error::UnboundedUnknown)
}

/// `ρ_m(u, v)`: cheapest path where entering a vertex costs its measure. The
/// starting vertex is not charged, so `ρ_m(u, u) = 0`.
pub fn vertex_measure_metric(g: &WeightedGraph, u: VertexId, v: VertexId) -> Result<f64> {
    let (s, t) = (g.position(u)?, g.position(v)?);
    let (dist, _) = dijkstra(g, &[s], |a, k| g.measure(g.neighbors(a)[k].vertex));
    Ok(dist[t])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletenessStatus {
    CompleteFinite,
    DivergenceEvidence,
    ConvergentRayFound,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletenessConfig {
    /// Number of layer boundaries inspected.
    pub depth: usize,
    /// Partial sums above this count as divergence.
    pub divergence_bound: f64,
    /// Geometric tails below this count as convergence.
    pub convergence_tol: f64,
    /// Fitted term exponents at or above `-1 - divergence_margin` count as
    /// divergent.
    pub divergence_margin: f64,
    /// Fitted term exponents below `-1 - convergence_margin` count as
    /// convergent.
    pub convergence_margin: f64,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        CompletenessConfig {
            depth: 100_000,
            divergence_bound: 1e3,
            convergence_tol: 1e-6,
            divergence_margin: 0.02,
            convergence_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessEvidence {
    pub status: CompletenessStatus,
    pub weight: Option<FamilyWeight>,
    /// Number of ray steps summed.
    pub steps: usize,
    pub partial_sum: f64,
    /// Upper bound on the remaining tail, when convergence was detected.
    pub tail_bound: Option<f64>,
    /// Upper bound on the length of the whole ray.
    pub total_bound: Option<f64>,
    pub exponent: Option<f64>,
    pub geometric_ratio: Option<f64>,
    /// `(step, partial sum)` at dyadic checkpoints.
    pub trace: Vec<(usize, f64)>,
    pub reason: String,
    pub config: CompletenessConfig,
}

impl CompletenessEvidence {
    fn finite(config: &CompletenessConfig, reason: &str) -> Self {
        CompletenessEvidence {
            status: CompletenessStatus::CompleteFinite,
            weight: None,
            steps: 0,
            partial_sum: 0.0,
            tail_bound: None,
            total_bound: None,
            exponent: None,
            geometric_ratio: None,
            trace: Vec::new(),
            reason: reason.into(),
            config: *config,
        }
    }
}

/// A finite graph is complete for every path metric.
pub fn completeness_evidence(_g: &WeightedGraph, config: &CompletenessConfig) -> CompletenessEvidence {
    CompletenessEvidence::finite(config, "finite graph")
}

/// Evidence from the layer-minimizing ray of a family: its length is the sum
/// of the per-layer minimal increments, a lower bound for every ray.
pub fn family_completeness_evidence(
    family: &LazyFamily,
    weight: FamilyWeight,
    config: &CompletenessConfig,
) -> Result<CompletenessEvidence> {
    if let Some(max) = family.max_depth() {
        let mut ev = CompletenessEvidence::finite(config, "family has finitely many layers");
        ev.steps = max;
        ev.weight = Some(weight);
        return Ok(ev);
    }
    let summary = family.summary().ok_or(Error::MissingLayerSummary)?;
    let increments: Vec<f64> = (0..config.depth)
        .map(|n| summary.ray_increment(weight, n))
        .collect();
    let mut ev = ray_evidence(&increments, config)?;
    ev.weight = Some(weight);
    Ok(ev)
}

/// Classifies the series `Σ increments` as divergent or convergent.
///
/// Divergence: partial sum above `divergence_bound`, or terms fitted by a
/// power law with exponent at least `-1 - divergence_margin`. Convergence:
/// terms decaying geometrically with a tail below `convergence_tol`, or a
/// power law with exponent below `-1 - convergence_margin` (integral tail).
pub fn ray_evidence(increments: &[f64], config: &CompletenessConfig) -> Result<CompletenessEvidence> {
    for (n, &t) in increments.iter().enumerate() {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::NonPositiveWeight {
                what: format!("ray increment {n}"),
                value: t,
            });
        }
    }
    let steps = increments.len();
    let mut trace = Vec::new();
    let mut partial = 0.0;
    let mut checkpoint = 1;
    for (n, &t) in increments.iter().enumerate() {
        partial += t;
        if n + 1 == checkpoint || n + 1 == steps {
            trace.push((n + 1, partial));
            checkpoint *= 2;
        }
    }
    let mut ev = CompletenessEvidence {
        status: CompletenessStatus::Inconclusive,
        weight: None,
        steps,
        partial_sum: partial,
        tail_bound: None,
        total_bound: None,
        exponent: None,
        geometric_ratio: None,
        trace,
        reason: String::new(),
        config: *config,
    };
    if partial > config.divergence_bound {
        ev.status = CompletenessStatus::DivergenceEvidence;
        ev.reason = format!("partial sum exceeds {}", config.divergence_bound);
        return Ok(ev);
    }
    if steps < 16 {
        ev.reason = "too few steps".into();
        return Ok(ev);
    }

    // Geometric decay, measured on the last positive stretch. Underflowed
    // zeros after it are bounded by the same geometric tail.
    if let Some(last) = increments.iter().rposition(|&t| t > 0.0) {
        let k = (last / 4).max(1);
        if last >= 8 && increments[last - k] > 0.0 {
            let q = (increments[last] / increments[last - k]).powf(1.0 / k as f64);
            ev.geometric_ratio = Some(q);
            if q < 1.0 - 1e-3 {
                let tail = increments[last] * q / (1.0 - q);
                if tail < config.convergence_tol {
                    ev.status = CompletenessStatus::ConvergentRayFound;
                    ev.tail_bound = Some(tail);
                    ev.total_bound = Some(partial + tail);
                    ev.reason = format!("geometric decay with ratio {q:.6}");
                    return Ok(ev);
                }
            }
        }
    }

    let fit = match fit_power_law(|n| increments[n], steps / 8, steps, 200) {
        Ok(fit) => fit,
        Err(_) => {
            ev.reason = "no usable power-law fit".into();
            return Ok(ev);
        }
    };
    ev.exponent = Some(fit.exponent);
    if fit.exponent >= -1.0 - config.divergence_margin {
        ev.status = CompletenessStatus::DivergenceEvidence;
        ev.reason = format!("terms decay like n^{:.4}", fit.exponent);
    } else if fit.exponent < -1.0 - config.convergence_margin {
        let tail = fit
            .tail_bound(steps - 1, increments[steps - 1])
            .expect("exponent below -1");
        ev.status = CompletenessStatus::ConvergentRayFound;
        ev.tail_bound = Some(tail);
        ev.total_bound = Some(partial + tail);
        ev.reason = format!("terms decay like n^{:.4}", fit.exponent);
    } else {
        ev.reason = format!("exponent {:.4} too close to -1", fit.exponent);
    }
    Ok(ev)
}
