//! Infinite graphs explored layer by layer.
//!
//! A [`LazyFamily`] produces the finite truncations `G_0 ⊂ G_1 ⊂ …` of an
//! infinite, locally finite graph. Vertex ids are assigned layer by layer, so a
//! truncation is literally an induced subgraph of every deeper truncation.
//! Families whose quantities are known in closed form may also carry a
//! [`LayerSummary`], which numerics use instead of materializing huge layers.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedGraph};
use crate::selfadjoint::JacobiSource;

/// One layer of a layered graph. Vertex indices are local to the layer;
/// `forward_edges` join a vertex of this layer to a vertex of the next one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layer {
    pub measure: Vec<f64>,
    pub alpha: Vec<f64>,
    pub inner_edges: Vec<(usize, usize, f64)>,
    pub forward_edges: Vec<(usize, usize, f64)>,
}

pub trait LayerGenerator: Send + Sync {
    fn layer_size(&self, n: usize) -> usize;

    /// Number of edges joining layer `n` to layer `n + 1`.
    fn forward_edge_count(&self, n: usize) -> usize;

    fn layer(&self, n: usize) -> Layer;

    fn has_potential(&self) -> bool;

    /// Deepest available layer, `None` for an infinite family.
    fn max_depth(&self) -> Option<usize> {
        None
    }
}

/// Edge weight functions that families know how to summarize in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyWeight {
    /// `1/√(b(u,v) max(deg u, deg v))`, requires `m ≡ 1`.
    Wouk,
    /// `min(1, wouk)`.
    CappedWouk,
    /// Vertex-measure metric: stepping into a vertex costs its measure.
    VertexMeasure,
}

impl fmt::Display for FamilyWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyWeight::Wouk => "wouk",
            FamilyWeight::CappedWouk => "capped_wouk",
            FamilyWeight::VertexMeasure => "vertex_measure",
        };
        f.write_str(s)
    }
}

/// Closed-form per-layer quantities of a family.
pub trait LayerSummary: Send + Sync {
    /// Cheapest step from layer `n` into layer `n + 1` under `weight`.
    /// Every infinite path crosses each layer boundary, so the sum of these
    /// increments is a lower bound for the length of any ray.
    fn ray_increment(&self, weight: FamilyWeight, n: usize) -> f64;

    /// Supremum of the weight over all edges, if known.
    fn weight_sup(&self, weight: FamilyWeight) -> Option<f64>;

    /// `min α(v)/m(v)` over layer `n`.
    fn potential_floor(&self, n: usize) -> f64;

    /// `sup Deg` over the whole family, if known.
    fn weighted_degree_sup(&self) -> Option<f64>;
}

/// A finite truncation `G_depth` together with its layer structure.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub graph: WeightedGraph,
    /// `layer_offsets[n]..layer_offsets[n + 1]` are the positions of layer `n`.
    pub layer_offsets: Vec<usize>,
}

impl Truncation {
    pub fn depth(&self) -> usize {
        self.layer_offsets.len() - 2
    }

    pub fn layer_range(&self, n: usize) -> Range<usize> {
        self.layer_offsets[n]..self.layer_offsets[n + 1]
    }

    /// Ids of all vertices in layers `0..=depth`.
    pub fn vertices_through(&self, depth: usize) -> Vec<VertexId> {
        (0..self.layer_offsets[depth + 1]).map(VertexId).collect()
    }

    pub fn layer_of(&self, position: usize) -> usize {
        self.layer_offsets.partition_point(|&o| o <= position) - 1
    }
}

#[derive(Clone)]
pub struct LazyFamily {
    name: String,
    generator: Arc<dyn LayerGenerator>,
    summary: Option<Arc<dyn LayerSummary>>,
    jacobi: Option<Arc<dyn JacobiSource>>,
}

impl fmt::Debug for LazyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyFamily")
            .field("name", &self.name)
            .field("summary", &self.summary.is_some())
            .field("jacobi", &self.jacobi.is_some())
            .finish()
    }
}

impl LazyFamily {
    pub fn new(name: impl Into<String>, generator: Arc<dyn LayerGenerator>) -> Self {
        LazyFamily {
            name: name.into(),
            generator,
            summary: None,
            jacobi: None,
        }
    }

    pub fn with_summary(mut self, summary: Arc<dyn LayerSummary>) -> Self {
        self.summary = Some(summary);
        self
    }

    /// Attaches the Jacobi matrix the family's operator reduces to.
    pub fn with_jacobi(mut self, jacobi: Arc<dyn JacobiSource>) -> Self {
        self.jacobi = Some(jacobi);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn summary(&self) -> Option<&dyn LayerSummary> {
        self.summary.as_deref()
    }

    pub fn jacobi(&self) -> Option<&Arc<dyn JacobiSource>> {
        self.jacobi.as_ref()
    }

    pub fn generator(&self) -> &dyn LayerGenerator {
        self.generator.as_ref()
    }

    pub fn has_potential(&self) -> bool {
        self.generator.has_potential()
    }

    pub fn max_depth(&self) -> Option<usize> {
        self.generator.max_depth()
    }

    /// Vertex plus edge count of `G_depth`, saturating.
    pub fn truncation_cost(&self, depth: usize) -> usize {
        let mut cost: usize = 0;
        for n in 0..=depth {
            cost = cost.saturating_add(self.generator.layer_size(n));
            if n < depth {
                cost = cost.saturating_add(self.generator.forward_edge_count(n));
            }
        }
        cost
    }

    /// Deepest truncation whose vertex plus edge count stays within `budget`
    /// (never less than depth 0), capped by `limit` and by the family's own
    /// maximal depth.
    pub fn depth_within_budget(&self, budget: usize, limit: usize) -> usize {
        let limit = self.max_depth().map_or(limit, |m| m.min(limit));
        let mut cost = self.generator.layer_size(0);
        let mut depth = 0;
        while depth < limit {
            let next = cost
                .saturating_add(self.generator.forward_edge_count(depth))
                .saturating_add(self.generator.layer_size(depth + 1));
            if next > budget {
                break;
            }
            cost = next;
            depth += 1;
        }
        depth
    }

    /// The finite truncation `G_depth` on layers `0..=depth`.
    pub fn truncate(&self, depth: usize) -> Result<Truncation> {
        if let Some(max) = self.max_depth() {
            if depth > max {
                return Err(Error::InvalidParameter(format!(
                    "family {} has depth {max}, truncation at {depth} requested",
                    self.name
                )));
            }
        }
        let mut measure = Vec::new();
        let mut alpha = Vec::new();
        let mut edges = Vec::new();
        let mut offsets = vec![0usize];
        let mut pending_forward: Vec<(usize, usize, f64)> = Vec::new();
        for n in 0..=depth {
            let layer = self.generator.layer(n);
            let start = measure.len();
            let prev_start = if n > 0 { offsets[n - 1] } else { 0 };
            for (i, j, b) in pending_forward.drain(..) {
                edges.push((prev_start + i, start + j, b));
            }
            measure.extend_from_slice(&layer.measure);
            if self.generator.has_potential() {
                alpha.extend_from_slice(&layer.alpha);
            }
            for &(i, j, b) in &layer.inner_edges {
                edges.push((start + i, start + j, b));
            }
            offsets.push(measure.len());
            if n < depth {
                pending_forward = layer.forward_edges;
            }
        }
        let alpha = self.generator.has_potential().then_some(alpha);
        let graph = WeightedGraph::from_dense(measure, &edges, alpha)?;
        Ok(Truncation {
            graph,
            layer_offsets: offsets,
        })
    }
}
