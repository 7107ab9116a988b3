//! The `sa-graph/1` input document.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use sagraph::families::{
    antitree_family, path_family, AntitreeSpec, ConstantJacobi, Example67, PathLaplacian,
};
use sagraph::{JacobiData, LazyFamily, MetricEdge, MetricGraphModel, VertexId, WeightedGraph};

use crate::CliError;

pub const FORMAT: &str = "sa-graph/1";

/// A vertex name: either a dense integer id or a label resolved through the
/// symbol table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Name {
    Index(usize),
    Label(String),
}

impl std::fmt::Display for Name {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Name::Index(i) => write!(f, "{i}"),
            Name::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexEntry {
    pub id: Name,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteEdgeEntry {
    pub u: Name,
    pub v: Name,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEdgeEntry {
    pub u: Name,
    pub v: Name,
    pub length: f64,
    pub mu: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeEntry {
    Discrete(DiscreteEdgeEntry),
    Metric(MetricEdgeEntry),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntitreeParams {
    pub spheres: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

/// `b_n = (n+1)^exponent`, `a_n = b_{n-1} + b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerPath {
    pub exponent: f64,
}

/// Constant Jacobi entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantPath {
    pub a: f64,
    pub b: f64,
}

/// Finite Jacobi data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPath {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathParams {
    Power(PowerPath),
    Constant(ConstantPath),
    Explicit(ExplicitPath),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example67Params {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FamilyDescriptor {
    Antitree(AntitreeParams),
    Path(PathParams),
    Example67(Example67Params),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub format: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<VertexEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyDescriptor>,
}

/// Maps document names to dense vertex ids. Integer names are used as ids
/// directly when every name is an integer; otherwise ids follow the order of
/// the vertex list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolTable {
    names: Vec<Name>,
    ids: BTreeMap<Name, VertexId>,
}

impl SymbolTable {
    fn from_vertices(vertices: &[VertexEntry]) -> Result<Self, CliError> {
        let numeric = vertices.iter().all(|v| matches!(v.id, Name::Index(_)));
        let mut table = SymbolTable::default();
        for (k, v) in vertices.iter().enumerate() {
            let id = match (&v.id, numeric) {
                (Name::Index(i), true) => VertexId(*i),
                _ => VertexId(k),
            };
            if table.ids.insert(v.id.clone(), id).is_some() {
                return Err(CliError::Input(format!("duplicate vertex {}", v.id)));
            }
            table.names.push(v.id.clone());
        }
        Ok(table)
    }

    pub fn id(&self, name: &Name) -> Result<VertexId, CliError> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| CliError::Input(format!("unknown vertex {name}")))
    }

    pub fn name(&self, id: VertexId) -> Name {
        self.ids
            .iter()
            .find(|(_, &v)| v == id)
            .map_or(Name::Index(id.0), |(n, _)| n.clone())
    }

    /// True when some vertex is named by a label.
    pub fn has_labels(&self) -> bool {
        self.names.iter().any(|n| matches!(n, Name::Label(_)))
    }

    pub fn labels(&self) -> BTreeMap<usize, String> {
        self.ids.iter().map(|(n, id)| (id.0, n.to_string())).collect()
    }
}

/// What a document describes once validated.
pub enum Input {
    Graph(WeightedGraph, SymbolTable),
    Metric(MetricGraphModel, SymbolTable),
    Family(LazyFamily, FamilyDescriptor),
    Jacobi(JacobiData, FamilyDescriptor),
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    let mut file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut bytes = Vec::new();
    let result = if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(file).read_to_end(&mut bytes)
    } else {
        file.read_to_end(&mut bytes)
    };
    result.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(io)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(bytes).map_err(io)?;
        enc.finish().map_err(io)?;
    } else {
        let mut file = file;
        file.write_all(bytes).map_err(io)?;
    }
    Ok(())
}

impl GraphDocument {
    pub fn parse(bytes: &[u8]) -> Result<Self, CliError> {
        let doc: GraphDocument =
            serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("invalid document: {e}")))?;
        if doc.format != FORMAT {
            return Err(CliError::Input(format!(
                "unsupported format {:?}, expected {FORMAT:?}",
                doc.format
            )));
        }
        let explicit = !doc.vertices.is_empty() || !doc.edges.is_empty();
        if explicit == doc.family.is_some() {
            return Err(CliError::Input(
                "a document holds either vertices and edges or a family descriptor".into(),
            ));
        }
        Ok(doc)
    }

    pub fn from_family(family: FamilyDescriptor) -> Self {
        GraphDocument {
            format: FORMAT.into(),
            vertices: Vec::new(),
            edges: Vec::new(),
            family: Some(family),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn is_metric(&self) -> bool {
        matches!(self.edges.first(), Some(EdgeEntry::Metric(_)))
    }

    pub fn into_input(self) -> Result<Input, CliError> {
        if let Some(family) = self.family {
            return family_input(family);
        }
        let symbols = SymbolTable::from_vertices(&self.vertices)?;
        let alpha: Option<BTreeMap<VertexId, f64>> = if self.vertices.iter().any(|v| v.alpha.is_some()) {
            Some(
                self.vertices
                    .iter()
                    .map(|v| Ok((symbols.id(&v.id)?, v.alpha.unwrap_or(0.0))))
                    .collect::<Result<_, CliError>>()?,
            )
        } else {
            None
        };
        if self.is_metric() {
            let mut edges = Vec::with_capacity(self.edges.len());
            for e in &self.edges {
                let EdgeEntry::Metric(e) = e else {
                    return Err(CliError::Input("discrete and metric edges are mixed".into()));
                };
                edges.push(MetricEdge {
                    u: symbols.id(&e.u)?,
                    v: symbols.id(&e.v)?,
                    length: e.length,
                    mu: e.mu,
                    nu: e.nu,
                });
            }
            if self.vertices.iter().any(|v| v.m.is_some()) {
                return Err(CliError::Input(
                    "vertex measures of a metric model are derived from its edges".into(),
                ));
            }
            let ids = self
                .vertices
                .iter()
                .map(|v| symbols.id(&v.id))
                .collect::<Result<_, _>>()?;
            let mut model = MetricGraphModel::new(ids, edges)?;
            if let Some(alpha) = alpha {
                model = model.with_potential(alpha)?;
            }
            return Ok(Input::Metric(model, symbols));
        }
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            let m =
                v.m.ok_or_else(|| CliError::Input(format!("vertex {} has no measure m", v.id)))?;
            vertices.push((symbols.id(&v.id)?, m));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let EdgeEntry::Discrete(e) = e else {
                return Err(CliError::Input("discrete and metric edges are mixed".into()));
            };
            edges.push((symbols.id(&e.u)?, symbols.id(&e.v)?, e.b));
        }
        let g = WeightedGraph::build(&vertices, &edges, alpha.as_ref())?;
        Ok(Input::Graph(g, symbols))
    }
}

fn family_input(family: FamilyDescriptor) -> Result<Input, CliError> {
    let lazy = match &family {
        FamilyDescriptor::Antitree(p) => {
            let mut spec = AntitreeSpec::from_spheres(p.spheres.clone())?;
            if let Some(alpha) = &p.alpha {
                spec = spec.with_radial_potential(alpha.clone())?;
            }
            antitree_family(&spec)
        }
        FamilyDescriptor::Path(PathParams::Power(p)) => {
            if !p.exponent.is_finite() {
                return Err(CliError::Input("path exponent must be finite".into()));
            }
            path_family(Arc::new(PathLaplacian { exponent: p.exponent }))
        }
        FamilyDescriptor::Path(PathParams::Constant(p)) => {
            path_family(Arc::new(ConstantJacobi::new(p.a, p.b)?))
        }
        FamilyDescriptor::Path(PathParams::Explicit(p)) => {
            let data = JacobiData::new(p.a.clone(), p.b.clone())?;
            return Ok(Input::Jacobi(data, family));
        }
        FamilyDescriptor::Example67(p) => Example67::new(p.c1, p.c2)?.family(),
    };
    Ok(Input::Family(lazy, family))
}

/// An edge weight supplied by file: `{"weights": [{"u": .., "v": .., "p": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightDocument {
    pub weights: Vec<WeightEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub u: Name,
    pub v: Name,
    pub p: f64,
}

impl WeightDocument {
    pub fn parse(bytes: &[u8]) -> Result<Self, CliError> {
        serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("invalid weight file: {e}")))
    }

    pub fn resolve(&self, symbols: &SymbolTable) -> Result<Vec<(VertexId, VertexId, f64)>, CliError> {
        self.weights
            .iter()
            .map(|w| Ok((symbols.id(&w.u)?, symbols.id(&w.v)?, w.p)))
            .collect()
    }
}

/// Reads a vertex name from the command line: digits name an index.
pub fn parse_name(s: &str) -> Name {
    s.parse::<usize>()
        .map_or_else(|_| Name::Label(s.to_string()), Name::Index)
}

/// Emits a discrete graph as a document, using `symbols` for names.
pub fn graph_document(g: &WeightedGraph, symbols: &SymbolTable) -> GraphDocument {
    let vertices = (0..g.len())
        .map(|k| VertexEntry {
            id: symbols.name(g.id(k)),
            m: Some(g.measure(k)),
            alpha: g.potential().map(|a| a[k]),
        })
        .collect();
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            EdgeEntry::Discrete(DiscreteEdgeEntry {
                u: symbols.name(g.id(e.u)),
                v: symbols.name(g.id(e.v)),
                b: e.b,
            })
        })
        .collect();
    GraphDocument {
        format: FORMAT.into(),
        vertices,
        edges,
        family: None,
    }
}

pub fn metric_document(model: &MetricGraphModel, symbols: &SymbolTable) -> GraphDocument {
    let vertices = model
        .vertices()
        .iter()
        .map(|&v| VertexEntry {
            id: symbols.name(v),
            m: None,
            alpha: model.potential().map(|_| model.alpha(v)),
        })
        .collect();
    let edges = model
        .edges()
        .iter()
        .map(|e| {
            EdgeEntry::Metric(MetricEdgeEntry {
                u: symbols.name(e.u),
                v: symbols.name(e.v),
                length: e.length,
                mu: e.mu,
                nu: e.nu,
            })
        })
        .collect();
    GraphDocument {
        format: FORMAT.into(),
        vertices,
        edges,
        family: None,
    }
}
