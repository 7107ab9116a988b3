use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use sagraph::bridge::eta_distances;
use sagraph::metrics::{
    check_intrinsic_metric_on_edges, check_intrinsic_weight, family_jump_size, jump_size, path_metric,
    vertex_measure_metric, Distances, IntrinsicCheck,
};
use sagraph::{FamilyWeight, VertexId, WeightedGraph};

use crate::document::{parse_name, Input, SymbolTable};
use crate::{emit, finite, load_input, CliError, Format, GlobalArgs, WeightChoice};

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    pub input: Option<PathBuf>,
    /// wouk, capped-wouk, degree, or a weight file.
    #[arg(long, default_value = "wouk")]
    pub weight: String,
    /// Replace the weight by min(1, p).
    #[arg(long)]
    pub cap: bool,
    /// Distances from this vertex (default: the first vertex).
    #[arg(long)]
    pub source: Option<String>,
    /// Report the per-vertex slack m(v) - Σ b p².
    #[arg(long)]
    pub check_intrinsic: bool,
    #[arg(long)]
    pub jump_size: bool,
    /// Use the vertex-measure metric instead of an edge weight.
    #[arg(long)]
    pub vertex_measure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    pub vertex: String,
    /// `None` when unreachable.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackRow {
    pub vertex: String,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicReport {
    pub holds: bool,
    pub worst_vertex: Option<String>,
    pub worst_slack: Option<f64>,
    pub slack: Vec<SlackRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metric: String,
    pub capped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub distances: Vec<DistanceRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intrinsic: Option<IntrinsicReport>,
}

fn distance_rows(d: &Distances, symbols: &SymbolTable) -> Vec<DistanceRow> {
    d.iter()
        .map(|(v, x)| DistanceRow {
            vertex: symbols.name(v).to_string(),
            distance: finite(x),
        })
        .collect()
}

fn intrinsic_report(g: &WeightedGraph, check: &IntrinsicCheck, symbols: &SymbolTable) -> IntrinsicReport {
    IntrinsicReport {
        holds: check.holds,
        worst_vertex: check.worst_vertex.map(|v| symbols.name(v).to_string()),
        worst_slack: finite(check.worst_slack),
        slack: check
            .slack
            .iter()
            .enumerate()
            .map(|(k, &s)| SlackRow {
                vertex: symbols.name(g.id(k)).to_string(),
                slack: s,
            })
            .collect(),
    }
}

fn source_id(
    args: &MetricArgs,
    symbols: &SymbolTable,
    first: Option<VertexId>,
) -> Result<VertexId, CliError> {
    match &args.source {
        Some(s) => symbols.id(&parse_name(s)),
        None => first.ok_or_else(|| CliError::Input("graph has no vertices".into())),
    }
}

fn graph_report(
    args: &MetricArgs,
    g: &WeightedGraph,
    symbols: &SymbolTable,
) -> Result<MetricReport, CliError> {
    let wants_distances = args.source.is_some() || !(args.check_intrinsic || args.jump_size);
    let source = wants_distances
        .then(|| source_id(args, symbols, g.ids().first().copied()))
        .transpose()?;
    let mut report = MetricReport {
        metric: String::new(),
        capped: args.cap,
        source: source.map(|s| symbols.name(s).to_string()),
        distances: Vec::new(),
        jump_size: None,
        intrinsic: None,
    };
    if args.vertex_measure {
        if args.cap {
            return Err(CliError::Input(
                "--cap applies to edge weights, not the vertex-measure metric".into(),
            ));
        }
        report.metric = "vertex-measure".into();
        if let Some(s) = source {
            report.distances = g
                .ids()
                .iter()
                .map(|&v| {
                    Ok(DistanceRow {
                        vertex: symbols.name(v).to_string(),
                        distance: finite(vertex_measure_metric(g, s, v)?),
                    })
                })
                .collect::<Result<_, CliError>>()?;
        }
        if args.check_intrinsic || args.jump_size {
            let mut on_edges = HashMap::new();
            for e in g.edges() {
                let (u, v) = (g.id(e.u), g.id(e.v));
                on_edges.insert((u, v), vertex_measure_metric(g, u, v)?);
            }
            if args.jump_size {
                report.jump_size = Some(on_edges.values().copied().fold(0.0, f64::max));
            }
            if args.check_intrinsic {
                let check = check_intrinsic_metric_on_edges(g, &on_edges)?;
                report.intrinsic = Some(intrinsic_report(g, &check, symbols));
            }
        }
        return Ok(report);
    }
    let choice = WeightChoice::parse(&args.weight);
    report.metric = choice.label();
    let p = choice.resolve(g, symbols, args.cap)?;
    if let Some(s) = source {
        report.distances = distance_rows(&path_metric(g, &p, s)?, symbols);
    }
    if args.jump_size {
        report.jump_size = finite(jump_size(&p));
    }
    if args.check_intrinsic {
        report.intrinsic = Some(intrinsic_report(g, &check_intrinsic_weight(g, &p), symbols));
    }
    Ok(report)
}

pub fn report(args: &MetricArgs, global: &GlobalArgs) -> Result<MetricReport, CliError> {
    let loaded = load_input(args.input.as_deref(), global)?;
    match &loaded.input {
        Input::Graph(g, symbols) => graph_report(args, g, symbols),
        Input::Metric(model, symbols) => {
            if args.check_intrinsic || args.jump_size || args.vertex_measure || args.cap {
                return Err(CliError::Input(
                    "a metric-graph document supports only η distances; convert it first".into(),
                ));
            }
            let s = source_id(args, symbols, model.vertices().first().copied())?;
            Ok(MetricReport {
                metric: "eta".into(),
                capped: false,
                source: Some(symbols.name(s).to_string()),
                distances: distance_rows(&eta_distances(model, s)?, symbols),
                jump_size: None,
                intrinsic: None,
            })
        }
        Input::Family(family, _) => {
            if !args.jump_size || args.check_intrinsic || args.source.is_some() {
                return Err(CliError::Input("families support only --jump-size".into()));
            }
            let (kind, metric) = match (args.vertex_measure, args.cap, args.weight.as_str()) {
                (true, false, _) => (FamilyWeight::VertexMeasure, "vertex-measure"),
                (false, true, "wouk") | (false, _, "capped-wouk") => {
                    (FamilyWeight::CappedWouk, "capped-wouk")
                }
                (false, false, "wouk") => (FamilyWeight::Wouk, "wouk"),
                _ => {
                    return Err(CliError::Input(
                        "families support the wouk and vertex-measure metrics".into(),
                    ))
                }
            };
            Ok(MetricReport {
                metric: metric.into(),
                capped: kind == FamilyWeight::CappedWouk,
                source: None,
                distances: Vec::new(),
                jump_size: finite(family_jump_size(family, kind)?),
                intrinsic: None,
            })
        }
        Input::Jacobi(..) => Err(CliError::Input("metric needs a graph, not Jacobi data".into())),
    }
}

pub fn render_text(r: &MetricReport) -> String {
    let mut out = String::new();
    let capped = if r.capped { " (capped)" } else { "" };
    let _ = writeln!(out, "metric {}{capped}", r.metric);
    if let Some(s) = &r.source {
        let _ = writeln!(out, "source {s}");
        let _ = writeln!(out, "vertex\tdistance");
        for row in &r.distances {
            let d = row.distance.map_or("inf".to_string(), |d| format!("{d:.12e}"));
            let _ = writeln!(out, "{}\t{d}", row.vertex);
        }
    }
    if let Some(j) = r.jump_size {
        let _ = writeln!(out, "jump size\t{j:.12e}");
    }
    if let Some(i) = &r.intrinsic {
        let _ = writeln!(out, "intrinsic\t{}", if i.holds { "PASS" } else { "FAIL" });
        let _ = writeln!(out, "vertex\tslack");
        for row in &i.slack {
            let _ = writeln!(out, "{}\t{:.12e}", row.vertex, row.slack);
        }
    }
    out
}

pub fn run(args: &MetricArgs, global: &GlobalArgs) -> Result<(), CliError> {
    let r = report(args, global)?;
    let text = match global.format {
        Format::Json => crate::to_json(&r),
        Format::Text => render_text(&r),
    };
    emit(global, &text)
}
