use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use sagraph::bridge::metric_to_discrete;
use sagraph::operators::{family_lambda_min_sequence, lambda_min_sequence};
use sagraph::selfadjoint::deficiency::DeficiencyClass;
use sagraph::selfadjoint::jacobi::jacobi_lambda_min_sequence;
use sagraph::selfadjoint::{deficiency_at_conjugates, ConjugatePair};
use sagraph::{AnalysisOptions, JacobiSource, VertexId, WeightedGraph};

use crate::document::Input;
use crate::{emit, label, load_input, load_options, CliError, Format, GlobalArgs};

/// Fewest rows for which deficiency evidence is attempted.
const MIN_DEFICIENCY_ROWS: usize = 100;

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    pub input: Option<PathBuf>,
    /// Strictly ascending truncation sizes: rows for Jacobi inputs, layers for
    /// families, leading vertices (by id) for graphs.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pub depths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub depth: usize,
    pub lambda_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficiencySummary {
    pub class: DeficiencyClass,
    pub evidence: ConjugatePair,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub input_digest: String,
    pub truncation: &'static str,
    pub rows: Vec<SpectrumRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deficiency: Option<DeficiencySummary>,
}

fn jacobi_report(
    source: &dyn JacobiSource,
    depths: &[usize],
    options: &AnalysisOptions,
) -> Result<(Vec<f64>, Option<DeficiencySummary>), CliError> {
    if let Some(size) = source.size() {
        if let Some(&d) = depths.iter().find(|&&d| d > size) {
            return Err(CliError::Input(format!(
                "depth {d} exceeds the {size} rows of the Jacobi matrix"
            )));
        }
    }
    let values = jacobi_lambda_min_sequence(source, depths, options.spectral().monotonicity_tol)?;
    let deficiency = if source.size().is_none_or(|s| s >= MIN_DEFICIENCY_ROWS) {
        let pair = deficiency_at_conjugates(source, &options.deficiency)?;
        Some(DeficiencySummary {
            class: pair.class(),
            evidence: pair,
        })
    } else {
        None
    };
    Ok((values, deficiency))
}

fn graph_values(
    g: &WeightedGraph,
    depths: &[usize],
    options: &AnalysisOptions,
) -> Result<Vec<f64>, CliError> {
    if depths.iter().any(|&d| d == 0 || d > g.len()) {
        return Err(CliError::Input(format!("depths must lie in 1..={}", g.len())));
    }
    let sets: Vec<Vec<VertexId>> = depths.iter().map(|&d| g.ids()[..d].to_vec()).collect();
    Ok(lambda_min_sequence(g, &sets, &options.spectral())?)
}

pub fn report(args: &SpectrumArgs, global: &GlobalArgs) -> Result<SpectrumReport, CliError> {
    let depths = &args.depths;
    if depths.is_empty() || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Input("--depths must be strictly ascending".into()));
    }
    let options = load_options(global)?;
    let loaded = load_input(args.input.as_deref(), global)?;
    let (truncation, values, deficiency) = match &loaded.input {
        Input::Jacobi(data, _) => {
            let (v, d) = jacobi_report(data, depths, &options)?;
            ("jacobi rows", v, d)
        }
        Input::Family(family, _) => match family.jacobi() {
            Some(j) => {
                let (v, d) = jacobi_report(j.as_ref(), depths, &options)?;
                ("jacobi rows", v, d)
            }
            None => (
                "family layers",
                family_lambda_min_sequence(family, depths, &options.spectral())?,
                None,
            ),
        },
        Input::Graph(g, _) => ("leading vertices", graph_values(g, depths, &options)?, None),
        Input::Metric(model, _) => (
            "leading vertices",
            graph_values(&metric_to_discrete(model)?, depths, &options)?,
            None,
        ),
    };
    Ok(SpectrumReport {
        input_digest: loaded.digest,
        truncation,
        rows: depths
            .iter()
            .zip(values)
            .map(|(&depth, lambda_min)| SpectrumRow { depth, lambda_min })
            .collect(),
        deficiency,
    })
}

pub fn render_text(r: &SpectrumReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "depth\tlambda_min\t# {}", r.truncation);
    for row in &r.rows {
        let _ = writeln!(out, "{}\t{:.15e}", row.depth, row.lambda_min);
    }
    if let Some(d) = &r.deficiency {
        let _ = writeln!(out, "deficiency\t{}", label(&d.class));
        for (z, ev) in [("+i", &d.evidence.plus), ("-i", &d.evidence.minus)] {
            for t in &ev.solutions {
                let slope = t.slope.map_or("n/a".to_string(), |s| format!("{s:.4}"));
                let _ = writeln!(
                    out,
                    "  z={z} {}: slope {slope}, tail ratio {:.3e}, growth {:.3e}",
                    t.name, t.tail_ratio, t.growth_factor
                );
            }
        }
    }
    out
}

pub fn run(args: &SpectrumArgs, global: &GlobalArgs) -> Result<(), CliError> {
    let r = report(args, global)?;
    let text = match global.format {
        Format::Json => crate::to_json(&r),
        Format::Text => render_text(&r),
    };
    emit(global, &text)
}
