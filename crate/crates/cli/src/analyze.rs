use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use sagraph::bridge::metric_to_discrete;
use sagraph::selfadjoint::DEFAULT_CHECK_SIZES;
use sagraph::{analyze, AnalysisOptions, AnalysisReport, Subject};

use crate::document::Input;
use crate::{emit, label, load_input, load_options, to_json, CliError, Format, GlobalArgs, TOOL, VERSION};

pub const REPORT_FORMAT: &str = "sa-graph-report/1";

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    /// Graph document (`.json` or `.json.gz`).
    pub input: Option<PathBuf>,
    /// Largest Jacobi truncation used for spectra and the nonnegativity check.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Take metric completeness as given.
    #[arg(long)]
    pub premise_complete: bool,
    /// Take semiboundedness as given.
    #[arg(long)]
    pub premise_semibounded: bool,
    /// Record wall-clock time; the report is then no longer reproducible.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool: &'static str,
    pub version: &'static str,
    pub format: &'static str,
    pub input_digest: String,
    pub options: AnalysisOptions,
    pub report: AnalysisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbols: Option<BTreeMap<usize, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timings {
    pub analyze_seconds: f64,
}

/// Truncation sizes up to `depth`: the default sizes below it, then `depth`.
fn sizes_through(depth: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = DEFAULT_CHECK_SIZES
        .iter()
        .copied()
        .filter(|&n| n < depth)
        .collect();
    sizes.push(depth);
    sizes
}

pub fn report(args: &AnalyzeArgs, global: &GlobalArgs) -> Result<ReportDocument, CliError> {
    let mut options = load_options(global)?;
    if let Some(depth) = args.depth {
        if depth < 2 {
            return Err(CliError::Input("--depth must be at least 2".into()));
        }
        options.jacobi_sizes = sizes_through(depth);
    }
    options.premises.complete |= args.premise_complete;
    options.premises.semibounded |= args.premise_semibounded;

    let loaded = load_input(args.input.as_deref(), global)?;
    let start = Instant::now();
    let (mut report, symbols) = match &loaded.input {
        Input::Graph(g, symbols) => (analyze(Subject::Graph(g), &options)?, Some(symbols)),
        Input::Metric(model, symbols) => {
            let g = metric_to_discrete(model)?;
            let mut report = analyze(Subject::Graph(&g), &options)?;
            report
                .caveats
                .push("analyzed the discrete graph of the metric model".into());
            (report, Some(symbols))
        }
        Input::Family(family, _) => (analyze(Subject::Family(family), &options)?, None),
        Input::Jacobi(data, _) => (analyze(Subject::Jacobi(data), &options)?, None),
    };
    let elapsed = start.elapsed().as_secs_f64();
    report.caveats.dedup();
    Ok(ReportDocument {
        tool: TOOL,
        version: VERSION,
        format: REPORT_FORMAT,
        input_digest: loaded.digest,
        options,
        report,
        symbols: symbols.filter(|s| s.has_labels()).map(|s| s.labels()),
        timings: args.timings.then_some(Timings {
            analyze_seconds: elapsed,
        }),
    })
}

pub fn render_text(doc: &ReportDocument) -> String {
    let r = &doc.report;
    let mut out = String::new();
    let _ = writeln!(out, "subject       {}", r.subject);
    let _ = writeln!(out, "verdict       {}", r.verdict);
    let bound = r
        .semiboundedness
        .lower_bound
        .map_or(String::new(), |b| format!(", lower bound {b:.6e}"));
    let _ = writeln!(
        out,
        "semibounded   {} ({}{bound})",
        label(&r.semiboundedness.status),
        r.semiboundedness.method
    );
    if let Some(n) = &r.nonnegativity {
        let _ = writeln!(out, "nonnegative   {}", label(&n.status));
    }
    let _ = writeln!(out, "digest        {}", doc.input_digest);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<22}{:<18}note", "criterion", "status");
    for o in &r.outcomes {
        let _ = writeln!(
            out,
            "{:<22}{:<18}{}",
            o.criterion.to_string(),
            label(&o.status),
            o.note
        );
        for h in &o.hypotheses {
            let _ = writeln!(out, "  - {}: {} ({})", h.name, label(&h.status), h.detail);
        }
    }
    if !r.caveats.is_empty() {
        let _ = writeln!(out);
        for c in &r.caveats {
            let _ = writeln!(out, "caveat: {c}");
        }
    }
    if let Some(t) = &doc.timings {
        let _ = writeln!(out, "analyze took {:.3} s", t.analyze_seconds);
    }
    out
}

pub fn run(args: &AnalyzeArgs, global: &GlobalArgs) -> Result<(), CliError> {
    let doc = report(args, global)?;
    let text = match global.format {
        Format::Json => to_json(&doc),
        Format::Text => render_text(&doc),
    };
    emit(global, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_sizes() {
        assert_eq!(sizes_through(2000), vec![10, 100, 1000, 2000]);
        assert_eq!(sizes_through(500), vec![10, 100, 500]);
        assert_eq!(sizes_through(5), vec![5]);
    }
}
