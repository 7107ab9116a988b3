//! Command-line front end for `sagraph`: graph documents in, JSON or text
//! reports out.

pub mod analyze;
pub mod convert;
pub mod document;
pub mod metric;
pub mod spectrum;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use sagraph::metrics::wouk_weight;
use sagraph::selfadjoint::degree_weight;
use sagraph::{AnalysisOptions, EdgeWeightFunction, WeightedGraph};

use document::{
    read_bytes, write_bytes, AntitreeParams, ConstantPath, Example67Params, FamilyDescriptor, GraphDocument,
    Input, PathParams, PowerPath, SymbolTable, WeightDocument,
};

pub const TOOL: &str = "sa-graph";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] sagraph::Error),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// 2 for bad input, 3 when a numerical method failed.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sa-graph",
    version,
    about = "Self-adjointness analysis of graph Laplacians"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Generate the input from a built-in family instead of reading a file.
    #[arg(long, global = true, value_enum)]
    pub family: Option<FamilyKind>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c1: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    /// Sphere sizes of an antitree, starting with 1.
    #[arg(long, global = true, value_delimiter = ',')]
    pub spheres: Vec<u64>,
    /// Path family with edge weights (n+1)^exponent.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub exponent: Option<f64>,
    /// Path family with constant Jacobi diagonal (needs --off-diagonal).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub diagonal: Option<f64>,
    #[arg(long, global = true)]
    pub off_diagonal: Option<f64>,
    /// Write output here instead of stdout; a `.gz` suffix compresses.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// JSON file with analysis options; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized steps [default: 42, or the config value]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Antitree,
    Path,
    Example67,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every applicable self-adjointness criterion.
    Analyze(analyze::AnalyzeArgs),
    /// Convert between metric-graph models and discrete graphs.
    Convert(convert::ConvertArgs),
    /// Path metrics, jump sizes and intrinsic checks.
    Metric(metric::MetricArgs),
    /// Lowest eigenvalues of nested truncations.
    Spectrum(spectrum::SpectrumArgs),
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(args) => analyze::run(args, &cli.global),
        Command::Convert(args) => convert::run(args, &cli.global),
        Command::Metric(args) => metric::run(args, &cli.global),
        Command::Spectrum(args) => spectrum::run(args, &cli.global),
    }
}

/// A parsed input together with the SHA-256 of the bytes it came from.
pub struct Loaded {
    pub input: Input,
    pub digest: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn family_descriptor(kind: FamilyKind, g: &GlobalArgs) -> Result<FamilyDescriptor, CliError> {
    let missing = |flag: &str| CliError::Input(format!("--family {kind:?} needs --{flag}").to_lowercase());
    Ok(match kind {
        FamilyKind::Antitree => {
            if g.spheres.is_empty() {
                return Err(missing("spheres"));
            }
            FamilyDescriptor::Antitree(AntitreeParams {
                spheres: g.spheres.clone(),
                alpha: None,
            })
        }
        FamilyKind::Path => match (g.exponent, g.diagonal, g.off_diagonal) {
            (Some(exponent), None, None) => FamilyDescriptor::Path(PathParams::Power(PowerPath { exponent })),
            (None, Some(a), Some(b)) => FamilyDescriptor::Path(PathParams::Constant(ConstantPath { a, b })),
            _ => {
                return Err(CliError::Input(
                    "--family path needs either --exponent or both --diagonal and --off-diagonal".into(),
                ))
            }
        },
        FamilyKind::Example67 => FamilyDescriptor::Example67(Example67Params {
            c1: g.c1.ok_or_else(|| missing("c1"))?,
            c2: g.c2.ok_or_else(|| missing("c2"))?,
        }),
    })
}

/// Reads the input file, or builds the family named by the global flags.
pub fn load_input(path: Option<&Path>, global: &GlobalArgs) -> Result<Loaded, CliError> {
    let (doc, bytes) = match (path, global.family) {
        (Some(_), Some(_)) => {
            return Err(CliError::Input(
                "give either an input file or --family, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Input(
                "no input: give a document path or --family".into(),
            ))
        }
        (Some(p), None) => {
            let bytes = read_bytes(p)?;
            (GraphDocument::parse(&bytes)?, bytes)
        }
        (None, Some(kind)) => {
            let doc = GraphDocument::from_family(family_descriptor(kind, global)?);
            let bytes = doc.to_json().into_bytes();
            (doc, bytes)
        }
    };
    Ok(Loaded {
        digest: sha256_hex(&bytes),
        input: doc.into_input()?,
    })
}

/// Defaults, then the config file, then flags. The thread count comes from
/// `SA_GRAPH_THREADS`, else the config file, else the machine's parallelism.
pub fn load_options(global: &GlobalArgs) -> Result<AnalysisOptions, CliError> {
    let mut threads_configured = false;
    let mut options = match &global.config {
        Some(path) => {
            let bad = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
            let value: serde_json::Value = serde_json::from_slice(&read_bytes(path)?).map_err(bad)?;
            threads_configured = value.get("threads").is_some();
            serde_json::from_value(value).map_err(bad)?
        }
        None => AnalysisOptions::default(),
    };
    if let Some(seed) = global.seed {
        options.seed = seed;
    }
    match std::env::var("SA_GRAPH_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => options.threads = n,
            _ => {
                return Err(CliError::Input(format!(
                    "SA_GRAPH_THREADS must be a positive integer, got {s:?}"
                )))
            }
        },
        Err(_) if !threads_configured => {
            options.threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        }
        Err(_) => {}
    }
    if options.threads == 0 {
        return Err(CliError::Input("threads must be positive".into()));
    }
    Ok(options)
}

/// Edge weight named on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightChoice {
    Wouk,
    CappedWouk,
    Degree,
    File(PathBuf),
}

impl WeightChoice {
    pub fn parse(s: &str) -> Self {
        match s {
            "wouk" => WeightChoice::Wouk,
            "capped-wouk" => WeightChoice::CappedWouk,
            "degree" => WeightChoice::Degree,
            path => WeightChoice::File(PathBuf::from(path)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightChoice::Wouk => "wouk".into(),
            WeightChoice::CappedWouk => "capped-wouk".into(),
            WeightChoice::Degree => "degree".into(),
            WeightChoice::File(p) => p.display().to_string(),
        }
    }

    pub fn resolve(
        &self,
        g: &WeightedGraph,
        symbols: &SymbolTable,
        cap: bool,
    ) -> Result<EdgeWeightFunction, CliError> {
        let p = match self {
            WeightChoice::Wouk => wouk_weight(g)?,
            WeightChoice::CappedWouk => wouk_weight(g)?.capped(),
            WeightChoice::Degree => degree_weight(g)?,
            WeightChoice::File(path) => {
                let doc = WeightDocument::parse(&read_bytes(path)?)?;
                EdgeWeightFunction::from_pairs(g, &doc.resolve(symbols)?)?
            }
        };
        Ok(if cap { p.capped() } else { p })
    }
}

/// Writes `text` to `--out` or stdout.
pub fn emit(global: &GlobalArgs, text: &str) -> Result<(), CliError> {
    match &global.out {
        Some(path) => write_bytes(path, text.as_bytes()),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// The serialized name of a unit-like enum value.
pub fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::from("?"),
    }
}

/// `None` for non-finite values, which JSON cannot carry.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
