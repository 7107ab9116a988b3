use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sagraph::bridge::{affine_energy, discrete_to_metric, eta_distances, metric_to_discrete};
use sagraph::metrics::path_metric;
use sagraph::operators::quadratic_form;
use sagraph::{EdgeWeightFunction, MetricGraphModel, VertexId, WeightedGraph};

use crate::document::{graph_document, metric_document, Input};
use crate::{emit, load_input, load_options, CliError, GlobalArgs, WeightChoice};

/// Relative tolerance of the round-trip and energy checks.
pub const VERIFY_RTOL: f64 = 1e-12;

/// Sources used for distance comparisons on large graphs.
const MAX_SOURCES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    MetricToDiscrete,
    DiscreteToMetric,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub direction: Direction,
    /// wouk, capped-wouk, degree, or a weight file; needed for discrete-to-metric.
    #[arg(long)]
    pub weight: Option<String>,
    /// Replace the weight by min(1, p).
    #[arg(long)]
    pub cap: bool,
    /// Check the conversion identities; a failure exits with status 3.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Verification {
    /// Largest relative error of `m` and `b` after converting back.
    pub weights: f64,
    /// Largest relative error between η distances and the path metric.
    pub distances: f64,
    /// Largest relative error between affine energy and the quadratic form.
    pub energy: f64,
}

impl Verification {
    pub fn passes(&self) -> bool {
        [self.weights, self.distances, self.energy]
            .iter()
            .all(|&e| e <= VERIFY_RTOL)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Worst relative gap between `affine_energy` and `quadratic_form` over
/// random functions supported on the whole vertex set.
pub fn energy_gap(
    model: &MetricGraphModel,
    g: &WeightedGraph,
    seed: u64,
    trials: usize,
) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f: BTreeMap<VertexId, f64> = g.ids().iter().map(|&v| (v, rng.gen_range(-1.0..1.0))).collect();
        let q = quadratic_form(g, &f)?;
        let e = affine_energy(model, &f)?;
        worst = worst.max(rel(q, e));
    }
    Ok(worst)
}

/// Checks that `model` realizes `(g, p)`: converting back reproduces
/// `(m, b)`, η distances equal the path metric of `p`, and energies agree.
pub fn verify_realization(
    g: &WeightedGraph,
    p: &EdgeWeightFunction,
    model: &MetricGraphModel,
    seed: u64,
) -> Result<Verification, CliError> {
    let back = metric_to_discrete(model)?;
    if back.ids() != g.ids() || back.edges().len() != g.edges().len() {
        return Ok(Verification {
            weights: f64::INFINITY,
            ..Verification::default()
        });
    }
    let mut v = Verification::default();
    for (a, b) in back.measures().iter().zip(g.measures()) {
        v.weights = v.weights.max(rel(*a, *b));
    }
    for (a, b) in back.edges().iter().zip(g.edges()) {
        if (a.u, a.v) != (b.u, b.v) {
            v.weights = f64::INFINITY;
        }
        v.weights = v.weights.max(rel(a.b, b.b));
    }
    for &source in g.ids().iter().take(MAX_SOURCES) {
        let rho = path_metric(g, p, source)?;
        let eta = eta_distances(model, source)?;
        for (x, y) in rho.by_position().iter().zip(eta.by_position()) {
            if x.is_finite() || y.is_finite() {
                v.distances = v.distances.max(rel(*x, *y));
            }
        }
    }
    v.energy = energy_gap(model, g, seed, 8)?;
    Ok(v)
}

pub fn run(args: &ConvertArgs, global: &GlobalArgs) -> Result<(), CliError> {
    let options = load_options(global)?;
    let loaded = load_input(args.input.as_deref(), global)?;
    let (text, verification) = match (args.direction, loaded.input) {
        (Direction::MetricToDiscrete, Input::Metric(model, symbols)) => {
            let g = metric_to_discrete(&model)?;
            let verification = args
                .verify
                .then(|| {
                    energy_gap(&model, &g, options.seed, 8).map(|energy| Verification {
                        energy,
                        ..Verification::default()
                    })
                })
                .transpose()?;
            (graph_document(&g, &symbols).to_json(), verification)
        }
        (Direction::DiscreteToMetric, Input::Graph(g, symbols)) => {
            let weight = args
                .weight
                .as_deref()
                .ok_or_else(|| CliError::Input("discrete-to-metric needs --weight".into()))?;
            let p = WeightChoice::parse(weight).resolve(&g, &symbols, args.cap)?;
            let model = discrete_to_metric(&g, &p)?;
            let verification = args
                .verify
                .then(|| verify_realization(&g, &p, &model, options.seed))
                .transpose()?;
            (metric_document(&model, &symbols).to_json(), verification)
        }
        (Direction::MetricToDiscrete, _) => {
            return Err(CliError::Input(
                "metric-to-discrete needs a metric-graph document".into(),
            ))
        }
        (Direction::DiscreteToMetric, _) => {
            return Err(CliError::Input(
                "discrete-to-metric needs a discrete graph document".into(),
            ))
        }
    };
    if let Some(v) = &verification {
        eprintln!(
            "verify: {} (weights {:.3e}, distances {:.3e}, energy {:.3e})",
            if v.passes() { "pass" } else { "FAIL" },
            v.weights,
            v.distances,
            v.energy
        );
        if !v.passes() {
            return Err(CliError::Numerical("conversion identities do not hold".into()));
        }
    }
    emit(global, &text)
}
