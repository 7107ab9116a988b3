//! Criteria for essential self-adjointness and the analysis pipeline that
//! runs them.
//!
//! Each criterion is a sufficient (or, for Jacobi matrices, characterizing)
//! condition whose hypotheses are tracked individually. A hypothesis is either
//! verified by finite computation, asserted by the caller as a premise, or
//! supported only by numerical evidence; an outcome is `Certified` only when
//! nothing rests on evidence.

pub mod deficiency;
pub mod jacobi;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::eigen::LanczosConfig;
use crate::error::{Error, Result};
use crate::family::{FamilyWeight, LazyFamily};
use crate::graph::{VertexId, WeightedGraph};
use crate::metrics::{
    check_intrinsic_weight, completeness_evidence, family_completeness_evidence, ray_evidence, wouk_weight,
    CompletenessConfig, CompletenessEvidence, CompletenessStatus, EdgeWeightFunction,
};
use crate::operators::{
    assemble_truncation, family_lambda_min_sequence, operator_norm_bounds, NormBounds, SpectralConfig,
};

pub use deficiency::{
    deficiency_at_conjugates, jacobi_deficiency_evidence, ConjugatePair, DeficiencyClass, DeficiencyConfig,
    DeficiencyEvidence, SolutionTail,
};
pub use jacobi::{
    akhiezer_criterion, check_factorization, jacobi_akhiezer, jacobi_lambda_min_sequence,
    nonneg_factorization_check, series_evidence, truncation_lambda_min, FactorizationCheck, JacobiData,
    JacobiSource, SeriesConfig, SeriesEvidence, SeriesVerdict, DEFAULT_CHECK_SIZES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    EvidenceFor,
    EvidenceAgainst,
    Inapplicable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisStatus {
    /// Established by finite computation.
    Verified,
    /// Asserted by the caller.
    Premise,
    /// Supported by numerical evidence only.
    Evidence,
    /// Numerical evidence indicates the hypothesis fails.
    EvidenceAgainst,
    /// Known to fail.
    Fails,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: HypothesisStatus,
    pub detail: String,
}

impl Hypothesis {
    pub fn new(name: &str, status: HypothesisStatus, detail: impl Into<String>) -> Self {
        Hypothesis {
            name: name.into(),
            status,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gaffney,
    CarlemanFriedrichs,
    Gpw,
    Wouk,
    Deficiency,
    Akhiezer,
    Nonnegativity,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Criterion::Gaffney => "gaffney",
            Criterion::CarlemanFriedrichs => "carleman_friedrichs",
            Criterion::Gpw => "gpw",
            Criterion::Wouk => "wouk",
            Criterion::Deficiency => "deficiency",
            Criterion::Akhiezer => "akhiezer",
            Criterion::Nonnegativity => "nonnegativity",
        };
        f.write_str(s)
    }
}

/// Scan of `α/m` for a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialScan {
    pub floor: f64,
    pub scanned: usize,
    /// `(k, min over [2^k − 1, 2^{k+1} − 1))`.
    pub block_minima: Vec<(usize, f64)>,
    /// The minimum over the later half of the blocks is not below the
    /// minimum over the earlier half.
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiboundedEvidence {
    pub status: HypothesisStatus,
    pub lower_bound: Option<f64>,
    /// `(size or depth, λ_min)`.
    pub trace: Vec<(usize, f64)>,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Completeness(CompletenessEvidence),
    Intrinsic {
        vertices_checked: usize,
        worst_vertex: Option<VertexId>,
        worst_slack: f64,
    },
    Potential(PotentialScan),
    Semibounded(SemiboundedEvidence),
    Deficiency(Box<ConjugatePair>),
    Series(SeriesEvidence),
    Factorization(FactorizationCheck),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub criterion: Criterion,
    pub status: Status,
    pub hypotheses: Vec<Hypothesis>,
    pub witnesses: Vec<Witness>,
    pub note: String,
}

impl CriterionOutcome {
    /// Status of a sufficient condition from the status of its hypotheses:
    /// any known failure makes it inapplicable, anything doubtful makes it
    /// inconclusive, evidence makes it evidence, and otherwise it is
    /// certified.
    pub fn from_hypotheses(
        criterion: Criterion,
        hypotheses: Vec<Hypothesis>,
        witnesses: Vec<Witness>,
    ) -> Self {
        use HypothesisStatus::*;
        let has = |s: HypothesisStatus| hypotheses.iter().any(|h| h.status == s);
        let status = if has(Fails) {
            Status::Inapplicable
        } else if has(EvidenceAgainst) || has(Unknown) {
            Status::Inconclusive
        } else if has(Evidence) {
            Status::EvidenceFor
        } else {
            Status::Certified
        };
        CriterionOutcome {
            criterion,
            status,
            hypotheses,
            witnesses,
            note: String::new(),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// True when `Certified` rests only on verified facts and premises.
    pub fn is_consistent(&self) -> bool {
        self.status != Status::Certified
            || self
                .hypotheses
                .iter()
                .all(|h| matches!(h.status, HypothesisStatus::Verified | HypothesisStatus::Premise))
    }
}

/// Hypotheses the caller asserts without proof.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Premises {
    pub semibounded: bool,
    pub complete: bool,
}

fn completeness_hypothesis(ev: &CompletenessEvidence, premises: &Premises, wouk: bool) -> Hypothesis {
    use HypothesisStatus::*;
    let name = "complete intrinsic path metric";
    if premises.complete && ev.status != CompletenessStatus::CompleteFinite {
        return Hypothesis::new(name, Premise, "asserted by the caller");
    }
    let (status, detail) = match ev.status {
        CompletenessStatus::CompleteFinite => (Verified, "finite graph".to_string()),
        CompletenessStatus::DivergenceEvidence => (Evidence, ev.reason.clone()),
        CompletenessStatus::ConvergentRayFound if wouk => {
            (Fails, format!("ray of finite length: {}", ev.reason))
        }
        CompletenessStatus::ConvergentRayFound => {
            (EvidenceAgainst, format!("ray of finite length: {}", ev.reason))
        }
        CompletenessStatus::Inconclusive => (Unknown, ev.reason.clone()),
    };
    Hypothesis::new(name, status, detail)
}

fn semibounded_hypothesis(ev: &SemiboundedEvidence, premises: &Premises) -> Hypothesis {
    let name = "minimal operator bounded below";
    if premises.semibounded && !matches!(ev.status, HypothesisStatus::Verified) {
        return Hypothesis::new(name, HypothesisStatus::Premise, "asserted by the caller");
    }
    Hypothesis::new(name, ev.status, ev.method.clone())
}

/// How the intrinsic path metric used by a criterion was obtained.
pub enum MetricKind<'a> {
    /// Path metric of `weight`. Only the first `interior` positions are
    /// checked, for truncations whose outer layer lacks neighbors.
    IntrinsicPath {
        weight: &'a EdgeWeightFunction,
        interior: Option<usize>,
    },
    /// The vertex-measure metric, which needs no check.
    VertexMeasure,
}

fn metric_hypothesis(g: &WeightedGraph, metric: &MetricKind<'_>) -> Result<(Hypothesis, Option<Witness>)> {
    match metric {
        MetricKind::VertexMeasure => Ok((
            Hypothesis::new(
                "intrinsic path metric",
                HypothesisStatus::Verified,
                "vertex-measure metric",
            ),
            None,
        )),
        MetricKind::IntrinsicPath { weight, interior } => {
            let check = check_intrinsic_weight(g, weight);
            let limit = interior.unwrap_or(g.len()).min(g.len());
            let worst = check.slack[..limit]
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)));
            if let Some((k, &s)) = worst {
                if s < -crate::metrics::INTRINSIC_RTOL * g.measure(k) {
                    return Err(Error::NotIntrinsic {
                        vertex: g.id(k),
                        excess: -s,
                    });
                }
            }
            Ok((
                Hypothesis::new(
                    "intrinsic path metric",
                    HypothesisStatus::Verified,
                    format!("weight checked at {limit} vertices"),
                ),
                Some(Witness::Intrinsic {
                    vertices_checked: limit,
                    worst_vertex: worst.map(|(k, _)| g.id(k)),
                    worst_slack: worst.map_or(f64::INFINITY, |(_, &s)| s),
                }),
            ))
        }
    }
}

/// Gaffney: the Laplacian (`α ≡ 0`) is self-adjoint when the graph is
/// complete for an intrinsic path metric or for the vertex-measure metric.
pub fn gaffney_certify(
    g: &WeightedGraph,
    completeness: &CompletenessEvidence,
    metric: MetricKind<'_>,
    premises: &Premises,
) -> Result<CriterionOutcome> {
    let (metric_h, metric_w) = metric_hypothesis(g, &metric)?;
    let zero_potential = g.potential().is_none_or(|a| a.iter().all(|&x| x == 0.0));
    let potential_h = Hypothesis::new(
        "vanishing potential",
        if zero_potential {
            HypothesisStatus::Verified
        } else {
            HypothesisStatus::Fails
        },
        if zero_potential {
            "α ≡ 0"
        } else {
            "α is not identically zero"
        },
    );
    let hypotheses = vec![
        potential_h,
        metric_h,
        completeness_hypothesis(completeness, premises, false),
    ];
    let mut witnesses: Vec<Witness> = metric_w.into_iter().collect();
    witnesses.push(Witness::Completeness(completeness.clone()));
    Ok(CriterionOutcome::from_hypotheses(
        Criterion::Gaffney,
        hypotheses,
        witnesses,
    ))
}

/// Lower bound of `α/m` on a finite graph.
pub fn scan_graph_potential(g: &WeightedGraph) -> Option<PotentialScan> {
    let alpha = g.potential()?;
    let floor = alpha
        .iter()
        .zip(g.measures())
        .map(|(a, m)| a / m)
        .fold(f64::INFINITY, f64::min);
    Some(PotentialScan {
        floor,
        scanned: g.len(),
        block_minima: vec![(0, floor)],
        stabilized: true,
    })
}

/// Dyadic block minima of `floor(n)` for `n < depth`.
pub fn scan_potential_floor(floor: impl Fn(usize) -> f64, depth: usize) -> PotentialScan {
    let mut block_minima = Vec::new();
    let (mut start, mut k) = (0usize, 0usize);
    while start < depth {
        let end = (2 * start + 1).min(depth);
        let m = (start..end).map(&floor).fold(f64::INFINITY, f64::min);
        block_minima.push((k, m));
        start = end;
        k += 1;
    }
    let half = block_minima.len() / 2;
    let early = block_minima[..half.max(1)]
        .iter()
        .map(|b| b.1)
        .fold(f64::INFINITY, f64::min);
    let late = block_minima[half.max(1).min(block_minima.len())..]
        .iter()
        .map(|b| b.1)
        .fold(f64::INFINITY, f64::min);
    PotentialScan {
        floor: early.min(late),
        scanned: depth,
        stabilized: late >= early,
        block_minima,
    }
}

/// Carleman–Friedrichs: a potential with `α/m` bounded below on a graph that
/// is complete for an intrinsic metric gives a self-adjoint operator.
pub fn carleman_friedrichs_certify(
    g: &WeightedGraph,
    scan: Option<&PotentialScan>,
    finite: bool,
    completeness: &CompletenessEvidence,
    metric: MetricKind<'_>,
    premises: &Premises,
) -> Result<CriterionOutcome> {
    let Some(scan) = scan else {
        return Ok(CriterionOutcome {
            criterion: Criterion::CarlemanFriedrichs,
            status: Status::Inapplicable,
            hypotheses: vec![Hypothesis::new(
                "potential present",
                HypothesisStatus::Fails,
                "no potential",
            )],
            witnesses: Vec::new(),
            note: String::new(),
        });
    };
    let (metric_h, metric_w) = metric_hypothesis(g, &metric)?;
    let bound_h = if finite {
        Hypothesis::new(
            "potential bounded below",
            HypothesisStatus::Verified,
            format!("inf α/m = {}", scan.floor),
        )
    } else if scan.stabilized {
        Hypothesis::new(
            "potential bounded below",
            HypothesisStatus::Evidence,
            format!(
                "block minima settle at {} over {} layers",
                scan.floor, scan.scanned
            ),
        )
    } else {
        Hypothesis::new(
            "potential bounded below",
            HypothesisStatus::Unknown,
            format!("block minima keep decreasing (down to {})", scan.floor),
        )
    };
    let hypotheses = vec![
        bound_h,
        metric_h,
        completeness_hypothesis(completeness, premises, false),
    ];
    let mut witnesses = vec![Witness::Potential(scan.clone())];
    witnesses.extend(metric_w);
    witnesses.push(Witness::Completeness(completeness.clone()));
    Ok(CriterionOutcome::from_hypotheses(
        Criterion::CarlemanFriedrichs,
        hypotheses,
        witnesses,
    ))
}

/// Glazman–Povzner–Wienholtz: a semibounded minimal operator on a graph that is
/// complete for an intrinsic path metric is essentially self-adjoint.
pub fn gpw_certify(
    g: &WeightedGraph,
    semibounded: &SemiboundedEvidence,
    completeness: &CompletenessEvidence,
    metric: MetricKind<'_>,
    premises: &Premises,
) -> Result<CriterionOutcome> {
    let (metric_h, metric_w) = metric_hypothesis(g, &metric)?;
    let hypotheses = vec![
        semibounded_hypothesis(semibounded, premises),
        metric_h,
        completeness_hypothesis(completeness, premises, false),
    ];
    let mut witnesses = vec![Witness::Semibounded(semibounded.clone())];
    witnesses.extend(metric_w);
    witnesses.push(Witness::Completeness(completeness.clone()));
    Ok(CriterionOutcome::from_hypotheses(
        Criterion::Gpw,
        hypotheses,
        witnesses,
    ))
}

/// Ray increments of the Wouk weight on the path graph of a Jacobi matrix:
/// `1/√(b_n max(deg n, deg (n+1)))`.
pub fn jacobi_wouk_increments(source: &dyn JacobiSource, steps: usize) -> Vec<f64> {
    let rows = source.size();
    let deg = |n: usize| -> f64 {
        let has_left = n > 0;
        let has_right = rows.is_none_or(|s| n + 1 < s);
        (has_left as usize + has_right as usize) as f64
    };
    let steps = rows.map_or(steps, |s| steps.min(s.saturating_sub(1)));
    (0..steps)
        .map(|n| 1.0 / (source.off_diagonal(n) * deg(n).max(deg(n + 1))).sqrt())
        .collect()
}

/// What the Wouk criterion is applied to.
pub enum WoukSubject<'a> {
    Jacobi(&'a dyn JacobiSource),
    Graph(&'a WeightedGraph),
    Family(&'a LazyFamily),
}

/// Wouk: a semibounded operator with `m ≡ 1` is self-adjoint when the graph is
/// complete for `1/√(b max(deg u, deg v))`; for Jacobi matrices this is
/// divergence of `Σ 1/√b_n`.
pub fn wouk_certify(
    subject: WoukSubject<'_>,
    semibounded: &SemiboundedEvidence,
    config: &CompletenessConfig,
    premises: &Premises,
) -> Result<CriterionOutcome> {
    let (completeness, intrinsic) = match subject {
        WoukSubject::Jacobi(source) => {
            let ev = match source.size() {
                Some(_) => completeness_evidence_finite(config),
                None => ray_evidence(&jacobi_wouk_increments(source, config.depth), config)?,
            };
            (ev, None)
        }
        WoukSubject::Graph(g) => {
            let p = wouk_weight(g)?;
            let check = check_intrinsic_weight(g, &p);
            check.require()?;
            (completeness_evidence(g, config), Some((g.len(), check)))
        }
        WoukSubject::Family(family) => {
            let depth = family.depth_within_budget(10_000, 4);
            let probe = family.truncate(depth)?;
            if let Some((vertex, measure)) = probe.graph.first_non_unit_measure() {
                return Err(Error::NonUnitMeasure { vertex, measure });
            }
            (
                family_completeness_evidence(family, FamilyWeight::Wouk, config)?,
                None,
            )
        }
    };
    let mut hypotheses = vec![
        Hypothesis::new("unit measure", HypothesisStatus::Verified, "m ≡ 1"),
        semibounded_hypothesis(semibounded, premises),
        completeness_hypothesis(&completeness, premises, true),
    ];
    if premises.complete && completeness.status == CompletenessStatus::ConvergentRayFound {
        hypotheses[2] = Hypothesis::new(
            "complete intrinsic path metric",
            HypothesisStatus::Fails,
            "the Wouk series converges; the premise is not used",
        );
    }
    let mut witnesses = vec![Witness::Semibounded(semibounded.clone())];
    if let Some((n, check)) = intrinsic {
        witnesses.push(Witness::Intrinsic {
            vertices_checked: n,
            worst_vertex: check.worst_vertex,
            worst_slack: check.worst_slack,
        });
    }
    witnesses.push(Witness::Completeness(completeness));
    Ok(CriterionOutcome::from_hypotheses(
        Criterion::Wouk,
        hypotheses,
        witnesses,
    ))
}

fn completeness_evidence_finite(config: &CompletenessConfig) -> CompletenessEvidence {
    let g = WeightedGraph::from_dense(vec![1.0], &[], None).expect("single vertex");
    completeness_evidence(&g, config)
}

/// Limit-point evidence for self-adjointness, limit-circle evidence against.
pub fn deficiency_outcome(pair: ConjugatePair) -> CriterionOutcome {
    let (status, detail) = match pair.class() {
        DeficiencyClass::LimitPointEvidence => (Status::EvidenceFor, "limit point: indices (0, 0)"),
        DeficiencyClass::LimitCircleEvidence => (Status::EvidenceAgainst, "limit circle: indices (1, 1)"),
        DeficiencyClass::Inconclusive => (Status::Inconclusive, "no classification"),
    };
    let agree = if pair.agree {
        HypothesisStatus::Verified
    } else {
        HypothesisStatus::Unknown
    };
    CriterionOutcome {
        criterion: Criterion::Deficiency,
        status,
        hypotheses: vec![Hypothesis::new(
            "equal classification at z = ±i",
            agree,
            "real coefficients force equal deficiency indices",
        )],
        witnesses: vec![Witness::Deficiency(Box::new(pair))],
        note: detail.into(),
    }
}

/// Convergence of the Akhiezer series is evidence against self-adjointness,
/// divergence evidence for it.
pub fn akhiezer_outcome(ev: SeriesEvidence) -> CriterionOutcome {
    let status = match ev.verdict {
        SeriesVerdict::ConvergesEvidence => Status::EvidenceAgainst,
        SeriesVerdict::DivergesEvidence => Status::EvidenceFor,
        SeriesVerdict::Inconclusive => Status::Inconclusive,
    };
    CriterionOutcome {
        criterion: Criterion::Akhiezer,
        status,
        hypotheses: vec![Hypothesis::new(
            "nonnegative factorization",
            HypothesisStatus::Verified,
            "a_n = m_n(l_{n-1} + l_n), b_n = l_n √(m_n m_{n+1})",
        )],
        witnesses: vec![Witness::Series(ev)],
        note: String::new(),
    }
}

/// Semiboundedness from a factorization check.
pub fn nonnegativity_outcome(check: FactorizationCheck) -> CriterionOutcome {
    let status = if check.holds {
        HypothesisStatus::Verified
    } else {
        HypothesisStatus::EvidenceAgainst
    };
    let hypotheses = vec![Hypothesis::new(
        "factorization identities",
        status,
        format!(
            "checked on {} rows, largest relative error {:e}",
            check.rows_checked, check.max_identity_error
        ),
    )];
    CriterionOutcome::from_hypotheses(
        Criterion::Nonnegativity,
        hypotheses,
        vec![Witness::Factorization(check)],
    )
}

/// Reads a nonincreasing `λ_min` sequence as evidence about semiboundedness.
/// Nonnegative values, or decrements that shrink geometrically, support a
/// lower bound; decrements that do not shrink count against one.
pub fn semibounded_from_sequence(labels: &[usize], values: &[f64], method: &str) -> SemiboundedEvidence {
    let trace: Vec<(usize, f64)> = labels.iter().copied().zip(values.iter().copied()).collect();
    let last = values.last().copied();
    let (status, lower_bound) = match (values.len(), last) {
        (0, _) | (_, None) => (HypothesisStatus::Unknown, None),
        (_, Some(l)) if values.iter().all(|&x| x >= -1e-8) => (HypothesisStatus::Evidence, Some(l.min(0.0))),
        (n, Some(l)) if n >= 3 => {
            let d_last = values[n - 2] - values[n - 1];
            let d_prev = values[n - 3] - values[n - 2];
            if d_last <= 0.5 * d_prev {
                let r = if d_prev > 0.0 { d_last / d_prev } else { 0.0 };
                (HypothesisStatus::Evidence, Some(l - d_last * r / (1.0 - r)))
            } else {
                (HypothesisStatus::EvidenceAgainst, None)
            }
        }
        _ => (HypothesisStatus::Unknown, None),
    };
    SemiboundedEvidence {
        status,
        lower_bound,
        trace,
        method: method.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedSelfAdjoint,
    EvidenceSelfAdjoint,
    EvidenceNotSelfAdjoint,
    ConflictingEvidence,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::CertifiedSelfAdjoint => "certified: essentially self-adjoint",
            Verdict::EvidenceSelfAdjoint => "evidence: essentially self-adjoint",
            Verdict::EvidenceNotSelfAdjoint => "evidence: not essentially self-adjoint",
            Verdict::ConflictingEvidence => "conflicting evidence",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Verdict over the self-adjointness criteria.
pub fn verdict(outcomes: &[CriterionOutcome]) -> Verdict {
    let any = |s: Status| outcomes.iter().any(|o| o.status == s);
    if any(Status::Certified) {
        Verdict::CertifiedSelfAdjoint
    } else if any(Status::EvidenceFor) && any(Status::EvidenceAgainst) {
        Verdict::ConflictingEvidence
    } else if any(Status::EvidenceFor) {
        Verdict::EvidenceSelfAdjoint
    } else if any(Status::EvidenceAgainst) {
        Verdict::EvidenceNotSelfAdjoint
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub premises: Premises,
    pub completeness: CompletenessConfig,
    pub deficiency: DeficiencyConfig,
    pub series: SeriesConfig,
    /// Truncation sizes for Jacobi spectra.
    pub jacobi_sizes: Vec<usize>,
    /// Vertex plus edge budget for materialized truncations.
    pub truncation_budget: usize,
    pub lanczos_tolerance: f64,
    pub lanczos_max_iterations: usize,
    pub seed: u64,
    /// Worker threads for independent criteria; results do not depend on it.
    #[serde(skip_serializing)]
    pub threads: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            premises: Premises::default(),
            completeness: CompletenessConfig::default(),
            deficiency: DeficiencyConfig::default(),
            series: SeriesConfig::default(),
            jacobi_sizes: DEFAULT_CHECK_SIZES.to_vec(),
            truncation_budget: 200_000,
            lanczos_tolerance: 1e-10,
            lanczos_max_iterations: 10_000,
            seed: 42,
            threads: 1,
        }
    }
}

impl AnalysisOptions {
    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            lanczos: LanczosConfig {
                max_iterations: self.lanczos_max_iterations,
                tolerance: self.lanczos_tolerance,
                seed: self.seed,
                ..LanczosConfig::default()
            },
            ..SpectralConfig::default()
        }
    }
}

pub enum Subject<'a> {
    Graph(&'a WeightedGraph),
    Family(&'a LazyFamily),
    Jacobi(&'a dyn JacobiSource),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub subject: String,
    pub verdict: Verdict,
    pub semiboundedness: SemiboundedEvidence,
    pub nonnegativity: Option<CriterionOutcome>,
    pub norm_bounds: Option<NormBounds>,
    pub outcomes: Vec<CriterionOutcome>,
    pub premises: Premises,
    pub caveats: Vec<String>,
}

type Task<'a> = Box<dyn FnOnce() -> Result<CriterionOutcome> + Send + 'a>;

/// Runs tasks on up to `threads` workers; results keep the task order.
fn run_tasks(tasks: Vec<Task<'_>>, threads: usize) -> Result<Vec<CriterionOutcome>> {
    let threads = threads.clamp(1, tasks.len().max(1));
    if threads == 1 {
        return tasks.into_iter().map(|t| t()).collect();
    }
    let n = tasks.len();
    let queue: Vec<Mutex<Option<Task<'_>>>> = tasks.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let results: Vec<Mutex<Option<Result<CriterionOutcome>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= n {
                    break;
                }
                let task = queue[k]
                    .lock()
                    .expect("task lock")
                    .take()
                    .expect("task taken once");
                *results[k].lock().expect("result lock") = Some(task());
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.into_inner().expect("result lock").expect("task ran"))
        .collect()
}

/// An intrinsic weight for any graph: `1/√max(Deg u, Deg v)`.
pub fn degree_weight(g: &WeightedGraph) -> Result<EdgeWeightFunction> {
    EdgeWeightFunction::from_fn(g, |_, u, v| {
        let du = g.weighted_degree(u).expect("edge endpoint");
        let dv = g.weighted_degree(v).expect("edge endpoint");
        1.0 / du.max(dv).sqrt()
    })
}

/// Runs every applicable criterion and aggregates the outcomes.
pub fn analyze(subject: Subject<'_>, options: &AnalysisOptions) -> Result<AnalysisReport> {
    match subject {
        Subject::Graph(g) => analyze_graph(g, options),
        Subject::Family(f) => analyze_family(f, options),
        Subject::Jacobi(j) => analyze_jacobi(j, None, options),
    }
}

fn analyze_graph(g: &WeightedGraph, options: &AnalysisOptions) -> Result<AnalysisReport> {
    if g.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    let spectral = options.spectral();
    let lambda = assemble_truncation(g, g.ids())?.lambda_min(&spectral.lanczos)?;
    let semibounded = SemiboundedEvidence {
        status: HypothesisStatus::Verified,
        lower_bound: Some(lambda),
        trace: vec![(g.len(), lambda)],
        method: "finite matrix".into(),
    };
    let norm_bounds = Some(operator_norm_bounds(g, &spectral.lanczos)?);
    let unit = g.has_unit_measure();
    let weight = if unit { wouk_weight(g)? } else { degree_weight(g)? }.capped();
    let completeness = completeness_evidence(g, &options.completeness);
    let scan = scan_graph_potential(g);
    let premises = options.premises;
    let metric = || MetricKind::IntrinsicPath {
        weight: &weight,
        interior: None,
    };
    let mut outcomes = vec![
        gaffney_certify(g, &completeness, metric(), &premises)?,
        carleman_friedrichs_certify(g, scan.as_ref(), true, &completeness, metric(), &premises)?,
        gpw_certify(g, &semibounded, &completeness, metric(), &premises)?,
    ];
    if unit {
        outcomes.push(wouk_certify(
            WoukSubject::Graph(g),
            &semibounded,
            &options.completeness,
            &premises,
        )?);
    }
    Ok(AnalysisReport {
        subject: format!("finite graph ({} vertices, {} edges)", g.len(), g.edges().len()),
        verdict: verdict(&outcomes),
        semiboundedness: semibounded,
        nonnegativity: None,
        norm_bounds,
        outcomes,
        premises,
        caveats: Vec::new(),
    })
}

/// Materialized truncation used for intrinsic checks on a family: the deepest
/// one within budget, with the positions of its complete inner layers.
fn family_probe(family: &LazyFamily, options: &AnalysisOptions) -> Result<(WeightedGraph, usize)> {
    let depth = family.depth_within_budget(options.truncation_budget, 4096);
    let t = family.truncate(depth)?;
    let interior = if family.max_depth() == Some(depth) {
        t.graph.len()
    } else {
        t.layer_offsets[depth]
    };
    Ok((t.graph, interior))
}

fn analyze_family(family: &LazyFamily, options: &AnalysisOptions) -> Result<AnalysisReport> {
    let premises = options.premises;
    let (probe, interior) = family_probe(family, options)?;
    let unit = probe.has_unit_measure();
    let weight_kind = if unit {
        FamilyWeight::CappedWouk
    } else {
        FamilyWeight::VertexMeasure
    };
    let completeness = match family_completeness_evidence(family, weight_kind, &options.completeness) {
        Ok(ev) => ev,
        Err(Error::MissingLayerSummary) => {
            let mut ev = completeness_evidence(&probe, &options.completeness);
            ev.status = CompletenessStatus::Inconclusive;
            ev.reason = "family carries no layer summary".into();
            ev
        }
        Err(e) => return Err(e),
    };
    let weight = if unit {
        Some(wouk_weight(&probe)?.capped())
    } else {
        None
    };
    let metric = || match &weight {
        Some(w) => MetricKind::IntrinsicPath {
            weight: w,
            interior: Some(interior),
        },
        None => MetricKind::VertexMeasure,
    };

    let scan = if family.has_potential() {
        Some(match family.summary() {
            Some(s) => scan_potential_floor(|n| s.potential_floor(n), options.completeness.depth),
            None => {
                let mut scan = scan_graph_potential(&probe).expect("potential present");
                scan.stabilized = false;
                scan
            }
        })
    } else {
        None
    };

    let mut caveats = vec![
        "evidence statuses rest on finite truncations and fitted tails; they are not proofs".to_string(),
    ];
    let (semibounded, nonnegativity, mut jacobi_outcomes) = match family.jacobi() {
        Some(j) => {
            caveats.push(format!(
                "semiboundedness and deficiency are computed for the radial Jacobi matrix ({}); \
                 the reduction of the family to it is not verified beyond finite truncations",
                j.label()
            ));
            let jr = analyze_jacobi(j.as_ref(), Some(family.name()), options)?;
            (jr.semiboundedness, jr.nonnegativity, jr.outcomes)
        }
        None => {
            let max = family
                .depth_within_budget(options.truncation_budget, 4096)
                .saturating_sub(1);
            let mut depths: Vec<usize> = (0..usize::BITS)
                .map(|k| (1usize << k) - 1)
                .take_while(|&d| d < max)
                .collect();
            depths.push(max);
            let values = family_lambda_min_sequence(family, &depths, &options.spectral())?;
            caveats.push("semiboundedness is judged from lowest eigenvalues of finite truncations".into());
            (
                semibounded_from_sequence(&depths, &values, "truncation eigenvalues"),
                None,
                Vec::new(),
            )
        }
    };

    let mut outcomes = vec![
        gaffney_certify(&probe, &completeness, metric(), &premises)?,
        carleman_friedrichs_certify(&probe, scan.as_ref(), false, &completeness, metric(), &premises)?,
        gpw_certify(&probe, &semibounded, &completeness, metric(), &premises)?,
    ];
    if premises.complete && completeness.status == CompletenessStatus::ConvergentRayFound {
        caveats.push("the completeness premise contradicts a ray of finite length".into());
    }
    if family.jacobi().is_none() && unit {
        outcomes.push(wouk_certify(
            WoukSubject::Family(family),
            &semibounded,
            &options.completeness,
            &premises,
        )?);
    }
    outcomes.append(&mut jacobi_outcomes);
    Ok(AnalysisReport {
        subject: format!("family {}", family.name()),
        verdict: verdict(&outcomes),
        semiboundedness: semibounded,
        nonnegativity,
        norm_bounds: crate::operators::family_norm_bounds(family).ok(),
        outcomes,
        premises,
        caveats,
    })
}

/// Jacobi-level criteria: nonnegativity, Wouk, deficiency and Akhiezer.
/// `within` names the family when called on its radial part, in which case
/// graph-level criteria are left to the caller.
fn analyze_jacobi(
    source: &dyn JacobiSource,
    within: Option<&str>,
    options: &AnalysisOptions,
) -> Result<AnalysisReport> {
    let premises = options.premises;
    let sizes: Vec<usize> = match source.size() {
        Some(s) => {
            let mut v: Vec<usize> = options.jacobi_sizes.iter().map(|&n| n.min(s)).collect();
            v.dedup();
            v
        }
        None => options.jacobi_sizes.clone(),
    };
    let (semibounded, nonnegativity) = if source.has_factorization() {
        let check = nonneg_factorization_check(source, &sizes)?;
        let ev = SemiboundedEvidence {
            status: if check.holds {
                HypothesisStatus::Verified
            } else {
                HypothesisStatus::EvidenceAgainst
            },
            lower_bound: check.holds.then_some(0.0),
            trace: check.lambda_min.clone(),
            method: "sum-of-squares factorization".into(),
        };
        (ev, Some(nonnegativity_outcome(check)))
    } else {
        let values = jacobi_lambda_min_sequence(source, &sizes, 1e-9)?;
        (
            semibounded_from_sequence(&sizes, &values, "truncation eigenvalues"),
            None,
        )
    };

    let mut tasks: Vec<Task<'_>> = Vec::new();
    let sb = semibounded.clone();
    tasks.push(Box::new(move || {
        wouk_certify(WoukSubject::Jacobi(source), &sb, &options.completeness, &premises)
    }));
    let runs_deficiency = source.size().is_none_or(|s| s >= 100);
    if runs_deficiency {
        tasks.push(Box::new(move || {
            deficiency_at_conjugates(source, &options.deficiency).map(deficiency_outcome)
        }));
    }
    if source.has_factorization() && source.size().is_none() {
        tasks.push(Box::new(move || {
            jacobi_akhiezer(source, &options.series).map(akhiezer_outcome)
        }));
    }
    let mut outcomes = run_tasks(tasks, options.threads)?;

    let mut caveats = Vec::new();
    if within.is_none() {
        caveats.push(
            "evidence statuses rest on finite truncations and fitted tails; they are not proofs".into(),
        );
        if let Some(s) = source.size() {
            caveats.push(format!(
                "finite Jacobi matrix with {s} rows is bounded and self-adjoint"
            ));
            outcomes.push(
                CriterionOutcome::from_hypotheses(
                    Criterion::Gpw,
                    vec![
                        semibounded_hypothesis(
                            &SemiboundedEvidence {
                                status: HypothesisStatus::Verified,
                                lower_bound: None,
                                trace: Vec::new(),
                                method: "finite matrix".into(),
                            },
                            &premises,
                        ),
                        Hypothesis::new(
                            "complete intrinsic path metric",
                            HypothesisStatus::Verified,
                            "finite graph",
                        ),
                    ],
                    Vec::new(),
                )
                .with_note("finite matrix"),
            );
        }
    }
    Ok(AnalysisReport {
        subject: within.map_or_else(|| source.label(), |f| format!("family {f}")),
        verdict: verdict(&outcomes),
        semiboundedness: semibounded,
        nonnegativity,
        norm_bounds: None,
        outcomes,
        premises,
        caveats,
    })
}
