//! Weighted graphs, intrinsic metrics and self-adjointness criteria for
//! discrete Schrödinger operators.
//!
//! The crate covers finite weighted graphs `(V, m; b)` with a potential `α`,
//! infinite graphs explored through finite truncations ([`LazyFamily`]),
//! metric-graph models with edgewise constant weights, and Jacobi matrices.
//! Results about infinite objects are reported as evidence unless every
//! hypothesis is verified or supplied as a premise.

pub mod bridge;
pub mod eigen;
pub mod error;
pub mod families;
pub mod family;
pub mod graph;
pub mod metrics;
pub mod operators;
pub mod selfadjoint;
pub mod series;

pub use error::{Error, Result};
pub use family::{FamilyWeight, LazyFamily, Truncation};
pub use graph::{MetricEdge, MetricGraphModel, VertexId, WeightedGraph};
pub use metrics::{CompletenessConfig, CompletenessEvidence, CompletenessStatus, EdgeWeightFunction};
pub use selfadjoint::{analyze, AnalysisOptions, AnalysisReport, JacobiData, JacobiSource, Subject, Verdict};
