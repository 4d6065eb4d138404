//! Request and response bodies of the HTTP facade.
//!
//! They live here, next to the engine, so the command line and the service
//! serialize the very same types and the published schemas cover both.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::analysis::CurvePoint;
use crate::export::PlateauRow;
use crate::optimizer::{SearchConfig, SearchResult};
use crate::params::ChainParams;
use crate::protocol::PolicyKind;
use crate::report::RunReport;
use crate::store::{Manifest, ModelConstants};
use crate::sweep::{GridPoint, SweepGrid};

/// Largest chain accepted by interactive requests.
pub const MAX_SEGMENTS: u32 = 4096;
/// Largest sample count accepted by interactive searches.
pub const MAX_SAMPLES: usize = 10_000;
/// Largest distance list accepted by a single evaluate request.
pub const MAX_DISTANCES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub params: ChainParams,
    pub policy: PolicyKind,
    /// Distances in km. When absent, `params.total_distance_m` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances_km: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct EvaluateResponse {
    pub results: Vec<RunReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRequest {
    pub params: ChainParams,
    #[serde(default)]
    pub search: SearchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct OptimizeResponse {
    pub search: SearchResult,
    /// Full report of the best schedule.
    pub best: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Limits {
    pub max_segments: u32,
    pub max_samples: usize,
    pub max_distances: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_segments: MAX_SEGMENTS,
            max_samples: MAX_SAMPLES,
            max_distances: MAX_DISTANCES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ParamsResponse {
    pub grid: SweepGrid,
    pub search: SearchConfig,
    pub constants: ModelConstants,
    pub limits: Limits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BoundsResponse {
    pub eta: f64,
    pub repeaters: u32,
    /// `None` when unbounded (`eta = 1`).
    pub plob: Option<f64>,
    pub ultimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SweepInfo {
    pub id: String,
    pub points_total: usize,
    pub points_done: usize,
    pub policies: Vec<String>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SweepList {
    pub sweeps: Vec<SweepInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Curve {
    pub point: GridPoint,
    pub policy: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CurvesResponse {
    pub id: String,
    pub curves: Vec<Curve>,
    /// Plateau comparison of the search against each local baseline,
    /// including the omission status used for plotting.
    pub plateau: Vec<PlateauRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ErrorDetail {
    pub status: u16,
    pub message: String,
    /// Path of the offending request field, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}
