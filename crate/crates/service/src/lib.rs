//! HTTP facade over the engine: what-if evaluation, schedule search and
//! read-only browsing of sweep stores.
//!
//! All request and response bodies are the types in `repeater_core::api`.
//! Every handler is a pure function of its request and the stores loaded at
//! startup, so concurrent requests never interact.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tower_http::services::ServeDir;

use repeater_core::analysis::{plob_bound, ultimate_bound};
use repeater_core::api::*;
use repeater_core::export::{group_curves, plateau_rows};
use repeater_core::optimizer::{search_schedules, SearchConfig};
use repeater_core::protocol::ProtocolError;
use repeater_core::store::{ModelConstants, ResultsStore, StoreError};
use repeater_core::sweep::{SweepGrid, SweepRecord};
use repeater_core::{ChainParams, PolicyKind, RunReport};

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>, field: Option<String>) -> Self {
        Self {
            status,
            message: message.into(),
            field,
        }
    }

    fn bad_request(message: impl Into<String>, field: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message, Some(field.into()))
    }

    fn unprocessable(message: impl Into<String>, field: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message, Some(field.into()))
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message, None)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message, None)
    }

    /// Maps an engine error onto the request field it came from.
    fn from_protocol(err: ProtocolError) -> Self {
        let msg = err.to_string();
        match err {
            ProtocolError::BudgetExceeded { .. } => Self::unprocessable(msg, "policy.schedule"),
            ProtocolError::ScheduleLength { .. } => Self::bad_request(msg, "policy.schedule"),
            ProtocolError::InvalidThreshold(_) => Self::bad_request(msg, "policy.threshold"),
            ProtocolError::Params(p) => Self::bad_request(p.to_string(), format!("params.{}", p.field)),
            ProtocolError::State(_) => Self::bad_request(msg, "params"),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                status: self.status.as_u16(),
                message: self.message,
                field: self.field,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Deserializes a JSON body, reporting the path of the first bad field.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "body".to_string() } else { path };
        ApiError::bad_request(e.inner().to_string(), field)
    })?;
    de.end()
        .map_err(|e| ApiError::bad_request(e.to_string(), "body"))?;
    Ok(value)
}

fn check_cost(params: &ChainParams) -> Result<(), ApiError> {
    if params.segments > MAX_SEGMENTS {
        return Err(ApiError::unprocessable(
            format!(
                "segments = {} exceeds the interactive limit of {MAX_SEGMENTS}; run a sweep instead",
                params.segments
            ),
            "params.segments",
        ));
    }
    Ok(())
}

struct LoadedSweep {
    info: SweepInfo,
    records: Vec<SweepRecord>,
}

/// Read-only state shared by all requests.
pub struct AppState {
    sweeps: Vec<LoadedSweep>,
}

impl AppState {
    pub fn empty() -> Self {
        Self { sweeps: Vec::new() }
    }

    /// Loads every store fully into memory. Store ids are directory names
    /// and must be unique.
    pub fn load(dirs: &[PathBuf]) -> Result<Self, StoreError> {
        let mut sweeps = Vec::new();
        let mut ids = BTreeSet::new();
        for dir in dirs {
            let store = ResultsStore::open(dir)?;
            let id = store.id();
            if !ids.insert(id.clone()) {
                return Err(StoreError::Io {
                    path: dir.clone(),
                    source: std::io::Error::new(
                        std::io::ErrorKind::AlreadyExists,
                        format!("duplicate store id {id:?}"),
                    ),
                });
            }
            let records = store.records()?;
            let manifest = store.manifest().clone();
            let info = SweepInfo {
                id,
                points_total: manifest.spec.grid.points().len(),
                points_done: store.point_keys()?.len(),
                policies: manifest.spec.policy_labels(),
                manifest,
            };
            sweeps.push(LoadedSweep { info, records });
        }
        Ok(Self { sweeps })
    }
}

async fn params_handler() -> Json<ParamsResponse> {
    Json(ParamsResponse {
        grid: SweepGrid::default(),
        search: SearchConfig::default(),
        constants: ModelConstants::default(),
        limits: Limits::default(),
    })
}

fn evaluate(req: EvaluateRequest) -> Result<EvaluateResponse, ApiError> {
    check_cost(&req.params)?;
    let distances = match &req.distances_km {
        Some(d) if d.len() > MAX_DISTANCES => {
            return Err(ApiError::unprocessable(
                format!("{} distances exceed the limit of {MAX_DISTANCES}", d.len()),
                "distances_km",
            ))
        }
        Some(d) if d.is_empty() => {
            return Err(ApiError::bad_request("must not be empty", "distances_km"));
        }
        Some(d) => d.iter().map(|km| km * 1e3).collect(),
        None => vec![req.params.total_distance_m],
    };
    let mut results = Vec::with_capacity(distances.len());
    for (i, meters) in distances.into_iter().enumerate() {
        let params = ChainParams {
            total_distance_m: meters,
            ..req.params
        };
        let report = RunReport::evaluate(&params, &req.policy).map_err(|e| {
            let mut err = ApiError::from_protocol(e);
            if req.distances_km.is_some() && err.field.as_deref() == Some("params.total_distance_m") {
                err.field = Some(format!("distances_km[{i}]"));
            }
            err
        })?;
        results.push(report);
    }
    Ok(EvaluateResponse { results })
}

fn optimize(req: OptimizeRequest) -> Result<OptimizeResponse, ApiError> {
    check_cost(&req.params)?;
    if req.search.samples > MAX_SAMPLES {
        return Err(ApiError::unprocessable(
            format!(
                "samples = {} exceeds the interactive limit of {MAX_SAMPLES}",
                req.search.samples
            ),
            "search.samples",
        ));
    }
    let search = search_schedules(&req.params, &req.search).map_err(ApiError::from_protocol)?;
    let policy = PolicyKind::Manual {
        schedule: search.best_schedule.clone(),
    };
    let best = RunReport::evaluate(&req.params, &policy).map_err(ApiError::from_protocol)?;
    Ok(OptimizeResponse { search, best })
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map(Json)
}

async fn evaluate_handler(body: Bytes) -> ApiResult<EvaluateResponse> {
    let req: EvaluateRequest = parse_body(&body)?;
    blocking(move || evaluate(req)).await
}

async fn optimize_handler(body: Bytes) -> ApiResult<OptimizeResponse> {
    let req: OptimizeRequest = parse_body(&body)?;
    blocking(move || optimize(req)).await
}

fn query_number<T: std::str::FromStr>(
    q: &HashMap<String, String>,
    name: &str,
) -> Result<Option<T>, ApiError> {
    match q.get(name) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| ApiError::bad_request(format!("not a number: {raw:?}"), name)),
    }
}

async fn bounds_handler(Query(q): Query<HashMap<String, String>>) -> ApiResult<BoundsResponse> {
    let eta: f64 = query_number(&q, "eta")?
        .ok_or_else(|| ApiError::bad_request("missing query parameter", "eta"))?;
    let repeaters: u32 = query_number(&q, "n")?.unwrap_or(0);
    let finite = |v: f64| v.is_finite().then_some(v);
    let plob = plob_bound(eta).map_err(|e| ApiError::bad_request(e.to_string(), "eta"))?;
    let ultimate =
        ultimate_bound(eta, repeaters).map_err(|e| ApiError::bad_request(e.to_string(), "eta"))?;
    Ok(Json(BoundsResponse {
        eta,
        repeaters,
        plob: finite(plob),
        ultimate: finite(ultimate),
    }))
}

async fn sweeps_handler(State(state): State<Arc<AppState>>) -> Json<SweepList> {
    Json(SweepList {
        sweeps: state.sweeps.iter().map(|s| s.info.clone()).collect(),
    })
}

async fn curves_handler(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<CurvesResponse> {
    let sweep = state
        .sweeps
        .iter()
        .find(|s| s.info.id == id)
        .ok_or_else(|| ApiError::not_found(format!("unknown sweep id {id:?}")))?;
    let segments: Option<u32> = query_number(&q, "segments")?;
    let multiplexing: Option<u32> = query_number(&q, "multiplexing")?;
    let coupling: Option<f64> = query_number(&q, "coupling_eff")?;
    let gate_error: Option<f64> = query_number(&q, "gate_error")?;
    let policy = q.get("policy");

    let keep = |r: &&SweepRecord| {
        segments.is_none_or(|v| r.params.segments == v)
            && multiplexing.is_none_or(|v| r.params.multiplexing == v)
            && coupling.is_none_or(|v| r.params.coupling_eff == v)
            && gate_error.is_none_or(|v| r.params.noise.gate_error == v)
    };
    let selected: Vec<SweepRecord> = sweep.records.iter().filter(keep).cloned().collect();
    let plateau = plateau_rows(&selected).map_err(|e| ApiError::internal(e.to_string()))?;
    let mut curves = Vec::new();
    for pc in group_curves(&selected) {
        for (label, points) in pc.curves {
            if policy.is_some_and(|p| *p != label) {
                continue;
            }
            curves.push(Curve {
                point: pc.point,
                policy: label,
                points,
            });
        }
    }
    Ok(Json(CurvesResponse { id, curves, plateau }))
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

/// Builds the application. When `static_dir` exists it is served for
/// every path outside `/api`.
pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/params", get(params_handler))
        .route("/api/evaluate", post(evaluate_handler))
        .route("/api/optimize", post(optimize_handler))
        .route("/api/bounds", get(bounds_handler))
        .route("/api/sweeps", get(sweeps_handler))
        .route("/api/sweeps/{id}/curves", get(curves_handler))
        .route("/api/{*rest}", get(api_not_found).post(api_not_found))
        .with_state(state);
    match static_dir {
        Some(dir) if dir.is_dir() => api.fallback_service(ServeDir::new(dir)),
        _ => api,
    }
}

/// Serves until interrupted with Ctrl-C.
pub async fn serve(addr: SocketAddr, app: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
