//! HTTP/JSON API over one loaded scene.
//!
//! | route | purpose |
//! |---|---|
//! | `GET /api/scene?leaf=` | downsampled scene as `[[x, y, z], ...]` |
//! | `GET /api/landmarks` | saved landmark summaries |
//! | `POST /api/landmarks` | `{name, box}`: crop, validate, persist |
//! | `GET /api/landmarks/{name}/preview?box=` | crop count and points for a box |
//! | `POST /api/search` | `{landmark_name, params, seed}`: run a search |
//! | `GET /api/search/{id}` | a previous search response |
//!
//! Errors are `{"error": text}` with 400 for invalid input, 404 for unknown
//! names and 500 otherwise.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use anyhow::Context;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use landmark_core::io::{self, BoxSpec};
use landmark_core::search::{find_in_prepared, PreparedScene};
use landmark_core::spatial::voxel_downsample;
use landmark_core::{CaptureMetadata, Error, Landmark, Match, PointCloud, SearchParams};
use serde::{Deserialize, Serialize};

/// Search responses kept for `GET /api/search/{id}`.
const KEPT_RESULTS: usize = 64;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownReference(_) => StatusCode::NOT_FOUND,
            Error::EmptyCrop
            | Error::Validation { .. }
            | Error::InvalidParam { .. }
            | Error::InvalidLandmark(_)
            | Error::NonPositiveExtent
            | Error::NonPositiveLeaf
            | Error::InvertedRegion
            | Error::InvalidSampling(_)
            | Error::Parse { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSummary {
    pub name: String,
    pub point_count: usize,
    #[serde(rename = "box")]
    pub bbox: BoxSpec,
    pub capture_metadata: CaptureMetadata,
}

impl From<&Landmark> for LandmarkSummary {
    fn from(l: &Landmark) -> Self {
        Self {
            name: l.name().to_string(),
            point_count: l.cloud().len(),
            bbox: BoxSpec::from(l.bbox()),
            capture_metadata: l.metadata().clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub count: usize,
    pub points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub request_id: u64,
    pub landmark: String,
    pub seed: u64,
    pub matches: Vec<Match>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateLandmark {
    name: String,
    #[serde(rename = "box")]
    bbox: BoxSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchRequest {
    landmark_name: String,
    #[serde(default)]
    params: Option<serde_json::Value>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct SceneQuery {
    leaf: Option<f64>,
}

#[derive(Deserialize)]
struct PreviewQuery {
    #[serde(rename = "box")]
    bbox: Option<String>,
}

type LandmarkMap = BTreeMap<String, Arc<Landmark>>;

/// Shared server state. The scene never changes after startup; the landmark
/// map is swapped as a whole so readers work on a snapshot.
pub struct AppState {
    scene: Arc<PointCloud>,
    scene_id: String,
    /// Scene prepared with default parameters, reused by searches that keep
    /// the default workspace and leaf. `None` when the crop is empty.
    prepared: Option<Arc<PreparedScene>>,
    landmark_dir: PathBuf,
    landmarks: RwLock<Arc<LandmarkMap>>,
    writes: Mutex<()>,
    results: Mutex<BTreeMap<u64, SearchResponse>>,
    next_request: AtomicU64,
}

impl AppState {
    /// Loads every `*.json` landmark already in `landmark_dir`, creating the
    /// directory when missing.
    pub fn new(scene: PointCloud, scene_id: impl Into<String>, landmark_dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(landmark_dir).with_context(|| format!("creating {}", landmark_dir.display()))?;
        let mut paths: Vec<PathBuf> = fs::read_dir(landmark_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut landmarks = LandmarkMap::new();
        for path in paths {
            let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let landmark = io::load_landmark(&bytes).with_context(|| format!("parsing {}", path.display()))?;
            if landmarks.contains_key(landmark.name()) {
                anyhow::bail!("duplicate landmark name `{}` in {}", landmark.name(), landmark_dir.display());
            }
            landmarks.insert(landmark.name().to_string(), Arc::new(landmark));
        }
        let prepared = match PreparedScene::new(&scene, &SearchParams::default()) {
            Ok(p) => Some(Arc::new(p)),
            Err(Error::SceneEmptyAfterCrop) => None,
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            scene: Arc::new(scene),
            scene_id: scene_id.into(),
            prepared,
            landmark_dir: landmark_dir.to_path_buf(),
            landmarks: RwLock::new(Arc::new(landmarks)),
            writes: Mutex::new(()),
            results: Mutex::new(BTreeMap::new()),
            next_request: AtomicU64::new(1),
        })
    }

    fn snapshot(&self) -> Arc<LandmarkMap> {
        self.landmarks.read().expect("landmark lock").clone()
    }

    fn landmark(&self, name: &str) -> ApiResult<Arc<Landmark>> {
        self.snapshot()
            .get(name)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown landmark `{name}`")))
    }

    pub fn scene(&self) -> &PointCloud {
        &self.scene
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/scene", get(get_scene))
        .route("/api/landmarks", get(list_landmarks).post(create_landmark))
        .route("/api/landmarks/{name}/preview", get(preview))
        .route("/api/search", axum::routing::post(search))
        .route("/api/search/{id}", get(get_search))
        .with_state(state)
}

async fn get_scene(
    State(state): State<Arc<AppState>>,
    query: Result<Query<SceneQuery>, QueryRejection>,
) -> ApiResult<Json<Vec<[f64; 3]>>> {
    let Query(query) = query?;
    let leaf = query.leaf.unwrap_or(SearchParams::default().voxel_leaf);
    if !(leaf > 0.0 && leaf.is_finite()) {
        return Err(ApiError::bad_request("leaf must be a positive number"));
    }
    let cloud = tokio::task::spawn_blocking(move || voxel_downsample(&state.scene, leaf))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(cloud.iter().map(|p| [p.x, p.y, p.z]).collect()))
}

async fn list_landmarks(State(state): State<Arc<AppState>>) -> Json<Vec<LandmarkSummary>> {
    Json(state.snapshot().values().map(|l| LandmarkSummary::from(l.as_ref())).collect())
}

fn validate_name(name: &str) -> ApiResult<()> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ApiError::bad_request(
            "name must be 1 to 128 characters from A-Z, a-z, 0-9, '_', '-', '.' and must not start with '.'",
        ))
    }
}

async fn create_landmark(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateLandmark>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<LandmarkSummary>)> {
    let Json(body) = body?;
    validate_name(&body.name)?;
    let bbox = body.bbox.to_box()?;
    let metadata = CaptureMetadata {
        scene_id: state.scene_id.clone(),
        created_at: crate::commands::now_iso8601(),
    };
    let landmark = Landmark::capture(body.name.clone(), &state.scene, bbox, metadata)?;

    let _guard = state.writes.lock().expect("write lock");
    let current = state.snapshot();
    if current.contains_key(&body.name) {
        return Err(ApiError::bad_request(format!("landmark `{}` already exists", body.name)));
    }
    let path = state.landmark_dir.join(format!("{}.json", body.name));
    let tmp = state.landmark_dir.join(format!(".{}.json.tmp", body.name));
    fs::write(&tmp, io::save_landmark(&landmark))
        .and_then(|_| fs::rename(&tmp, &path))
        .map_err(|e| ApiError::internal(format!("saving {}: {e}", path.display())))?;
    let summary = LandmarkSummary::from(&landmark);
    let mut next = (*current).clone();
    next.insert(body.name, Arc::new(landmark));
    *state.landmarks.write().expect("landmark lock") = Arc::new(next);
    Ok((StatusCode::CREATED, Json(summary)))
}

/// Crops the scene with `box` (same syntax as the CLI `--box`), or with the
/// saved landmark's box when `box` is absent.
async fn preview(
    State(state): State<Arc<AppState>>,
    UrlPath(name): UrlPath<String>,
    query: Result<Query<PreviewQuery>, QueryRejection>,
) -> ApiResult<Json<Preview>> {
    let Query(query) = query?;
    let bbox = match query.bbox {
        Some(text) => crate::parse_box(&text).map_err(ApiError::bad_request)?.to_box()?,
        None => *state.landmark(&name)?.bbox(),
    };
    let cropped = landmark_core::geometry::crop_to_box(&state.scene, &bbox);
    Ok(Json(Preview {
        count: cropped.len(),
        points: cropped.iter().map(|p| [p.x, p.y, p.z]).collect(),
    }))
}

async fn search(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> ApiResult<Json<SearchResponse>> {
    let Json(body) = body?;
    let landmark = state.landmark(&body.landmark_name)?;
    let overrides = body.params.unwrap_or_else(|| serde_json::json!({}));
    let mut params = io::params_from_value(&overrides)?;
    if let Some(seed) = body.seed {
        params.seed = seed;
    }

    let worker = state.clone();
    let matches = tokio::task::spawn_blocking(move || run_search(&worker, &landmark, &params))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;

    let response = SearchResponse {
        request_id: state.next_request.fetch_add(1, Ordering::Relaxed),
        landmark: body.landmark_name,
        seed: params.seed,
        matches,
    };
    let mut results = state.results.lock().expect("results lock");
    results.insert(response.request_id, response.clone());
    while results.len() > KEPT_RESULTS {
        results.pop_first();
    }
    Ok(Json(response))
}

fn run_search(state: &AppState, landmark: &Landmark, params: &SearchParams) -> Result<Vec<Match>, Error> {
    params.validate()?;
    let defaults = SearchParams::default();
    if params.workspace == defaults.workspace && params.voxel_leaf == defaults.voxel_leaf {
        return match &state.prepared {
            Some(p) => find_in_prepared(p, landmark, params),
            None => Ok(Vec::new()),
        };
    }
    match PreparedScene::new(&state.scene, params) {
        Ok(p) => find_in_prepared(&p, landmark, params),
        Err(Error::SceneEmptyAfterCrop) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

async fn get_search(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SearchResponse>> {
    let id: u64 = id.parse().map_err(|_| ApiError::bad_request("request id must be an integer"))?;
    state
        .results
        .lock()
        .expect("results lock")
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no search result with id {id}")))
}

pub fn serve(scene: &Path, host: &str, port: u16, landmark_dir: &Path) -> anyhow::Result<()> {
    let cloud = crate::commands::load_cloud(scene)?;
    let state = Arc::new(AppState::new(cloud, crate::commands::scene_id(scene), landmark_dir)?);
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("invalid listen address {host}:{port}"))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!(
            "serving {} ({} points) on http://{}",
            scene.display(),
            state.scene().len(),
            listener.local_addr()?
        );
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}
