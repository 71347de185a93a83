use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nalgebra::Vector3;
use serde::Deserialize;
use serde_json::{json, Value};
use twinsim_core::orchestrator::{run_pipeline, AgentTrace, OrchestratorError, PendingDiff};
use twinsim_core::scene::{default_camera, render_scene, RenderOptions, SceneDocument, SceneError, SceneGraph};
use twinsim_core::splat::{CameraSpec, PinholeCamera};

use crate::edit::EditRequest;
use crate::state::{AppState, SessionRecord};

pub const REVISION_HEADER: &str = "x-scene-revision";
const DEFAULT_WIDTH: u32 = 640;
const DEFAULT_HEIGHT: u32 = 360;
const MAX_SIDE: u32 = 4096;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/scene", get(scene))
        .route("/sessions/{id}/render", get(render))
        .route("/sessions/{id}/prompt", post(prompt))
        .route("/sessions/{id}/accept", post(accept))
        .route("/sessions/{id}/reject", post(reject))
        .route("/sessions/{id}/edit", post(edit))
        .with_state(state)
}

struct ApiError {
    status: StatusCode,
    message: String,
    revision: Option<u64>,
    trace: Option<Box<AgentTrace>>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            revision: None,
            trace: None,
        }
    }

    fn at(mut self, revision: u64) -> Self {
        self.revision = Some(revision);
        self
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no session \"{id}\""))
    }
}

impl From<SceneError> for ApiError {
    fn from(e: SceneError) -> Self {
        let status = match e {
            SceneError::Conflict(_) => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.to_string())
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        let status = match &e {
            OrchestratorError::Backend { .. } | OrchestratorError::Parse { .. } => StatusCode::BAD_GATEWAY,
            OrchestratorError::PendingExists | OrchestratorError::NoPending | OrchestratorError::NothingToUndo => {
                StatusCode::CONFLICT
            }
            OrchestratorError::Scene(SceneError::Conflict(_)) => StatusCode::CONFLICT,
            OrchestratorError::Suite(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let trace = e.trace().cloned().map(Box::new);
        Self {
            status,
            message: e.to_string(),
            revision: None,
            trace,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(r) = self.revision {
            body["revision"] = json!(r);
        }
        if let Some(t) = &self.trace {
            body["violations"] = json!(t.violations);
            body["trace"] = json!(t);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn reply(status: StatusCode, revision: u64, mut body: Value) -> Response {
    body["revision"] = json!(revision);
    let mut r = (status, Json(body)).into_response();
    r.headers_mut().insert(REVISION_HEADER, HeaderValue::from(revision));
    r
}

fn session(state: &AppState, id: &str) -> Result<Arc<SessionRecord>, ApiError> {
    state.session(id).ok_or_else(|| ApiError::not_found(id))
}

fn pending_json(p: &PendingDiff) -> Value {
    json!({
        "prompt_id": p.prompt_id,
        "prompt": p.prompt,
        "summary": p.diff.summary(),
        "diff": p.diff,
        "base_revision": p.base_revision,
    })
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    #[serde(default)]
    scene: Option<SceneDocument>,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let scene = if body.iter().all(u8::is_ascii_whitespace) {
        None
    } else {
        let req: CreateRequest = serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("bad session request: {e}")))?;
        match req.scene {
            Some(doc) => Some(SceneGraph::from_document(doc, state.template().catalog_arc(), None)?),
            None => None,
        }
    };
    let rec = state.create_session(scene);
    let rev = rec.read().revision();
    Ok(reply(StatusCode::CREATED, rev, json!({ "session_id": rec.id })))
}

async fn scene(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let rec = session(&state, &id)?;
    let ctx = rec.read();
    Ok(reply(
        StatusCode::OK,
        ctx.revision(),
        json!({
            "session_id": id,
            "scene": ctx.scene().to_value(),
            "pending": ctx.pending().map(pending_json),
            "undo_depth": ctx.undo_depth(),
        }),
    ))
}

#[derive(Deserialize)]
struct PromptRequest {
    text: String,
}

async fn prompt(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<PromptRequest>, JsonRejection>,
) -> ApiResult {
    let rec = session(&state, &id)?;
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()))?;
    if req.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "prompt is empty").at(rec.read().revision()));
    }
    let Some(_slot) = rec.try_begin_prompt() else {
        return Err(ApiError::new(StatusCode::CONFLICT, "a prompt is already running in this session").at(rec.read().revision()));
    };
    // Work on a snapshot so renders and reads proceed while the agents run.
    let snapshot = {
        let ctx = rec.read();
        if ctx.pending().is_some() {
            return Err(ApiError::from(OrchestratorError::PendingExists).at(ctx.revision()));
        }
        ctx.clone()
    };
    let base = snapshot.revision();
    let backend = state.backend_arc();
    let cfg = state.pipeline();
    let text = req.text.clone();
    let result = tokio::task::spawn_blocking(move || run_pipeline(&text, &snapshot, backend.as_ref(), &cfg))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("pipeline task failed: {e}")))?;
    let mut ctx = rec.write();
    let (diff, trace) = result.map_err(|e| ApiError::from(e).at(ctx.revision()))?;
    if ctx.revision() != base {
        let mut err = ApiError::new(StatusCode::CONFLICT, "scene changed while the prompt was running").at(ctx.revision());
        err.trace = Some(Box::new(trace));
        return Err(err);
    }
    let pending = pending_json(ctx.stage(&req.text, diff).map_err(|e| ApiError::from(e).at(base))?);
    Ok(reply(StatusCode::OK, ctx.revision(), json!({ "pending": pending, "trace": trace })))
}

async fn accept(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let rec = session(&state, &id)?;
    let mut ctx = rec.write();
    let diff = ctx.accept().map_err(|e| ApiError::from(e).at(ctx.revision()))?;
    Ok(reply(
        StatusCode::OK,
        ctx.revision(),
        json!({ "applied": diff, "summary": diff.summary() }),
    ))
}

async fn reject(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let rec = session(&state, &id)?;
    let mut ctx = rec.write();
    let diff = ctx.reject().map_err(|e| ApiError::from(e).at(ctx.revision()))?;
    Ok(reply(
        StatusCode::OK,
        ctx.revision(),
        json!({ "discarded": diff, "summary": diff.summary() }),
    ))
}

async fn edit(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<EditRequest>, JsonRejection>,
) -> ApiResult {
    let rec = session(&state, &id)?;
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()))?;
    let mut ctx = rec.write();
    let rev = ctx.revision();
    let diff = match req.to_diff(ctx.scene()).map_err(|e| ApiError::from(e).at(rev))? {
        Some(d) => {
            ctx.apply_direct(d.clone()).map_err(|e| ApiError::from(e).at(rev))?;
            d
        }
        None => ctx.undo().map_err(|e| ApiError::from(e).at(rev))?.inverse(),
    };
    Ok(reply(
        StatusCode::OK,
        ctx.revision(),
        json!({ "diff": diff, "summary": diff.summary() }),
    ))
}

/// Camera for `GET /render`. Either `cam` (a JSON camera spec), or
/// `position` + `orientation` (camera-to-world, w,x,y,z), or `eye` +
/// `target` (+ `up`), each as comma-separated numbers. With none of these
/// the scene-fitted orbit camera is used. `fx`/`fy` default to 0.9·width.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RenderQuery {
    pub cam: Option<String>,
    pub position: Option<String>,
    pub orientation: Option<String>,
    pub eye: Option<String>,
    pub target: Option<String>,
    pub up: Option<String>,
    pub fx: Option<f64>,
    pub fy: Option<f64>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    /// Scene time in seconds (behaviors, particles).
    pub time: Option<f64>,
}

fn numbers<const N: usize>(name: &str, s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("{name}: expected {N} comma-separated numbers"))?;
    v.try_into().map_err(|_| format!("{name}: expected {N} comma-separated numbers"))
}

impl RenderQuery {
    pub fn camera(&self, scene: &SceneGraph) -> Result<PinholeCamera, String> {
        if let Some(c) = &self.cam {
            let spec: CameraSpec = serde_json::from_str(c).map_err(|e| format!("cam: {e}"))?;
            check_size(spec.intrinsics.width, spec.intrinsics.height)?;
            return spec.to_camera().map_err(|e| e.to_string());
        }
        let (w, h) = (self.width.unwrap_or(DEFAULT_WIDTH), self.height.unwrap_or(DEFAULT_HEIGHT));
        check_size(w, h)?;
        let fx = self.fx.unwrap_or(0.9 * w as f64);
        let fy = self.fy.unwrap_or(fx);
        let pose = match (&self.position, &self.orientation, &self.eye, &self.target) {
            (Some(p), Some(q), None, None) => {
                let p = numbers::<3>("position", p)?;
                let [qw, qx, qy, qz] = numbers::<4>("orientation", q)?;
                let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(qw, qx, qy, qz));
                if !q.coords.iter().all(|v| v.is_finite()) {
                    return Err("orientation: quaternion must be nonzero".into());
                }
                Some(twinsim_core::RigidTransform::from_quaternion(q, Vector3::from(p)).inverse())
            }
            (None, None, Some(e), Some(t)) => {
                let up = self.up.as_deref().map(|u| numbers::<3>("up", u)).transpose()?.unwrap_or([0.0, 0.0, 1.0]);
                Some(
                    PinholeCamera::look_at_pose(
                        Vector3::from(numbers::<3>("eye", e)?),
                        Vector3::from(numbers::<3>("target", t)?),
                        Vector3::from(up),
                    )
                    .map_err(|e| e.to_string())?,
                )
            }
            (None, None, None, None) => None,
            _ => return Err("give position+orientation or eye+target".into()),
        };
        match pose {
            Some(p) => PinholeCamera::centered(fx, fy, w, h, p).map_err(|e| e.to_string()),
            None => {
                let mut cam = default_camera(scene, w, h).map_err(|e| e.to_string())?;
                if self.fx.is_some() || self.fy.is_some() {
                    cam.fx = fx;
                    cam.fy = fy;
                }
                Ok(cam)
            }
        }
    }
}

fn check_size(w: u32, h: u32) -> Result<(), String> {
    if w == 0 || h == 0 || w > MAX_SIDE || h > MAX_SIDE {
        return Err(format!("image size {w}x{h} outside 1..={MAX_SIDE}"));
    }
    Ok(())
}

async fn render(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<RenderQuery>, QueryRejection>,
) -> ApiResult {
    let rec = session(&state, &id)?;
    // Snapshot under the read lock: every frame is one accepted revision.
    let (scene, rev) = {
        let ctx = rec.read();
        (ctx.scene().clone(), ctx.revision())
    };
    let Query(q) = query.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()).at(rev))?;
    let cam = q
        .camera(&scene)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e).at(rev))?;
    let opts = RenderOptions {
        time: q.time.unwrap_or(0.0),
        ..RenderOptions::default()
    };
    let store = state.store();
    let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, String> {
        let img = render_scene(&scene, &store, &cam, &opts).map_err(|e| e.to_string())?;
        img.encode_png().map_err(|e| e.to_string())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e).at(rev))?;
    let mut r = (StatusCode::OK, [(header::CONTENT_TYPE, "image/png")], png).into_response();
    r.headers_mut().insert(REVISION_HEADER, HeaderValue::from(rev));
    Ok(r)
}
