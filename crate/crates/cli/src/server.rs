//! HTTP and websocket front end for [`SessionManager`].
//!
//! | Method | Path | Body | Reply |
//! |---|---|---|---|
//! | `POST` | `/sessions` | robot description | `201`, `StateMessage` |
//! | `GET` | `/sessions` | | session ids |
//! | `DELETE` | `/sessions/{id}` | | `204` |
//! | `GET` | `/sessions/{id}/state` | | `StateMessage` |
//! | `GET`, `PUT` | `/sessions/{id}/model` | robot description | document, or `StateMessage` |
//! | `PUT` | `/sessions/{id}/base_pose` | `{rotation, translation}` | `StateMessage` |
//! | `POST` | `/sessions/{id}/register` | multipart, see [`register`] | `RegistrationResult` |
//! | `PUT` | `/sessions/{id}/sensitivity` | `{sensitivity}` | guidance config |
//! | `GET`, `PUT` | `/sessions/{id}/guidance` | guidance config | guidance config |
//! | `POST` | `/sessions/{id}/samples` | `HandSample` | `StateMessage` |
//! | `GET` | `/sessions/{id}/stream` | websocket | see [`stream`] |
//!
//! Hand samples are `{t, x, y, z, tracked}` in the world frame; add
//! `?frame=base` to send base-frame positions. Errors are `{error, stage?}`.

use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use handguide_core::cloud::io::parse_cloud;
use handguide_core::guidance::{GuidanceConfig, GuidanceError, HandSample};
use handguide_core::model::RigidTransform;
use handguide_core::registration::{Method, Preset, RegistrationResult};
use handguide_core::service::{Frame, ServiceError, SessionId, SessionManager, StateMessage};
use handguide_core::simcontrol::{synth_scene, SceneSpec};
use serde::{Deserialize, Serialize};

pub type AppState = Arc<SessionManager>;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl ToString) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.to_string(),
                stage: None,
            },
        }
    }
}

fn status_of(e: &ServiceError) -> StatusCode {
    match e {
        ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
        ServiceError::BasePoseUnset
        | ServiceError::StreamBusy(_)
        | ServiceError::Guidance(GuidanceError::OutOfOrder { .. }) => StatusCode::CONFLICT,
        ServiceError::Model(_) | ServiceError::EmptyScene | ServiceError::Sim(_) => StatusCode::BAD_REQUEST,
        ServiceError::Guidance(_) | ServiceError::Registration(_) => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let stage = match &e {
            ServiceError::Registration(r) => r.stage().map(str::to_string),
            _ => None,
        };
        ApiError {
            status: status_of(&e),
            body: ErrorBody {
                error: e.to_string(),
                stage,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Default, Deserialize)]
pub struct FrameQuery {
    #[serde(default)]
    pub frame: Frame,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SensitivityBody {
    pub sensitivity: f64,
}

pub fn router(manager: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", axum::routing::delete(remove))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/model", get(model).put(upload_model))
        .route("/sessions/{id}/base_pose", put(base_pose))
        .route("/sessions/{id}/register", post(register))
        .route("/sessions/{id}/sensitivity", put(sensitivity))
        .route("/sessions/{id}/guidance", get(guidance).put(set_guidance))
        .route("/sessions/{id}/samples", post(sample))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(manager)
}

async fn create(State(m): State<AppState>, body: String) -> Result<(StatusCode, Json<StateMessage>), ApiError> {
    Ok((StatusCode::CREATED, Json(m.create(&body)?)))
}

async fn list(State(m): State<AppState>) -> Json<Vec<SessionId>> {
    Json(m.ids())
}

async fn remove(State(m): State<AppState>, Path(id): Path<u64>) -> Result<StatusCode, ApiError> {
    m.remove(SessionId(id))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn state(State(m): State<AppState>, Path(id): Path<u64>) -> ApiResult<StateMessage> {
    Ok(Json(m.state(SessionId(id))?))
}

async fn model(State(m): State<AppState>, Path(id): Path<u64>) -> Result<Response, ApiError> {
    let doc = m.model_document(SessionId(id))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc).into_response())
}

async fn upload_model(State(m): State<AppState>, Path(id): Path<u64>, body: String) -> ApiResult<StateMessage> {
    Ok(Json(m.upload_model(SessionId(id), &body)?))
}

fn checked_pose(pose: RigidTransform) -> Result<RigidTransform, ApiError> {
    if pose.is_proper(1e-6) && pose.translation.iter().all(|v| v.is_finite()) {
        Ok(pose.renormalized())
    } else {
        Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "rotation must be orthonormal with determinant +1",
        ))
    }
}

async fn base_pose(
    State(m): State<AppState>,
    Path(id): Path<u64>,
    Json(pose): Json<RigidTransform>,
) -> ApiResult<StateMessage> {
    Ok(Json(m.set_base_pose(SessionId(id), checked_pose(pose)?)?))
}

/// Multipart fields: `seed_pose` (transform JSON, required), `method`
/// (`icp` or `congruent`), `preset` (`big` or `small`), and either `cloud`
/// (PLY or XYZ text) or `scene` (a scene description to synthesize with the
/// session's model).
async fn register(
    State(m): State<AppState>,
    Path(id): Path<u64>,
    mut form: Multipart,
) -> ApiResult<RegistrationResult> {
    let id = SessionId(id);
    let bad = |e: &dyn std::fmt::Display| ApiError::new(StatusCode::BAD_REQUEST, e);
    let mut seed_pose = None;
    let mut method = Method::Icp;
    let mut preset = Preset::Small;
    let mut cloud = None;
    let mut scene_spec = None;
    while let Some(field) = form.next_field().await.map_err(|e| bad(&e))? {
        let name = field.name().unwrap_or_default().to_string();
        let text = field.text().await.map_err(|e| bad(&e))?;
        let enum_value = || serde_json::Value::String(text.trim().to_string());
        match name.as_str() {
            "seed_pose" => seed_pose = Some(serde_json::from_str::<RigidTransform>(&text).map_err(|e| bad(&e))?),
            "method" => method = serde_json::from_value(enum_value()).map_err(|e| bad(&e))?,
            "preset" => preset = serde_json::from_value(enum_value()).map_err(|e| bad(&e))?,
            "cloud" => cloud = Some(parse_cloud(&text).map_err(|e| bad(&e))?),
            "scene" => scene_spec = Some(serde_json::from_str::<SceneSpec>(&text).map_err(|e| bad(&e))?),
            other => return Err(bad(&format!("unknown field {other:?}"))),
        }
    }
    let seed_pose = checked_pose(seed_pose.ok_or_else(|| bad(&"missing seed_pose"))?)?;
    let scene = match (cloud, scene_spec) {
        (Some(cloud), None) => cloud,
        (None, Some(spec)) => {
            let model = m.model(id)?;
            synth_scene(&model, &spec).map_err(|e| bad(&e))?.cloud
        }
        _ => return Err(bad(&"send exactly one of cloud or scene")),
    };
    let result = tokio::task::spawn_blocking(move || m.register(id, &seed_pose, &scene, method, preset))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))??;
    Ok(Json(result))
}

async fn sensitivity(
    State(m): State<AppState>,
    Path(id): Path<u64>,
    Json(body): Json<SensitivityBody>,
) -> ApiResult<GuidanceConfig> {
    Ok(Json(m.set_sensitivity(SessionId(id), body.sensitivity)?))
}

async fn guidance(State(m): State<AppState>, Path(id): Path<u64>) -> ApiResult<GuidanceConfig> {
    Ok(Json(m.guidance(SessionId(id))?))
}

async fn set_guidance(
    State(m): State<AppState>,
    Path(id): Path<u64>,
    Json(config): Json<GuidanceConfig>,
) -> ApiResult<GuidanceConfig> {
    Ok(Json(m.set_guidance(SessionId(id), config)?))
}

async fn sample(
    State(m): State<AppState>,
    Path(id): Path<u64>,
    Query(q): Query<FrameQuery>,
    Json(sample): Json<HandSample>,
) -> ApiResult<StateMessage> {
    Ok(Json(m.stream_hand(SessionId(id), &sample, q.frame)?))
}

/// Websocket carrying one `HandSample` per text message up and one
/// `StateMessage` (or `{error}`) per sample down. One stream per session.
async fn stream(
    State(m): State<AppState>,
    Path(id): Path<u64>,
    Query(q): Query<FrameQuery>,
    upgrade: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let lease = m.open_stream(SessionId(id))?;
    Ok(upgrade.on_upgrade(move |socket| async move {
        pump(socket, &m, lease.id, q.frame).await;
        drop(lease);
    }))
}

async fn pump(mut socket: WebSocket, m: &SessionManager, id: SessionId, frame: Frame) {
    while let Some(Ok(msg)) = socket.recv().await {
        let reply = match msg {
            Message::Text(text) => match serde_json::from_str::<HandSample>(&text) {
                Ok(sample) => match m.stream_hand(id, &sample, frame) {
                    Ok(state) => serde_json::to_string(&state),
                    Err(e) => serde_json::to_string(&ApiError::from(e).body),
                },
                Err(e) => serde_json::to_string(&ErrorBody {
                    error: e.to_string(),
                    stage: None,
                }),
            },
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = reply.expect("plain data serializes");
        if socket.send(Message::Text(reply.into())).await.is_err() {
            break;
        }
    }
}
