//! HTTP and WebSocket front end.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::watch;

use palpation_core::assessment::render_text;

use crate::hub::{Hub, ServiceError, SubscriptionFilter};
use crate::messages::{FeedbackBody, FeedbackMessage, FrameBatch, Heartbeat, OpenSession};

#[derive(Clone)]
pub struct AppState {
    pub hub: Arc<Hub>,
    pub shutdown: watch::Receiver<bool>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::DuplicateSession(_) | ServiceError::SessionClosed(_) => StatusCode::CONFLICT,
            ServiceError::UnknownSession(_) | ServiceError::UnknownParticipant(_) | ServiceError::NoReport(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::Assessment { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.body() }))).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(open_session).get(list_sessions))
        .route("/sessions/{id}/frames", post(post_frames))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/finalize", post(finalize_session))
        .route("/participants/{pid}/finalize", post(finalize_participant))
        .route("/reports/{pid}", get(get_report))
        .route("/reference-model", get(reference_model))
        .route("/ws", get(ws_upgrade))
        .with_state(state)
}

async fn health(State(st): State<AppState>) -> impl IntoResponse {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "sessions": st.hub.sessions().len(),
        "subscribers": st.hub.subscriber_count(),
    }))
}

fn bad_json(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::BadRequest(format!("invalid JSON body: {e}"))
}

async fn open_session(State(st): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: OpenSession = serde_json::from_slice(&body).map_err(bad_json)?;
    let meta = req.to_meta().map_err(ServiceError::BadRequest)?;
    st.hub.open_session(meta.clone())?;
    Ok((StatusCode::CREATED, Json(meta)))
}

async fn list_sessions(State(st): State<AppState>) -> impl IntoResponse {
    Json(st.hub.sessions())
}

/// Wire frames as `application/octet-stream`, or a JSON `{"frames": [...]}` batch.
async fn post_frames(
    State(st): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, ServiceError> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let summary = if is_json {
        let batch: FrameBatch = serde_json::from_slice(&body).map_err(bad_json)?;
        st.hub.ingest_frames(&id, batch.frames)?
    } else {
        st.hub.ingest_bytes(&id, &body)?
    };
    Ok(Json(summary))
}

async fn snapshot(State(st): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(st.hub.snapshot(&id)?))
}

async fn finalize_session(State(st): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let hub = st.hub.clone();
    let info = blocking(move || hub.finalize_task(&id)).await?;
    Ok(Json(info))
}

async fn finalize_participant(
    State(st): State<AppState>,
    Path(pid): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    let hub = st.hub.clone();
    let report = blocking(move || hub.finalize_participant(&pid)).await?;
    Ok(Json(report))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

#[derive(Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn get_report(
    State(st): State<AppState>,
    Path(pid): Path<String>,
    Query(q): Query<ReportQuery>,
) -> Result<Response, ServiceError> {
    let report = st.hub.report(&pid)?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(report).into_response()),
        Some("text") => Ok(render_text(&report).into_response()),
        Some(other) => Err(ServiceError::BadRequest(format!("unknown report format {other:?}"))),
    }
}

async fn reference_model(State(st): State<AppState>) -> Response {
    match st.hub.reference() {
        Some(model) => Json(model).into_response(),
        None => (
            StatusCode::NOT_FOUND,
            Json(json!({ "error": { "code": "no_reference_model", "message": "no reference model loaded" } })),
        )
            .into_response(),
    }
}

async fn ws_upgrade(
    State(st): State<AppState>,
    Query(filter): Query<SubscriptionFilter>,
    ws: WebSocketUpgrade,
) -> Response {
    ws.on_upgrade(move |socket| feed_socket(socket, st, filter))
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

async fn feed_socket(mut socket: WebSocket, st: AppState, filter: SubscriptionFilter) {
    let mut sub = st.hub.subscribe(filter);
    let mut shutdown = st.shutdown.clone();
    let period = st.hub.config().heartbeat;
    let mut ticker = tokio::time::interval_at(tokio::time::Instant::now() + period, period);
    let mut beats = 0u64;
    tracing::debug!(subscriber = sub.id, "websocket connected");
    loop {
        tokio::select! {
            msg = sub.rx.recv() => {
                // None: the hub dropped us for falling behind.
                let Some(text) = msg else { break };
                if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                    break;
                }
            }
            _ = ticker.tick() => {
                let beat = FeedbackMessage {
                    session_id: None,
                    participant_id: None,
                    seq: beats,
                    body: FeedbackBody::Heartbeat(Heartbeat { server_time_ms: now_ms() }),
                };
                beats += 1;
                let text = serde_json::to_string(&beat).expect("message serializes");
                if socket.send(Message::Text(text.into())).await.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => {
                match incoming {
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => {}
                }
            }
            _ = shutdown.changed() => break,
        }
    }
    let _ = socket.send(Message::Close(None)).await;
    tracing::debug!(subscriber = sub.id, "websocket closed");
}
