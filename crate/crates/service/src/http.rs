//! HTTP and WebSocket front end.
//!
//! | route | body | response |
//! |---|---|---|
//! | `POST /pose` | pose document | new state, or an error naming the leg |
//! | `POST /foot/{leg}` | `{x, y, z}` in the hip frame | new state |
//! | `POST /trajectory` | rectangle parameters plus `rate_hz` | `202` with the run id |
//! | `DELETE /trajectory` | | id of the cancelled run, if any |
//! | `POST /mode` | `{"mode": "sim_only" \| "sim_and_serial"}` | new state |
//! | `GET /state` | | current state |
//! | `GET /snapshot?format=json\|csv` | | current state as a file |
//! | `POST /snapshot` | JSON snapshot | restored state |
//! | `GET /stream` | WebSocket | current state, then one message per change |
//!
//! Error bodies are `{"error": kind, "message": ..., "leg"?: ..., "stage"?: ...}` with status 400
//! (validation), 422 (unreachable), 409 (conflict) or 503 (stopped).

use std::future::Future;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use quadkin::LegId;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::sync::broadcast::error::RecvError;
use tower_http::cors::CorsLayer;

use crate::document::{FootDocument, Mode, PoseDocument, StreamPayload};
use crate::error::ServiceError;
use crate::service::{ServiceHandle, TrajectoryRequest};
use crate::snapshot::{export_snapshot, SnapshotFormat};

struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            ServiceError::Validation(_) => StatusCode::BAD_REQUEST,
            ServiceError::Unreachable { .. } | ServiceError::UnreachableWaypoint { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Stopped => StatusCode::SERVICE_UNAVAILABLE,
        };
        (status, Json(self.0.body())).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(ServiceError::Validation(e.to_string())))
}

pub fn router(handle: ServiceHandle) -> Router {
    Router::new()
        .route("/pose", post(pose))
        .route("/foot/{leg}", post(foot))
        .route("/trajectory", post(start_trajectory).delete(cancel_trajectory))
        .route("/mode", post(mode))
        .route("/state", get(state))
        .route("/snapshot", get(snapshot).post(restore))
        .route("/stream", get(stream))
        .layer(CorsLayer::permissive())
        .with_state(handle)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    handle: ServiceHandle,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(handle))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn pose(State(h): State<ServiceHandle>, body: Bytes) -> Result<Json<StreamPayload>, ApiError> {
    let doc: PoseDocument = parse(&body)?;
    Ok(Json((*h.pose(doc).await?).clone()))
}

async fn foot(
    State(h): State<ServiceHandle>,
    Path(leg): Path<String>,
    body: Bytes,
) -> Result<Json<StreamPayload>, ApiError> {
    let leg: LegId = leg
        .parse()
        .map_err(|e: quadkin::KinematicsError| ServiceError::Validation(e.to_string()))?;
    let doc: FootDocument = parse(&body)?;
    Ok(Json((*h.foot(leg, doc).await?).clone()))
}

async fn start_trajectory(State(h): State<ServiceHandle>, body: Bytes) -> Result<Response, ApiError> {
    let req: TrajectoryRequest = parse(&body)?;
    let run = h.run_trajectory(req).await?;
    Ok((StatusCode::ACCEPTED, Json(run)).into_response())
}

async fn cancel_trajectory(State(h): State<ServiceHandle>) -> Result<Response, ApiError> {
    let cancelled = h.cancel_trajectory().await?;
    Ok(Json(serde_json::json!({ "cancelled": cancelled })).into_response())
}

#[derive(Deserialize)]
struct ModeBody {
    mode: Mode,
}

async fn mode(State(h): State<ServiceHandle>, body: Bytes) -> Result<Json<StreamPayload>, ApiError> {
    let ModeBody { mode } = parse(&body)?;
    Ok(Json((*h.set_mode(mode).await?).clone()))
}

async fn state(State(h): State<ServiceHandle>) -> Result<Json<StreamPayload>, ApiError> {
    Ok(Json((*h.state().await?).clone()))
}

#[derive(Deserialize)]
struct SnapshotQuery {
    format: Option<String>,
}

async fn snapshot(State(h): State<ServiceHandle>, Query(q): Query<SnapshotQuery>) -> Result<Response, ApiError> {
    let format: SnapshotFormat = q
        .format
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(|e: crate::snapshot::SnapshotError| ServiceError::Validation(e.to_string()))?;
    let payload = h.state().await?;
    let mut buf = Vec::new();
    export_snapshot(&payload, format, &mut buf)
        .map_err(|e| ServiceError::Validation(e.to_string()))?;
    let content_type = match format {
        SnapshotFormat::Json => "application/json",
        SnapshotFormat::Csv => "text/csv",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], buf).into_response())
}

async fn restore(State(h): State<ServiceHandle>, body: Bytes) -> Result<Json<StreamPayload>, ApiError> {
    let snapshot: StreamPayload = parse(&body)?;
    Ok(Json((*h.import(snapshot).await?).clone()))
}

async fn stream(State(h): State<ServiceHandle>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| forward(socket, h))
}

async fn send_json(socket: &mut WebSocket, payload: &StreamPayload) -> bool {
    match serde_json::to_string(payload) {
        Ok(text) => socket.send(Message::Text(text.into())).await.is_ok(),
        Err(_) => false,
    }
}

async fn forward(mut socket: WebSocket, h: ServiceHandle) {
    let Ok((current, mut rx)) = h.subscribe().await else {
        return;
    };
    if !send_json(&mut socket, &current).await {
        return;
    }
    loop {
        tokio::select! {
            next = rx.recv() => match next {
                Ok(payload) => {
                    if !send_json(&mut socket, &payload).await {
                        break;
                    }
                }
                // a slow client skips the oldest payloads and carries on from the newest
                Err(RecvError::Lagged(n)) => tracing::debug!("stream subscriber skipped {n} payloads"),
                Err(RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
