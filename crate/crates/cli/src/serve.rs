//! One-shot recommendation requests over HTTP against an immutable model.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use recog::recommender::DEFAULT_K;
use serde::Deserialize;
use serde_json::json;

use crate::commands::{QueryError, Service};
use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecommendRequest {
    song_ids: Vec<String>,
    #[serde(default)]
    k: Option<usize>,
}

fn error(status: StatusCode, message: String, song_id: Option<&str>) -> Response {
    let mut body = json!({ "error": message });
    if let Some(id) = song_id {
        body["song_id"] = json!(id);
    }
    (status, Json(body)).into_response()
}

async fn health(State(service): State<Arc<Service>>) -> Response {
    Json(json!({ "status": "ok", "fingerprint": service.fingerprint })).into_response()
}

async fn recommend(State(service): State<Arc<Service>>, body: Bytes) -> Response {
    let req: RecommendRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed body: {e}"), None),
    };
    match service.query(&req.song_ids, req.k.unwrap_or(DEFAULT_K), false) {
        Ok(out) => Json(out).into_response(),
        Err(QueryError::UnknownSong(id)) => {
            error(StatusCode::BAD_REQUEST, format!("unknown song id {id:?}"), Some(&id))
        }
        Err(QueryError::Invalid(msg)) => error(StatusCode::BAD_REQUEST, msg, None),
        Err(QueryError::Numeric(msg)) => error(StatusCode::INTERNAL_SERVER_ERROR, msg, None),
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new().route("/health", get(health)).route("/recommend", post(recommend)).with_state(service)
}

pub fn serve(service: Service, host: &str, port: u16) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::config(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::config(format!("cannot bind {host}:{port}: {e}")))?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, router(Arc::new(service)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
