use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::ApiError;
use crate::tutor::{HintRequest, PlanRequest, TaskRequest, Tutor};

type ApiResult = Result<Json<Value>, ApiError>;

pub fn router(tutor: Arc<Tutor>) -> Router {
    Router::new()
        .route("/api/domains", get(domains))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/task", post(next_task))
        .route("/api/sessions/{id}/validate", post(validate))
        .route("/api/sessions/{id}/hint", post(hint))
        .route("/api/sessions/{id}/execute", post(execute))
        .route("/api/sessions/{id}/report", get(report))
        .fallback(not_found)
        .with_state(tutor)
}

async fn not_found() -> ApiError {
    ApiError::new(404, "not_found", "no such endpoint")
}

fn body<T: DeserializeOwned>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

fn to_json<T: serde::Serialize>(value: T) -> ApiResult {
    serde_json::to_value(value)
        .map(Json)
        .map_err(|e| ApiError::internal(e.to_string()))
}

/// Runs blocking session work off the async executor.
async fn blocking<T, F>(tutor: Arc<Tutor>, f: F) -> ApiResult
where
    T: serde::Serialize + Send + 'static,
    F: FnOnce(&Tutor) -> Result<T, ApiError> + Send + 'static,
{
    let out = tokio::task::spawn_blocking(move || f(&tutor))
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))??;
    to_json(out)
}

async fn domains(State(tutor): State<Arc<Tutor>>) -> ApiResult {
    to_json(tutor.domains())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    domain: String,
}

async fn create_session(
    State(tutor): State<Arc<Tutor>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    blocking(tutor, move |t| t.create_session(&req.domain)).await
}

async fn next_task(
    State(tutor): State<Arc<Tutor>>,
    Path(id): Path<String>,
    payload: Result<Json<TaskRequest>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    blocking(tutor, move |t| t.next_task(&id, &req)).await
}

async fn validate(
    State(tutor): State<Arc<Tutor>>,
    Path(id): Path<String>,
    payload: Result<Json<PlanRequest>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    blocking(tutor, move |t| t.validate(&id, req)).await
}

/// Raises the flag when the request future is dropped, e.g. on disconnect.
struct CancelOnDrop(Option<Arc<AtomicBool>>);

impl Drop for CancelOnDrop {
    fn drop(&mut self) {
        if let Some(flag) = &self.0 {
            flag.store(true, Ordering::Relaxed);
        }
    }
}

async fn hint(State(tutor): State<Arc<Tutor>>, Path(id): Path<String>, raw: Bytes) -> ApiResult {
    let req: HintRequest = if raw.iter().all(u8::is_ascii_whitespace) {
        HintRequest::default()
    } else {
        serde_json::from_slice::<Option<HintRequest>>(&raw)
            .map_err(|e| ApiError::bad_request(e.to_string()))?
            .unwrap_or_default()
    };
    let cancel = Arc::new(AtomicBool::new(false));
    let mut guard = CancelOnDrop(Some(Arc::clone(&cancel)));
    let out = blocking(tutor, move |t| t.hint(&id, req, Some(&cancel))).await;
    guard.0 = None;
    out
}

async fn execute(
    State(tutor): State<Arc<Tutor>>,
    Path(id): Path<String>,
    payload: Result<Json<PlanRequest>, JsonRejection>,
) -> ApiResult {
    let req = body(payload)?;
    blocking(tutor, move |t| t.execute(&id, req)).await
}

async fn report(State(tutor): State<Arc<Tutor>>, Path(id): Path<String>) -> ApiResult {
    blocking(tutor, move |t| t.report(&id)).await
}
