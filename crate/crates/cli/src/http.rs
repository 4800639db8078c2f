//! JSON API over [`Service`].

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gistline::service::{Progress, Service, ServiceError};
use gistline::{AgentOutput, OutputKind, SessionError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Deserialize)]
pub struct CreateUser {
    pub name: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UserCreated {
    pub user_id: String,
}

#[derive(Debug, Deserialize)]
pub struct StartSession {
    pub user_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionOpened {
    pub session_id: String,
    pub session_index: usize,
    pub resumed: bool,
    pub outputs: Vec<OutputView>,
    pub session_over: bool,
}

#[derive(Debug, Deserialize)]
pub struct PostTurn {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnReply {
    pub gists: Vec<String>,
    pub outputs: Vec<OutputView>,
    pub session_over: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputView {
    pub kind: OutputKind,
    pub text: String,
}

fn outputs(output: &AgentOutput) -> Vec<OutputView> {
    output
        .items
        .iter()
        .map(|item| OutputView {
            kind: item.kind,
            text: item.text.clone(),
        })
        .collect()
}

impl From<AgentOutput> for TurnReply {
    fn from(output: AgentOutput) -> Self {
        TurnReply {
            gists: output.gists.iter().map(|g| g.text()).collect(),
            outputs: outputs(&output),
            session_over: output.session_over(),
        }
    }
}

/// A service error turned into a status code and `{"error": ...}`.
#[derive(Debug)]
pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::EmptyName => StatusCode::BAD_REQUEST,
            ServiceError::UnknownUser(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionOver(_) | ServiceError::ProgramComplete(_) => StatusCode::CONFLICT,
            ServiceError::Session(SessionError::SessionOver) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

type Shared = State<Arc<Service>>;

/// Runs blocking store work off the async workers.
async fn blocking<T: Send + 'static>(
    service: Arc<Service>,
    f: impl FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(move || f(&service)).await {
        Ok(result) => result.map_err(ApiError),
        Err(e) => std::panic::resume_unwind(e.into_panic()),
    }
}

async fn create_user(State(service): Shared, Json(body): Json<CreateUser>) -> Result<impl IntoResponse, ApiError> {
    let user_id = blocking(service, move |s| s.create_user(&body.name)).await?;
    Ok((StatusCode::CREATED, Json(UserCreated { user_id })))
}

async fn start_session(
    State(service): Shared,
    Json(body): Json<StartSession>,
) -> Result<Json<SessionOpened>, ApiError> {
    let start = blocking(service, move |s| s.start_session(&body.user_id)).await?;
    Ok(Json(SessionOpened {
        session_id: start.session_id,
        session_index: start.session_index,
        resumed: start.resumed,
        outputs: outputs(&start.output),
        session_over: start.output.session_over(),
    }))
}

async fn post_turn(
    State(service): Shared,
    Path(id): Path<String>,
    Json(body): Json<PostTurn>,
) -> Result<Json<TurnReply>, ApiError> {
    let output = blocking(service, move |s| s.post_turn(&id, &body.text)).await?;
    Ok(Json(output.into()))
}

async fn transcript(State(service): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let transcript = blocking(service, move |s| s.transcript(&id)).await?;
    Ok((
        [(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")],
        transcript.to_string(),
    )
        .into_response())
}

async fn progress(State(service): Shared, Path(id): Path<String>) -> Result<Json<Progress>, ApiError> {
    Ok(Json(blocking(service, move |s| s.progress(&id)).await?))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/users", post(create_user))
        .route("/users/{id}/progress", get(progress))
        .route("/sessions", post(start_session))
        .route("/sessions/{id}/turns", post(post_turn))
        .route("/sessions/{id}/transcript", get(transcript))
        .with_state(service)
}
