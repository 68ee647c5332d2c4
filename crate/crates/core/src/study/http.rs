//! JSON-over-HTTP front of [`Study`].
//!
//! Only segmentation frames of dataset videos are routable under `/media`;
//! nothing else on disk is reachable.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{PerceptionRecord, Split, Study, VideoManifest};
use crate::error::Error;

#[derive(Clone)]
pub struct AppState {
    pub study: Arc<Mutex<Study>>,
    /// Directory holding one `<video_id>/frame_NNNNN.ppm` sequence per
    /// segmentation video.
    pub media_root: Option<PathBuf>,
}

impl AppState {
    pub fn new(study: Study, media_root: Option<PathBuf>) -> Self {
        AppState {
            study: Arc::new(Mutex::new(study)),
            media_root,
        }
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::Rejected(_) => StatusCode::CONFLICT,
            Error::Session(_) => StatusCode::NOT_FOUND,
            Error::Param(_) | Error::Dataset(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/session/start", post(start))
        .route("/session/next", get(next))
        .route("/session/answer", post(answer))
        .route("/admin/export", get(export))
        .route("/media/:video_id/:file", get(media))
        .with_state(state)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartRequest {
    pub participant_id: String,
    #[serde(default)]
    pub split: Option<Split>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartResponse {
    pub participant_id: String,
    pub split: Split,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextResponse {
    /// 0-based playlist position; equals `total` once done.
    pub position: usize,
    pub total: usize,
    pub done: bool,
    /// Opaque token the client shows the ready prompt for.
    pub ready_token: Option<String>,
    pub manifest: Option<VideoManifest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub record_id: u64,
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    participant: String,
}

fn seed_for(participant_id: &str) -> u64 {
    // FNV-1a, so a participant without an explicit seed gets a stable order.
    participant_id
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

async fn start(State(st): State<AppState>, Json(req): Json<StartRequest>) -> ApiResult<Json<StartResponse>> {
    let mut study = st.study.lock().expect("study lock");
    let split = req.split.unwrap_or_else(|| study.next_split());
    let seed = req.seed.unwrap_or_else(|| seed_for(&req.participant_id));
    let s = study.start_session(&req.participant_id, split, seed)?;
    Ok(Json(StartResponse {
        participant_id: s.participant_id.clone(),
        split: s.split,
        total: s.playlist.len(),
    }))
}

async fn next(State(st): State<AppState>, Query(q): Query<NextQuery>) -> ApiResult<Json<NextResponse>> {
    let study = st.study.lock().expect("study lock");
    let s = study
        .session(&q.participant)
        .ok_or_else(|| Error::Session(format!("no session for participant {}", q.participant)))?;
    let total = s.playlist.len();
    Ok(Json(match s.next_video() {
        Some((position, video_id)) => NextResponse {
            position,
            total,
            done: false,
            ready_token: Some(format!("{}:{position}", s.participant_id)),
            manifest: Some(study.dataset().manifest(video_id)?),
        },
        None => NextResponse {
            position: total,
            total,
            done: true,
            ready_token: None,
            manifest: None,
        },
    }))
}

async fn answer(State(st): State<AppState>, Json(r): Json<PerceptionRecord>) -> ApiResult<Json<AnswerResponse>> {
    let record_id = st.study.lock().expect("study lock").record_perception(r)?;
    Ok(Json(AnswerResponse { record_id }))
}

async fn export(State(st): State<AppState>) -> ApiResult<Response> {
    let body = st.study.lock().expect("study lock").export_ndjson()?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

/// Strict `frame_NNNNN.ppm`, returning the index.
fn frame_index(file: &str) -> Option<usize> {
    let digits = file.strip_prefix("frame_")?.strip_suffix(".ppm")?;
    (digits.len() == 5 && digits.bytes().all(|b| b.is_ascii_digit())).then(|| digits.parse().ok())?
}

async fn media(
    State(st): State<AppState>,
    UrlPath((video_id, file)): UrlPath<(String, String)>,
) -> ApiResult<Response> {
    let not_found = || Error::Session(format!("no media {video_id}/{file}"));
    let frames = {
        let study = st.study.lock().expect("study lock");
        let v = study.dataset().video(&video_id).ok_or_else(not_found)?;
        study.dataset().base_of(v).frame_count
    };
    let index = frame_index(&file).ok_or_else(not_found)?;
    let root = st.media_root.as_ref().ok_or_else(not_found)?;
    if index >= frames {
        return Err(not_found().into());
    }
    let path = root.join(&video_id).join(&file);
    let bytes = tokio::fs::read(&path).await.map_err(|e| Error::io(&path, e))?;
    Ok(([(header::CONTENT_TYPE, "image/x-portable-pixmap")], bytes).into_response())
}
