//! HTTP front end: latent decoding, interaction defaults, and the saved-sample
//! carousel.
//!
//! | route | |
//! |---|---|
//! | `POST /generate`, `POST /api/generate` | `{"latent": [512], "seq": n}` → PNG with `X-Seq` |
//! | `GET /api/config` | dimensions and interaction defaults |
//! | `GET /api/samples`, `POST /api/samples` | list / save |
//! | `GET /api/samples/{id}`, `DELETE /api/samples/{id}` | restore / delete |
//! | `GET /api/samples/{id}/thumbnail.png` | carousel thumbnail |
//! | `GET /atlas.png` | dataset montage, when configured |
//! | `GET /` | UI assets, or a placeholder page |

pub mod external;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use formforge_core::decoder::{decode, IMAGE_SIZE};
use formforge_core::latent::{InteractionConfig, LATENT_DIMS, V_MAX};
use formforge_core::{Error as CoreError, LatentVector, SavedSample, SessionStore, SketchImage};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;

pub use external::{DecoderError, ExternalDecoder};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_DECODER_LIMIT: usize = 4;
pub const DEFAULT_DECODE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Clone, Debug)]
pub enum DecoderBackend {
    Procedural,
    External(ExternalDecoder),
}

impl DecoderBackend {
    /// Parses `procedural` or `external:<url>`.
    pub fn parse(value: &str, timeout: Duration) -> Result<Self, DecoderError> {
        match value {
            "procedural" => Ok(DecoderBackend::Procedural),
            _ => match value.strip_prefix("external:") {
                Some(url) => Ok(DecoderBackend::External(ExternalDecoder::new(
                    url, timeout,
                )?)),
                None => Err(DecoderError::Unavailable(format!(
                    "unknown decoder {value:?}; expected procedural or external:<url>"
                ))),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub decoder: DecoderBackend,
    pub store_dir: PathBuf,
    pub ui_dir: Option<PathBuf>,
    pub atlas: Option<PathBuf>,
    pub decoder_limit: usize,
    pub decode_timeout: Duration,
}

impl ServerConfig {
    pub fn new(store_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            decoder: DecoderBackend::Procedural,
            store_dir: store_dir.into(),
            ui_dir: None,
            atlas: None,
            decoder_limit: DEFAULT_DECODER_LIMIT,
            decode_timeout: DEFAULT_DECODE_TIMEOUT,
        }
    }
}

pub struct AppState {
    decoder: DecoderBackend,
    permits: Semaphore,
    timeout: Duration,
    store: Arc<Mutex<SessionStore<f64>>>,
    atlas: Option<PathBuf>,
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not found"),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

impl From<DecoderError> for ApiError {
    fn from(e: DecoderError) -> Self {
        let status = match e {
            DecoderError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            DecoderError::ProtocolViolation(_) => StatusCode::BAD_GATEWAY,
            DecoderError::Rejected(_) => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

/// Builds the router. Opens (or creates) the sample store.
pub fn router(config: ServerConfig) -> Result<Router, CoreError> {
    let store = SessionStore::open(&config.store_dir)?;
    let state = Arc::new(AppState {
        decoder: config.decoder,
        permits: Semaphore::new(config.decoder_limit.max(1)),
        timeout: config.decode_timeout,
        store: Arc::new(Mutex::new(store)),
        atlas: config.atlas,
    });
    let api = Router::new()
        .route("/generate", post(generate))
        .route("/api/generate", post(generate))
        .route("/api/config", get(config_handler))
        .route("/api/samples", get(list_samples).post(save_sample))
        .route("/api/samples/{id}", get(get_sample).delete(delete_sample))
        .route("/api/samples/{id}/thumbnail.png", get(thumbnail))
        .route("/atlas.png", get(atlas))
        .with_state(state);
    Ok(match config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder_page)),
    })
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, config: ServerConfig) -> std::io::Result<()> {
    let app = router(config).map_err(std::io::Error::other)?;
    axum::serve(listener, app).await
}

pub async fn bind(host: &str, port: u16) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind((host, port)).await?;
    let addr = listener.local_addr()?;
    Ok((listener, addr))
}

/// Validates a JSON latent: exactly 512 finite numbers, clamped into range.
pub fn parse_latent(value: Option<&Value>) -> Result<LatentVector<f64>, String> {
    let Some(Value::Array(items)) = value else {
        return Err(format!("expected {LATENT_DIMS} latent variables"));
    };
    if items.len() != LATENT_DIMS {
        return Err(format!(
            "expected {LATENT_DIMS} latent variables, got {}",
            items.len()
        ));
    }
    let mut values = Vec::with_capacity(LATENT_DIMS);
    for (i, item) in items.iter().enumerate() {
        match item.as_f64() {
            Some(v) if v.is_finite() => values.push(v.clamp(-V_MAX, V_MAX)),
            _ => return Err(format!("latent[{i}] is not a finite number")),
        }
    }
    LatentVector::new(values).map_err(|e| e.to_string())
}

fn parse_body(body: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON: {e}")))
}

async fn render(
    state: &AppState,
    z: &LatentVector<f64>,
    seq: u64,
) -> Result<SketchImage, ApiError> {
    let _permit = state
        .permits
        .acquire()
        .await
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "decoder unavailable"))?;
    let work = async {
        match &state.decoder {
            DecoderBackend::Procedural => {
                let z = z.clone();
                tokio::task::spawn_blocking(move || decode(&z))
                    .await
                    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
            }
            DecoderBackend::External(client) => Ok(client.decode(z, seq).await?),
        }
    };
    tokio::time::timeout(state.timeout, work)
        .await
        .map_err(|_| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "decoder unavailable: timed out",
            )
        })?
}

async fn generate(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let value = parse_body(&body)?;
    let z = parse_latent(value.get("latent")).map_err(ApiError::bad_request)?;
    let seq = match value.get("seq") {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ApiError::bad_request("seq must be a non-negative integer"))?,
    };
    let img = render(&state, &z, seq).await?;
    let png = tokio::task::spawn_blocking(move || img.to_png())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let mut response = ([(header::CONTENT_TYPE, "image/png")], png).into_response();
    response
        .headers_mut()
        .insert("x-seq", HeaderValue::from(seq));
    Ok(response)
}

async fn config_handler() -> Json<Value> {
    let d = InteractionConfig::<f64>::default();
    Json(json!({
        "dims": LATENT_DIMS,
        "image_size": IMAGE_SIZE,
        "v_max": V_MAX,
        "defaults": {
            "sensitivity": d.sensitivity,
            "decay_rate": d.decay_rate,
            "brush_sigma": d.brush_sigma,
        },
    }))
}

fn sample_json(s: &SavedSample<f64>) -> Value {
    json!({
        "id": s.id,
        "created_at": s.created_at,
        "latent": s.latent.as_slice(),
        "thumbnail": format!("/api/samples/{}/thumbnail.png", s.id),
    })
}

async fn with_store<R: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&mut SessionStore<f64>) -> Result<R, CoreError> + Send + 'static,
) -> Result<R, ApiError> {
    let store = Arc::clone(&state.store);
    tokio::task::spawn_blocking(move || {
        let mut guard = store.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut guard)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(ApiError::from)
}

async fn list_samples(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let list = with_store(&state, |s| {
        Ok(s.list().iter().map(sample_json).collect::<Vec<_>>())
    })
    .await?;
    Ok(Json(Value::Array(list)))
}

async fn save_sample(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let value = parse_body(&body)?;
    let z = parse_latent(value.get("latent")).map_err(ApiError::bad_request)?;
    let img = render(&state, &z, 0).await?;
    let record = with_store(&state, move |s| {
        s.save_sample(z, &img).map(|r| sample_json(&r))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn get_sample(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let record = with_store(&state, move |s| {
        s.get(&id)
            .map(sample_json)
            .ok_or_else(|| CoreError::NotFound(id))
    })
    .await?;
    Ok(Json(record))
}

async fn delete_sample(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    with_store(&state, move |s| s.delete_sample(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn thumbnail(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let png = with_store(&state, move |s| {
        s.get(&id)
            .map(|r| r.thumbnail.to_png())
            .ok_or_else(|| CoreError::NotFound(id))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn atlas(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let Some(path) = state.atlas.clone() else {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "no atlas configured"));
    };
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "atlas not found"))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

async fn placeholder_page() -> Html<&'static str> {
    Html(
        "<!doctype html><title>Form Forge</title>\
         <p>No UI bundle configured. Start the server with <code>--ui DIR</code>.</p>\
         <p>API: <code>POST /api/generate</code>, <code>GET /api/config</code>, \
         <code>/api/samples</code>. <a href=\"/atlas.png\">atlas</a></p>",
    )
}
