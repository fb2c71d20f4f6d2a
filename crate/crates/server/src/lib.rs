//! HTTP delivery of a compiled bundle.
//!
//! | route | body |
//! |---|---|
//! | `GET /api/site` | `site.json` |
//! | `GET /api/layers/{layer_id}` | `layers/<layer_id>.json` |
//! | `GET, HEAD /assets/{hash}.{ext}` | asset bytes, single byte ranges |
//! | anything else | viewer static files when configured, else 404 |
//!
//! Index files are re-read on every request so a bundle swapped in by
//! `compile` is picked up without a restart. Errors are JSON envelopes
//! `{"error": <message>, "code": <status>}`.

mod range;

use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::extract::{Path as UrlPath, State};
use axum::http::header::{self, HeaderMap, HeaderValue};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use heritage_forge_core::assets::mime_for_extension;
use heritage_forge_core::compile::{
    content_hash, BUNDLE_ASSETS_DIR, BUNDLE_LAYERS_DIR, BUNDLE_SITE_INDEX, HASH_PREFIX_LEN,
};
use heritage_forge_core::content::{Slug, SCHEMA_VERSION};
use thiserror::Error;
use tokio::io::{AsyncReadExt, AsyncSeekExt};
use tokio_util::io::ReaderStream;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;
use tracing::{info, warn};

pub use self::range::{parse_range, ByteRange, RangeError};

pub const IMMUTABLE_CACHE: &str = "public, max-age=31536000, immutable";
const INDEX_CACHE: &str = "no-cache";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bundle_dir: PathBuf,
    pub bind_address: SocketAddr,
    /// Allowed CORS origins; empty allows any origin.
    pub cors_origins: Vec<String>,
    /// Built viewer served at `/`.
    pub viewer_dir: Option<PathBuf>,
}

impl ServerConfig {
    pub fn new(bundle_dir: impl Into<PathBuf>, bind_address: SocketAddr) -> Self {
        ServerConfig {
            bundle_dir: bundle_dir.into(),
            bind_address,
            cors_origins: Vec::new(),
            viewer_dir: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} is not a compiled bundle: {1}")]
    NotABundle(PathBuf, String),
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
}

/// Checks that `dir` holds a bundle this server understands.
pub fn check_bundle(dir: &Path) -> Result<(), ServerError> {
    let index = dir.join(BUNDLE_SITE_INDEX);
    let bytes = std::fs::read(&index).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => ServerError::NotABundle(dir.to_path_buf(), format!("no {BUNDLE_SITE_INDEX}")),
        _ => ServerError::Io { path: index.clone(), source },
    })?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| ServerError::NotABundle(dir.to_path_buf(), format!("{BUNDLE_SITE_INDEX}: {e}")))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => Ok(()),
        Some(v) => Err(ServerError::NotABundle(
            dir.to_path_buf(),
            format!("schema_version {v}, this server reads {SCHEMA_VERSION}"),
        )),
        None => Err(ServerError::NotABundle(dir.to_path_buf(), "missing schema_version".into())),
    }
}

#[derive(Debug, Clone)]
struct AppState {
    bundle_dir: PathBuf,
}

/// Builds the application after validating the bundle.
pub fn router(config: &ServerConfig) -> Result<Router, ServerError> {
    check_bundle(&config.bundle_dir)?;
    let state = AppState {
        bundle_dir: config.bundle_dir.clone(),
    };

    let api = Router::new()
        .route("/api/site", get(site_index))
        .route("/api/layers/{layer_id}", get(layer_index))
        .route("/assets/{name}", get(asset))
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state);

    let app = match &config.viewer_dir {
        Some(dir) => api.fallback_service(
            ServeDir::new(dir)
                .append_index_html_on_directories(true)
                .not_found_service(get(not_found).head(not_found)),
        ),
        None => api.fallback(not_found),
    };
    Ok(app.layer(cors(&config.cors_origins)?).layer(TraceLayer::new_for_http()))
}

fn cors(origins: &[String]) -> Result<CorsLayer, ServerError> {
    let allow = if origins.is_empty() {
        AllowOrigin::from(Any)
    } else {
        let parsed = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| ServerError::CorsOrigin(o.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(parsed)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::HEAD])
        .allow_headers([header::RANGE, header::IF_NONE_MATCH, header::IF_RANGE])
        .expose_headers([header::ETAG, header::CONTENT_RANGE, header::ACCEPT_RANGES, header::CONTENT_LENGTH]))
}

/// A server running on a background task.
#[derive(Debug)]
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<io::Result<()>>,
}

impl RunningServer {
    /// Stops accepting connections and waits for in-flight requests.
    pub async fn stop(mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.map_err(io::Error::other)?
    }
}

/// Validates the bundle, binds `config.bind_address` (port 0 picks a free
/// port) and starts serving in the background.
pub async fn start(config: ServerConfig) -> Result<RunningServer, ServerError> {
    let app = router(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind_address)
        .await
        .map_err(|source| ServerError::Bind {
            addr: config.bind_address,
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| ServerError::Bind {
        addr: config.bind_address,
        source,
    })?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    info!(%addr, bundle = %config.bundle_dir.display(), "serving bundle");
    Ok(RunningServer {
        addr,
        shutdown: Some(tx),
        task,
    })
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServerError> {
    let server = start(config).await?;
    let addr = server.addr;
    let _ = tokio::signal::ctrl_c().await;
    info!("shutting down");
    server
        .stop()
        .await
        .map_err(|source| ServerError::Bind { addr, source })
}

fn envelope(status: StatusCode, message: &str) -> Response {
    let body = serde_json::json!({"error": message, "code": status.as_u16()});
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        body.to_string(),
    )
        .into_response()
}

async fn not_found() -> Response {
    envelope(StatusCode::NOT_FOUND, "not found")
}

async fn method_not_allowed() -> Response {
    envelope(StatusCode::METHOD_NOT_ALLOWED, "method not allowed")
}

fn etag_matches(headers: &HeaderMap, etag: &str) -> bool {
    headers
        .get_all(header::IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .map(|t| t.trim().trim_start_matches("W/"))
        .any(|t| t == "*" || t == etag)
}

/// Serves a JSON index file with a content-hash ETag.
async fn json_file(path: PathBuf, headers: &HeaderMap, missing: (StatusCode, &str)) -> Response {
    let bytes = match tokio::fs::read(&path).await {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound && missing.0 == StatusCode::NOT_FOUND => {
            return envelope(missing.0, missing.1)
        }
        Err(e) => {
            warn!(path = %path.display(), error = %e, "bundle unreadable");
            return envelope(StatusCode::INTERNAL_SERVER_ERROR, "bundle unreadable");
        }
    };
    let etag = format!("\"{}\"", content_hash(&bytes));
    let mut common = HeaderMap::new();
    common.insert(header::ETAG, HeaderValue::from_str(&etag).expect("hex is a valid header"));
    common.insert(header::CACHE_CONTROL, HeaderValue::from_static(INDEX_CACHE));
    if etag_matches(headers, &etag) {
        return (StatusCode::NOT_MODIFIED, common).into_response();
    }
    common.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    (StatusCode::OK, common, bytes).into_response()
}

async fn site_index(State(state): State<AppState>, headers: HeaderMap) -> Response {
    let path = state.bundle_dir.join(BUNDLE_SITE_INDEX);
    // A missing site index means the bundle went away: a server fault.
    json_file(path, &headers, (StatusCode::INTERNAL_SERVER_ERROR, "bundle unreadable")).await
}

async fn layer_index(
    State(state): State<AppState>,
    UrlPath(layer_id): UrlPath<String>,
    headers: HeaderMap,
) -> Response {
    if Slug::new(layer_id.as_str()).is_err() {
        return envelope(StatusCode::NOT_FOUND, "layer not found");
    }
    if tokio::fs::metadata(state.bundle_dir.join(BUNDLE_SITE_INDEX)).await.is_err() {
        return envelope(StatusCode::INTERNAL_SERVER_ERROR, "bundle unreadable");
    }
    let path = state.bundle_dir.join(BUNDLE_LAYERS_DIR).join(format!("{layer_id}.json"));
    json_file(path, &headers, (StatusCode::NOT_FOUND, "layer not found")).await
}

/// `<16 lowercase hex>.<lowercase alphanumeric ext>`; returns the hash and
/// extension.
pub fn parse_asset_name(name: &str) -> Option<(&str, &str)> {
    let (hash, ext) = name.split_once('.')?;
    let hex = |c: char| c.is_ascii_digit() || ('a'..='f').contains(&c);
    let ext_char = |c: char| c.is_ascii_digit() || c.is_ascii_lowercase();
    (hash.len() == HASH_PREFIX_LEN && hash.chars().all(hex) && !ext.is_empty() && ext.chars().all(ext_char))
        .then_some((hash, ext))
}

async fn asset(
    State(state): State<AppState>,
    UrlPath(name): UrlPath<String>,
    method: Method,
    headers: HeaderMap,
) -> Response {
    let Some((hash, ext)) = parse_asset_name(&name) else {
        return envelope(StatusCode::NOT_FOUND, "asset not found");
    };
    let path = state.bundle_dir.join(BUNDLE_ASSETS_DIR).join(&name);
    let mut file = match tokio::fs::File::open(&path).await {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return envelope(StatusCode::NOT_FOUND, "asset not found")
        }
        Err(e) => {
            warn!(path = %path.display(), error = %e, "asset unreadable");
            return envelope(StatusCode::INTERNAL_SERVER_ERROR, "asset unreadable");
        }
    };
    let len = match file.metadata().await {
        Ok(md) if md.is_file() => md.len(),
        Ok(_) => return envelope(StatusCode::NOT_FOUND, "asset not found"),
        Err(_) => return envelope(StatusCode::INTERNAL_SERVER_ERROR, "asset unreadable"),
    };

    // The name is the content hash, so it doubles as a strong validator.
    let etag = format!("\"{hash}\"");
    let mut out = HeaderMap::new();
    out.insert(header::ETAG, HeaderValue::from_str(&etag).expect("hex is a valid header"));
    out.insert(header::CACHE_CONTROL, HeaderValue::from_static(IMMUTABLE_CACHE));
    out.insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    if etag_matches(&headers, &etag) {
        return (StatusCode::NOT_MODIFIED, out).into_response();
    }
    out.insert(header::CONTENT_TYPE, HeaderValue::from_static(mime_for_extension(ext)));

    let range_header = headers.get(header::RANGE).and_then(|v| v.to_str().ok());
    let if_range_ok = headers
        .get(header::IF_RANGE)
        .map(|v| v.to_str().map(|s| s.trim() == etag).unwrap_or(false))
        .unwrap_or(true);
    let range = match range_header.filter(|_| if_range_ok) {
        None => None,
        Some(spec) => match parse_range(spec, len) {
            Ok(r) => Some(r),
            Err(RangeError::Unsatisfiable) | Err(RangeError::MultipleRanges) => {
                let mut resp = envelope(StatusCode::RANGE_NOT_SATISFIABLE, "range not satisfiable");
                let h = resp.headers_mut();
                h.insert(header::CONTENT_RANGE, content_range(&format!("bytes */{len}")));
                h.insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
                return resp;
            }
            // Unparseable Range headers are ignored, as RFC 9110 allows.
            Err(RangeError::Malformed) => None,
        },
    };

    let (status, start, count) = match range {
        Some(r) => {
            out.insert(
                header::CONTENT_RANGE,
                content_range(&format!("bytes {}-{}/{len}", r.start, r.end_inclusive)),
            );
            (StatusCode::PARTIAL_CONTENT, r.start, r.len())
        }
        None => (StatusCode::OK, 0, len),
    };
    out.insert(header::CONTENT_LENGTH, HeaderValue::from(count));

    if method == Method::HEAD {
        return (status, out).into_response();
    }
    if start > 0 {
        if let Err(e) = file.seek(io::SeekFrom::Start(start)).await {
            warn!(path = %path.display(), error = %e, "seek failed");
            return envelope(StatusCode::INTERNAL_SERVER_ERROR, "asset unreadable");
        }
    }
    let body = Body::from_stream(ReaderStream::new(file.take(count)));
    (status, out, body).into_response()
}

fn content_range(value: &str) -> HeaderValue {
    HeaderValue::from_str(value).expect("ASCII header value")
}
