//! Structural validation and metadata probing of media files.
//!
//! GLB containers and PNG/JPEG headers are checked byte-for-byte; full
//! glTF semantics and pixel data are left to the viewer. Videos are served
//! verbatim and only get an extension and non-empty check.

mod glb;
mod image;
mod preview;

use std::path::Path;

use thiserror::Error;

pub use self::glb::{build_glb, validate_glb, GlbChunk, GlbError, GlbInfo, CHUNK_BIN, CHUNK_JSON, GLB_MAGIC};
pub use self::image::{
    check_equirectangular, probe_image, EquirectCheck, ImageError, ImageFormat, ImageInfo,
    EQUIRECT_RATIO_TOLERANCE,
};
pub use self::preview::{derive_preview, preview_size, PreviewError, DEFAULT_PREVIEW_MAX_DIM};

/// Compile warns above these sizes.
pub const GLB_SIZE_BUDGET: u64 = 50 * 1024 * 1024;
pub const PANORAMA_DIM_BUDGET: u32 = 8192;

pub const VIDEO_EXTENSIONS: [&str; 4] = ["mp4", "webm", "m4v", "ogv"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VideoError {
    #[error("video file is empty")]
    Empty,
    #[error("unsupported video extension {0:?} (expected one of mp4, webm, m4v, ogv)")]
    Extension(String),
}

/// Lowercased file extension, if any.
pub fn extension_of(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

pub fn check_video(path: &Path, bytes: &[u8]) -> Result<(), VideoError> {
    let ext = extension_of(path).unwrap_or_default();
    if !VIDEO_EXTENSIONS.contains(&ext.as_str()) {
        return Err(VideoError::Extension(ext));
    }
    if bytes.is_empty() {
        return Err(VideoError::Empty);
    }
    Ok(())
}

/// MIME type served for a bundle file extension.
pub fn mime_for_extension(ext: &str) -> &'static str {
    match ext {
        "glb" => "model/gltf-binary",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "mp4" | "m4v" => "video/mp4",
        "webm" => "video/webm",
        "ogv" => "video/ogg",
        "json" => "application/json",
        _ => "application/octet-stream",
    }
}
