//! Structural checks for binary glTF 2.0 containers.
//!
//! Layout: a 12-byte header (`magic`, `version`, `length`, all u32 LE)
//! followed by chunks of `length`, `type`, `data`. The first chunk must be
//! JSON; an optional BIN chunk may follow it.

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

/// `b"glTF"` read as a little-endian u32.
pub const GLB_MAGIC: u32 = 0x4654_6C67;
pub const CHUNK_JSON: u32 = 0x4E4F_534A;
pub const CHUNK_BIN: u32 = 0x004E_4942;

const HEADER_LEN: usize = 12;
const CHUNK_HEADER_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GlbError {
    #[error("not a GLB file (bad magic)")]
    BadMagic,
    #[error("unsupported GLB version {0} (expected 2)")]
    UnsupportedVersion(u32),
    #[error("truncated GLB: header declares {declared} bytes, file has {actual}")]
    TruncatedFile { declared: u64, actual: u64 },
    #[error("chunk order: {0}")]
    ChunkOrderError(String),
    #[error("chunk at offset {offset} has length {length}, not a multiple of 4")]
    AlignmentError { offset: usize, length: u32 },
    #[error("JSON chunk: {0}")]
    JsonChunkError(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GlbChunk {
    pub type_tag: u32,
    pub length: u32,
}

impl GlbChunk {
    /// The chunk type as its four ASCII bytes, e.g. `"JSON"`.
    pub fn tag_str(&self) -> String {
        self.type_tag
            .to_le_bytes()
            .iter()
            .map(|&b| if b.is_ascii_graphic() { b as char } else { '.' })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GlbInfo {
    pub version: u32,
    pub total_length: u64,
    pub chunks: Vec<GlbChunk>,
    /// Names of the entries of the JSON `nodes` array that carry one.
    pub node_names: Vec<String>,
}

fn u32_at(bytes: &[u8], offset: usize) -> Option<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

/// Validates the container structure. Never reads past the declared length
/// and never panics.
pub fn validate_glb(bytes: &[u8]) -> Result<GlbInfo, GlbError> {
    let actual = bytes.len() as u64;
    let magic = bytes.get(..4).ok_or(GlbError::BadMagic)?;
    if magic != GLB_MAGIC.to_le_bytes() {
        return Err(GlbError::BadMagic);
    }
    let version = u32_at(bytes, 4).ok_or(GlbError::TruncatedFile {
        declared: HEADER_LEN as u64,
        actual,
    })?;
    if version != 2 {
        return Err(GlbError::UnsupportedVersion(version));
    }
    let declared = u32_at(bytes, 8).ok_or(GlbError::TruncatedFile {
        declared: HEADER_LEN as u64,
        actual,
    })? as u64;
    if declared != actual {
        return Err(GlbError::TruncatedFile { declared, actual });
    }
    if declared < HEADER_LEN as u64 {
        return Err(GlbError::TruncatedFile { declared, actual });
    }

    let total = declared as usize;
    let mut offset = HEADER_LEN;
    let mut chunks = Vec::new();
    let mut json: Option<&[u8]> = None;

    while offset < total {
        let (Some(length), Some(type_tag)) = (u32_at(bytes, offset), u32_at(bytes, offset + 4)) else {
            return Err(GlbError::TruncatedFile {
                declared,
                actual: offset as u64,
            });
        };
        if length % 4 != 0 {
            return Err(GlbError::AlignmentError { offset, length });
        }
        let start = offset + CHUNK_HEADER_LEN;
        let end = start
            .checked_add(length as usize)
            .filter(|&end| end <= total)
            .ok_or(GlbError::TruncatedFile {
                declared: (start as u64) + length as u64,
                actual,
            })?;

        match (chunks.len(), type_tag) {
            (0, CHUNK_JSON) => json = Some(&bytes[start..end]),
            (0, _) => {
                return Err(GlbError::ChunkOrderError(format!(
                    "first chunk is {:?}, expected JSON",
                    GlbChunk { type_tag, length }.tag_str()
                )))
            }
            (_, CHUNK_JSON) => {
                return Err(GlbError::ChunkOrderError("more than one JSON chunk".into()))
            }
            (n, CHUNK_BIN) if n != 1 => {
                return Err(GlbError::ChunkOrderError(
                    "BIN chunk must directly follow the JSON chunk".into(),
                ))
            }
            // Unknown chunk types are skipped by glTF loaders.
            _ => {}
        }
        chunks.push(GlbChunk { type_tag, length });
        offset = end;
    }

    let json = json.ok_or_else(|| GlbError::ChunkOrderError("no chunks after header".into()))?;
    let text = std::str::from_utf8(json)
        .map_err(|e| GlbError::JsonChunkError(format!("invalid UTF-8: {e}")))?;
    let doc: Value = serde_json::from_str(text.trim_end_matches([' ', '\0']))
        .map_err(|e| GlbError::JsonChunkError(e.to_string()))?;
    let doc = doc
        .as_object()
        .ok_or_else(|| GlbError::JsonChunkError("top-level value is not an object".into()))?;

    let node_names = doc
        .get("nodes")
        .and_then(Value::as_array)
        .map(|nodes| {
            nodes
                .iter()
                .filter_map(|n| n.get("name").and_then(Value::as_str))
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();

    Ok(GlbInfo {
        version,
        total_length: declared,
        chunks,
        node_names,
    })
}

/// Assembles a GLB container from a JSON document and optional binary
/// buffer, padding the JSON with spaces and the binary with zeros.
pub fn build_glb(json: &Value, bin: Option<&[u8]>) -> Vec<u8> {
    let mut json_bytes = serde_json::to_vec(json).expect("JSON value serializes");
    while !json_bytes.len().is_multiple_of(4) {
        json_bytes.push(b' ');
    }
    let bin_bytes = bin.map(|b| {
        let mut b = b.to_vec();
        while b.len() % 4 != 0 {
            b.push(0);
        }
        b
    });
    let total = HEADER_LEN
        + CHUNK_HEADER_LEN
        + json_bytes.len()
        + bin_bytes.as_ref().map_or(0, |b| CHUNK_HEADER_LEN + b.len());

    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&GLB_MAGIC.to_le_bytes());
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&CHUNK_JSON.to_le_bytes());
    out.extend_from_slice(&json_bytes);
    if let Some(b) = bin_bytes {
        out.extend_from_slice(&(b.len() as u32).to_le_bytes());
        out.extend_from_slice(&CHUNK_BIN.to_le_bytes());
        out.extend_from_slice(&b);
    }
    out
}
