use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::content::{ContentError, MarkerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub path: String,
    pub message: String,
}

/// Report codes. Errors are `E…`, warnings `W…`.
pub mod codes {
    pub const MANIFEST_MISSING: &str = "E001";
    pub const GLB_INVALID: &str = "E011";
    pub const IMAGE_INVALID: &str = "E012";
    pub const KIND_MISMATCH: &str = "E013";
    pub const NOT_EQUIRECTANGULAR: &str = "E014";
    pub const VIDEO_INVALID: &str = "E015";
    pub const FOCUS_TARGET_MISSING: &str = "E016";
    pub const GCP_OUT_OF_BOUNDS: &str = "E017";
    pub const PREVIEW_FAILED: &str = "E018";
    pub const GEOREF_DEGENERATE: &str = "E020";
    pub const GEOREF_RMSE: &str = "E021";
    pub const OVERLAY_DOMAIN: &str = "E022";
    pub const ANNOTATION_UNRESOLVED: &str = "E030";

    pub const GEOREF_RMSE_HIGH: &str = "W001";
    pub const PANORAMA_ASPECT: &str = "W002";
    pub const GLB_TOO_LARGE: &str = "W003";
    pub const PANORAMA_TOO_LARGE: &str = "W004";
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Stats {
    pub layers: usize,
    /// Marker count per kind name; all four kinds are always present.
    pub markers: BTreeMap<&'static str, usize>,
    pub assets: usize,
    pub total_bytes: u64,
}

impl Stats {
    pub fn empty() -> Self {
        Stats {
            markers: MarkerKind::ALL.iter().map(|k| (k.as_str(), 0)).collect(),
            ..Default::default()
        }
    }

    pub fn markers_of(&self, kind: MarkerKind) -> usize {
        self.markers.get(kind.as_str()).copied().unwrap_or(0)
    }
}

/// Everything a compile found. The compile succeeded iff `errors` is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompileReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
    pub stats: Stats,
    /// RMSE in meters per GCP-georeferenced overlay, keyed `layer/asset`.
    pub georef_rmse: BTreeMap<String, f64>,
}

impl Default for CompileReport {
    fn default() -> Self {
        CompileReport {
            errors: Vec::new(),
            warnings: Vec::new(),
            stats: Stats::empty(),
            georef_rmse: BTreeMap::new(),
        }
    }
}

impl CompileReport {
    pub fn is_success(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn error(&mut self, code: &'static str, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Diagnostic {
            severity: Severity::Error,
            code,
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn warn(&mut self, code: &'static str, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Diagnostic {
            severity: Severity::Warning,
            code,
            path: path.into(),
            message: message.into(),
        });
    }

    pub(crate) fn content_error(&mut self, e: &ContentError) {
        let message = match e {
            ContentError::Io { message, .. } => message.clone(),
            ContentError::Syntax { line, column, message, .. } => {
                format!("syntax error at line {line}, column {column}: {message}")
            }
            ContentError::Schema { message, .. } | ContentError::GeoJson { message, .. } => message.clone(),
            ContentError::Reference { missing, .. } => format!("unknown id(s): {}", missing.join(", ")),
            ContentError::DuplicateId { id, .. } => format!("duplicate id \"{id}\""),
        };
        self.error(e.code(), e.location(), message);
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.errors.iter().map(|d| d.code).collect()
    }

    /// Human-readable multi-line rendering for terminals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for d in self.errors.iter().chain(&self.warnings) {
            let tag = match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            let _ = writeln!(out, "{tag}[{}] {}: {}", d.code, d.path, d.message);
        }
        for (overlay, rmse) in &self.georef_rmse {
            let _ = writeln!(out, "georeference {overlay}: rmse {rmse:.2} m");
        }
        let s = &self.stats;
        let kinds: Vec<String> = s.markers.iter().map(|(k, n)| format!("{k} {n}")).collect();
        let _ = writeln!(
            out,
            "{} layer(s), markers: {}; {} asset(s), {} bytes",
            s.layers,
            kinds.join(", "),
            s.assets,
            s.total_bytes
        );
        let _ = writeln!(
            out,
            "{}: {} error(s), {} warning(s)",
            if self.is_success() { "ok" } else { "failed" },
            self.errors.len(),
            self.warnings.len()
        );
        out
    }
}
