//! Site directory → content-addressed bundle.
//!
//! Pipeline: load the manifest and marker files, validate every asset
//! (in parallel), georeference overlays, resolve panorama annotations, then
//! write `site.json`, `layers/<id>.json` and `assets/<hash>.<ext>` into a
//! temporary directory that is renamed into place. Problems are collected
//! across all stages; nothing is written unless the report is error-free.
//!
//! Bundle layout:
//!
//! ```text
//! out_dir/site.json
//! out_dir/layers/<layer_id>.json
//! out_dir/assets/<sha256-prefix>.<ext>
//! ```

mod bounds;
mod canonical;
mod hash;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;
use tracing::{debug, info};

pub use self::bounds::{fit_bounds, BBox, BoundsError, MIN_SPAN_DEG};
pub use self::canonical::{canonicalize, round_sig, to_canonical_bytes, SIGNIFICANT_DIGITS};
pub use self::hash::{content_hash, hashed_name, HASH_PREFIX_LEN};
pub use self::report::{codes, CompileReport, Diagnostic, Severity, Stats};

use crate::assets::{
    self, check_equirectangular, check_video, derive_preview, probe_image, validate_glb,
    EquirectCheck, GlbError, GlbInfo, ImageInfo, DEFAULT_PREVIEW_MAX_DIM, GLB_SIZE_BUDGET,
    PANORAMA_DIM_BUDGET,
};
use crate::content::{
    load_manifest_lenient, AnnotationTarget, AssetKind, AssetRole, GeoPoint, Georeference,
    LocalizedText, Marker, MediaAsset, SiteManifest, TemporalLayer, SCHEMA_VERSION,
};
use crate::georef::{fit_affine, overlay_corners, GeorefError};
use crate::pano::{annotation_direction, Direction};

/// Above this GCP fit RMSE (meters) the compile warns.
pub const RMSE_WARN_M: f64 = 15.0;
/// Above this GCP fit RMSE (meters) the overlay is rejected.
pub const RMSE_ERROR_M: f64 = 100.0;
/// Padding applied around a marker and its related locations.
pub const RELATED_BOUNDS_PADDING: f64 = 0.1;

pub const BUNDLE_SITE_INDEX: &str = "site.json";
pub const BUNDLE_LAYERS_DIR: &str = "layers";
pub const BUNDLE_ASSETS_DIR: &str = "assets";

#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Longest side of derived image previews, in pixels.
    pub max_preview: u32,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_preview: DEFAULT_PREVIEW_MAX_DIM,
        }
    }
}

/// A written bundle.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub root: PathBuf,
    pub site_index: Value,
    pub layer_indices: BTreeMap<String, Value>,
    /// asset_id → hashed file name under `assets/`.
    pub asset_map: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct Compiled {
    pub report: CompileReport,
    /// Present iff the report has no errors.
    pub bundle: Option<Bundle>,
}

#[derive(Debug, Error)]
pub enum BundleWriteError {
    #[error("cannot write bundle at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("refusing to replace {0}: it exists and is not a bundle directory")]
    NotABundle(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BundleWriteError + '_ {
    move |source| BundleWriteError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs every check without writing anything.
pub fn validate(site_dir: impl AsRef<Path>, opts: &CompileOptions) -> CompileReport {
    analyze(site_dir.as_ref(), opts).report
}

/// Compiles `site_dir` into `out_dir`. Returns `Err` only for I/O failures
/// while writing; content problems are reported in [`Compiled::report`] and
/// leave `out_dir` untouched.
pub fn compile(
    site_dir: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    opts: &CompileOptions,
) -> Result<Compiled, BundleWriteError> {
    let started = Instant::now();
    let out_dir = out_dir.as_ref();
    let Analysis { report, plan } = analyze(site_dir.as_ref(), opts);
    let Some(plan) = plan.filter(|_| report.is_success()) else {
        info!(errors = report.errors.len(), "compile failed; bundle not written");
        return Ok(Compiled {
            report,
            bundle: None,
        });
    };

    write_atomically(out_dir, &plan.files)?;
    info!(
        out = %out_dir.display(),
        files = plan.files.len(),
        elapsed_ms = started.elapsed().as_millis() as u64,
        "bundle written"
    );
    Ok(Compiled {
        report,
        bundle: Some(Bundle {
            root: out_dir.to_path_buf(),
            site_index: plan.site_index,
            layer_indices: plan.layer_indices,
            asset_map: plan.asset_map,
        }),
    })
}

struct Analysis {
    report: CompileReport,
    plan: Option<BundlePlan>,
}

struct BundlePlan {
    site_index: Value,
    layer_indices: BTreeMap<String, Value>,
    asset_map: BTreeMap<String, String>,
    /// Relative bundle path → contents.
    files: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug)]
enum Detected {
    Glb(GlbInfo),
    Image(ImageInfo),
    Video,
}

struct ProcessedAsset {
    file_name: String,
    bytes: Vec<u8>,
    detected: Detected,
    /// Derived preview, when the image had to be downscaled.
    preview: Option<(String, Vec<u8>)>,
}

/// Outcome of validating one asset: `None` when it produced errors.
struct AssetOutcome {
    processed: Option<ProcessedAsset>,
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
}

fn analyze(site_dir: &Path, opts: &CompileOptions) -> Analysis {
    let mut report = CompileReport::default();
    let loaded = load_manifest_lenient(site_dir);
    for e in &loaded.errors {
        report.content_error(e);
    }
    let Some(manifest) = loaded.manifest else {
        return Analysis { report, plan: None };
    };
    let root = loaded.root;

    report.stats.layers = manifest.layers.len();
    report.stats.assets = manifest.assets.len();
    for marker in manifest.layers.iter().flat_map(|l| &l.markers) {
        *report.stats.markers.entry(marker.kind.as_str()).or_default() += 1;
    }

    // Assets flagged by the manifest loader (missing file, bad path) are
    // already reported; skip them here so each fault is listed once.
    let already_reported: Vec<bool> = manifest
        .assets
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let file = a.path.display().to_string();
            let prefix = format!("assets[{i}].");
            report
                .errors
                .iter()
                .any(|d| d.path == file || d.path.starts_with(&prefix))
        })
        .collect();

    let outcomes: Vec<AssetOutcome> = manifest
        .assets
        .par_iter()
        .enumerate()
        .zip(already_reported.par_iter())
        .map(|((i, asset), &skip)| {
            if skip {
                AssetOutcome {
                    processed: None,
                    errors: Vec::new(),
                    warnings: Vec::new(),
                }
            } else {
                process_asset(&root, i, asset, opts)
            }
        })
        .collect();

    let mut processed: HashMap<&str, ProcessedAsset> = HashMap::new();
    for (asset, outcome) in manifest.assets.iter().zip(outcomes) {
        report.errors.extend(outcome.errors);
        report.warnings.extend(outcome.warnings);
        if let Some(p) = outcome.processed {
            report.stats.total_bytes += p.bytes.len() as u64;
            processed.insert(asset.asset_id.as_str(), p);
        }
    }

    let overlays = georeference_overlays(&manifest, &processed, &mut report);
    let annotations = resolve_annotations(&manifest, &mut report);

    if !report.is_success() {
        return Analysis { report, plan: None };
    }
    let plan = build_plan(&manifest, &processed, &overlays, &annotations);
    Analysis {
        report,
        plan: Some(plan),
    }
}

fn process_asset(root: &Path, index: usize, asset: &MediaAsset, opts: &CompileOptions) -> AssetOutcome {
    let at = format!("assets[{index}]");
    let mut out = AssetOutcome {
        processed: None,
        errors: Vec::new(),
        warnings: Vec::new(),
    };
    let mut fail = |code: &'static str, message: String| {
        out.errors.push(Diagnostic {
            severity: Severity::Error,
            code,
            path: at.clone(),
            message,
        });
    };

    let bytes = match fs::read(root.join(&asset.path)) {
        Ok(b) => b,
        Err(e) => {
            fail("E010", format!("cannot read {}: {e}", asset.path.display()));
            return out;
        }
    };
    debug!(asset = %asset.asset_id, bytes = bytes.len(), "validating asset");

    let detected = match asset.kind {
        AssetKind::Glb => match validate_glb(&bytes) {
            Ok(info) => Detected::Glb(info),
            Err(GlbError::BadMagic) if probe_image(&bytes).is_ok() => {
                fail(codes::KIND_MISMATCH, "declared glb but the file is an image".into());
                return out;
            }
            Err(e) => {
                fail(codes::GLB_INVALID, e.to_string());
                return out;
            }
        },
        AssetKind::Image => match probe_image(&bytes) {
            Ok(info) => Detected::Image(info),
            Err(_) if validate_glb(&bytes).is_ok() => {
                fail(codes::KIND_MISMATCH, "declared image but the file is a GLB model".into());
                return out;
            }
            Err(e) => {
                fail(codes::IMAGE_INVALID, e.to_string());
                return out;
            }
        },
        AssetKind::Video => {
            if validate_glb(&bytes).is_ok() || probe_image(&bytes).is_ok() {
                fail(codes::KIND_MISMATCH, "declared video but the file is a model or image".into());
                return out;
            }
            if let Err(e) = check_video(&asset.path, &bytes) {
                fail(codes::VIDEO_INVALID, e.to_string());
                return out;
            }
            Detected::Video
        }
    };

    let mut warn = |code: &'static str, message: String| {
        out.warnings.push(Diagnostic {
            severity: Severity::Warning,
            code,
            path: at.clone(),
            message,
        });
    };
    let mut errors = Vec::new();
    let mut preview = None;
    match &detected {
        Detected::Glb(info) => {
            if info.total_length > GLB_SIZE_BUDGET {
                warn(
                    codes::GLB_TOO_LARGE,
                    format!("model is {} bytes (budget {GLB_SIZE_BUDGET})", info.total_length),
                );
            }
            if let Some(target) = &asset.render_hints.focus_target {
                if !info.node_names.iter().any(|n| n == target) {
                    errors.push((
                        codes::FOCUS_TARGET_MISSING,
                        format!("focus_target \"{target}\" is not a node of this model"),
                    ));
                }
            }
        }
        Detected::Image(info) => {
            if asset.role == AssetRole::Panorama {
                match check_equirectangular(info) {
                    EquirectCheck::Pass => {}
                    EquirectCheck::Warn => warn(
                        codes::PANORAMA_ASPECT,
                        format!("{}x{} is close to but not exactly 2:1", info.width, info.height),
                    ),
                    EquirectCheck::Fail => errors.push((
                        codes::NOT_EQUIRECTANGULAR,
                        format!("{}x{} is not a 2:1 equirectangular panorama", info.width, info.height),
                    )),
                }
                if info.width.max(info.height) > PANORAMA_DIM_BUDGET {
                    warn(
                        codes::PANORAMA_TOO_LARGE,
                        format!("panorama is {}x{} (budget {PANORAMA_DIM_BUDGET} px)", info.width, info.height),
                    );
                }
            }
            match derive_preview(&bytes, opts.max_preview) {
                Ok(p) if p == bytes => {}
                Ok(p) => preview = Some((hashed_name(&p, "png"), p)),
                Err(e) => errors.push((codes::PREVIEW_FAILED, e.to_string())),
            }
        }
        Detected::Video => {}
    }
    for (code, message) in errors {
        fail(code, message);
    }
    if !out.errors.is_empty() {
        return out;
    }

    let ext = assets::extension_of(&asset.path).unwrap_or_else(|| {
        match &detected {
            Detected::Glb(_) => "glb",
            Detected::Image(info) => info.format.extension(),
            Detected::Video => "bin",
        }
        .to_string()
    });
    out.processed = Some(ProcessedAsset {
        file_name: hashed_name(&bytes, &ext),
        bytes,
        detected,
        preview,
    });
    out
}

struct PlacedOverlay {
    corners: [GeoPoint; 4],
    method: &'static str,
    rmse: Option<f64>,
    residuals: Vec<f64>,
}

/// Keyed by `(layer index, overlay index)`.
fn georeference_overlays(
    manifest: &SiteManifest,
    processed: &HashMap<&str, ProcessedAsset>,
    report: &mut CompileReport,
) -> HashMap<(usize, usize), PlacedOverlay> {
    let mut placed = HashMap::new();
    for (li, layer) in manifest.layers.iter().enumerate() {
        for (oi, overlay) in layer.overlays.iter().enumerate() {
            let at = format!("layers[{li}].overlays[{oi}]");
            match &overlay.georeference {
                Georeference::Corners(c) => {
                    placed.insert(
                        (li, oi),
                        PlacedOverlay {
                            corners: c.as_array(),
                            method: "corners",
                            rmse: None,
                            residuals: Vec::new(),
                        },
                    );
                }
                Georeference::Gcps(gcps) => {
                    let Some(ProcessedAsset {
                        detected: Detected::Image(info),
                        ..
                    }) = processed.get(overlay.asset_id.as_str())
                    else {
                        // Missing or invalid image: already reported.
                        continue;
                    };
                    if gcps.len() < 3 {
                        // Reported by the manifest schema checks.
                        continue;
                    }
                    let fit = match fit_affine(gcps, Some((info.width, info.height))) {
                        Ok(f) => f,
                        Err(e) => {
                            let code = match &e {
                                GeorefError::PixelOutOfBounds { .. } => codes::GCP_OUT_OF_BOUNDS,
                                GeorefError::Domain(_) => codes::OVERLAY_DOMAIN,
                                _ => codes::GEOREF_DEGENERATE,
                            };
                            report.error(code, format!("{at}.gcps"), e.to_string());
                            continue;
                        }
                    };
                    let key = format!("{}/{}", layer.layer_id, overlay.asset_id);
                    report.georef_rmse.insert(key, fit.rmse);
                    if fit.rmse > RMSE_ERROR_M {
                        report.error(
                            codes::GEOREF_RMSE,
                            format!("{at}.gcps"),
                            format!("fit rmse {:.2} m exceeds {RMSE_ERROR_M} m; check control points", fit.rmse),
                        );
                        continue;
                    }
                    if fit.rmse > RMSE_WARN_M {
                        report.warn(
                            codes::GEOREF_RMSE_HIGH,
                            format!("{at}.gcps"),
                            format!("fit rmse {:.2} m exceeds {RMSE_WARN_M} m", fit.rmse),
                        );
                    }
                    match overlay_corners(&fit.transform, info.width, info.height) {
                        Ok(corners) => {
                            placed.insert(
                                (li, oi),
                                PlacedOverlay {
                                    corners,
                                    method: "gcps",
                                    rmse: Some(fit.rmse),
                                    residuals: fit.residuals,
                                },
                            );
                        }
                        Err(e) => report.error(codes::OVERLAY_DOMAIN, at, e.to_string()),
                    }
                }
            }
        }
    }
    placed
}

struct ResolvedAnnotation<'m> {
    label: &'m LocalizedText,
    body: &'m LocalizedText,
    direction: Direction,
    source: &'static str,
}

/// Resolved annotations grouped by panorama asset id, in manifest order.
fn resolve_annotations<'m>(
    manifest: &'m SiteManifest,
    report: &mut CompileReport,
) -> HashMap<&'m str, Vec<ResolvedAnnotation<'m>>> {
    let mut out: HashMap<&str, Vec<ResolvedAnnotation>> = HashMap::new();
    for (i, ann) in manifest.annotations.iter().enumerate() {
        let at = format!("annotations[{i}]");
        let (direction, source) = match &ann.target {
            AnnotationTarget::Direction(d) => (*d, "explicit"),
            AnnotationTarget::Geo(target) => {
                let Some(pose) = manifest
                    .asset(ann.pano_asset_id.as_str())
                    .and_then(|a| a.pano_pose.as_ref())
                else {
                    // Missing pose or asset: reported by the manifest checks.
                    continue;
                };
                match annotation_direction(pose, target) {
                    Ok(d) => (d, "geo"),
                    Err(e) => {
                        report.error(codes::ANNOTATION_UNRESOLVED, format!("{at}.geo_target"), e.to_string());
                        continue;
                    }
                }
            }
        };
        out.entry(ann.pano_asset_id.as_str()).or_default().push(ResolvedAnnotation {
            label: &ann.label,
            body: &ann.body,
            direction,
            source,
        });
    }
    out
}

fn text(t: &LocalizedText) -> Value {
    serde_json::to_value(t).expect("text serializes")
}

fn point(p: &GeoPoint) -> Value {
    json!({"lon": p.lon, "lat": p.lat, "height": p.height})
}

fn lonlat(p: &GeoPoint) -> Value {
    json!({"lon": p.lon, "lat": p.lat})
}

fn asset_url(name: &str) -> String {
    format!("{BUNDLE_ASSETS_DIR}/{name}")
}

fn build_plan(
    manifest: &SiteManifest,
    processed: &HashMap<&str, ProcessedAsset>,
    overlays: &HashMap<(usize, usize), PlacedOverlay>,
    annotations: &HashMap<&str, Vec<ResolvedAnnotation<'_>>>,
) -> BundlePlan {
    let mut files = BTreeMap::new();
    let mut asset_map = BTreeMap::new();
    let mut asset_entries = serde_json::Map::new();

    for asset in &manifest.assets {
        let p = &processed[asset.asset_id.as_str()];
        asset_map.insert(asset.asset_id.to_string(), p.file_name.clone());
        files.insert(asset_url(&p.file_name), p.bytes.clone());
        if let Some((name, bytes)) = &p.preview {
            files.insert(asset_url(name), bytes.clone());
        }
        asset_entries.insert(asset.asset_id.to_string(), asset_entry(asset, p, processed));
    }

    let mut layer_indices = BTreeMap::new();
    let mut layer_summaries = Vec::new();
    for (li, layer) in manifest.layers.iter().enumerate() {
        let index = layer_index(li, layer, manifest, processed, overlays, annotations);
        let rel = format!("{BUNDLE_LAYERS_DIR}/{}.json", layer.layer_id);
        files.insert(rel.clone(), to_canonical_bytes(&index));
        layer_indices.insert(layer.layer_id.to_string(), canonicalize(index));
        layer_summaries.push(json!({
            "layer_id": layer.layer_id,
            "label": text(&layer.label),
            "period_start": layer.period_start,
            "period_end": layer.period_end,
            "base_style": layer.base_style,
            "index": rel,
            "marker_count": layer.markers.len(),
            "overlay_count": layer.overlays.len(),
        }));
    }

    let site_index = json!({
        "schema_version": SCHEMA_VERSION,
        "site_id": manifest.site_id,
        "title": text(&manifest.title),
        "description": text(&manifest.description),
        "initial_view": {
            "center": lonlat(&manifest.initial_view.center),
            "zoom": manifest.initial_view.zoom,
        },
        "layers": layer_summaries,
        "assets": asset_entries,
    });
    files.insert(BUNDLE_SITE_INDEX.to_string(), to_canonical_bytes(&site_index));

    BundlePlan {
        site_index: canonicalize(site_index),
        layer_indices,
        asset_map,
        files,
    }
}

fn asset_entry(
    asset: &MediaAsset,
    p: &ProcessedAsset,
    processed: &HashMap<&str, ProcessedAsset>,
) -> Value {
    let mut entry = json!({
        "asset_id": asset.asset_id,
        "kind": asset.kind.as_str(),
        "role": asset.role,
        "path": asset_url(&p.file_name),
        "hash": content_hash(&p.bytes),
        "bytes": p.bytes.len(),
    });
    let obj = entry.as_object_mut().expect("object literal");
    if let Some(c) = &asset.caption {
        obj.insert("caption".into(), text(c));
    }
    match &p.detected {
        Detected::Image(info) => {
            obj.insert("format".into(), json!(info.format));
            obj.insert("width".into(), json!(info.width));
            obj.insert("height".into(), json!(info.height));
            let preview = p
                .preview
                .as_ref()
                .map(|(name, _)| asset_url(name))
                .unwrap_or_else(|| asset_url(&p.file_name));
            obj.insert("preview".into(), json!(preview));
        }
        Detected::Glb(info) => {
            obj.insert("node_names".into(), json!(info.node_names));
        }
        Detected::Video => {}
    }
    let hints = &asset.render_hints;
    if !hints.is_empty() {
        let mut h = serde_json::to_value(hints).expect("hints serialize");
        if let (Some(variant), Some(map)) = (&hints.dollhouse_variant, h.as_object_mut()) {
            if let Some(vp) = processed.get(variant.as_str()) {
                map.insert("dollhouse_path".into(), json!(asset_url(&vp.file_name)));
            }
        }
        obj.insert("render_hints".into(), h);
    }
    if let Some(pose) = &asset.pano_pose {
        obj.insert(
            "pano_pose".into(),
            json!({"position": point(&pose.position), "camera_height": pose.camera_height, "heading": pose.heading}),
        );
    }
    entry
}

fn layer_index(
    li: usize,
    layer: &TemporalLayer,
    manifest: &SiteManifest,
    processed: &HashMap<&str, ProcessedAsset>,
    overlays: &HashMap<(usize, usize), PlacedOverlay>,
    annotations: &HashMap<&str, Vec<ResolvedAnnotation<'_>>>,
) -> Value {
    let overlay_values: Vec<Value> = layer
        .overlays
        .iter()
        .enumerate()
        .map(|(oi, o)| {
            let placed = &overlays[&(li, oi)];
            let p = &processed[o.asset_id.as_str()];
            let [nw, ne, se, sw] = placed.corners;
            let mut v = json!({
                "asset_id": o.asset_id,
                "path": asset_url(&p.file_name),
                "opacity_default": o.opacity_default,
                "georeference": placed.method,
                "corners": {"nw": lonlat(&nw), "ne": lonlat(&ne), "se": lonlat(&se), "sw": lonlat(&sw)},
            });
            if let Some(rmse) = placed.rmse {
                v["rmse_m"] = json!(rmse);
                v["residuals_m"] = json!(placed.residuals);
            }
            v
        })
        .collect();

    let markers: Vec<Value> = layer
        .markers
        .iter()
        .enumerate()
        .map(|(i, m)| marker_value(i, m, manifest, processed, annotations))
        .collect();

    json!({
        "schema_version": SCHEMA_VERSION,
        "layer_id": layer.layer_id,
        "label": text(&layer.label),
        "period_start": layer.period_start,
        "period_end": layer.period_end,
        "base_style": layer.base_style,
        "overlays": overlay_values,
        "markers": markers,
    })
}

fn marker_value(
    nav_index: usize,
    m: &Marker,
    manifest: &SiteManifest,
    processed: &HashMap<&str, ProcessedAsset>,
    annotations: &HashMap<&str, Vec<ResolvedAnnotation<'_>>>,
) -> Value {
    let media: Vec<Value> = m
        .media
        .iter()
        .map(|id| {
            let asset = manifest.asset(id.as_str()).expect("references checked");
            let p = &processed[id.as_str()];
            let mut v = json!({
                "asset_id": id,
                "kind": asset.kind.as_str(),
                "role": asset.role,
                "path": asset_url(&p.file_name),
            });
            let obj = v.as_object_mut().expect("object literal");
            if let Some(c) = &asset.caption {
                obj.insert("caption".into(), text(c));
            }
            if let Detected::Image(info) = &p.detected {
                obj.insert("width".into(), json!(info.width));
                obj.insert("height".into(), json!(info.height));
                let preview = p.preview.as_ref().map(|(n, _)| n).unwrap_or(&p.file_name);
                obj.insert("preview".into(), json!(asset_url(preview)));
            }
            let hints = &asset.render_hints;
            if let Some(mode) = hints.texture_mode {
                obj.insert("texture_mode".into(), json!(mode));
            }
            if let Some(target) = &hints.focus_target {
                obj.insert("focus_target".into(), json!(target));
            }
            if let Some(variant) = &hints.dollhouse_variant {
                let vp = &processed[variant.as_str()];
                obj.insert(
                    "dollhouse".into(),
                    json!({"asset_id": variant, "path": asset_url(&vp.file_name)}),
                );
            }
            if let Some(list) = annotations.get(id.as_str()) {
                let anns: Vec<Value> = list
                    .iter()
                    .map(|a| {
                        json!({
                            "label": text(a.label),
                            "body": text(a.body),
                            "yaw": a.direction.yaw,
                            "pitch": a.direction.pitch,
                            "source": a.source,
                        })
                    })
                    .collect();
                obj.insert("annotations".into(), json!(anns));
            }
            v
        })
        .collect();

    let mut v = json!({
        "marker_id": m.marker_id,
        "kind": m.kind,
        "position": point(&m.position),
        "title": text(&m.title),
        "body": text(&m.body),
        "nav_index": nav_index,
        "nav_order": m.nav_order,
        "media": media,
    });
    let obj = v.as_object_mut().expect("object literal");
    if !m.related_locations.is_empty() {
        let related: Vec<Value> = m
            .related_locations
            .iter()
            .map(|r| json!({"label": text(&r.label), "position": point(&r.position)}))
            .collect();
        obj.insert("related_locations".into(), json!(related));
        let mut pts = vec![m.position];
        pts.extend(m.related_locations.iter().map(|r| r.position));
        let b = fit_bounds(&pts, RELATED_BOUNDS_PADDING).expect("non-empty point list");
        obj.insert("zoom_out_bounds".into(), json!(b));
    }
    if let Some(url) = &m.external_url {
        obj.insert("external_url".into(), json!(url));
    }
    if !m.extras.is_empty() {
        obj.insert("extras".into(), Value::Object(m.extras.clone()));
    }
    v
}

fn write_atomically(out_dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<(), BundleWriteError> {
    let parent = match out_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;

    let existing = out_dir.exists();
    if existing {
        let replaceable = out_dir.is_dir()
            && (out_dir.join(BUNDLE_SITE_INDEX).is_file()
                || fs::read_dir(out_dir).map_err(io_err(out_dir))?.next().is_none());
        if !replaceable {
            return Err(BundleWriteError::NotABundle(out_dir.to_path_buf()));
        }
    }

    let staging = tempfile::Builder::new()
        .prefix(".heritage-forge-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;
    for (rel, bytes) in files {
        let path = staging.path().join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(staging.path(), fs::Permissions::from_mode(0o755))
            .map_err(io_err(staging.path()))?;
    }

    if existing {
        let name = out_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "bundle".into());
        let retired = parent.join(format!(".{name}.old-{}", std::process::id()));
        fs::rename(out_dir, &retired).map_err(io_err(out_dir))?;
        if let Err(e) = fs::rename(staging.path(), out_dir) {
            let _ = fs::rename(&retired, out_dir);
            return Err(io_err(out_dir)(e));
        }
        let _ = fs::remove_dir_all(&retired);
    } else {
        fs::rename(staging.path(), out_dir).map_err(io_err(out_dir))?;
    }
    // The staging path no longer exists; dropping the handle is a no-op.
    drop(staging);
    Ok(())
}

/// Every `assets/…` reference in a bundle's index files that does not
/// exist on disk. Empty for a well-formed bundle.
pub fn missing_bundle_references(bundle_dir: impl AsRef<Path>) -> io::Result<Vec<String>> {
    let dir = bundle_dir.as_ref();
    let mut indices = vec![dir.join(BUNDLE_SITE_INDEX)];
    for entry in fs::read_dir(dir.join(BUNDLE_LAYERS_DIR))? {
        indices.push(entry?.path());
    }
    indices.sort();

    let mut missing = Vec::new();
    for path in indices {
        let value: Value = serde_json::from_slice(&fs::read(&path)?)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let mut refs = Vec::new();
        collect_asset_refs(&value, &mut refs);
        for r in refs {
            if !dir.join(&r).is_file() {
                missing.push(r);
            }
        }
    }
    Ok(missing)
}

fn collect_asset_refs(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) if s.starts_with("assets/") => out.push(s.clone()),
        Value::Array(items) => items.iter().for_each(|i| collect_asset_refs(i, out)),
        Value::Object(map) => map.values().for_each(|i| collect_asset_refs(i, out)),
        _ => {}
    }
}
