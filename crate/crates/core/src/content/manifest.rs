use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use serde_json::Value;

use super::error::{ContentError, ContentErrors};
use super::geojson::parse_feature_collection;
use super::markers::markers_from_features;
use super::model::{
    AnnotationTarget, AssetKind, AssetRole, GeoPoint, Georeference, MarkerKind, MediaAsset,
    SiteManifest, TextureMode,
};

pub const MANIFEST_FILE: &str = "site.json";
pub const SCHEMA_VERSION: u32 = 1;

/// Result of a collecting load: the manifest when it could be parsed at
/// all, plus every problem found.
#[derive(Debug)]
pub struct LoadedManifest {
    /// Directory that relative paths in the manifest resolve against.
    pub root: PathBuf,
    pub manifest: Option<SiteManifest>,
    pub errors: Vec<ContentError>,
}

/// Loads `site.json` (or `<dir>/site.json`) together with every layer's
/// marker file, checking all manifest invariants.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<SiteManifest, ContentErrors> {
    let loaded = load_manifest_lenient(path);
    match loaded.manifest {
        Some(m) if loaded.errors.is_empty() => Ok(m),
        _ => Err(ContentErrors(loaded.errors)),
    }
}

/// Like [`load_manifest`], but keeps a structurally valid manifest even when
/// semantic checks fail, so callers can keep validating other inputs.
pub fn load_manifest_lenient(path: impl AsRef<Path>) -> LoadedManifest {
    let path = path.as_ref();
    let file = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let root = file
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let fail = |err| LoadedManifest {
        root: root.clone(),
        manifest: None,
        errors: vec![err],
    };

    let bytes = match fs::read(&file) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return fail(ContentError::Io {
                file: MANIFEST_FILE.into(),
                message: format!("{MANIFEST_FILE} not found"),
            })
        }
        Err(e) => {
            return fail(ContentError::Io {
                file: file.display().to_string(),
                message: e.to_string(),
            })
        }
    };
    let mut manifest = match parse_manifest(&bytes) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };

    let mut errors = Vec::new();
    check_manifest(&manifest, &root, &mut errors);
    load_markers(&mut manifest, &root, &mut errors);
    check_marker_references(&manifest, &mut errors);

    LoadedManifest {
        root,
        manifest: Some(manifest),
        errors,
    }
}

/// Pretty JSON in the `site.json` format; loading it back (next to the same
/// marker files) yields an equal manifest.
pub fn serialize_manifest(manifest: &SiteManifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s
}

fn parse_manifest(bytes: &[u8]) -> Result<SiteManifest, ContentError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ContentError::Syntax {
        file: MANIFEST_FILE.into(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    if let Some(v) = value.get("schema_version") {
        if v.as_u64() != Some(SCHEMA_VERSION as u64) {
            return Err(ContentError::schema(
                "schema_version",
                format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})"),
            ));
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ContentError::schema(path, e.into_inner().to_string())
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn check_relative(path: &Path, field: &str, errors: &mut Vec<ContentError>) -> bool {
    let ok = !path.as_os_str().is_empty()
        && path
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
    if !ok {
        errors.push(ContentError::schema(
            field,
            format!("path {:?} must be relative to the site root and stay inside it", path),
        ));
    }
    ok
}

fn check_point(p: &GeoPoint, field: &str, errors: &mut Vec<ContentError>) {
    if let Err(e) = p.check() {
        errors.push(ContentError::schema(field, e));
    }
}

fn check_manifest(m: &SiteManifest, root: &Path, errors: &mut Vec<ContentError>) {
    check_point(&m.initial_view.center, "initial_view.center", errors);
    if !(0.0..=22.0).contains(&m.initial_view.zoom) {
        errors.push(ContentError::schema(
            "initial_view.zoom",
            format!("zoom {} outside [0, 22]", m.initial_view.zoom),
        ));
    }

    let assets = check_assets(m, root, errors);

    if m.layers.is_empty() {
        errors.push(ContentError::schema("layers", "at least 1 required"));
    }
    let mut layer_ids = HashSet::new();
    for (i, layer) in m.layers.iter().enumerate() {
        let at = format!("layers[{i}]");
        if !layer_ids.insert(&layer.layer_id) {
            errors.push(ContentError::DuplicateId {
                path: format!("{at}.layer_id"),
                id: layer.layer_id.to_string(),
            });
        }
        if i > 0 && layer.period_start < m.layers[i - 1].period_start {
            errors.push(ContentError::schema(
                format!("{at}.period_start"),
                "layers must be ordered by period_start ascending",
            ));
        }
        if let Some(end) = layer.period_end {
            if end < layer.period_start {
                errors.push(ContentError::schema(
                    format!("{at}.period_end"),
                    format!("period_end {end} precedes period_start {}", layer.period_start),
                ));
            }
        }
        check_relative(&layer.markers_file, &format!("{at}.markers_file"), errors);

        for (j, overlay) in layer.overlays.iter().enumerate() {
            let at = format!("{at}.overlays[{j}]");
            if !(0.0..=1.0).contains(&overlay.opacity_default) {
                errors.push(ContentError::schema(
                    format!("{at}.opacity_default"),
                    "opacity must lie in [0, 1]",
                ));
            }
            match assets.get(overlay.asset_id.as_str()) {
                None => errors.push(ContentError::Reference {
                    path: format!("{at}.asset_id"),
                    missing: vec![overlay.asset_id.to_string()],
                }),
                Some(a) if a.role != AssetRole::Overlay => errors.push(ContentError::schema(
                    format!("{at}.asset_id"),
                    format!("asset \"{}\" has role {:?}, expected overlay", a.asset_id, a.role),
                )),
                Some(_) => {}
            }
            match &overlay.georeference {
                Georeference::Corners(c) => {
                    for (name, p) in ["nw", "ne", "se", "sw"].iter().zip(c.as_array()) {
                        check_point(&p, &format!("{at}.corners.{name}"), errors);
                    }
                    if quad_area(&c.as_array()).abs() < 1e-14 {
                        errors.push(ContentError::schema(
                            format!("{at}.corners"),
                            "corner quadrilateral is degenerate (zero area)",
                        ));
                    }
                }
                Georeference::Gcps(gcps) => {
                    if gcps.len() < 3 {
                        errors.push(ContentError::schema(
                            format!("{at}.gcps"),
                            format!("at least 3 ground control points required, found {}", gcps.len()),
                        ));
                    }
                    for (k, g) in gcps.iter().enumerate() {
                        check_point(&g.geo, &format!("{at}.gcps[{k}].geo"), errors);
                        if !g.pixel.iter().all(|v| v.is_finite()) {
                            errors.push(ContentError::schema(
                                format!("{at}.gcps[{k}].pixel"),
                                "pixel coordinates must be finite",
                            ));
                        }
                    }
                }
            }
        }
    }

    for (i, ann) in m.annotations.iter().enumerate() {
        let at = format!("annotations[{i}]");
        let pano = match assets.get(ann.pano_asset_id.as_str()) {
            None => {
                errors.push(ContentError::Reference {
                    path: format!("{at}.pano_asset_id"),
                    missing: vec![ann.pano_asset_id.to_string()],
                });
                continue;
            }
            Some(a) => a,
        };
        if pano.role != AssetRole::Panorama {
            errors.push(ContentError::schema(
                format!("{at}.pano_asset_id"),
                format!("asset \"{}\" is not a panorama", pano.asset_id),
            ));
        }
        match &ann.target {
            AnnotationTarget::Direction(d) => {
                if let Err(e) = d.check() {
                    errors.push(ContentError::schema(format!("{at}.direction"), e.to_string()));
                }
            }
            AnnotationTarget::Geo(g) => {
                check_point(g, &format!("{at}.geo_target"), errors);
                if pano.pano_pose.is_none() {
                    errors.push(ContentError::schema(
                        format!("{at}.geo_target"),
                        format!("panorama \"{}\" has no pano_pose to resolve geo targets", pano.asset_id),
                    ));
                }
            }
        }
    }
}

fn check_assets<'m>(
    m: &'m SiteManifest,
    root: &Path,
    errors: &mut Vec<ContentError>,
) -> HashMap<&'m str, &'m MediaAsset> {
    let mut by_id = HashMap::new();
    for (i, asset) in m.assets.iter().enumerate() {
        let at = format!("assets[{i}]");
        if by_id.insert(asset.asset_id.as_str(), asset).is_some() {
            errors.push(ContentError::DuplicateId {
                path: format!("{at}.asset_id"),
                id: asset.asset_id.to_string(),
            });
        }
        if asset.role.expected_kind() != asset.kind {
            errors.push(ContentError::schema(
                format!("{at}.role"),
                format!(
                    "role {:?} requires kind {}, declared {}",
                    asset.role,
                    asset.role.expected_kind().as_str(),
                    asset.kind.as_str()
                ),
            ));
        }
        if asset.render_hints.texture_mode == Some(TextureMode::Monochrome)
            && asset.role != AssetRole::Model
        {
            errors.push(ContentError::schema(
                format!("{at}.render_hints.texture_mode"),
                "monochrome texture_mode is only allowed for model assets",
            ));
        }
        if let Some(pose) = &asset.pano_pose {
            check_point(&pose.position, &format!("{at}.pano_pose.position"), errors);
            if !(0.0..360.0).contains(&pose.heading) {
                errors.push(ContentError::schema(
                    format!("{at}.pano_pose.heading"),
                    format!("heading {} outside [0, 360)", pose.heading),
                ));
            }
            if !pose.camera_height.is_finite() {
                errors.push(ContentError::schema(
                    format!("{at}.pano_pose.camera_height"),
                    "camera_height must be finite",
                ));
            }
        }
        if check_relative(&asset.path, &format!("{at}.path"), errors) {
            let full = root.join(&asset.path);
            match fs::metadata(&full) {
                Ok(md) if md.is_file() => {}
                Ok(_) => errors.push(ContentError::Io {
                    file: asset.path.display().to_string(),
                    message: "asset path is not a regular file".into(),
                }),
                Err(_) => errors.push(ContentError::Io {
                    file: asset.path.display().to_string(),
                    message: "asset file not found".into(),
                }),
            }
        }
    }

    for (i, asset) in m.assets.iter().enumerate() {
        if let Some(variant) = &asset.render_hints.dollhouse_variant {
            let at = format!("assets[{i}].render_hints.dollhouse_variant");
            match by_id.get(variant.as_str()) {
                None => errors.push(ContentError::Reference {
                    path: at,
                    missing: vec![variant.to_string()],
                }),
                Some(v) if v.kind != AssetKind::Glb => errors.push(ContentError::schema(
                    at,
                    format!("dollhouse variant \"{variant}\" must be a glb asset"),
                )),
                Some(_) => {}
            }
        }
    }
    by_id
}

fn load_markers(m: &mut SiteManifest, root: &Path, errors: &mut Vec<ContentError>) {
    for layer in &mut m.layers {
        let name = layer.markers_file.display().to_string();
        if !check_relative(&layer.markers_file, &name, &mut Vec::new()) {
            continue;
        }
        let bytes = match fs::read(root.join(&layer.markers_file)) {
            Ok(b) => b,
            Err(e) => {
                errors.push(ContentError::Io {
                    file: name,
                    message: if e.kind() == io::ErrorKind::NotFound {
                        "marker file not found".into()
                    } else {
                        e.to_string()
                    },
                });
                continue;
            }
        };
        let features = match parse_feature_collection(&bytes) {
            Ok(f) => f,
            Err(e) => {
                errors.push(e.in_file(&name));
                continue;
            }
        };
        match markers_from_features(&features, &layer.layer_id) {
            Ok(markers) => layer.markers = markers,
            Err(errs) => errors.extend(errs.into_iter().map(|e| e.in_file(&name))),
        }
    }
}

fn check_marker_references(m: &SiteManifest, errors: &mut Vec<ContentError>) {
    for layer in &m.layers {
        let file = layer.markers_file.display().to_string();
        for marker in &layer.markers {
            let at = format!("{file}:{}", marker.marker_id);
            let missing: Vec<String> = marker
                .media
                .iter()
                .filter(|id| m.asset(id.as_str()).is_none())
                .map(|id| id.to_string())
                .collect();
            if !missing.is_empty() {
                errors.push(ContentError::Reference {
                    path: format!("{at}.media"),
                    missing,
                });
            }
            for id in &marker.media {
                if let Some(asset) = m.asset(id.as_str()) {
                    if !marker.kind.accepts(asset) {
                        errors.push(ContentError::schema(
                            format!("{at}.media"),
                            format!(
                                "{} marker cannot show asset \"{}\" ({} / {:?})",
                                marker.kind,
                                asset.asset_id,
                                asset.kind.as_str(),
                                asset.role
                            ),
                        ));
                    }
                }
            }
            let needs_media = match marker.kind {
                MarkerKind::Info => false,
                MarkerKind::Video => marker.external_url.is_none(),
                MarkerKind::Model3d | MarkerKind::Pano360 => true,
            };
            if needs_media && marker.media.is_empty() {
                errors.push(ContentError::schema(
                    format!("{at}.media"),
                    format!("{} marker requires at least one media asset", marker.kind),
                ));
            }
        }
    }
}

/// Shoelace area in squared degrees; only its sign/zero-ness matters here.
fn quad_area(p: &[GeoPoint; 4]) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        let (a, b) = (p[i], p[(i + 1) % 4]);
        sum += a.lon * b.lat - b.lon * a.lat;
    }
    sum / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_serde_position() {
        assert_eq!(strip_position("expected value at line 1 column 2"), "expected value");
        assert_eq!(strip_position("EOF"), "EOF");
    }

    #[test]
    fn degenerate_quad() {
        let p = GeoPoint::new;
        assert_eq!(quad_area(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)]), 0.0);
        assert!(quad_area(&[p(0.0, 1.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 0.0)]).abs() > 0.5);
    }
}
