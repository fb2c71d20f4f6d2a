use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::text::LocalizedText;
use crate::pano::Direction;

/// Latitude limit of the Web Mercator domain, in degrees.
pub const MERCATOR_MAX_LAT: f64 = 85.051129;

/// Eye height used when a panorama pose omits `camera_height`.
pub const DEFAULT_CAMERA_HEIGHT: f64 = 1.6;

/// WGS84 position, `lon` east-positive and `lat` north-positive, with an
/// optional height in meters above local ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub height: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl GeoPoint {
    pub const fn new(lon: f64, lat: f64) -> Self {
        GeoPoint {
            lon,
            lat,
            height: 0.0,
        }
    }

    pub const fn with_height(lon: f64, lat: f64, height: f64) -> Self {
        GeoPoint { lon, lat, height }
    }

    /// Checks the Web Mercator display domain.
    pub fn check(&self) -> Result<(), String> {
        if !(self.lon.is_finite() && self.lat.is_finite() && self.height.is_finite()) {
            return Err("coordinates must be finite numbers".into());
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!("lon {} outside [-180, 180]", self.lon));
        }
        if !(-MERCATOR_MAX_LAT..=MERCATOR_MAX_LAT).contains(&self.lat) {
            return Err(format!(
                "lat {} outside [-{MERCATOR_MAX_LAT}, {MERCATOR_MAX_LAT}]",
                self.lat
            ));
        }
        Ok(())
    }
}

/// Lowercase identifier: `[a-z0-9][a-z0-9_-]*`, at most 64 bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Slug(String);

impl Slug {
    pub fn new(s: impl Into<String>) -> Result<Self, String> {
        let s = s.into();
        let valid = !s.is_empty()
            && s.len() <= 64
            && s.bytes().enumerate().all(|(i, b)| {
                b.is_ascii_lowercase()
                    || b.is_ascii_digit()
                    || (i > 0 && (b == b'-' || b == b'_'))
            });
        if valid {
            Ok(Slug(s))
        } else {
            Err(format!(
                "invalid id {s:?}: expected lowercase letters, digits, '-' or '_' (max 64)"
            ))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Slug {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        Slug::new(s)
    }
}

impl From<Slug> for String {
    fn from(s: Slug) -> String {
        s.0
    }
}

impl fmt::Display for Slug {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Slug {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Slug {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Root of a heritage site description (`site.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteManifest {
    pub schema_version: u32,
    pub site_id: Slug,
    pub title: LocalizedText,
    #[serde(default)]
    pub description: LocalizedText,
    pub initial_view: InitialView,
    pub layers: Vec<TemporalLayer>,
    #[serde(default)]
    pub assets: Vec<MediaAsset>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<PanoAnnotation>,
}

impl SiteManifest {
    pub fn asset(&self, id: &str) -> Option<&MediaAsset> {
        self.assets.iter().find(|a| a.asset_id == id)
    }

    pub fn layer(&self, id: &str) -> Option<&TemporalLayer> {
        self.layers.iter().find(|l| l.layer_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialView {
    pub center: GeoPoint,
    pub zoom: f64,
}

/// One historical phase of the site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalLayer {
    pub layer_id: Slug,
    pub label: LocalizedText,
    pub period_start: i32,
    /// `None` means the phase is open-ended (present day).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_end: Option<i32>,
    pub base_style: BaseStyle,
    #[serde(default)]
    pub overlays: Vec<OverlayRef>,
    /// GeoJSON marker file, relative to the site root.
    pub markers_file: PathBuf,
    /// Markers read from `markers_file` at load time.
    #[serde(skip)]
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseStyle {
    Satellite,
    Plain,
}

/// A historical raster placed on the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOverlay", into = "RawOverlay")]
pub struct OverlayRef {
    pub asset_id: Slug,
    pub georeference: Georeference,
    pub opacity_default: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Georeference {
    Corners(Corners),
    Gcps(Vec<GroundControlPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corners {
    pub nw: GeoPoint,
    pub ne: GeoPoint,
    pub se: GeoPoint,
    pub sw: GeoPoint,
}

impl Corners {
    pub fn as_array(&self) -> [GeoPoint; 4] {
        [self.nw, self.ne, self.se, self.sw]
    }
}

/// Correspondence between a source-image pixel (y down) and a position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundControlPoint {
    pub pixel: [f64; 2],
    pub geo: GeoPoint,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverlay {
    asset_id: Slug,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    corners: Option<Corners>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gcps: Option<Vec<GroundControlPoint>>,
    #[serde(default = "default_opacity")]
    opacity_default: f64,
}

fn default_opacity() -> f64 {
    1.0
}

impl TryFrom<RawOverlay> for OverlayRef {
    type Error = String;

    fn try_from(raw: RawOverlay) -> Result<Self, String> {
        let georeference = match (raw.corners, raw.gcps) {
            (Some(c), None) => Georeference::Corners(c),
            (None, Some(g)) => Georeference::Gcps(g),
            (Some(_), Some(_)) => {
                return Err("overlay must give either \"corners\" or \"gcps\", not both".into())
            }
            (None, None) => return Err("overlay requires \"corners\" or \"gcps\"".into()),
        };
        Ok(OverlayRef {
            asset_id: raw.asset_id,
            georeference,
            opacity_default: raw.opacity_default,
        })
    }
}

impl From<OverlayRef> for RawOverlay {
    fn from(o: OverlayRef) -> Self {
        let (corners, gcps) = match o.georeference {
            Georeference::Corners(c) => (Some(c), None),
            Georeference::Gcps(g) => (None, Some(g)),
        };
        RawOverlay {
            asset_id: o.asset_id,
            corners,
            gcps,
            opacity_default: o.opacity_default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerKind {
    Model3d,
    Pano360,
    Info,
    Video,
}

impl MarkerKind {
    pub const ALL: [MarkerKind; 4] = [
        MarkerKind::Model3d,
        MarkerKind::Pano360,
        MarkerKind::Info,
        MarkerKind::Video,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MarkerKind::Model3d => "model3d",
            MarkerKind::Pano360 => "pano360",
            MarkerKind::Info => "info",
            MarkerKind::Video => "video",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MarkerKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Whether an asset may be shown in this marker's pop-up.
    pub fn accepts(self, asset: &MediaAsset) -> bool {
        match self {
            MarkerKind::Model3d => asset.kind == AssetKind::Glb,
            MarkerKind::Pano360 => {
                asset.kind == AssetKind::Image && asset.role == AssetRole::Panorama
            }
            MarkerKind::Info => asset.kind == AssetKind::Image,
            MarkerKind::Video => asset.kind == AssetKind::Video,
        }
    }
}

impl fmt::Display for MarkerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A geolocated entry point opening a media pop-up.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub marker_id: Slug,
    pub layer_id: Slug,
    pub kind: MarkerKind,
    pub position: GeoPoint,
    pub title: LocalizedText,
    pub body: LocalizedText,
    pub media: Vec<Slug>,
    pub related_locations: Vec<RelatedLocation>,
    pub nav_order: Option<i64>,
    /// Externally hosted media (e.g. a video platform URL), passed through.
    pub external_url: Option<String>,
    /// Feature properties this schema does not know about.
    pub extras: serde_json::Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelatedLocation {
    pub label: LocalizedText,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetKind {
    Glb,
    Image,
    Video,
}

impl AssetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AssetKind::Glb => "glb",
            AssetKind::Image => "image",
            AssetKind::Video => "video",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetRole {
    Overlay,
    Panorama,
    Photo,
    Model,
    Clip,
}

impl AssetRole {
    pub fn expected_kind(self) -> AssetKind {
        match self {
            AssetRole::Overlay | AssetRole::Panorama | AssetRole::Photo => AssetKind::Image,
            AssetRole::Model => AssetKind::Glb,
            AssetRole::Clip => AssetKind::Video,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextureMode {
    Photographic,
    /// Grayscale surfaces marking buildings that no longer exist.
    Monochrome,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RenderHints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture_mode: Option<TextureMode>,
    /// Cutaway variant of this model, toggled in the model viewer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dollhouse_variant: Option<Slug>,
    /// GLB node name the model viewer centers on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_target: Option<String>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

impl RenderHints {
    pub fn is_empty(&self) -> bool {
        self.texture_mode.is_none()
            && self.dollhouse_variant.is_none()
            && self.focus_target.is_none()
            && self.other.is_empty()
    }
}

/// A media file declared in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaAsset {
    pub asset_id: Slug,
    /// File path relative to the site root.
    pub path: PathBuf,
    pub kind: AssetKind,
    pub role: AssetRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<LocalizedText>,
    #[serde(default, skip_serializing_if = "RenderHints::is_empty")]
    pub render_hints: RenderHints,
    /// Capture pose; required to resolve geo-targeted annotations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pano_pose: Option<PanoPose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanoPose {
    pub position: GeoPoint,
    #[serde(default = "default_camera_height")]
    pub camera_height: f64,
    /// Degrees clockwise from true north shown at the image center.
    pub heading: f64,
}

fn default_camera_height() -> f64 {
    DEFAULT_CAMERA_HEIGHT
}

/// Hotspot inside a panorama.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAnnotation", into = "RawAnnotation")]
pub struct PanoAnnotation {
    pub pano_asset_id: Slug,
    pub label: LocalizedText,
    pub body: LocalizedText,
    pub target: AnnotationTarget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnnotationTarget {
    Direction(Direction),
    /// Resolved against the panorama's pose at compile time; `height` is
    /// meters above local ground.
    Geo(GeoPoint),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotation {
    pano_asset_id: Slug,
    label: LocalizedText,
    #[serde(default)]
    body: LocalizedText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geo_target: Option<GeoPoint>,
}

impl TryFrom<RawAnnotation> for PanoAnnotation {
    type Error = String;

    fn try_from(raw: RawAnnotation) -> Result<Self, String> {
        let target = match (raw.direction, raw.geo_target) {
            (Some(d), None) => AnnotationTarget::Direction(d),
            (None, Some(g)) => AnnotationTarget::Geo(g),
            (Some(_), Some(_)) => {
                return Err("annotation must give either \"direction\" or \"geo_target\", not both".into())
            }
            (None, None) => return Err("annotation requires \"direction\" or \"geo_target\"".into()),
        };
        Ok(PanoAnnotation {
            pano_asset_id: raw.pano_asset_id,
            label: raw.label,
            body: raw.body,
            target,
        })
    }
}

impl From<PanoAnnotation> for RawAnnotation {
    fn from(a: PanoAnnotation) -> Self {
        let (direction, geo_target) = match a.target {
            AnnotationTarget::Direction(d) => (Some(d), None),
            AnnotationTarget::Geo(g) => (None, Some(g)),
        };
        RawAnnotation {
            pano_asset_id: a.pano_asset_id,
            label: a.label,
            body: a.body,
            direction,
            geo_target,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slug_rules() {
        assert!(Slug::new("camp-1936").is_ok());
        assert!(Slug::new("b_07").is_ok());
        assert!(Slug::new("").is_err());
        assert!(Slug::new("-lead").is_err());
        assert!(Slug::new("Upper").is_err());
        assert!(Slug::new("../etc").is_err());
        assert!(Slug::new("a".repeat(65)).is_err());
    }

    #[test]
    fn geopoint_domain() {
        assert!(GeoPoint::new(-2.47, 41.77).check().is_ok());
        assert!(GeoPoint::new(180.0, MERCATOR_MAX_LAT).check().is_ok());
        assert!(GeoPoint::new(180.5, 0.0).check().is_err());
        assert!(GeoPoint::new(0.0, 86.0).check().is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).check().is_err());
    }

    #[test]
    fn overlay_requires_exactly_one_georeference() {
        let both = r#"{"asset_id":"plan","opacity_default":0.5,
            "corners":{"nw":{"lon":0,"lat":1},"ne":{"lon":1,"lat":1},"se":{"lon":1,"lat":0},"sw":{"lon":0,"lat":0}},
            "gcps":[]}"#;
        assert!(serde_json::from_str::<OverlayRef>(both).is_err());
        let neither = r#"{"asset_id":"plan"}"#;
        assert!(serde_json::from_str::<OverlayRef>(neither).is_err());
        let gcps = r#"{"asset_id":"plan","gcps":[{"pixel":[0,0],"geo":{"lon":0,"lat":0}}]}"#;
        let o: OverlayRef = serde_json::from_str(gcps).unwrap();
        assert!(matches!(o.georeference, Georeference::Gcps(ref g) if g.len() == 1));
        assert_eq!(o.opacity_default, 1.0);
    }

    #[test]
    fn marker_kind_media_rules() {
        let asset = |kind, role| MediaAsset {
            asset_id: Slug::new("a").unwrap(),
            path: "a".into(),
            kind,
            role,
            caption: None,
            render_hints: RenderHints::default(),
            pano_pose: None,
        };
        assert!(MarkerKind::Model3d.accepts(&asset(AssetKind::Glb, AssetRole::Model)));
        assert!(!MarkerKind::Model3d.accepts(&asset(AssetKind::Image, AssetRole::Photo)));
        assert!(MarkerKind::Pano360.accepts(&asset(AssetKind::Image, AssetRole::Panorama)));
        assert!(!MarkerKind::Pano360.accepts(&asset(AssetKind::Image, AssetRole::Photo)));
        assert!(MarkerKind::Info.accepts(&asset(AssetKind::Image, AssetRole::Photo)));
        assert!(MarkerKind::Video.accepts(&asset(AssetKind::Video, AssetRole::Clip)));
        assert!(!MarkerKind::Video.accepts(&asset(AssetKind::Glb, AssetRole::Model)));
    }
}
