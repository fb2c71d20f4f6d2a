//! Site manifest schema and marker ingestion.
//!
//! Coordinates are always `lon, lat` (GeoJSON order), in WGS84 degrees.

mod error;
mod geojson;
mod manifest;
mod markers;
mod model;
mod text;

pub use error::{ContentError, ContentErrors};
pub use geojson::{parse_feature_collection, RawFeature};
pub use manifest::{load_manifest, load_manifest_lenient, serialize_manifest, LoadedManifest, MANIFEST_FILE, SCHEMA_VERSION};
pub use markers::markers_from_features;
pub use model::{
    AnnotationTarget, AssetKind, AssetRole, BaseStyle, Corners, GeoPoint, Georeference,
    GroundControlPoint, InitialView, Marker, MarkerKind, MediaAsset, OverlayRef, PanoAnnotation,
    PanoPose, RelatedLocation, RenderHints, SiteManifest, Slug, TemporalLayer, TextureMode,
    DEFAULT_CAMERA_HEIGHT, MERCATOR_MAX_LAT,
};
pub use text::LocalizedText;
