use serde_json::{Map, Value};

use super::error::ContentError;
use super::model::GeoPoint;

/// A GeoJSON Point feature before it is interpreted as a marker.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeature {
    /// Feature-level `id` member, if any (numbers are stringified).
    pub id: Option<String>,
    /// `coordinates` as `[lon, lat]` or `[lon, lat, height]`, unchecked.
    pub position: GeoPoint,
    pub properties: Map<String, Value>,
}

fn geojson_err(path: impl Into<String>, message: impl Into<String>) -> ContentError {
    ContentError::GeoJson {
        path: path.into(),
        message: message.into(),
    }
}

/// Reads a GeoJSON FeatureCollection whose features are all Points.
///
/// Foreign members and `bbox` are ignored. A `null` `properties` member is
/// treated as an empty object.
pub fn parse_feature_collection(bytes: &[u8]) -> Result<Vec<RawFeature>, ContentError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| ContentError::Syntax {
        file: String::new(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = root
        .as_object()
        .ok_or_else(|| geojson_err("", "expected a GeoJSON object"))?;
    match root.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => {}
        Some(other) => {
            return Err(geojson_err(
                "type",
                format!("expected \"FeatureCollection\", found \"{other}\""),
            ))
        }
        None => return Err(geojson_err("type", "missing \"type\" member")),
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| geojson_err("features", "FeatureCollection requires a \"features\" array"))?;

    features
        .iter()
        .enumerate()
        .map(|(i, f)| parse_feature(f, &format!("features[{i}]")))
        .collect()
}

fn parse_feature(value: &Value, path: &str) -> Result<RawFeature, ContentError> {
    let obj = value
        .as_object()
        .ok_or_else(|| geojson_err(path, "feature must be an object"))?;
    if obj.get("type").and_then(Value::as_str) != Some("Feature") {
        return Err(geojson_err(format!("{path}.type"), "expected \"Feature\""));
    }

    let id = match obj.get("id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Number(n)) => Some(n.to_string()),
        Some(_) => return Err(geojson_err(format!("{path}.id"), "id must be a string or number")),
    };

    let geometry = match obj.get("geometry") {
        Some(Value::Object(g)) => g,
        _ => return Err(geojson_err(format!("{path}.geometry"), "missing coordinates")),
    };
    match geometry.get("type").and_then(Value::as_str) {
        Some("Point") => {}
        Some(_) => return Err(geojson_err(format!("{path}.geometry"), "markers must be Point")),
        None => return Err(geojson_err(format!("{path}.geometry.type"), "missing geometry type")),
    }
    let coords = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| geojson_err(format!("{path}.geometry"), "missing coordinates"))?;
    let nums: Option<Vec<f64>> = coords.iter().map(Value::as_f64).collect();
    let position = match nums.as_deref() {
        Some([lon, lat]) => GeoPoint::new(*lon, *lat),
        Some([lon, lat, h]) => GeoPoint::with_height(*lon, *lat, *h),
        _ => {
            return Err(geojson_err(
                format!("{path}.geometry.coordinates"),
                "expected [lon, lat] or [lon, lat, height]",
            ))
        }
    };

    let properties = match obj.get("properties") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(p)) => p.clone(),
        Some(_) => {
            return Err(geojson_err(
                format!("{path}.properties"),
                "properties must be an object or null",
            ))
        }
    };

    Ok(RawFeature {
        id,
        position,
        properties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_collection() {
        let f = parse_feature_collection(br#"{"type":"FeatureCollection","features":[]}"#).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn line_string_is_rejected() {
        let src = br#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}}]}"#;
        let err = parse_feature_collection(src).unwrap_err();
        assert_eq!(
            err,
            ContentError::GeoJson {
                path: "features[0].geometry".into(),
                message: "markers must be Point".into()
            }
        );
    }

    #[test]
    fn wrong_top_level_type() {
        let err = parse_feature_collection(br#"{"type":"Feature","features":[]}"#).unwrap_err();
        assert!(matches!(err, ContentError::GeoJson { ref path, .. } if path == "type"), "{err}");
    }

    #[test]
    fn missing_coordinates() {
        for src in [
            r#"{"type":"FeatureCollection","features":[{"type":"Feature","geometry":null,"properties":null}]}"#,
            r#"{"type":"FeatureCollection","features":[{"type":"Feature","geometry":{"type":"Point"}}]}"#,
        ] {
            let err = parse_feature_collection(src.as_bytes()).unwrap_err();
            assert!(err.to_string().contains("missing coordinates"), "{err}");
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_feature_collection(b"{\n  \"type\": ").unwrap_err();
        assert!(matches!(err, ContentError::Syntax { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn numeric_id_and_altitude() {
        let src = br#"{"type":"FeatureCollection","features":[
            {"type":"Feature","id":7,"geometry":{"type":"Point","coordinates":[-2.47,41.77,12.5]},"properties":null}]}"#;
        let f = &parse_feature_collection(src).unwrap()[0];
        assert_eq!(f.id.as_deref(), Some("7"));
        assert_eq!(f.position, GeoPoint::with_height(-2.47, 41.77, 12.5));
        assert!(f.properties.is_empty());
    }
}
