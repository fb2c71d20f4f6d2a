use std::collections::HashSet;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use super::error::{ContentError, ContentErrors};
use super::geojson::RawFeature;
use super::model::{Marker, MarkerKind, RelatedLocation, Slug};
use super::text::LocalizedText;

const KNOWN_PROPERTIES: [&str; 9] = [
    "marker_id",
    "layer_id",
    "kind",
    "title",
    "body",
    "media",
    "related_locations",
    "nav_order",
    "external_url",
];

/// Interprets Point features as the markers of one layer.
///
/// Output order: markers with `nav_order` ascending (ties by `marker_id`),
/// then markers without `nav_order` in file order. All problems are
/// collected before returning.
pub fn markers_from_features(
    features: &[RawFeature],
    layer_id: &Slug,
) -> Result<Vec<Marker>, ContentErrors> {
    let mut errors = Vec::new();
    let mut markers = Vec::with_capacity(features.len());
    let mut seen = HashSet::new();

    for (i, feature) in features.iter().enumerate() {
        let path = format!("features[{i}]");
        match marker_from_feature(feature, layer_id, &path) {
            Ok(marker) => {
                if !seen.insert(marker.marker_id.clone()) {
                    errors.push(ContentError::DuplicateId {
                        path: format!("{path}.properties.marker_id"),
                        id: marker.marker_id.to_string(),
                    });
                } else {
                    markers.push(marker);
                }
            }
            Err(mut errs) => errors.append(&mut errs),
        }
    }

    if !errors.is_empty() {
        return Err(ContentErrors(errors));
    }
    sort_for_navigation(&mut markers);
    Ok(markers)
}

pub(crate) fn sort_for_navigation(markers: &mut [Marker]) {
    // sort_by is stable, so unordered markers keep file order.
    markers.sort_by(|a, b| match (a.nav_order, b.nav_order) {
        (Some(x), Some(y)) => x.cmp(&y).then_with(|| a.marker_id.cmp(&b.marker_id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
}

fn marker_from_feature(
    feature: &RawFeature,
    layer_id: &Slug,
    path: &str,
) -> Result<Marker, Vec<ContentError>> {
    let props = &feature.properties;
    let mut errors = Vec::new();
    let prop_path = |key: &str| format!("{path}.properties.{key}");

    let raw_id = match (props.get("marker_id"), &feature.id) {
        (Some(Value::String(p)), Some(f)) if p != f => {
            errors.push(ContentError::schema(
                prop_path("marker_id"),
                format!("marker_id \"{p}\" disagrees with feature id \"{f}\""),
            ));
            None
        }
        (Some(Value::String(p)), _) => Some(p.clone()),
        (Some(_), _) => {
            errors.push(ContentError::schema(prop_path("marker_id"), "must be a string"));
            None
        }
        (None, Some(f)) => Some(f.clone()),
        (None, None) => {
            errors.push(ContentError::schema(prop_path("marker_id"), "missing marker_id"));
            None
        }
    };
    let marker_id = raw_id.and_then(|id| {
        Slug::new(id)
            .map_err(|e| errors.push(ContentError::schema(prop_path("marker_id"), e)))
            .ok()
    });

    if let Some(declared) = props.get("layer_id") {
        if declared.as_str() != Some(layer_id.as_str()) {
            errors.push(ContentError::schema(
                prop_path("layer_id"),
                format!("marker declares layer {declared} but sits in the file of layer \"{layer_id}\""),
            ));
        }
    }

    let kind = match props.get("kind") {
        Some(Value::String(s)) => MarkerKind::parse(s).or_else(|| {
            errors.push(ContentError::schema(
                prop_path("kind"),
                format!("unknown kind \"{s}\" (expected model3d, pano360, info or video)"),
            ));
            None
        }),
        Some(_) => {
            errors.push(ContentError::schema(prop_path("kind"), "must be a string"));
            None
        }
        None => {
            errors.push(ContentError::schema(prop_path("kind"), "missing kind"));
            None
        }
    };

    let title = match props.get("title") {
        Some(v) => field::<LocalizedText>(v, &prop_path("title"), &mut errors),
        None => {
            errors.push(ContentError::schema(prop_path("title"), "missing title"));
            None
        }
    };
    let body = optional::<LocalizedText>(props, "body", &prop_path("body"), &mut errors);
    let media = optional::<Vec<Slug>>(props, "media", &prop_path("media"), &mut errors);
    let related = optional::<Vec<RelatedLocation>>(
        props,
        "related_locations",
        &prop_path("related_locations"),
        &mut errors,
    );
    let nav_order = optional::<Option<i64>>(props, "nav_order", &prop_path("nav_order"), &mut errors);
    let external_url =
        optional::<Option<String>>(props, "external_url", &prop_path("external_url"), &mut errors);

    if let Err(e) = feature.position.check() {
        errors.push(ContentError::schema(format!("{path}.geometry.coordinates"), e));
    }
    if let Some(related) = &related {
        for (j, loc) in related.iter().enumerate() {
            if let Err(e) = loc.position.check() {
                errors.push(ContentError::schema(
                    format!("{}[{j}].position", prop_path("related_locations")),
                    e,
                ));
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    let (Some(marker_id), Some(kind), Some(title)) = (marker_id, kind, title) else {
        unreachable!("missing required fields always push an error");
    };

    let extras: Map<String, Value> = props
        .iter()
        .filter(|(k, _)| !KNOWN_PROPERTIES.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    Ok(Marker {
        marker_id,
        layer_id: layer_id.clone(),
        kind,
        position: feature.position,
        title,
        body: body.unwrap_or_default(),
        media: media.unwrap_or_default(),
        related_locations: related.unwrap_or_default(),
        nav_order: nav_order.flatten(),
        external_url: external_url.flatten(),
        extras,
    })
}

fn field<T: DeserializeOwned>(value: &Value, path: &str, errors: &mut Vec<ContentError>) -> Option<T> {
    match serde_json::from_value(value.clone()) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(ContentError::schema(path, e.to_string()));
            None
        }
    }
}

fn optional<T: DeserializeOwned>(
    props: &Map<String, Value>,
    key: &str,
    path: &str,
    errors: &mut Vec<ContentError>,
) -> Option<T> {
    props.get(key).and_then(|v| field(v, path, errors))
}
