//! Synthetic demonstration site: a convent turned camp turned memorial.
//!
//! Three layers (`convent-1835`, `camp-1936`, `present`), sixteen camp
//! buildings with 3D models, two historical maps placed by ground control
//! points, annotated panoramas, photos and a video clip. All media are
//! generated, so the output is byte-for-byte reproducible.

use std::fs;
use std::io;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, RgbImage};
use serde_json::{json, Value};

use crate::assets::build_glb;
use crate::content::{GeoPoint, MANIFEST_FILE};
use crate::georef::{lonlat_to_webmercator, webmercator_to_lonlat, PlanePoint};

pub const SITE_CENTER: GeoPoint = GeoPoint::new(-2.47, 41.77);
pub const CAMP_BUILDING_COUNT: usize = 16;
pub const LAYER_IDS: [&str; 3] = ["convent-1835", "camp-1936", "present"];

/// Where the courtyard panorama was shot, and the building its geo-targeted
/// annotation points at.
pub const COURTYARD_PANO_POSITION: GeoPoint = GeoPoint::new(-2.4701, 41.7699);
pub const COURTYARD_CAMERA_HEIGHT: f64 = 1.6;
pub const COURTYARD_HEADING: f64 = 20.0;
pub const CHAPEL_TARGET: GeoPoint = GeoPoint::with_height(-2.4695, 41.7703, 12.0);

/// East/north offset in meters from the site center.
fn offset(east: f64, north: f64) -> GeoPoint {
    let c = lonlat_to_webmercator(&SITE_CENTER).expect("center in domain");
    // Web Mercator stretches distances by 1/cos(lat).
    let k = 1.0 / SITE_CENTER.lat.to_radians().cos();
    webmercator_to_lonlat(&PlanePoint {
        x: c.x + east * k,
        y: c.y + north * k,
    })
}

fn building_position(i: usize) -> GeoPoint {
    let (row, col) = (i / 4, i % 4);
    offset(-75.0 + 50.0 * col as f64, 60.0 - 40.0 * row as f64)
}

fn text(default: &str, es: &str) -> Value {
    json!({"default": default, "es": es})
}

fn point_feature(position: &GeoPoint, properties: Value) -> Value {
    json!({
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": [position.lon, position.lat]},
        "properties": properties,
    })
}

fn write(dir: &Path, rel: &str, bytes: &[u8]) -> io::Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)
}

fn write_json(dir: &Path, rel: &str, value: &Value) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("fixture JSON serializes");
    bytes.push(b'\n');
    write(dir, rel, &bytes)
}

/// Deterministic patterned image.
fn pattern(width: u32, height: u32, seed: u8) -> RgbImage {
    RgbImage::from_fn(width, height, |x, y| {
        let r = ((x * 7 + y * 3) % 256) as u8;
        let g = ((x ^ y) % 256) as u8;
        let b = (((x / 16 + y / 16) % 2) as u8 * 120).wrapping_add(seed);
        image::Rgb([r, g.wrapping_add(seed), b])
    })
}

pub fn png_bytes(img: &RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::Rgb8)
        .expect("in-memory PNG encode");
    out
}

pub fn jpeg_bytes(img: &RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, 80)
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::Rgb8)
        .expect("in-memory JPEG encode");
    out
}

/// Small but structurally complete GLB: one mesh-less node per name.
pub fn model_glb(nodes: &[&str]) -> Vec<u8> {
    let node_values: Vec<Value> = nodes.iter().map(|n| json!({"name": n})).collect();
    let indices: Vec<usize> = (0..nodes.len()).collect();
    let doc = json!({
        "asset": {"version": "2.0", "generator": "heritage-forge fixture"},
        "scene": 0,
        "scenes": [{"nodes": indices}],
        "nodes": node_values,
        "buffers": [{"byteLength": 16}],
    });
    build_glb(&doc, Some(&[0u8; 16]))
}

/// Ground control points for a `width` x `height` map drawn at `m_per_px`,
/// rotated `rotation_deg` clockwise and centered on `center`. Each GCP gets a
/// fixed offset of a few meters, as digitizing would.
fn gcps(center: GeoPoint, width: u32, height: u32, m_per_px: f64, rotation_deg: f64) -> Value {
    let c = lonlat_to_webmercator(&center).expect("center in domain");
    let k = m_per_px / center.lat.to_radians().cos();
    let (s, co) = rotation_deg.to_radians().sin_cos();
    let (w, h) = (width as f64, height as f64);
    let pixels = [
        [0.1 * w, 0.1 * h],
        [0.9 * w, 0.12 * h],
        [0.88 * w, 0.9 * h],
        [0.12 * w, 0.85 * h],
        [0.5 * w, 0.45 * h],
    ];
    let noise_m = [(2.0, -1.5), (-1.0, 2.5), (1.5, 1.0), (-2.5, -0.5), (0.5, -1.0)];
    let points: Vec<Value> = pixels
        .iter()
        .zip(noise_m)
        .map(|(&[px, py], (nx, ny))| {
            let (dx, dy) = (px - w / 2.0, py - h / 2.0);
            let plane = PlanePoint {
                x: c.x + k * (co * dx + s * dy) + nx,
                y: c.y + k * (s * dx - co * dy) + ny,
            };
            let geo = webmercator_to_lonlat(&plane);
            json!({"pixel": [px, py], "geo": {"lon": geo.lon, "lat": geo.lat}})
        })
        .collect();
    Value::Array(points)
}

/// Writes the demonstration site into `dir` (created if needed).
pub fn write_santa_clara_site(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut assets = Vec::new();

    // Historical maps.
    write(dir, "maps/convent-1835.png", &png_bytes(&pattern(600, 400, 11)))?;
    write(dir, "maps/camp-plan-1938.png", &png_bytes(&pattern(800, 600, 37)))?;
    assets.push(json!({
        "asset_id": "map-convent-1835", "path": "maps/convent-1835.png", "kind": "image", "role": "overlay",
        "caption": text("Hand-drawn plan of the convent, 1835", "Plano del convento, 1835"),
    }));
    assets.push(json!({
        "asset_id": "map-camp-1938", "path": "maps/camp-plan-1938.png", "kind": "image", "role": "overlay",
        "caption": text("Camp site plan, 1938", "Plano del campo, 1938"),
    }));

    // Camp buildings. The first six were demolished and render monochrome.
    let mut camp_features = Vec::new();
    for i in 0..CAMP_BUILDING_COUNT {
        let n = i + 1;
        let id = format!("building-{n:02}");
        let model_id = format!("model-{id}");
        let path = format!("models/{id}.glb");
        let focus = format!("{id}-facade");
        write(dir, &path, &model_glb(&[&id, &focus, &format!("{id}-roof")]))?;
        let mut hints = json!({"focus_target": focus});
        if n <= 6 {
            hints["texture_mode"] = json!("monochrome");
        } else {
            hints["texture_mode"] = json!("photographic");
        }
        if n <= 2 {
            let dh_id = format!("model-{id}-dollhouse");
            let dh_path = format!("models/{id}-dollhouse.glb");
            write(dir, &dh_path, &model_glb(&[&format!("{id}-interior")]))?;
            assets.push(json!({"asset_id": dh_id, "path": dh_path, "kind": "glb", "role": "model"}));
            hints["dollhouse_variant"] = json!(dh_id);
        }
        assets.push(json!({
            "asset_id": model_id, "path": path, "kind": "glb", "role": "model", "render_hints": hints,
            "caption": text(&format!("Reconstruction of barrack {n}"), &format!("Reconstrucción del barracón {n}")),
        }));
        camp_features.push(point_feature(
            &building_position(i),
            json!({
                "marker_id": id, "kind": "model3d",
                "title": text(&format!("Barrack {n}"), &format!("Barracón {n}")),
                "body": format!("Building {n} of the camp, reconstructed from the 1938 site plan."),
                "media": [model_id], "nav_order": n,
            }),
        ));
    }

    // Panoramas, photos and a clip.
    write(dir, "panoramas/cloister.jpg", &jpeg_bytes(&pattern(512, 256, 3)))?;
    write(dir, "panoramas/assembly-yard.jpg", &jpeg_bytes(&pattern(256, 128, 90)))?;
    write(dir, "panoramas/courtyard-today.jpg", &jpeg_bytes(&pattern(2048, 1024, 140)))?;
    write(dir, "photos/church-facade.png", &png_bytes(&pattern(320, 240, 5)))?;
    write(dir, "photos/camp-gate.jpg", &jpeg_bytes(&pattern(320, 240, 60)))?;
    write(dir, "photos/memorial.png", &png_bytes(&pattern(240, 320, 200)))?;
    write(dir, "video/testimony.mp4", b"\x00\x00\x00\x18ftypmp42\x00\x00\x00\x00mp42isom")?;
    write(dir, "models/convent-church.glb", &model_glb(&["church", "church-nave", "church-tower"]))?;
    assets.extend([
        json!({"asset_id": "pano-cloister", "path": "panoramas/cloister.jpg", "kind": "image", "role": "panorama"}),
        json!({"asset_id": "pano-assembly-yard", "path": "panoramas/assembly-yard.jpg", "kind": "image", "role": "panorama"}),
        json!({
            "asset_id": "pano-courtyard", "path": "panoramas/courtyard-today.jpg", "kind": "image", "role": "panorama",
            "pano_pose": {
                "position": {"lon": COURTYARD_PANO_POSITION.lon, "lat": COURTYARD_PANO_POSITION.lat},
                "camera_height": COURTYARD_CAMERA_HEIGHT, "heading": COURTYARD_HEADING,
            },
        }),
        json!({"asset_id": "photo-church", "path": "photos/church-facade.png", "kind": "image", "role": "photo",
               "caption": text("Church facade", "Fachada de la iglesia")}),
        json!({"asset_id": "photo-gate", "path": "photos/camp-gate.jpg", "kind": "image", "role": "photo"}),
        json!({"asset_id": "photo-memorial", "path": "photos/memorial.png", "kind": "image", "role": "photo"}),
        json!({"asset_id": "clip-testimony", "path": "video/testimony.mp4", "kind": "video", "role": "clip",
               "caption": text("Survivor testimony", "Testimonio de un superviviente")}),
        json!({"asset_id": "model-convent-church", "path": "models/convent-church.glb", "kind": "glb", "role": "model",
               "render_hints": {"focus_target": "church-tower", "texture_mode": "photographic"}}),
    ]);

    camp_features.push(point_feature(
        &offset(-20.0, -110.0),
        json!({"marker_id": "assembly-yard", "kind": "pano360", "title": text("Assembly yard", "Patio de formación"),
               "media": ["pano-assembly-yard"], "nav_order": 17}),
    ));
    camp_features.push(point_feature(
        &offset(-120.0, -100.0),
        json!({"marker_id": "camp-gate", "kind": "info", "title": text("Camp gate", "Puerta del campo"),
               "body": "Main entrance from the road.", "media": ["photo-gate"], "nav_order": 18}),
    ));
    camp_features.push(point_feature(
        &offset(100.0, -90.0),
        json!({"marker_id": "testimony", "kind": "video", "title": text("Testimony", "Testimonio"),
               "media": ["clip-testimony"]}),
    ));

    let convent_features = vec![
        point_feature(
            &offset(40.0, 80.0),
            json!({"marker_id": "convent-church", "kind": "model3d", "title": text("Convent church", "Iglesia del convento"),
                   "media": ["model-convent-church"], "nav_order": 1}),
        ),
        point_feature(
            &offset(10.0, 50.0),
            json!({"marker_id": "cloister", "kind": "pano360", "title": text("Cloister", "Claustro"),
                   "media": ["pano-cloister"], "nav_order": 2}),
        ),
        point_feature(
            &offset(60.0, 95.0),
            json!({"marker_id": "church-facade", "kind": "info", "title": text("Church facade", "Fachada"),
                   "body": "Baroque facade, rebuilt after 1790.", "media": ["photo-church"], "nav_order": 3}),
        ),
    ];

    let present_features = vec![
        point_feature(
            &COURTYARD_PANO_POSITION,
            json!({"marker_id": "courtyard-today", "kind": "pano360", "title": text("Courtyard today", "El patio hoy"),
                   "media": ["pano-courtyard"], "nav_order": 1}),
        ),
        point_feature(
            &offset(-30.0, 10.0),
            json!({
                "marker_id": "memorial", "kind": "info", "title": text("Memorial", "Memorial"),
                "body": "Plaque unveiled in 2009 near the former barracks.",
                "media": ["photo-memorial"], "nav_order": 2,
                "related_locations": [
                    {"label": text("Railway station", "Estación"), "position": {"lon": -2.4821, "lat": 41.7755}},
                    {"label": text("Cemetery", "Cementerio"), "position": {"lon": -2.4603, "lat": 41.7642}},
                ],
            }),
        ),
        point_feature(
            &offset(15.0, -40.0),
            json!({"marker_id": "documentary", "kind": "video", "title": text("Documentary", "Documental"),
                   "external_url": "https://video.example.org/santa-clara", "nav_order": 3,
                   "source": "regional archive"}),
        ),
    ];

    for (layer, features) in LAYER_IDS.iter().zip([convent_features, camp_features, present_features]) {
        write_json(
            dir,
            &format!("markers/{layer}.geojson"),
            &json!({"type": "FeatureCollection", "features": features}),
        )?;
    }

    let site = json!({
        "schema_version": 1,
        "site_id": "santa-clara",
        "title": text("Santa Clara: convent, camp, memory", "Santa Clara: convento, campo, memoria"),
        "description": "Three centuries of a single site, from Franciscan convent to concentration camp to memorial.",
        "initial_view": {"center": {"lon": SITE_CENTER.lon, "lat": SITE_CENTER.lat}, "zoom": 17.0},
        "layers": [
            {
                "layer_id": "convent-1835", "label": text("Convent (1835)", "Convento (1835)"),
                "period_start": 1835, "period_end": 1936, "base_style": "plain",
                "overlays": [{"asset_id": "map-convent-1835", "opacity_default": 0.8,
                              "gcps": gcps(offset(20.0, 60.0), 600, 400, 0.4, 4.0)}],
                "markers_file": "markers/convent-1835.geojson",
            },
            {
                "layer_id": "camp-1936", "label": text("Concentration camp (1936-1947)", "Campo de concentración (1936-1947)"),
                "period_start": 1936, "period_end": 1947, "base_style": "plain",
                "overlays": [{"asset_id": "map-camp-1938", "opacity_default": 0.7,
                              "gcps": gcps(SITE_CENTER, 800, 600, 0.45, -2.0)}],
                "markers_file": "markers/camp-1936.geojson",
            },
            {
                "layer_id": "present", "label": text("Present day", "Actualidad"),
                "period_start": 2000, "base_style": "satellite",
                "markers_file": "markers/present.geojson",
            },
        ],
        "assets": assets,
        "annotations": [
            {
                "pano_asset_id": "pano-courtyard", "label": text("Chapel", "Capilla"),
                "body": "The chapel bell tower, the only convent structure still standing.",
                "geo_target": {"lon": CHAPEL_TARGET.lon, "lat": CHAPEL_TARGET.lat, "height": CHAPEL_TARGET.height},
            },
            {
                "pano_asset_id": "pano-courtyard", "label": text("Former barracks", "Antiguos barracones"),
                "direction": {"yaw": -95.0, "pitch": -4.0},
            },
            {
                "pano_asset_id": "pano-cloister", "label": text("Well", "Pozo"),
                "direction": {"yaw": 12.5, "pitch": -20.0},
            },
        ],
    });
    write_json(dir, MANIFEST_FILE, &site)
}
