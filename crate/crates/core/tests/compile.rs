use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use heritage_forge_core::compile::{
    codes, compile, missing_bundle_references, validate, CompileOptions, Severity,
};
use heritage_forge_core::content::MarkerKind;
use heritage_forge_core::fixture::{write_santa_clara_site, CAMP_BUILDING_COUNT};
use serde_json::Value;

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_santa_clara_site(dir.path()).unwrap();
    dir
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if root.exists() {
        walk(root, root, &mut out);
    }
    out
}

fn edit_json(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
}

#[test]
fn fixture_compiles_with_expected_stats() {
    let site = fixture();
    let out = tempfile::tempdir().unwrap();
    let bundle_dir = out.path().join("bundle");
    let compiled = compile(site.path(), &bundle_dir, &CompileOptions::default()).unwrap();
    let report = &compiled.report;
    assert!(report.is_success(), "{}", report.render_text());
    assert!(report.warnings.is_empty(), "{}", report.render_text());

    assert_eq!(report.stats.layers, 3);
    assert_eq!(report.stats.markers_of(MarkerKind::Model3d), CAMP_BUILDING_COUNT + 1);
    for kind in MarkerKind::ALL {
        assert!(report.stats.markers_of(kind) >= 1, "{kind}");
    }
    assert_eq!(report.georef_rmse.len(), 2);
    for rmse in report.georef_rmse.values() {
        assert!(*rmse > 0.0 && *rmse < 15.0, "rmse {rmse}");
    }

    let bundle = compiled.bundle.unwrap();
    let camp = &bundle.layer_indices["camp-1936"];
    let model3d = camp["markers"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["kind"] == "model3d")
        .count();
    assert_eq!(model3d, CAMP_BUILDING_COUNT);
    assert_eq!(bundle.site_index["layers"].as_array().unwrap().len(), 3);
    assert!(missing_bundle_references(&bundle_dir).unwrap().is_empty());
}

#[test]
fn marker_order_and_resolved_annotations_are_in_the_index() {
    let site = fixture();
    let out = tempfile::tempdir().unwrap();
    let compiled = compile(site.path(), out.path().join("b"), &CompileOptions::default()).unwrap();
    let bundle = compiled.bundle.unwrap();

    let camp = &bundle.layer_indices["camp-1936"]["markers"];
    let ids: Vec<&str> = camp.as_array().unwrap().iter().map(|m| m["marker_id"].as_str().unwrap()).collect();
    assert_eq!(ids[0], "building-01");
    assert_eq!(ids[15], "building-16");
    assert_eq!(ids.last(), Some(&"testimony"));

    let present = &bundle.layer_indices["present"]["markers"];
    let courtyard = &present[0]["media"][0];
    let anns = courtyard["annotations"].as_array().unwrap();
    assert_eq!(anns.len(), 2);
    assert_eq!(anns[0]["source"], "geo");
    assert_eq!(anns[1]["yaw"], -95.0);

    let memorial = &present[1];
    let b = &memorial["zoom_out_bounds"];
    assert!(b["min_lon"].as_f64().unwrap() < -2.4821);
    assert!(b["max_lat"].as_f64().unwrap() > 41.7755);

    let building = &camp[0]["media"][0];
    assert_eq!(building["texture_mode"], "monochrome");
    assert!(building["dollhouse"]["path"].as_str().unwrap().starts_with("assets/"));
}

#[test]
fn two_compiles_are_byte_identical() {
    let site = fixture();
    let out = tempfile::tempdir().unwrap();
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    compile(site.path(), &a, &CompileOptions::default()).unwrap().bundle.unwrap();
    compile(site.path(), &b, &CompileOptions::default()).unwrap().bundle.unwrap();
    assert_eq!(read_tree(&a), read_tree(&b));
}

#[test]
fn recompiling_over_an_existing_bundle_replaces_it() {
    let site = fixture();
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().join("bundle");
    compile(site.path(), &dir, &CompileOptions::default()).unwrap().bundle.unwrap();
    let first = read_tree(&dir);
    compile(site.path(), &dir, &CompileOptions::default()).unwrap().bundle.unwrap();
    assert_eq!(first, read_tree(&dir));
    let leftovers: Vec<_> = fs::read_dir(out.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers, vec!["bundle"]);
}

#[test]
fn refuses_to_overwrite_unrelated_directory() {
    let site = fixture();
    let out = tempfile::tempdir().unwrap();
    fs::write(out.path().join("notes.txt"), "keep me").unwrap();
    let err = compile(site.path(), out.path(), &CompileOptions::default()).unwrap_err();
    assert!(err.to_string().contains("not a bundle"), "{err}");
    assert_eq!(fs::read_to_string(out.path().join("notes.txt")).unwrap(), "keep me");
}

#[test]
fn empty_directory_reports_missing_manifest_only() {
    let site = tempfile::tempdir().unwrap();
    let report = validate(site.path(), &CompileOptions::default());
    assert_eq!(report.codes(), vec![codes::MANIFEST_MISSING]);
}

#[test]
fn corrupt_glb_and_dangling_reference_give_exactly_two_errors() {
    let site = fixture();
    fs::write(site.path().join("models/building-03.glb"), b"glTF\x02\x00\x00\x00garbage").unwrap();
    let markers = site.path().join("markers/convent-1835.geojson");
    edit_json(&markers, |v| v["features"][1]["properties"]["media"] = serde_json::json!(["pano-ghost"]));

    let out = tempfile::tempdir().unwrap();
    let bundle_dir = out.path().join("bundle");
    fs::create_dir(&bundle_dir).unwrap();
    fs::write(bundle_dir.join("site.json"), "previous").unwrap();
    let before = read_tree(&bundle_dir);

    let compiled = compile(site.path(), &bundle_dir, &CompileOptions::default()).unwrap();
    let mut codes_found = compiled.report.codes();
    codes_found.sort();
    assert_eq!(codes_found, vec!["E004", codes::GLB_INVALID], "{}", compiled.report.render_text());
    assert!(compiled.bundle.is_none());
    assert_eq!(read_tree(&bundle_dir), before);
}

#[test]
fn each_injected_fault_is_reported() {
    let site = fixture();
    let root = site.path();
    // 1: panorama that is not 2:1
    fs::write(
        root.join("panoramas/assembly-yard.jpg"),
        heritage_forge_core::fixture::jpeg_bytes(&image::RgbImage::new(300, 200)),
    )
    .unwrap();
    // 2: focus target naming no node
    // 3: collinear GCPs
    // 4: unknown marker kind
    edit_json(&root.join("site.json"), |v| {
        let assets = v["assets"].as_array_mut().unwrap();
        let church = assets.iter_mut().find(|a| a["asset_id"] == "model-convent-church").unwrap();
        church["render_hints"]["focus_target"] = "steeple".into();
        let gcps = v["layers"][0]["overlays"][0]["gcps"].as_array_mut().unwrap();
        for (i, g) in gcps.iter_mut().enumerate() {
            g["pixel"] = serde_json::json!([10.0 * i as f64 + 5.0, 10.0 * i as f64 + 5.0]);
        }
    });
    edit_json(&root.join("markers/present.geojson"), |v| {
        v["features"][1]["properties"]["kind"] = "audio".into();
    });
    let report = validate(root, &CompileOptions::default());
    let found: Vec<_> = report.errors.iter().map(|d| d.code).collect();
    assert!(found.len() >= 4, "{}", report.render_text());
    for code in [codes::NOT_EQUIRECTANGULAR, codes::FOCUS_TARGET_MISSING, codes::GEOREF_DEGENERATE, "E003"] {
        assert!(found.contains(&code), "missing {code}: {}", report.render_text());
    }
    assert!(report.errors.iter().all(|d| d.severity == Severity::Error));
}

#[test]
fn near_two_to_one_panorama_warns() {
    let site = fixture();
    fs::write(
        site.path().join("panoramas/assembly-yard.jpg"),
        heritage_forge_core::fixture::jpeg_bytes(&image::RgbImage::new(402, 200)),
    )
    .unwrap();
    let report = validate(site.path(), &CompileOptions::default());
    assert!(report.is_success(), "{}", report.render_text());
    assert_eq!(report.warnings.len(), 1);
    assert_eq!(report.warnings[0].code, codes::PANORAMA_ASPECT);
}

#[test]
fn large_panorama_gets_a_preview() {
    let site = fixture();
    let out = tempfile::tempdir().unwrap();
    let compiled = compile(site.path(), out.path().join("b"), &CompileOptions { max_preview: 512 }).unwrap();
    let bundle = compiled.bundle.unwrap();
    let entry = &bundle.site_index["assets"]["pano-courtyard"];
    assert_ne!(entry["preview"], entry["path"]);
    let preview = out.path().join("b").join(entry["preview"].as_str().unwrap());
    let img = image::load_from_memory(&fs::read(preview).unwrap()).unwrap();
    assert_eq!((img.width(), img.height()), (512, 256));
}

#[test]
fn hashed_names_match_content() {
    let site = fixture();
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().join("b");
    let bundle = compile(site.path(), &dir, &CompileOptions::default()).unwrap().bundle.unwrap();
    for name in bundle.asset_map.values() {
        let bytes = fs::read(dir.join("assets").join(name)).unwrap();
        let (stem, _) = name.split_once('.').unwrap();
        assert_eq!(stem, heritage_forge_core::content_hash(&bytes));
    }
}
