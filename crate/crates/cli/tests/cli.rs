use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use heritage_forge_core::fixture::write_santa_clara_site;
use serde_json::Value;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heritage-forge"))
        .args(args)
        .env_remove("HERITAGE_FORGE_LOG")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_and_compile_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let site = dir.path().join("site");
    let out = dir.path().join("bundle");
    write_santa_clara_site(&site).unwrap();

    let o = forge(&["validate", path(&site)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("ok: 0 error(s)"));
    assert!(!out.exists());

    let o = forge(&["compile", path(&site), "-o", path(&out), "--json", "--max-preview", "256"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["errors"], Value::Array(vec![]));
    assert_eq!(report["stats"]["layers"], 3);
    assert!(report["stats"]["markers"]["model3d"].as_u64().unwrap() >= 16);
    assert!(out.join("site.json").is_file());

    // Recompiling over an existing bundle replaces it.
    let o = forge(&["compile", path(&site), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("bundle written to"));
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = forge(&["validate", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error[E001]"), "{}", stdout(&o));

    let o = forge(&["compile", path(dir.path()), "-o", path(&out), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["errors"][0]["code"], "E001");
    assert!(!out.exists());
}

#[test]
fn io_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    assert_eq!(forge(&["validate", path(&missing)]).status.code(), Some(2));
    assert_eq!(forge(&["compile", path(&missing), "-o", path(dir.path())]).status.code(), Some(2));

    // An unrelated, non-empty output directory is never replaced.
    let site = dir.path().join("site");
    write_santa_clara_site(&site).unwrap();
    let precious = dir.path().join("precious");
    fs::create_dir(&precious).unwrap();
    fs::write(precious.join("thesis.txt"), "keep me").unwrap();
    let o = forge(&["compile", path(&site), "-o", path(&precious)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_to_string(precious.join("thesis.txt")).unwrap(), "keep me");

    assert_eq!(forge(&["serve", path(dir.path()), "--port", "0"]).status.code(), Some(2));
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(forge(&["compile", "x"]).status.code(), Some(2));
    assert_eq!(forge(&["compile", "x", "-o", "y", "--max-preview", "0"]).status.code(), Some(2));
    assert_eq!(forge(&["serve", "x", "--bind", "not-an-ip"]).status.code(), Some(2));
    assert_eq!(forge(&["--help"]).status.code(), Some(0));
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let site = dir.path().join("site");
    let out = dir.path().join("bundle");
    write_santa_clara_site(&site).unwrap();
    assert_eq!(forge(&["compile", path(&site), "-o", path(&out)]).status.code(), Some(0));

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_heritage-forge"))
        .args(["serve", path(&out), "--port", &port.to_string(), "--cors-origin", "https://a.example"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();

    let rt = tokio::runtime::Runtime::new().unwrap();
    let url = format!("http://127.0.0.1:{port}/api/site");
    let deadline = Instant::now() + Duration::from_secs(20);
    let body = loop {
        match rt.block_on(reqwest::get(&url)) {
            Ok(resp) => break rt.block_on(resp.bytes()).unwrap(),
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                let _ = child.kill();
                panic!("server never came up: {e}");
            }
        }
    };
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(body.as_ref(), fs::read(out.join("site.json")).unwrap());
}
