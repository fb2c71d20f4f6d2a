//! Writes the demonstration site to a directory.
//!
//! ```text
//! cargo run -p heritage-forge-core --features fixture --example write_fixture -- /tmp/santa-clara
//! ```

use std::path::PathBuf;

fn main() {
    let dir: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("santa-clara"));
    if let Err(e) = heritage_forge_core::fixture::write_santa_clara_site(&dir) {
        eprintln!("cannot write fixture to {}: {e}", dir.display());
        std::process::exit(2);
    }
    println!("{}", dir.display());
}
