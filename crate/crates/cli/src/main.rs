use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heritage_forge_core::compile::{self, CompileOptions, CompileReport};
use heritage_forge_server::ServerConfig;
use tracing_subscriber::EnvFilter;

const EXIT_INVALID: u8 = 1;
const EXIT_IO: u8 = 2;

/// Compile and serve geo-temporal heritage sites.
#[derive(Debug, Parser)]
#[command(name = "heritage-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a site directory and print the report; writes nothing.
    Validate {
        site_dir: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Compile a site directory into a static bundle.
    Compile {
        site_dir: PathBuf,
        #[arg(short, long = "out")]
        out: PathBuf,
        /// Longest side of derived image previews, in pixels.
        #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u32).range(1..))]
        max_preview: u32,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve a compiled bundle over HTTP.
    Serve {
        bundle_dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Directory with the built viewer, served at `/`.
        #[arg(long)]
        viewer_dir: Option<PathBuf>,
        /// Allowed CORS origin; repeatable. Any origin is allowed when absent.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
    },
}

fn main() -> ExitCode {
    let filter = EnvFilter::try_from_env("HERITAGE_FORGE_LOG").unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    match Cli::parse().command {
        Command::Validate { site_dir, json } => {
            if let Err(code) = require_dir(&site_dir) {
                return code;
            }
            let report = compile::validate(&site_dir, &CompileOptions::default());
            print_report(&report, json);
            report_exit(&report)
        }
        Command::Compile { site_dir, out, max_preview, json } => {
            if let Err(code) = require_dir(&site_dir) {
                return code;
            }
            match compile::compile(&site_dir, &out, &CompileOptions { max_preview }) {
                Ok(compiled) => {
                    print_report(&compiled.report, json);
                    if compiled.bundle.is_some() && !json {
                        println!("bundle written to {}", out.display());
                    }
                    report_exit(&compiled.report)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_IO)
                }
            }
        }
        Command::Serve { bundle_dir, port, bind, viewer_dir, cors_origins } => {
            let mut config = ServerConfig::new(bundle_dir, SocketAddr::new(bind, port));
            config.viewer_dir = viewer_dir;
            config.cors_origins = cors_origins;
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_IO);
                }
            };
            match runtime.block_on(heritage_forge_server::serve(config)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_IO)
                }
            }
        }
    }
}

fn require_dir(dir: &Path) -> Result<(), ExitCode> {
    if dir.is_dir() {
        Ok(())
    } else {
        eprintln!("error: {} is not a readable directory", dir.display());
        Err(ExitCode::from(EXIT_IO))
    }
}

fn print_report(report: &CompileReport, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
    } else {
        print!("{}", report.render_text());
    }
}

fn report_exit(report: &CompileReport) -> ExitCode {
    if report.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVALID)
    }
}
