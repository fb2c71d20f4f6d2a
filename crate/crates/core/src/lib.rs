//! Compiler toolkit for geo-temporal heritage sites.
//!
//! A site is described by a `site.json` manifest listing temporal layers,
//! media assets and panorama annotations, plus one GeoJSON marker file per
//! layer. [`compile::compile`] turns such a directory into a
//! content-addressed bundle that the HTTP server and the web viewer consume.
//!
//! Module map:
//!
//! - [`content`]: manifest schema, GeoJSON marker ingestion
//! - [`georef`]: Web Mercator projection and GCP affine fitting
//! - [`pano`]: yaw/pitch resolution for panorama annotations
//! - [`assets`]: GLB/PNG/JPEG structural validation and previews
//! - [`compile`]: bundle compilation, content hashing, reports

// `!(x <= limit)` is used on purpose so NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod compile;
pub mod content;
pub mod georef;
pub mod pano;

#[cfg(feature = "fixture")]
pub mod fixture;

pub use compile::{compile, content_hash, CompileOptions, CompileReport};
pub use content::{load_manifest, GeoPoint, SiteManifest};
