//! File formats, the imagery client and the pipeline driver around
//! `roadsense-core`.

pub mod config;
pub mod error;
pub mod geojson;
pub mod labels_csv;
pub mod netfile;
pub mod osm;
pub mod pipeline;
pub mod streetview;
pub mod study;
pub mod tables;

pub use roadsense_core as core;
