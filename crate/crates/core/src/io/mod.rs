//! Configuration files, CSV tables, and run manifests.

pub mod config;
pub mod csv;
pub mod fingerprint;
pub mod manifest;

pub use config::{ObservablesConfig, RunConfig, ScanConfig};
pub use csv::{read_csv, write_csv, Cell, Table};
pub use manifest::{RunManifest, Tier};
