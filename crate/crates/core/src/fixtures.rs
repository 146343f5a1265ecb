//! Bundled feeders and tariff.

use std::path::PathBuf;

pub const IEEE123: &str = "ieee123.json";
pub const SYNTHETIC48: &str = "synthetic48.json";
pub const LADDER: &str = "ladder.json";
pub const DUKE_TOU_2018: &str = "duke_tou_2018.json";

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixture_dir().join(name)
}
