//! Shared inputs for the pipeline benchmarks.

use std::path::{Path, PathBuf};

use medlat_core::conllu::{parse_conllu, Document};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn toy_text() -> String {
    std::fs::read_to_string(fixtures().join("toy_separable.conllu")).expect("toy fixture")
}

pub fn toy() -> Document {
    parse_conllu(&toy_text(), "toy").expect("toy fixture parses")
}
