//! `run_manifest.json`: what was run, on which bytes, producing which files.
//! Contains no timestamps or absolute output paths, so identical runs
//! produce identical manifests.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::json::write_json;

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(path: &Path, content: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            bytes: content.len(),
            sha256: hex::encode(Sha256::digest(content)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &'static str, config: C) -> Self {
        Self {
            tool: "propfit",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> anyhow::Result<()> {
        write_json(&out_dir.join(MANIFEST_FILE), self)
    }
}
