use anyhow::Context;
use serde::Serialize;

use propfit::dataset::write_csv;
use propfit::synthesis::{generate_pathloss, SynthSpec, GENERATOR_NAME};

use super::{create_out_dir, read_input};
use crate::args::SynthArgs;
use crate::json::write_json;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult, Status};

pub const DATASET_FILE: &str = "dataset.csv";
pub const SIDECAR_FILE: &str = "dataset.spec.json";

#[derive(Serialize)]
struct Sidecar<'a> {
    generator: &'static str,
    source: &'a str,
    n_records: usize,
    spec: &'a SynthSpec,
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let (bytes, digest) = read_input(&args.spec)?;
    let mut spec: SynthSpec = serde_json::from_slice(&bytes).map_err(|e| {
        CliError::Input(format!(
            "{}: invalid synthesis spec: {e}",
            args.spec.display()
        ))
    })?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let ds = generate_pathloss(&spec)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.spec.display())))?;

    create_out_dir(&args.out_dir)?;
    let mut csv = Vec::new();
    write_csv(&ds, &mut csv).context("encoding dataset CSV")?;
    let path = args.out_dir.join(DATASET_FILE);
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    let sidecar = Sidecar {
        generator: GENERATOR_NAME,
        source: &ds.metadata.source,
        n_records: ds.len(),
        spec: &spec,
    };
    write_json(&args.out_dir.join(SIDECAR_FILE), &sidecar)?;

    let mut manifest = RunManifest::new("synth", args);
    manifest.inputs.push(digest);
    manifest.outputs = vec![DATASET_FILE.into(), SIDECAR_FILE.into()];
    manifest.write(&args.out_dir)?;
    Ok(Status::Success)
}
