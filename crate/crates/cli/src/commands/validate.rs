use serde::Serialize;

use propfit::dataset::{parse_csv, DatasetError, RejectedRow};

use super::{create_out_dir, dataset_error, read_input};
use crate::args::ValidateArgs;
use crate::json::write_json;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult, Status};

#[derive(Serialize)]
struct ValidationReport<'a> {
    input: String,
    valid_rows: usize,
    rejected_rows: usize,
    rejected: &'a [RejectedRow],
}

pub fn validate(args: &ValidateArgs) -> CliResult {
    let (bytes, digest) = read_input(&args.input)?;
    let source = args.input.display().to_string();
    let (valid, rejected) = match parse_csv(bytes.as_slice(), &source) {
        Ok(parsed) => (parsed.dataset.len(), parsed.rejected),
        Err(DatasetError::Empty { rejected }) => (0, rejected),
        Err(e) => return Err(dataset_error(&args.input, e)),
    };

    println!("{source}: {valid} valid rows, {} rejected", rejected.len());
    for r in &rejected {
        println!("  line {}: {}", r.line, r.reason);
    }

    if let Some(dir) = &args.out_dir {
        create_out_dir(dir)?;
        let report = ValidationReport {
            input: source.clone(),
            valid_rows: valid,
            rejected_rows: rejected.len(),
            rejected: &rejected,
        };
        write_json(&dir.join("validation.json"), &report)?;
        let mut manifest = RunManifest::new("validate", args);
        manifest.inputs.push(digest);
        manifest.outputs.push("validation.json".into());
        manifest.write(dir)?;
    }

    match (valid, rejected.len()) {
        (0, _) => Err(CliError::Input(format!("{source}: no valid rows"))),
        (_, 0) => Ok(Status::Success),
        _ => Ok(Status::PartiallyValid),
    }
}
