mod eval;
mod losprob;
mod pathloss;
mod synth;
mod validate;

use std::fs;
use std::path::Path;

use anyhow::Context;
use log::warn;

use propfit::dataset::{parse_csv, partition, Dataset, DatasetError, ParsedDataset};

use crate::json::fmt_g17;
use crate::manifest::InputDigest;
use crate::CliError;

pub use eval::eval;
pub use losprob::fit_losprob;
pub use pathloss::{fit_pathloss, shadow};
pub use synth::synth;
pub use validate::validate;

pub(crate) fn read_input(path: &Path) -> Result<(Vec<u8>, InputDigest), CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest::new(path, &bytes);
    Ok((bytes, digest))
}

pub(crate) fn dataset_error(path: &Path, e: DatasetError) -> CliError {
    match e {
        DatasetError::Io(e) => {
            CliError::Internal(anyhow::Error::new(e).context(format!("reading {}", path.display())))
        }
        other => CliError::Input(format!("{}: {other}", path.display())),
    }
}

/// Parses a dataset for the fitting commands; rejected rows are logged and
/// skipped.
pub(crate) fn load_dataset(path: &Path) -> Result<(ParsedDataset, InputDigest), CliError> {
    let (bytes, digest) = read_input(path)?;
    let parsed = parse_csv(bytes.as_slice(), &path.display().to_string())
        .map_err(|e| dataset_error(path, e))?;
    for r in &parsed.rejected {
        warn!(
            "{}: line {}: {} (row skipped)",
            path.display(),
            r.line,
            r.reason
        );
    }
    Ok((parsed, digest))
}

pub(crate) fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(CliError::Internal)
}

/// The LOS and NLOS partitions with their labels, in that order.
pub(crate) fn partitions(ds: &Dataset) -> [(&'static str, Dataset); 2] {
    let (los, nlos) = partition(ds);
    [("los", los), ("nlos", nlos)]
}

/// Integer-meter grid covering the dataset's distances.
pub(crate) fn meter_grid(ds: &Dataset) -> Vec<f64> {
    let (lo, hi) = ds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            let d = r.distance_3d.as_meters();
            (lo.min(d), hi.max(d))
        });
    if lo > hi {
        return Vec::new();
    }
    (lo.ceil() as i64..=hi.floor() as i64)
        .map(|d| d as f64)
        .collect()
}

pub(crate) fn distinct_frequencies(ds: &Dataset) -> Vec<f64> {
    let mut f: Vec<f64> = ds.iter().map(|r| r.frequency.as_ghz()).collect();
    f.sort_by(f64::total_cmp);
    f.dedup();
    f
}

/// CSV writer whose floats are formatted with [`fmt_g17`].
pub(crate) struct CsvOut {
    wtr: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new(header: &[&str]) -> anyhow::Result<Self> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(header)?;
        Ok(Self { wtr })
    }

    pub fn row(&mut self, fields: &[Field]) -> anyhow::Result<()> {
        self.wtr.write_record(fields.iter().map(Field::render))?;
        Ok(())
    }

    pub fn into_bytes(self) -> anyhow::Result<Vec<u8>> {
        self.wtr
            .into_inner()
            .map_err(|e| anyhow::anyhow!("flushing CSV: {e}"))
    }

    pub fn write(self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, self.into_bytes()?).with_context(|| format!("writing {}", path.display()))
    }
}

pub(crate) enum Field<'a> {
    Num(f64),
    Int(usize),
    Text(&'a str),
}

impl Field<'_> {
    fn render(&self) -> String {
        match self {
            Field::Num(v) => fmt_g17(*v),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => s.to_string(),
        }
    }
}
