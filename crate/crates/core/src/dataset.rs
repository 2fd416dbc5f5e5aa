//! Measurement samples: CSV ingestion, validation, partitioning.
//!
//! Input CSV schema (UTF-8, comma separated, header row first):
//!
//! | column | required | meaning |
//! |---|---|---|
//! | `freq_ghz` | yes | carrier frequency, GHz |
//! | `path_loss_db` | yes | measured path loss, dB |
//! | `los` | yes | `los`/`nlos` (any case) or `1`/`0` |
//! | `distance_m` | one of | 3D T-R separation, meters |
//! | `tx_x,tx_y,tx_z,rx_x,rx_y,rx_z` | one of | terminal coordinates, meters |
//! | `campaign` | no | free text |
//! | `tx_height_m`, `rx_height_m` | no | antenna heights, meters |
//!
//! When both `distance_m` and coordinates are present the distance column
//! wins; a disagreement above 0.5 m is logged. Rows that fail validation
//! are reported with their line number and never abort ingestion.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use log::warn;
use serde::Serialize;
use thiserror::Error;

use crate::models::{Distance3D, Frequency, ModelError};

/// Coordinate-derived and logged distances may disagree by this much before
/// a warning is emitted, meters.
pub const DISTANCE_MISMATCH_WARN_M: f64 = 0.5;

const COORD_COLUMNS: [&str; 6] = ["tx_x", "tx_y", "tx_z", "rx_x", "rx_y", "rx_z"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed CSV header: {0}")]
    Header(String),
    #[error("no valid rows ({} rejected)", rejected.len())]
    Empty { rejected: Vec<RejectedRow> },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One large-scale path loss sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub frequency: Frequency,
    pub distance_3d: Distance3D,
    pub path_loss_db: f64,
    pub los: bool,
    pub campaign: String,
    pub tx_height_m: Option<f64>,
    pub rx_height_m: Option<f64>,
}

impl MeasurementRecord {
    pub fn new(
        frequency: Frequency,
        distance_3d: Distance3D,
        path_loss_db: f64,
        los: bool,
    ) -> Result<Self, ModelError> {
        if !(path_loss_db.is_finite() && path_loss_db > 0.0) {
            return Err(ModelError::Domain(format!(
                "path loss must be finite and positive, got {path_loss_db} dB"
            )));
        }
        Ok(Self {
            frequency,
            distance_3d,
            path_loss_db,
            los,
            campaign: String::new(),
            tx_height_m: None,
            rx_height_m: None,
        })
    }

    pub fn with_campaign(mut self, campaign: impl Into<String>) -> Self {
        self.campaign = campaign.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DatasetMetadata {
    pub source: String,
    /// Seconds since the Unix epoch.
    pub ingested_at: u64,
}

impl DatasetMetadata {
    pub fn now(source: impl Into<String>) -> Self {
        let ingested_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            source: source.into(),
            ingested_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<MeasurementRecord>,
    pub metadata: DatasetMetadata,
}

impl Dataset {
    pub fn new(records: Vec<MeasurementRecord>, metadata: DatasetMetadata) -> Self {
        Self { records, metadata }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MeasurementRecord> {
        self.records.iter()
    }
}

/// A row that failed validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the input, header included.
    pub line: u64,
    pub reason: String,
}

/// Result of a successful parse: the valid rows plus everything rejected.
#[derive(Debug, Clone)]
pub struct ParsedDataset {
    pub dataset: Dataset,
    pub rejected: Vec<RejectedRow>,
}

/// (distance, LOS flag) projection used by the LOS probability pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LosSample {
    pub distance_3d: f64,
    pub los: bool,
}

impl LosSample {
    pub fn new(distance_3d: f64, los: bool) -> Result<Self, ModelError> {
        if distance_3d.is_finite() && distance_3d > 0.0 {
            Ok(Self { distance_3d, los })
        } else {
            Err(ModelError::Domain(format!(
                "LOS sample distance must be positive, got {distance_3d}"
            )))
        }
    }
}

struct Columns {
    freq: usize,
    path_loss: usize,
    los: usize,
    distance: Option<usize>,
    coords: Option<[usize; 6]>,
    campaign: Option<usize>,
    tx_height: Option<usize>,
    rx_height: Option<usize>,
}

impl Columns {
    fn from_header(header: &csv::StringRecord) -> Result<Self, DatasetError> {
        let mut index = HashMap::new();
        for (i, name) in header.iter().enumerate() {
            let key = name.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(DatasetError::Header(format!(
                    "column {} has an empty name",
                    i + 1
                )));
            }
            if index.insert(key.clone(), i).is_some() {
                return Err(DatasetError::Header(format!("duplicate column '{key}'")));
            }
        }
        let required = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| DatasetError::Header(format!("missing required column '{name}'")))
        };
        let freq = required("freq_ghz")?;
        let path_loss = required("path_loss_db")?;
        let los = required("los")?;
        let distance = index.get("distance_m").copied();
        let present: Vec<Option<usize>> = COORD_COLUMNS
            .iter()
            .map(|c| index.get(*c).copied())
            .collect();
        let coords = if present.iter().all(Option::is_some) {
            let mut idx = [0; 6];
            for (slot, p) in idx.iter_mut().zip(&present) {
                *slot = p.unwrap_or_default();
            }
            Some(idx)
        } else {
            if distance.is_none() {
                let missing: Vec<&str> = COORD_COLUMNS
                    .iter()
                    .zip(&present)
                    .filter(|(_, p)| p.is_none())
                    .map(|(c, _)| *c)
                    .collect();
                return Err(DatasetError::Header(format!(
                    "need 'distance_m' or all of {}; missing {}",
                    COORD_COLUMNS.join(","),
                    missing.join(",")
                )));
            }
            None
        };
        Ok(Self {
            freq,
            path_loss,
            los,
            distance,
            coords,
            campaign: index.get("campaign").copied(),
            tx_height: index.get("tx_height_m").copied(),
            rx_height: index.get("rx_height_m").copied(),
        })
    }
}

fn field(row: &csv::StringRecord, idx: usize) -> Option<&str> {
    row.get(idx).map(str::trim).filter(|s| !s.is_empty())
}

fn number(row: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let raw = field(row, idx).ok_or_else(|| format!("missing value for '{name}'"))?;
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("invalid number in '{name}': '{raw}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value in '{name}'"))
    }
}

fn optional_number(
    row: &csv::StringRecord,
    idx: Option<usize>,
    name: &str,
) -> Result<Option<f64>, String> {
    match idx.and_then(|i| field(row, i)) {
        None => Ok(None),
        Some(_) => number(row, idx.unwrap_or_default(), name).map(Some),
    }
}

/// Parses a LOS flag: `los`/`nlos` in any case, or `1`/`0`.
pub fn parse_los_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "los" | "1" => Some(true),
        "nlos" | "0" => Some(false),
        _ => None,
    }
}

fn parse_row(row: &csv::StringRecord, cols: &Columns) -> Result<MeasurementRecord, String> {
    let freq_ghz = number(row, cols.freq, "freq_ghz")?;
    let frequency = Frequency::ghz(freq_ghz)
        .map_err(|_| format!("frequency must be positive, got {freq_ghz} GHz"))?;

    let path_loss_db = number(row, cols.path_loss, "path_loss_db")?;
    if path_loss_db <= 0.0 {
        return Err(format!("path loss must be positive, got {path_loss_db} dB"));
    }

    let los_raw = field(row, cols.los).ok_or("missing value for 'los'")?;
    let los = parse_los_flag(los_raw).ok_or_else(|| format!("invalid LOS flag '{los_raw}'"))?;

    let logged = match cols.distance {
        Some(i) if field(row, i).is_some() => Some(number(row, i, "distance_m")?),
        _ => None,
    };
    let derived = match cols.coords {
        Some(idx) => {
            let mut v = [0.0; 6];
            let mut all_present = true;
            for (k, (&i, name)) in idx.iter().zip(COORD_COLUMNS).enumerate() {
                if field(row, i).is_none() {
                    all_present = false;
                    break;
                }
                v[k] = number(row, i, name)?;
            }
            all_present.then(|| euclidean([v[0], v[1], v[2]], [v[3], v[4], v[5]]))
        }
        None => None,
    };
    let distance = match (logged, derived) {
        (Some(d), Some(g)) => {
            if (d - g).abs() > DISTANCE_MISMATCH_WARN_M {
                warn!("distance_m = {d} disagrees with coordinate distance {g:.3} m; using distance_m");
            }
            d
        }
        (Some(d), None) | (None, Some(d)) => d,
        (None, None) => return Err("missing distance (neither distance_m nor coordinates)".into()),
    };
    if distance < 1.0 {
        return Err("distance below 1 m reference".into());
    }
    let distance_3d = Distance3D::meters(distance).map_err(|e| e.to_string())?;

    Ok(MeasurementRecord {
        frequency,
        distance_3d,
        path_loss_db,
        los,
        campaign: cols
            .campaign
            .and_then(|i| row.get(i))
            .map(|s| s.trim().to_string())
            .unwrap_or_default(),
        tx_height_m: optional_number(row, cols.tx_height, "tx_height_m")?,
        rx_height_m: optional_number(row, cols.rx_height, "rx_height_m")?,
    })
}

/// Reads a dataset, collecting invalid rows instead of failing on them.
///
/// Fails on a malformed header, on I/O errors, or when no row survives
/// validation.
pub fn parse_csv<R: Read>(reader: R, source: &str) -> Result<ParsedDataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(DatasetError::Header("empty header row".into()));
    }
    let cols = Columns::from_header(&header)?;

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                rejected.push(RejectedRow {
                    line,
                    reason: "invalid UTF-8".into(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if row.len() != header.len() {
            rejected.push(RejectedRow {
                line,
                reason: format!("expected {} fields, found {}", header.len(), row.len()),
            });
            continue;
        }
        match parse_row(&row, &cols) {
            Ok(rec) => records.push(rec),
            Err(reason) => rejected.push(RejectedRow { line, reason }),
        }
    }
    if records.is_empty() {
        return Err(DatasetError::Empty { rejected });
    }
    Ok(ParsedDataset {
        dataset: Dataset::new(records, DatasetMetadata::now(source)),
        rejected,
    })
}

/// Header written by [`write_csv`].
pub const CSV_HEADER: [&str; 7] = [
    "freq_ghz",
    "distance_m",
    "path_loss_db",
    "los",
    "campaign",
    "tx_height_m",
    "rx_height_m",
];

/// Writes a dataset in the distance-column form of the schema. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &ds.records {
        wtr.write_record([
            r.frequency.as_ghz().to_string(),
            r.distance_3d.as_meters().to_string(),
            r.path_loss_db.to_string(),
            if r.los { "los" } else { "nlos" }.to_string(),
            r.campaign.clone(),
            opt(r.tx_height_m),
            opt(r.rx_height_m),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn euclidean(tx: [f64; 3], rx: [f64; 3]) -> f64 {
    tx.iter()
        .zip(rx.iter())
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

/// 3D distance between terminal positions given in meters.
pub fn derive_distance(tx: [f64; 3], rx: [f64; 3]) -> Result<Distance3D, ModelError> {
    if tx.iter().chain(rx.iter()).any(|c| !c.is_finite()) {
        return Err(ModelError::Domain("coordinates must be finite".into()));
    }
    let d = euclidean(tx, rx);
    if d < 1.0 {
        return Err(ModelError::Domain(format!(
            "terminals are {d} m apart, closer than the 1 m reference distance"
        )));
    }
    Distance3D::meters(d)
}

/// Splits into (LOS, NLOS), preserving record order within each side.
pub fn partition(ds: &Dataset) -> (Dataset, Dataset) {
    let (los, nlos): (Vec<_>, Vec<_>) = ds.records.iter().cloned().partition(|r| r.los);
    (
        Dataset::new(los, ds.metadata.clone()),
        Dataset::new(nlos, ds.metadata.clone()),
    )
}

/// (distance, LOS) pairs sorted by distance.
pub fn los_samples(ds: &Dataset) -> Vec<LosSample> {
    let mut out: Vec<LosSample> = ds
        .records
        .iter()
        .map(|r| LosSample {
            distance_3d: r.distance_3d.as_meters(),
            los: r.los,
        })
        .collect();
    out.sort_by(|a, b| a.distance_3d.total_cmp(&b.distance_3d));
    out
}
