//! Shadow-fading magnitude versus distance.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EstimationError, FitReport, Result};
use crate::models::SfLineParams;

/// Per-bin statistic of the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SfStatistic {
    /// Mean of |residual|.
    #[default]
    Mean,
    /// Root mean square of the residuals.
    Rms,
}

impl std::str::FromStr for SfStatistic {
    type Err = EstimationError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(SfStatistic::Mean),
            "rms" => Ok(SfStatistic::Rms),
            other => Err(EstimationError::Domain(format!(
                "unknown SF statistic '{other}'"
            ))),
        }
    }
}

impl fmt::Display for SfStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SfStatistic::Mean => "mean",
            SfStatistic::Rms => "rms",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SfBin {
    pub center_m: f64,
    pub magnitude_db: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowFadingProfile {
    pub bins: Vec<SfBin>,
    pub line: SfLineParams,
    pub statistic: SfStatistic,
    pub bin_width_m: f64,
    pub warnings: Vec<String>,
}

/// Bins the residuals of `report` into `[k·w, (k+1)·w)` distance bins,
/// reduces each bin to one magnitude, and fits `SF = A·d + B` by unweighted
/// least squares over the bin centers.
pub fn shadow_fading_profile(
    report: &FitReport,
    bin_width_m: f64,
    statistic: SfStatistic,
) -> Result<ShadowFadingProfile> {
    if !(bin_width_m.is_finite() && bin_width_m > 0.0) {
        return Err(EstimationError::Domain(format!(
            "bin width must be positive, got {bin_width_m}"
        )));
    }
    let mut acc: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for r in &report.residuals {
        let k = (r.distance_m / bin_width_m).floor() as i64;
        let e = acc.entry(k).or_insert((0.0, 0.0, 0));
        e.0 += r.residual_db.abs();
        e.1 += r.residual_db * r.residual_db;
        e.2 += 1;
    }
    if acc.len() < 2 {
        return Err(EstimationError::Domain(format!(
            "shadow-fading profile needs at least 2 non-empty bins, got {}",
            acc.len()
        )));
    }
    let bins: Vec<SfBin> = acc
        .into_iter()
        .map(|(k, (abs_sum, sq_sum, count))| SfBin {
            center_m: (k as f64 + 0.5) * bin_width_m,
            magnitude_db: match statistic {
                SfStatistic::Mean => abs_sum / count as f64,
                SfStatistic::Rms => (sq_sum / count as f64).sqrt(),
            },
            count,
        })
        .collect();

    let n = bins.len() as f64;
    let mx = bins.iter().map(|b| b.center_m).sum::<f64>() / n;
    let my = bins.iter().map(|b| b.magnitude_db).sum::<f64>() / n;
    let (sxx, sxy) = bins.iter().fold((0.0, 0.0), |(sxx, sxy), b| {
        let dx = b.center_m - mx;
        (sxx + dx * dx, sxy + dx * (b.magnitude_db - my))
    });
    let a = sxy / sxx;
    let line = SfLineParams { a, b: my - a * mx };
    let mut warnings = Vec::new();
    if line.b < 0.0 {
        warnings.push(format!("negative SF intercept B = {:.3} dB", line.b));
    }
    Ok(ShadowFadingProfile {
        bins,
        line,
        statistic,
        bin_width_m,
        warnings,
    })
}
