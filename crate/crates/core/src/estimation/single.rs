//! Single-slope CI, ABG and FI fits.

use super::{distinct_count, require, solve_sym2, EstimationError, FitReport, Result};
use crate::dataset::Dataset;
use crate::models::{fspl_1m, AbgParams, CiParams, FiParams, PathLossParams};

/// Range outside which a fitted exponent is reported as unusual.
const PLE_TYPICAL: (f64, f64) = (1.0, 10.0);

fn log_distance(ds: &Dataset) -> impl Iterator<Item = f64> + '_ {
    ds.iter().map(|r| 10.0 * r.distance_3d.as_meters().log10())
}

/// Close-in model through the 1 m free-space anchor.
///
/// Closed form: with `w = 10·log10(d)` and `y = PL − FSPL(f, 1 m)`,
/// `n = Σ w·y / Σ w²`.
pub fn fit_ci(ds: &Dataset) -> Result<FitReport> {
    require("CI", ds, 2)?;
    if distinct_count(ds.iter().map(|r| r.distance_3d.as_meters())) < 2 {
        return Err(EstimationError::SingularDesign(
            "all samples share one distance; column 'distance' carries no information".into(),
        ));
    }
    let (mut sww, mut swy) = (0.0, 0.0);
    for (r, w) in ds.iter().zip(log_distance(ds)) {
        let y = r.path_loss_db - fspl_1m(r.frequency);
        sww += w * w;
        swy += w * y;
    }
    let ple = swy / sww;
    let mut warnings = Vec::new();
    if !(PLE_TYPICAL.0..=PLE_TYPICAL.1).contains(&ple) {
        warnings.push(format!(
            "fitted PLE {ple:.3} outside the typical range [{}, {}]",
            PLE_TYPICAL.0, PLE_TYPICAL.1
        ));
    }
    FitReport::from_params(ds, PathLossParams::Ci(CiParams { ple }), warnings)
}

/// Alpha-beta-gamma model: OLS on `[10·log10(d), 1, 10·log10(f)]`.
pub fn fit_abg(ds: &Dataset) -> Result<FitReport> {
    require("ABG", ds, 3)?;
    if distinct_count(ds.iter().map(|r| r.frequency.as_ghz())) < 2 {
        return Err(EstimationError::SingularDesign(
            "fewer than 2 distinct values in column 'frequency'".into(),
        ));
    }
    if distinct_count(ds.iter().map(|r| r.distance_3d.as_meters())) < 2 {
        return Err(EstimationError::SingularDesign(
            "fewer than 2 distinct values in column 'distance'".into(),
        ));
    }
    let n = ds.len() as f64;
    let xs: Vec<f64> = log_distance(ds).collect();
    let zs: Vec<f64> = ds
        .iter()
        .map(|r| 10.0 * r.frequency.as_ghz().log10())
        .collect();
    let ys: Vec<f64> = ds.iter().map(|r| r.path_loss_db).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let mz = zs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxz, mut szz, mut sxy, mut szy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((x, z), y) in xs.iter().zip(&zs).zip(&ys) {
        let (x, z, y) = (x - mx, z - mz, y - my);
        sxx += x * x;
        sxz += x * z;
        szz += z * z;
        sxy += x * y;
        szy += z * y;
    }
    let (alpha, gamma) = solve_sym2(sxx, sxz, szz, sxy, szy).ok_or_else(|| {
        EstimationError::SingularDesign("columns 'distance' and 'frequency' are collinear".into())
    })?;
    let beta = my - alpha * mx - gamma * mz;
    FitReport::from_params(
        ds,
        PathLossParams::Abg(AbgParams { alpha, beta, gamma }),
        Vec::new(),
    )
}

/// Ordinary least squares for the floating-intercept line in log-distance.
pub(crate) fn fi_line(ws: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = ws.len() as f64;
    let mw = ws.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sww, mut swy) = (0.0, 0.0);
    for (w, y) in ws.iter().zip(ys) {
        sww += (w - mw) * (w - mw);
        swy += (w - mw) * (y - my);
    }
    if sww <= 0.0 {
        return None;
    }
    let slope = swy / sww;
    Some((my - slope * mw, slope))
}

/// Floating-intercept model: OLS on `[1, 10·log10(d)]`.
pub fn fit_fi(ds: &Dataset) -> Result<FitReport> {
    require("FI", ds, 2)?;
    if distinct_count(ds.iter().map(|r| r.distance_3d.as_meters())) < 2 {
        return Err(EstimationError::SingularDesign(
            "fewer than 2 distinct values in column 'distance'".into(),
        ));
    }
    let ws: Vec<f64> = log_distance(ds).collect();
    let ys: Vec<f64> = ds.iter().map(|r| r.path_loss_db).collect();
    let (alpha, beta) = fi_line(&ws, &ys).ok_or_else(|| {
        EstimationError::SingularDesign("column 'distance' has zero spread".into())
    })?;
    FitReport::from_params(ds, PathLossParams::Fi(FiParams { alpha, beta }), Vec::new())
}
