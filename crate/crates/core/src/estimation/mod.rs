//! Least-squares (dB-domain) fitting of every model family.
//!
//! Each path loss fitter returns a [`FitReport`] whose `sigma` is the RMS
//! of its own residuals, i.e. the shadow-fading standard deviation.

mod dual;
mod los;
mod shadow;
mod single;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::models::{ModelError, ModelFamily, PathLossParams};

pub use dual::{breakpoint_grid, fit_ci_dual, fit_fi_dual, MIN_SEGMENT_SAMPLES};
pub use los::{
    empirical_los_curve, fit_los_model, los_curve_mse, los_search_grid, EmpiricalLosCurve,
    LosCurvePoint, LosFitReport, LOS_WINDOW_HALF_WIDTH_M,
};
pub use shadow::{shadow_fading_profile, SfBin, SfStatistic, ShadowFadingProfile};
pub use single::{fit_abg, fit_ci, fit_fi};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("{model} fit needs at least {needed} samples, got {got}")]
    InsufficientData {
        model: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = EstimationError> = std::result::Result<T, E>;

/// Per-record fit residual, measured minus modeled, dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub distance_m: f64,
    pub residual_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub params: PathLossParams,
    /// Shadow-fading standard deviation: RMS of `residuals`, dB.
    pub sigma: f64,
    pub n_samples: usize,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub residuals: Vec<Residual>,
}

impl FitReport {
    /// Evaluates `params` on every record and derives residuals and sigma
    /// from them.
    pub(crate) fn from_params(
        ds: &Dataset,
        params: PathLossParams,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let residuals = ds
            .iter()
            .map(|r| {
                Ok(Residual {
                    distance_m: r.distance_3d.as_meters(),
                    residual_db: r.path_loss_db
                        - params.mean_path_loss(r.frequency, r.distance_3d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            sigma: rms(residuals.iter().map(|r| r.residual_db)),
            n_samples: residuals.len(),
            warnings,
            residuals,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.params.family()
    }

    pub fn mean_residual(&self) -> f64 {
        if self.residuals.is_empty() {
            return 0.0;
        }
        self.residuals.iter().map(|r| r.residual_db).sum::<f64>() / self.residuals.len() as f64
    }
}

/// Fits the requested family.
pub fn fit(ds: &Dataset, family: ModelFamily) -> Result<FitReport> {
    match family {
        ModelFamily::Ci => fit_ci(ds),
        ModelFamily::Abg => fit_abg(ds),
        ModelFamily::Fi => fit_fi(ds),
        ModelFamily::CiDual => fit_ci_dual(ds),
        ModelFamily::FiDual => fit_fi_dual(ds),
    }
}

pub(crate) fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Relative determinant below which a 2x2 normal system counts as singular.
const SINGULAR_RTOL: f64 = 1e-12;

/// Solves `[s11 s12; s12 s22]·x = [r1; r2]`, or `None` when the system is
/// singular relative to its diagonal.
pub(crate) fn solve_sym2(s11: f64, s12: f64, s22: f64, r1: f64, r2: f64) -> Option<(f64, f64)> {
    let det = s11 * s22 - s12 * s12;
    if !(s11 > 0.0 && s22 > 0.0) || det <= SINGULAR_RTOL * s11 * s22 {
        return None;
    }
    Some(((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det))
}

pub(crate) fn require(model: &'static str, ds: &Dataset, needed: usize) -> Result<()> {
    if ds.len() < needed {
        Err(EstimationError::InsufficientData {
            model,
            needed,
            got: ds.len(),
        })
    } else {
        Ok(())
    }
}

pub(crate) fn distinct_count(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
