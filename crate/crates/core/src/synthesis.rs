//! Seeded synthetic datasets with known ground truth.
//!
//! The random stream is part of the output contract, so it is spelled out
//! here rather than delegated to a distribution crate:
//!
//! - generator: ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`)
//! - uniform: `(next_u64() >> 11) · 2^-53`, in `[0, 1)`
//! - normal: Box-Muller cosine branch, `sqrt(-2 ln(1 - u1)) · cos(2π u2)`
//! - path loss record draws, in order: distance, frequency index, normal
//!   (two uniforms), then the LOS Bernoulli draw when a LOS model is set
//! - LOS sample draws, in order: distance, Bernoulli
//!
//! Any implementation of the same steps reproduces a dataset from
//! `(GENERATOR_NAME, seed, spec)`.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetMetadata, LosSample, MeasurementRecord};
use crate::models::{
    los_probability, Distance3D, Frequency, LosProbParams, ModelError, PathLossParams,
};

/// Name recorded in metadata and sidecars.
pub const GENERATOR_NAME: &str = "chacha8-seed_from_u64/u53-uniform/box-muller-cos";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSampling {
    #[default]
    LogUniform,
    Uniform,
}

/// Ground truth and sampling plan of a synthetic dataset.
///
/// The shadow-fading standard deviation at distance `d` is
/// `sigma_db + sigma_slope_db_per_m · d`; the slope defaults to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default)]
    pub path_loss: Option<PathLossParams>,
    /// When set, each record's LOS flag is a Bernoulli draw from this model.
    #[serde(default)]
    pub los_model: Option<LosProbParams>,
    /// LOS flag for every record when no LOS model is set.
    #[serde(default)]
    pub los: bool,
    #[serde(default)]
    pub frequencies: Vec<f64>,
    pub distance_min_m: f64,
    pub distance_max_m: f64,
    #[serde(default)]
    pub sampling: DistanceSampling,
    #[serde(default)]
    pub sigma_db: f64,
    #[serde(default)]
    pub sigma_slope_db_per_m: f64,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub campaign: String,
}

impl SynthSpec {
    /// A path loss spec with the common defaults (log-uniform distances,
    /// NLOS, constant sigma).
    pub fn path_loss(
        params: PathLossParams,
        frequencies: &[f64],
        distance_range_m: (f64, f64),
        sigma_db: f64,
        n_samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            path_loss: Some(params),
            los_model: None,
            los: false,
            frequencies: frequencies.to_vec(),
            distance_min_m: distance_range_m.0,
            distance_max_m: distance_range_m.1,
            sampling: DistanceSampling::LogUniform,
            sigma_db,
            sigma_slope_db_per_m: 0.0,
            n_samples,
            seed,
            campaign: "synthetic".into(),
        }
    }

    /// A LOS-only spec.
    pub fn los(
        model: LosProbParams,
        distance_range_m: (f64, f64),
        n_samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            path_loss: None,
            los_model: Some(model),
            los: false,
            frequencies: Vec::new(),
            distance_min_m: distance_range_m.0,
            distance_max_m: distance_range_m.1,
            sampling: DistanceSampling::Uniform,
            sigma_db: 0.0,
            sigma_slope_db_per_m: 0.0,
            n_samples,
            seed,
            campaign: "synthetic".into(),
        }
    }

    pub fn sigma_at(&self, d: f64) -> f64 {
        self.sigma_db + self.sigma_slope_db_per_m * d
    }

    fn validate_common(&self) -> Result<()> {
        let (lo, hi) = (self.distance_min_m, self.distance_max_m);
        if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && hi > lo) {
            return Err(SynthError::InvalidSpec(format!(
                "distance range must satisfy 1 <= min < max, got [{lo}, {hi}]"
            )));
        }
        if self.n_samples == 0 {
            return Err(SynthError::InvalidSpec(
                "n_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_path_loss(&self) -> Result<PathLossParams> {
        self.validate_common()?;
        let params = self
            .path_loss
            .ok_or_else(|| SynthError::InvalidSpec("no path loss model given".into()))?;
        if self.frequencies.is_empty() {
            return Err(SynthError::InvalidSpec(
                "at least one frequency is required".into(),
            ));
        }
        for &f in &self.frequencies {
            Frequency::ghz(f)?;
        }
        if !(self.sigma_db.is_finite() && self.sigma_slope_db_per_m.is_finite()) {
            return Err(SynthError::InvalidSpec("sigma must be finite".into()));
        }
        if self.sigma_at(self.distance_min_m) < 0.0 || self.sigma_at(self.distance_max_m) < 0.0 {
            return Err(SynthError::InvalidSpec(
                "shadow-fading sigma must be non-negative over the distance range".into(),
            ));
        }
        Ok(params)
    }

    pub fn validate_los(&self) -> Result<LosProbParams> {
        self.validate_common()?;
        self.los_model
            .ok_or_else(|| SynthError::InvalidSpec("no LOS probability model given".into()))
    }
}

/// The documented random stream.
pub struct SynthRng(ChaCha8Rng);

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

fn draw_distance(rng: &mut SynthRng, spec: &SynthSpec) -> f64 {
    let (lo, hi) = (spec.distance_min_m, spec.distance_max_m);
    let u = rng.uniform();
    let d = match spec.sampling {
        DistanceSampling::Uniform => lo + u * (hi - lo),
        DistanceSampling::LogUniform => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
    };
    d.clamp(lo, hi)
}

/// Path loss records: model mean plus Gaussian shadow fading in dB.
pub fn generate_pathloss(spec: &SynthSpec) -> Result<Dataset> {
    let params = spec.validate_path_loss()?;
    let mut rng = SynthRng::new(spec.seed);
    let mut records = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let d = draw_distance(&mut rng, spec);
        let k = ((rng.uniform() * spec.frequencies.len() as f64) as usize)
            .min(spec.frequencies.len() - 1);
        let z = rng.normal();
        let los = match &spec.los_model {
            Some(m) => rng.uniform() < los_probability(d, m)?,
            None => spec.los,
        };
        let frequency = Frequency::ghz(spec.frequencies[k])?;
        let distance = Distance3D::meters(d)?;
        let pl = params.mean_path_loss(frequency, distance)? + spec.sigma_at(d) * z;
        let rec = MeasurementRecord::new(frequency, distance, pl, los)
            .map_err(|e| SynthError::InvalidSpec(format!("generated an invalid record: {e}")))?;
        records.push(rec.with_campaign(spec.campaign.clone()));
    }
    Ok(Dataset::new(records, metadata(spec)))
}

/// Bernoulli LOS draws with success probability from the spec's LOS model.
pub fn generate_los(spec: &SynthSpec) -> Result<Vec<LosSample>> {
    let model = spec.validate_los()?;
    let mut rng = SynthRng::new(spec.seed);
    (0..spec.n_samples)
        .map(|_| {
            let d = draw_distance(&mut rng, spec);
            let los = rng.uniform() < los_probability(d, &model)?;
            Ok(LosSample::new(d, los)?)
        })
        .collect()
}

fn metadata(spec: &SynthSpec) -> DatasetMetadata {
    DatasetMetadata {
        source: format!("synthetic {GENERATOR_NAME} seed={}", spec.seed),
        ingested_at: 0,
    }
}
