//! Large-scale radio propagation models for urban macro-cell measurements.
//!
//! - [`models`]: closed-form CI / ABG / FI path loss (single and dual
//!   slope), LOS probability and shadow-fading magnitude models
//! - [`dataset`]: CSV ingestion and partitioning of path loss samples
//! - [`estimation`]: least-squares fitting of every model family
//! - [`synthesis`]: seeded synthetic datasets with known ground truth

pub mod dataset;
pub mod estimation;
pub mod models;
pub mod synthesis;

pub use dataset::{Dataset, LosSample, MeasurementRecord};
pub use estimation::{EmpiricalLosCurve, FitReport, LosFitReport, ShadowFadingProfile};
pub use models::{Distance3D, Frequency, LosModelKind, LosProbParams, ModelFamily, PathLossParams};
pub use synthesis::SynthSpec;
