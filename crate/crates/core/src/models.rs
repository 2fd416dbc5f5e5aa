//! Closed-form large-scale propagation models.
//!
//! Units throughout: frequency in GHz, distance in meters, path loss and
//! shadow fading in dB, logarithms base 10. Everything here is a pure
//! function of its arguments.
//!
//! Models:
//! - **FSPL at 1 m**: `20·log10(4π·f/c)`, the anchor of the close-in models
//! - **CI**: close-in free-space reference distance model, one exponent
//! - **ABG**: alpha-beta-gamma multi-frequency model
//! - **FI**: floating-intercept single-slope model
//! - **CI dual / FI dual**: continuous two-slope variants with a breakpoint
//! - **LOS probability**: 3GPP UMa, 3GPP d1/d2, squared d1/d2, inverse exponential
//! - **SF line**: shadow-fading magnitude linear in distance

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reference distance of the close-in models, meters.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

/// Breakpoint of the pinned 3GPP UMa LOS model, meters.
pub const UMA_3GPP_D1: f64 = 18.0;
/// Decay length of the pinned 3GPP UMa LOS model, meters.
pub const UMA_3GPP_D2: f64 = 63.0;

/// Largest probability overshoot treated as round-off and clamped.
const PROBABILITY_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Carrier frequency in GHz. Always finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Frequency(f64);

impl Frequency {
    pub fn ghz(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(ModelError::Domain(format!(
                "frequency must be finite and positive, got {value} GHz"
            )))
        }
    }

    pub fn as_ghz(self) -> f64 {
        self.0
    }

    pub fn as_hz(self) -> f64 {
        self.0 * 1e9
    }
}

impl TryFrom<f64> for Frequency {
    type Error = ModelError;
    fn try_from(value: f64) -> Result<Self> {
        Self::ghz(value)
    }
}

impl From<Frequency> for f64 {
    fn from(f: Frequency) -> f64 {
        f.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} GHz", self.0)
    }
}

/// 3D transmitter-receiver separation in meters, never below the 1 m
/// reference distance.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Distance3D(f64);

impl Distance3D {
    pub fn meters(value: f64) -> Result<Self> {
        if value.is_finite() && value >= REFERENCE_DISTANCE_M {
            Ok(Self(value))
        } else {
            Err(ModelError::Domain(format!(
                "distance {value} m is below the 1 m reference distance"
            )))
        }
    }

    pub fn as_meters(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Distance3D {
    type Error = ModelError;
    fn try_from(value: f64) -> Result<Self> {
        Self::meters(value)
    }
}

impl From<Distance3D> for f64 {
    fn from(d: Distance3D) -> f64 {
        d.0
    }
}

/// Close-in model: a single path loss exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiParams {
    pub ple: f64,
}

/// Alpha-beta-gamma model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbgParams {
    pub alpha: f64,
    /// Offset, dB.
    pub beta: f64,
    pub gamma: f64,
}

/// Floating-intercept model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiParams {
    /// Intercept at 1 m, dB.
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiDualParams {
    pub n1: f64,
    pub n2: f64,
    /// Breakpoint, meters.
    pub d_th: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiDualParams {
    pub alpha1: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Breakpoint, meters.
    pub d_th: f64,
}

/// Shadow-fading magnitude line `a·d + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfLineParams {
    /// Slope, dB per meter.
    pub a: f64,
    /// Intercept, dB.
    pub b: f64,
}

/// Any fitted path loss parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum PathLossParams {
    Ci(CiParams),
    Abg(AbgParams),
    Fi(FiParams),
    CiDual(CiDualParams),
    FiDual(FiDualParams),
}

impl PathLossParams {
    pub fn family(&self) -> ModelFamily {
        match self {
            PathLossParams::Ci(_) => ModelFamily::Ci,
            PathLossParams::Abg(_) => ModelFamily::Abg,
            PathLossParams::Fi(_) => ModelFamily::Fi,
            PathLossParams::CiDual(_) => ModelFamily::CiDual,
            PathLossParams::FiDual(_) => ModelFamily::FiDual,
        }
    }

    /// Mean path loss in dB at `(f, d)`. Rejects a dual-slope breakpoint
    /// below 1 m.
    pub fn mean_path_loss(&self, f: Frequency, d: Distance3D) -> Result<f64> {
        match self {
            PathLossParams::Ci(p) => Ok(ci_path_loss(f, d, p)),
            PathLossParams::Abg(p) => Ok(abg_path_loss(f, d, p)),
            PathLossParams::Fi(p) => Ok(fi_path_loss(d, p)),
            PathLossParams::CiDual(p) => ci_dual_path_loss(f, d, p),
            PathLossParams::FiDual(p) => fi_dual_path_loss(d, p),
        }
    }
}

/// The five path loss model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Ci,
    Abg,
    Fi,
    CiDual,
    FiDual,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Ci,
        ModelFamily::Abg,
        ModelFamily::Fi,
        ModelFamily::CiDual,
        ModelFamily::FiDual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Ci => "ci",
            ModelFamily::Abg => "abg",
            ModelFamily::Fi => "fi",
            ModelFamily::CiDual => "ci-dual",
            ModelFamily::FiDual => "fi-dual",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::Domain(format!("unknown path loss model '{s}'")))
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Free-space path loss at 1 m, dB.
pub fn fspl_1m(f: Frequency) -> f64 {
    20.0 * (4.0 * PI * f.as_hz() / SPEED_OF_LIGHT).log10()
}

pub fn ci_path_loss(f: Frequency, d: Distance3D, p: &CiParams) -> f64 {
    fspl_1m(f) + 10.0 * p.ple * d.as_meters().log10()
}

pub fn abg_path_loss(f: Frequency, d: Distance3D, p: &AbgParams) -> f64 {
    10.0 * p.alpha * d.as_meters().log10() + p.beta + 10.0 * p.gamma * f.as_ghz().log10()
}

pub fn fi_path_loss(d: Distance3D, p: &FiParams) -> f64 {
    p.alpha + 10.0 * p.beta * d.as_meters().log10()
}

fn check_breakpoint(d_th: f64) -> Result<()> {
    if d_th.is_finite() && d_th >= REFERENCE_DISTANCE_M {
        Ok(())
    } else {
        Err(ModelError::Domain(format!(
            "breakpoint {d_th} m is below the 1 m reference distance"
        )))
    }
}

/// Piecewise log-distance term shared by both dual-slope models: slope
/// `s1` up to `d_th`, slope `s2` beyond it, continuous at the breakpoint.
fn dual_slope_term(d: f64, s1: f64, s2: f64, d_th: f64) -> f64 {
    if d <= d_th {
        10.0 * s1 * d.log10()
    } else {
        10.0 * s1 * d_th.log10() + 10.0 * s2 * (d / d_th).log10()
    }
}

pub fn ci_dual_path_loss(f: Frequency, d: Distance3D, p: &CiDualParams) -> Result<f64> {
    check_breakpoint(p.d_th)?;
    Ok(fspl_1m(f) + dual_slope_term(d.as_meters(), p.n1, p.n2, p.d_th))
}

pub fn fi_dual_path_loss(d: Distance3D, p: &FiDualParams) -> Result<f64> {
    check_breakpoint(p.d_th)?;
    Ok(p.alpha1 + dual_slope_term(d.as_meters(), p.beta1, p.beta2, p.d_th))
}

/// LOS probability model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LosModelKind {
    /// 3GPP UMa with d1 = 18 m, d2 = 63 m.
    #[serde(rename = "uma3gpp")]
    Uma3gpp,
    /// 3GPP form with free d1, d2.
    #[serde(rename = "d1d2", alias = "d1_d2")]
    D1D2,
    /// Square of the d1/d2 form.
    #[serde(rename = "nyu", alias = "nyu_squared")]
    NyuSquared,
    /// `1 / (1 + exp(d1·(d − d2)))`, d1 in 1/m.
    #[serde(rename = "invexp", alias = "inv_exp")]
    InvExp,
}

impl LosModelKind {
    pub const ALL: [LosModelKind; 4] = [
        LosModelKind::Uma3gpp,
        LosModelKind::D1D2,
        LosModelKind::NyuSquared,
        LosModelKind::InvExp,
    ];

    /// CLI selector name.
    pub fn name(self) -> &'static str {
        match self {
            LosModelKind::Uma3gpp => "uma3gpp",
            LosModelKind::D1D2 => "d1d2",
            LosModelKind::NyuSquared => "nyu",
            LosModelKind::InvExp => "invexp",
        }
    }
}

impl std::str::FromStr for LosModelKind {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self> {
        LosModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::Domain(format!("unknown LOS model '{s}'")))
    }
}

impl fmt::Display for LosModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of one LOS probability model.
///
/// `d1` is meters for the d1/d2 forms and 1/m for the inverse exponential;
/// `d2` is meters for all kinds. The UMa kind only exists with (18, 63).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLosProbParams")]
pub struct LosProbParams {
    kind: LosModelKind,
    d1: f64,
    d2: f64,
}

#[derive(Deserialize)]
struct RawLosProbParams {
    kind: LosModelKind,
    d1: f64,
    d2: f64,
}

impl TryFrom<RawLosProbParams> for LosProbParams {
    type Error = ModelError;
    fn try_from(raw: RawLosProbParams) -> Result<Self> {
        Self::new(raw.kind, raw.d1, raw.d2)
    }
}

impl LosProbParams {
    pub fn new(kind: LosModelKind, d1: f64, d2: f64) -> Result<Self> {
        if !d1.is_finite() || !d2.is_finite() {
            return Err(ModelError::Domain(
                "LOS model parameters must be finite".into(),
            ));
        }
        if d2 <= 0.0 {
            return Err(ModelError::Domain(format!("d2 must be positive, got {d2}")));
        }
        match kind {
            LosModelKind::Uma3gpp if d1 != UMA_3GPP_D1 || d2 != UMA_3GPP_D2 => {
                Err(ModelError::Domain(format!(
                    "the 3GPP UMa model is pinned to d1 = {UMA_3GPP_D1}, d2 = {UMA_3GPP_D2}"
                )))
            }
            LosModelKind::D1D2 | LosModelKind::NyuSquared if d1 < 0.0 => Err(ModelError::Domain(
                format!("d1 must be non-negative, got {d1}"),
            )),
            _ => Ok(Self { kind, d1, d2 }),
        }
    }

    pub fn uma_3gpp() -> Self {
        Self {
            kind: LosModelKind::Uma3gpp,
            d1: UMA_3GPP_D1,
            d2: UMA_3GPP_D2,
        }
    }

    pub fn kind(&self) -> LosModelKind {
        self.kind
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }
}

fn d1d2_form(d: f64, d1: f64, d2: f64) -> f64 {
    if d <= d1 {
        return 1.0;
    }
    let decay = (-d / d2).exp();
    (d1 / d) * (1.0 - decay) + decay
}

/// LOS probability at distance `d` (meters, any positive value).
pub fn los_probability(d: f64, p: &LosProbParams) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(ModelError::Domain(format!(
            "LOS probability needs a positive distance, got {d}"
        )));
    }
    let raw = match p.kind {
        LosModelKind::Uma3gpp | LosModelKind::D1D2 => d1d2_form(d, p.d1, p.d2),
        LosModelKind::NyuSquared => d1d2_form(d, p.d1, p.d2).powi(2),
        LosModelKind::InvExp => 1.0 / (1.0 + (p.d1 * (d - p.d2)).exp()),
    };
    if (0.0..=1.0).contains(&raw) {
        Ok(raw)
    } else if raw > -PROBABILITY_ROUNDOFF && raw < 1.0 + PROBABILITY_ROUNDOFF {
        Ok(raw.clamp(0.0, 1.0))
    } else {
        Err(ModelError::Internal(format!(
            "{} model produced probability {raw} at d = {d}",
            p.kind
        )))
    }
}

/// Shadow-fading magnitude in dB.
pub fn sf_line(d: Distance3D, p: &SfLineParams) -> f64 {
    p.a * d.as_meters() + p.b
}

/// LOS-probability-weighted mean of a LOS and an NLOS path loss model.
pub fn blended_mean_path_loss(
    f: Frequency,
    d: Distance3D,
    los_params: &LosProbParams,
    pl_los: &PathLossParams,
    pl_nlos: &PathLossParams,
) -> Result<f64> {
    let p = los_probability(d.as_meters(), los_params)?;
    let los = pl_los.mean_path_loss(f, d)?;
    let nlos = pl_nlos.mean_path_loss(f, d)?;
    if p == 1.0 {
        return Ok(los);
    }
    if p == 0.0 {
        return Ok(nlos);
    }
    Ok(p * los + (1.0 - p) * nlos)
}
