//! Empirical LOS probability curve and LOS model fitting.

use serde::Serialize;

use super::{EstimationError, Result};
use crate::dataset::LosSample;
use crate::models::{los_probability, LosModelKind, LosProbParams};

/// Half-width of the smoothing window around each grid distance, meters.
pub const LOS_WINDOW_HALF_WIDTH_M: f64 = 5.0;

const GRID_POINTS: usize = 200;
const D2_RANGE: (f64, f64) = (1.0, 2000.0);
const D1_RANGE_M: (f64, f64) = (0.1, 200.0);
const D1_RANGE_INV_M: (f64, f64) = (1e-4, 1.0);
const REFINE_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 500;
const MIN_STEP: f64 = 1e-6;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LosCurvePoint {
    pub distance_m: f64,
    pub probability: f64,
    /// Samples inside the window.
    pub support: usize,
}

/// Smoothed LOS probability on a 1 m grid; grid points without support are
/// left out.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EmpiricalLosCurve {
    pub points: Vec<LosCurvePoint>,
}

impl EmpiricalLosCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosFitReport {
    pub params: LosProbParams,
    pub mse: f64,
}

/// For each integer distance from `ceil(min d)` to `floor(max d)`, the LOS
/// fraction of all samples within ±5 m.
pub fn empirical_los_curve(samples: &[LosSample]) -> Result<EmpiricalLosCurve> {
    if samples.is_empty() {
        return Err(EstimationError::Domain("no LOS samples".into()));
    }
    let mut sorted: Vec<LosSample> = samples.to_vec();
    sorted.sort_by(|a, b| a.distance_3d.total_cmp(&b.distance_3d));
    let mut los_prefix = Vec::with_capacity(sorted.len() + 1);
    los_prefix.push(0usize);
    for s in &sorted {
        los_prefix.push(los_prefix.last().copied().unwrap_or(0) + usize::from(s.los));
    }
    let first = sorted[0].distance_3d.ceil();
    let last = sorted[sorted.len() - 1].distance_3d.floor();
    if first > last {
        return Err(EstimationError::Domain(format!(
            "samples span [{}, {}] m, which holds no integer grid distance",
            sorted[0].distance_3d,
            sorted[sorted.len() - 1].distance_3d
        )));
    }
    let mut points = Vec::new();
    for g in first as u64..=last as u64 {
        let g = g as f64;
        let lo = sorted.partition_point(|s| s.distance_3d < g - LOS_WINDOW_HALF_WIDTH_M);
        let hi = sorted.partition_point(|s| s.distance_3d <= g + LOS_WINDOW_HALF_WIDTH_M);
        let support = hi - lo;
        if support == 0 {
            continue;
        }
        let los = los_prefix[hi] - los_prefix[lo];
        points.push(LosCurvePoint {
            distance_m: g,
            probability: los as f64 / support as f64,
            support,
        });
    }
    Ok(EmpiricalLosCurve { points })
}

/// Unweighted mean squared error of a model against the curve points.
pub fn los_curve_mse(curve: &EmpiricalLosCurve, params: &LosProbParams) -> Result<f64> {
    if curve.is_empty() {
        return Err(EstimationError::Domain("empty LOS curve".into()));
    }
    let mut sum = 0.0;
    for p in &curve.points {
        let e = los_probability(p.distance_m, params)? - p.probability;
        sum += e * e;
    }
    Ok(sum / curve.len() as f64)
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn d1_grid(kind: LosModelKind) -> Vec<f64> {
    match kind {
        LosModelKind::InvExp => logspace(D1_RANGE_INV_M.0, D1_RANGE_INV_M.1, GRID_POINTS),
        _ => std::iter::once(0.0)
            .chain(logspace(D1_RANGE_M.0, D1_RANGE_M.1, GRID_POINTS - 1))
            .collect(),
    }
}

/// The coarse `(d1, d2)` grid scanned before refinement. Empty for the
/// pinned UMa model.
pub fn los_search_grid(kind: LosModelKind) -> Vec<(f64, f64)> {
    if kind == LosModelKind::Uma3gpp {
        return Vec::new();
    }
    let d2s = logspace(D2_RANGE.0, D2_RANGE.1, GRID_POINTS);
    d1_grid(kind)
        .into_iter()
        .flat_map(|d1| d2s.iter().map(move |&d2| (d1, d2)))
        .collect()
}

/// A search coordinate: either the raw value or its logarithm, clamped to
/// `[lo, hi]` in raw units.
#[derive(Clone, Copy)]
struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn to_search(self, v: f64) -> f64 {
        if self.log {
            v.ln()
        } else {
            v
        }
    }

    fn to_raw(self, u: f64) -> f64 {
        let v = if self.log { u.exp() } else { u };
        v.clamp(self.lo, self.hi)
    }

    fn bounds(self) -> (f64, f64) {
        (self.to_search(self.lo), self.to_search(self.hi))
    }
}

fn axes(kind: LosModelKind) -> [Axis; 2] {
    let d1 = match kind {
        LosModelKind::InvExp => Axis {
            log: true,
            lo: D1_RANGE_INV_M.0,
            hi: D1_RANGE_INV_M.1,
        },
        _ => Axis {
            log: false,
            lo: 0.0,
            hi: D1_RANGE_M.1,
        },
    };
    let d2 = Axis {
        log: true,
        lo: D2_RANGE.0,
        hi: D2_RANGE.1,
    };
    [d1, d2]
}

/// Golden-section search of `f` on `[a, b]`; returns the best abscissa seen.
fn golden_section(mut a: f64, mut b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    best
}

/// Fits `(d1, d2)` of one LOS model kind to the curve by minimizing the
/// unweighted MSE.
///
/// A coarse logarithmic grid (200 × 200) locates the basin; coordinate
/// descent with golden-section line searches then refines it until a full
/// sweep improves the MSE by a relative 1e-8 or less once the line search
/// brackets have shrunk. The UMa kind has no free parameters and is only
/// scored.
pub fn fit_los_model(curve: &EmpiricalLosCurve, kind: LosModelKind) -> Result<LosFitReport> {
    if curve.is_empty() {
        return Err(EstimationError::Domain("empty LOS curve".into()));
    }
    if kind == LosModelKind::Uma3gpp {
        let params = LosProbParams::uma_3gpp();
        return Ok(LosFitReport {
            mse: los_curve_mse(curve, &params)?,
            params,
        });
    }
    let mse_at = |d1: f64, d2: f64| -> f64 {
        LosProbParams::new(kind, d1, d2)
            .ok()
            .and_then(|p| los_curve_mse(curve, &p).ok())
            .unwrap_or(f64::INFINITY)
    };

    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for (d1, d2) in los_search_grid(kind) {
        let m = mse_at(d1, d2);
        if m < best.2 {
            best = (d1, d2, m);
        }
    }
    if !best.2.is_finite() {
        return Err(EstimationError::Domain(format!(
            "no finite MSE on the {kind} search grid"
        )));
    }

    let axes = axes(kind);
    let d2_step = (D2_RANGE.1 / D2_RANGE.0).ln() / (GRID_POINTS - 1) as f64;
    let d1_step = match kind {
        LosModelKind::InvExp => {
            (D1_RANGE_INV_M.1 / D1_RANGE_INV_M.0).ln() / (GRID_POINTS - 1) as f64
        }
        // spacing of the log grid near the current point, at least the first gap
        _ => (best.0 * (1.0 - (D1_RANGE_M.0 / D1_RANGE_M.1).powf(1.0 / (GRID_POINTS - 2) as f64)))
            .max(D1_RANGE_M.0),
    };
    let mut steps = [d1_step, d2_step];
    let mut point = [axes[0].to_search(best.0), axes[1].to_search(best.1)];
    let mut mse = best.2;
    // raw parameters of the best evaluated point, so the grid winner is
    // returned exactly when refinement never improves on it
    let mut raw_best = [best.0, best.1];

    for _ in 0..MAX_SWEEPS {
        let before = mse;
        for k in 0..2 {
            let (lo, hi) = axes[k].bounds();
            let a = (point[k] - steps[k]).max(lo);
            let b = (point[k] + steps[k]).min(hi);
            let mut line = |u: f64| {
                let mut raw = [axes[0].to_raw(point[0]), axes[1].to_raw(point[1])];
                raw[k] = axes[k].to_raw(u);
                mse_at(raw[0], raw[1])
            };
            let (u, m) = golden_section(a, b, &mut line);
            if m < mse {
                // a minimum pinned to the bracket edge keeps the step wide
                let interior = (u - a) > 0.05 * (b - a) && (b - u) > 0.05 * (b - a);
                point[k] = u;
                mse = m;
                raw_best = [axes[0].to_raw(point[0]), axes[1].to_raw(point[1])];
                if interior {
                    steps[k] *= 0.5;
                }
            } else {
                steps[k] *= 0.5;
            }
        }
        // relative, so noiseless curves with a near-zero MSE keep refining
        if before - mse <= REFINE_TOL * before && steps.iter().all(|&s| s < MIN_STEP) {
            break;
        }
    }
    let params = LosProbParams::new(kind, raw_best[0], raw_best[1])?;
    let mse = los_curve_mse(curve, &params)?;
    Ok(LosFitReport { params, mse })
}
