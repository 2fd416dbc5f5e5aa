//! Dual-slope fits with an exhaustive integer-meter breakpoint search.
//!
//! For a candidate breakpoint `t`, write `w = 10·log10(d)`, `wt = 10·log10(t)`,
//! `a = min(w, wt)` and `b = max(w − wt, 0)`. The dual CI model is then
//! linear in `(n1, n2)`: `PL − FSPL = n1·a + n2·b`, and the dual FI model is
//! linear in `(α1, β1, β2)`: `PL = α1 + β1·a + β2·b`. Both slopes are solved
//! jointly for every candidate.
//!
//! Samples are sorted by distance once; per-candidate normal equations come
//! from prefix and suffix moments, so the scan costs `O(n log n + grid·log n)`.

use super::single::fi_line;
use super::{require, solve_sym2, EstimationError, FitReport, Result};
use crate::dataset::Dataset;
use crate::models::{fspl_1m, CiDualParams, FiDualParams, PathLossParams};

/// Segments with fewer samples than this get a warning.
pub const MIN_SEGMENT_SAMPLES: usize = 5;

const MIN_SPAN_M: f64 = 3.0;
const MIN_RECORDS: usize = 4;

/// Candidate breakpoints: every integer meter from `ceil(min d)` to
/// `floor(max d)`.
pub fn breakpoint_grid(ds: &Dataset) -> Result<Vec<f64>> {
    let (lo, hi) = ds
        .iter()
        .map(|r| r.distance_3d.as_meters())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    let (first, last) = (lo.ceil(), hi.floor());
    if first > last {
        return Err(EstimationError::Domain(format!(
            "distance range [{lo}, {hi}] m holds no integer breakpoint"
        )));
    }
    Ok((first as u64..=last as u64).map(|t| t as f64).collect())
}

/// Welford accumulator over a run of samples.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean_w: f64,
    mean_y: f64,
    m2_w: f64,
    c_wy: f64,
}

impl Moments {
    fn push(self, w: f64, y: f64) -> Self {
        let count = self.count + 1.0;
        let dw = w - self.mean_w;
        let mean_w = self.mean_w + dw / count;
        let mean_y = self.mean_y + (y - self.mean_y) / count;
        Moments {
            count,
            mean_w,
            mean_y,
            m2_w: self.m2_w + dw * (w - mean_w),
            c_wy: self.c_wy + dw * (y - mean_y),
        }
    }

    /// Sums of the column equal to `w − wt` on these samples and 0 elsewhere,
    /// given the overall means.
    fn column(&self, wt: f64, all: &Moments) -> Column {
        let delta = if self.count > 0.0 {
            self.mean_w - wt
        } else {
            0.0
        };
        let n = self.count;
        Column {
            s: n * delta,
            ss: self.m2_w + n * delta * delta,
            sw_c: self.m2_w + n * delta * (self.mean_w - all.mean_w),
            sy_c: self.c_wy + n * delta * (self.mean_y - all.mean_y),
            sy: self.c_wy + n * delta * self.mean_y,
        }
    }
}

/// Sums over one breakpoint column `x`.
#[derive(Debug, Clone, Copy)]
struct Column {
    /// Σx
    s: f64,
    /// Σx²
    ss: f64,
    /// Σx·(w − w̄)
    sw_c: f64,
    /// Σx·(y − ȳ)
    sy_c: f64,
    /// Σx·y
    sy: f64,
}

/// Samples sorted by distance with Welford statistics of every prefix and
/// suffix.
///
/// With `g = min(w − wt, 0)` and `b = max(w − wt, 0)` we have
/// `a = wt + g = w − b`, so a breakpoint model can be fitted on `(w, b)` or,
/// when an intercept is present, on `(w, g)`. Both columns are built from
/// segment moments, never by differencing large running totals.
struct Scan {
    dist: Vec<f64>,
    // prefix[k] covers samples 0..k, suffix[k] covers k..n
    prefix: Vec<Moments>,
    suffix: Vec<Moments>,
}

impl Scan {
    fn new(mut samples: Vec<(f64, f64)>) -> Self {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = samples.len();
        let ws: Vec<f64> = samples.iter().map(|p| 10.0 * p.0.log10()).collect();
        let mut prefix = vec![Moments::default(); n + 1];
        let mut suffix = vec![Moments::default(); n + 1];
        for k in 0..n {
            prefix[k + 1] = prefix[k].push(ws[k], samples[k].1);
            let j = n - 1 - k;
            suffix[j] = suffix[j + 1].push(ws[j], samples[j].1);
        }
        Scan {
            dist: samples.iter().map(|p| p.0).collect(),
            prefix,
            suffix,
        }
    }

    fn len(&self) -> usize {
        self.dist.len()
    }

    fn all(&self) -> &Moments {
        &self.suffix[0]
    }

    fn split(&self, t: f64) -> Split {
        let n = self.len();
        let k = self.dist.partition_point(|&d| d <= t);
        let wt = 10.0 * t.log10();
        Split {
            n_lower: k,
            n_below: self.dist.partition_point(|&d| d < t),
            n_upper: n - k,
            b: self.suffix[k].column(wt, self.all()),
            g: self.prefix[k].column(wt, self.all()),
            wt,
        }
    }
}

struct Split {
    /// samples with d <= t
    n_lower: usize,
    /// samples with d < t
    n_below: usize,
    /// samples with d > t
    n_upper: usize,
    /// `max(w − wt, 0)`
    b: Column,
    /// `min(w − wt, 0)`
    g: Column,
    wt: f64,
}

fn check_preconditions(model: &'static str, ds: &Dataset) -> Result<Vec<f64>> {
    require(model, ds, MIN_RECORDS)?;
    let grid = breakpoint_grid(ds)?;
    let (lo, hi) = ds
        .iter()
        .map(|r| r.distance_3d.as_meters())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    if hi - lo < MIN_SPAN_M {
        return Err(EstimationError::Domain(format!(
            "{model} fit needs samples spanning at least {MIN_SPAN_M} m, got {:.3} m",
            hi - lo
        )));
    }
    Ok(grid)
}

fn segment_warnings(split: &Split, s1: f64, s2: f64, names: (&str, &str)) -> Vec<String> {
    let mut w = Vec::new();
    if split.n_lower < MIN_SEGMENT_SAMPLES {
        w.push(format!(
            "only {} samples at or below the breakpoint (< {MIN_SEGMENT_SAMPLES})",
            split.n_lower
        ));
    }
    if split.n_upper < MIN_SEGMENT_SAMPLES {
        w.push(format!(
            "only {} samples beyond the breakpoint (< {MIN_SEGMENT_SAMPLES})",
            split.n_upper
        ));
    }
    for (name, v) in [(names.0, s1), (names.1, s2)] {
        if v < 0.0 {
            w.push(format!(
                "negative slope {name} = {v:.3} is not physically usable"
            ));
        }
    }
    w
}

/// Index of the smallest value; the first one wins ties.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Dual-slope close-in model: scans every integer breakpoint and keeps the
/// one with the smallest RMS error (smallest breakpoint on ties).
pub fn fit_ci_dual(ds: &Dataset) -> Result<FitReport> {
    let grid = check_preconditions("CI dual", ds)?;
    let samples: Vec<(f64, f64)> = ds
        .iter()
        .map(|r| {
            (
                r.distance_3d.as_meters(),
                r.path_loss_db - fspl_1m(r.frequency),
            )
        })
        .collect();
    let (syy, sww, swy) = samples.iter().fold((0.0, 0.0, 0.0), |acc, &(d, y)| {
        let w = 10.0 * d.log10();
        (acc.0 + y * y, acc.1 + w * w, acc.2 + w * y)
    });
    let scan = Scan::new(samples);
    // single-slope solution, used whenever one segment is unidentifiable
    let single = swy / sww;

    let fits: Vec<(f64, f64, f64)> = grid
        .iter()
        .map(|&t| {
            let b = scan.split(t).b;
            // Σb·w from the centered sums: Σb·(w − w̄) + w̄·Σb
            let sbw = b.sw_c + scan.all().mean_w * b.s;
            match solve_sym2(sww, sbw, b.ss, swy, b.sy) {
                Some((n1, dn)) => (n1, n1 + dn, syy - n1 * swy - dn * b.sy),
                None => (single, single, syy - single * swy),
            }
        })
        .collect();
    let best = argmin(&fits.iter().map(|f| f.2).collect::<Vec<_>>());
    let (n1, n2, _) = fits[best];
    let d_th = grid[best];
    let warnings = segment_warnings(&scan.split(d_th), n1, n2, ("n1", "n2"));
    FitReport::from_params(
        ds,
        PathLossParams::CiDual(CiDualParams { n1, n2, d_th }),
        warnings,
    )
}

/// Dual-slope floating-intercept model, same breakpoint search as
/// [`fit_ci_dual`].
pub fn fit_fi_dual(ds: &Dataset) -> Result<FitReport> {
    let grid = check_preconditions("FI dual", ds)?;
    let samples: Vec<(f64, f64)> = ds
        .iter()
        .map(|r| (r.distance_3d.as_meters(), r.path_loss_db))
        .collect();
    let ws: Vec<f64> = samples.iter().map(|(d, _)| 10.0 * d.log10()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
    let (single_alpha, single_beta) = fi_line(&ws, &ys).ok_or_else(|| {
        EstimationError::SingularDesign("column 'distance' has zero spread".into())
    })?;
    let scan = Scan::new(samples);
    let n = scan.len() as f64;
    let all = *scan.all();
    let cyy: f64 = ys.iter().map(|y| (y - all.mean_y) * (y - all.mean_y)).sum();
    let (cww, cwy) = (all.m2_w, all.c_wy);
    let single = (
        single_alpha,
        single_beta,
        single_beta,
        cyy - single_beta * cwy,
    );

    let fits: Vec<(f64, f64, f64, f64)> = grid
        .iter()
        .map(|&t| {
            let s = scan.split(t);
            if s.n_upper == 0 || s.n_below == 0 {
                return single;
            }
            // centered Σx² for each column
            let cbb = s.b.ss - s.b.s * s.b.s / n;
            let cgg = s.g.ss - s.g.s * s.g.s / n;
            // solve on whichever column is less collinear with w
            let use_g = s.g.sw_c * s.g.sw_c * cbb < s.b.sw_c * s.b.sw_c * cgg;
            let (x, cxx) = if use_g { (s.g, cgg) } else { (s.b, cbb) };
            let Some((cw, cx)) = solve_sym2(cww, x.sw_c, cxx, cwy, x.sy_c) else {
                return single;
            };
            let intercept = all.mean_y - cw * all.mean_w - cx * x.s / n;
            let sse = cyy - cw * cwy - cx * x.sy_c;
            if use_g {
                // PL = α1 + β1·(wt + g) + β2·(w − wt − g)
                (intercept - cx * s.wt, cw + cx, cw, sse)
            } else {
                // PL = α1 + β1·(w − b) + β2·b
                (intercept, cw, cw + cx, sse)
            }
        })
        .collect();
    let best = argmin(&fits.iter().map(|f| f.3).collect::<Vec<_>>());
    let (alpha1, beta1, beta2, _) = fits[best];
    let d_th = grid[best];
    let warnings = segment_warnings(&scan.split(d_th), beta1, beta2, ("beta1", "beta2"));
    FitReport::from_params(
        ds,
        PathLossParams::FiDual(FiDualParams {
            alpha1,
            beta1,
            beta2,
            d_th,
        }),
        warnings,
    )
}
