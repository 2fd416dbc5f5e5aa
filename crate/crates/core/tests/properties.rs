use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use propfit::dataset::{Dataset, DatasetMetadata, LosSample, MeasurementRecord};
use propfit::estimation::{
    empirical_los_curve, fit, fit_abg, fit_ci, fit_ci_dual, fit_fi, fit_fi_dual, fit_los_model,
    los_curve_mse, los_search_grid, EmpiricalLosCurve, LosCurvePoint,
};
use propfit::models::{
    fspl_1m, CiDualParams, Distance3D, Frequency, LosModelKind, LosProbParams, ModelFamily,
    PathLossParams,
};

fn dataset(rows: &[(f64, f64, f64)]) -> Dataset {
    let records = rows
        .iter()
        .map(|&(f, d, pl)| {
            MeasurementRecord::new(
                Frequency::ghz(f).unwrap(),
                Distance3D::meters(d).unwrap(),
                pl,
                false,
            )
            .unwrap()
        })
        .collect();
    Dataset::new(
        records,
        DatasetMetadata {
            source: "test".into(),
            ingested_at: 0,
        },
    )
}

fn rows(
    freqs: &'static [f64],
    n: std::ops::Range<usize>,
) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(
        (
            prop::sample::select(freqs),
            1.0f64..800.0,
            2.0f64..4.0,
            -12.0f64..12.0,
        ),
        n,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(f, d, n, e)| {
                (
                    f,
                    d,
                    fspl_1m(Frequency::ghz(f).unwrap()) + 10.0 * n * d.log10() + e,
                )
            })
            .collect()
    })
}

fn spans(rows: &[(f64, f64, f64)], min_span: f64) -> bool {
    let lo = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    hi - lo >= min_span
}

/// Least-squares RMS of `y` on the columns of `x`, by a pivoted Householder
/// QR on the numerically independent columns plus one refinement step. The
/// residual is formed from the coefficients, so the value is achievable.
/// Also returns `Σ|coef|·max|column|`, the magnitude that bounds the
/// rounding error of evaluating the fit.
fn ls_rms(x: DMatrix<f64>, y: DVector<f64>) -> (f64, f64) {
    let tol = 1e-10 * x.norm();
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let rank = r.diagonal().iter().filter(|v| v.abs() > tol).count();
    let mut xp = x;
    qr.p().permute_columns(&mut xp);
    let xk = xp.columns(0, rank);
    let q = qr.q();
    let qk = q.columns(0, rank);
    let rk = r.view((0, 0), (rank, rank));
    let solve = |v: &DVector<f64>| rk.solve_upper_triangular(&(qk.transpose() * v)).unwrap();
    let mut beta = solve(&y);
    let resid = &y - xk * &beta;
    beta += solve(&resid);
    let resid = &y - xk * &beta;
    let scale = xk
        .column_iter()
        .zip(beta.iter())
        .map(|(c, b)| b.abs() * c.amax())
        .sum();
    ((resid.norm_squared() / y.len() as f64).sqrt(), scale)
}

/// Exhaustive CI dual-slope oracle: every integer breakpoint, joint LS on
/// the continuity-constrained design, smallest RMS.
fn ci_dual_oracle(rows: &[(f64, f64, f64)]) -> f64 {
    let lo = rows
        .iter()
        .map(|r| r.1)
        .fold(f64::INFINITY, f64::min)
        .ceil() as i64;
    let hi = rows
        .iter()
        .map(|r| r.1)
        .fold(f64::NEG_INFINITY, f64::max)
        .floor() as i64;
    let y = DVector::from_iterator(
        rows.len(),
        rows.iter()
            .map(|&(f, _, pl)| pl - fspl_1m(Frequency::ghz(f).unwrap())),
    );
    (lo..=hi)
        .map(|t| {
            let lt = (t as f64).log10();
            let x = DMatrix::from_fn(rows.len(), 2, |i, j| {
                let ld = rows[i].1.log10();
                10.0 * if j == 0 {
                    ld.min(lt)
                } else {
                    (ld - lt).max(0.0)
                }
            });
            ls_rms(x, y.clone()).0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exhaustive FI dual-slope oracle; returns the smallest RMS and its
/// coefficient scale.
fn fi_dual_oracle(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let lo = rows
        .iter()
        .map(|r| r.1)
        .fold(f64::INFINITY, f64::min)
        .ceil() as i64;
    let hi = rows
        .iter()
        .map(|r| r.1)
        .fold(f64::NEG_INFINITY, f64::max)
        .floor() as i64;
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.2));
    (lo..=hi)
        .map(|t| {
            let lt = (t as f64).log10();
            let x = DMatrix::from_fn(rows.len(), 3, |i, j| {
                let ld = rows[i].1.log10();
                match j {
                    0 => 1.0,
                    1 => 10.0 * ld.min(lt),
                    _ => 10.0 * (ld - lt).max(0.0),
                }
            });
            ls_rms(x, y.clone())
        })
        .fold((f64::INFINITY, 0.0), |best, cur| {
            if cur.0 < best.0 {
                cur
            } else {
                best
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_is_rms_of_residuals(r in rows(&[2.0, 10.0, 28.0], 12..60)) {
        prop_assume!(spans(&r, 3.0));
        let ds = dataset(&r);
        for family in ModelFamily::ALL {
            let Ok(rep) = fit(&ds, family) else { continue };
            let ms = rep.residuals.iter().map(|x| x.residual_db * x.residual_db).sum::<f64>() / rep.residuals.len() as f64;
            prop_assert!(rep.sigma >= 0.0);
            prop_assert!((rep.sigma * rep.sigma - ms).abs() <= 1e-12 * ms.max(f64::MIN_POSITIVE));
            prop_assert_eq!(rep.n_samples, ds.len());
            // residuals agree with the reported parameters
            for (rec, res) in ds.iter().zip(&rep.residuals) {
                let m = rep.params.mean_path_loss(rec.frequency, rec.distance_3d).unwrap();
                prop_assert!((rec.path_loss_db - m - res.residual_db).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn nesting_inequalities(r in rows(&[2.0, 28.0], 12..80)) {
        prop_assume!(spans(&r, 3.0));
        let ds = dataset(&r);
        let ci = fit_ci(&ds).unwrap().sigma;
        if let Ok(abg) = fit_abg(&ds) {
            prop_assert!(abg.sigma <= ci + 1e-9);
        }
        prop_assert!(fit_ci_dual(&ds).unwrap().sigma <= ci + 1e-9);
        let fi = fit_fi(&ds).unwrap().sigma;
        prop_assert!(fit_fi_dual(&ds).unwrap().sigma <= fi + 1e-9);
    }

    #[test]
    fn fi_nests_ci_at_one_frequency(r in rows(&[28.0], 6..80)) {
        prop_assume!(spans(&r, 3.0));
        let ds = dataset(&r);
        prop_assert!(fit_fi(&ds).unwrap().sigma <= fit_ci(&ds).unwrap().sigma + 1e-9);
        prop_assert!(fit_fi_dual(&ds).unwrap().sigma <= fit_ci(&ds).unwrap().sigma + 1e-9);
    }

    #[test]
    fn intercept_models_have_zero_mean_residuals(r in rows(&[2.0, 18.0, 28.0], 6..80)) {
        prop_assume!(spans(&r, 3.0));
        let ds = dataset(&r);
        prop_assert!(fit_fi(&ds).unwrap().mean_residual().abs() < 1e-9);
        if let Ok(abg) = fit_abg(&ds) {
            prop_assert!(abg.mean_residual().abs() < 1e-9);
        }
    }

    #[test]
    fn ci_dual_matches_exhaustive_oracle(r in rows(&[2.0, 28.0], 4..13)) {
        prop_assume!(spans(&r, 3.0));
        let rep = fit_ci_dual(&dataset(&r)).unwrap();
        let oracle = ci_dual_oracle(&r);
        prop_assert!((rep.sigma - oracle).abs() < 1e-9, "fit {} oracle {}", rep.sigma, oracle);
        let PathLossParams::CiDual(CiDualParams { d_th, .. }) = rep.params else { panic!() };
        prop_assert_eq!(d_th, d_th.round());
    }

    #[test]
    fn fi_dual_matches_exhaustive_oracle(r in rows(&[28.0], 4..13)) {
        prop_assume!(spans(&r, 3.0));
        let rep = fit_fi_dual(&dataset(&r)).unwrap();
        let (oracle, oracle_scale) = fi_dual_oracle(&r);
        let PathLossParams::FiDual(p) = rep.params else { panic!() };
        // a lone sample just below the breakpoint forces huge intercept and
        // slope terms on either side; evaluating them costs a few ulps of
        // their magnitude
        let wmax = r.iter().map(|x| 10.0 * x.1.log10()).fold(0.0, f64::max);
        let scale = p.alpha1.abs() + (p.beta1.abs() + p.beta2.abs()) * wmax;
        let tol = 1e-9 + 16.0 * f64::EPSILON * (scale + oracle_scale);
        prop_assert!((rep.sigma - oracle).abs() < tol, "fit {} oracle {} tol {}", rep.sigma, oracle, tol);
        prop_assert_eq!(p.d_th, p.d_th.round());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn los_fit_never_worse_than_its_grid(
        probs in prop::collection::vec(0.0f64..=1.0, 20..60),
        start in 1u32..100,
        stride in 1u32..12,
    ) {
        let curve = EmpiricalLosCurve {
            points: probs
                .iter()
                .enumerate()
                .map(|(i, &p)| LosCurvePoint { distance_m: (start + stride * i as u32) as f64, probability: p, support: 1 })
                .collect(),
        };
        for kind in [LosModelKind::D1D2, LosModelKind::NyuSquared, LosModelKind::InvExp] {
            let rep = fit_los_model(&curve, kind).unwrap();
            prop_assert!(rep.mse >= 0.0);
            let grid_best = los_search_grid(kind)
                .into_iter()
                .filter_map(|(d1, d2)| LosProbParams::new(kind, d1, d2).ok())
                .map(|p| los_curve_mse(&curve, &p).unwrap())
                .fold(f64::INFINITY, f64::min);
            prop_assert!(rep.mse <= grid_best, "{kind}: {} > grid {}", rep.mse, grid_best);
        }
    }
}

#[test]
fn los_curve_shape() {
    let samples: Vec<LosSample> = (0..400)
        .map(|i| LosSample::new(5.0 + 0.37 * i as f64, i % 3 != 0).unwrap())
        .collect();
    let curve = empirical_los_curve(&samples).unwrap();
    assert!(curve
        .points
        .windows(2)
        .all(|w| w[0].distance_m < w[1].distance_m));
    assert!(curve
        .points
        .iter()
        .all(|p| p.support >= 1 && (0.0..=1.0).contains(&p.probability)));
    let mut reversed = samples.clone();
    reversed.reverse();
    assert_eq!(empirical_los_curve(&reversed).unwrap(), curve);
}

#[test]
fn dual_fits_match_oracle_with_far_cluster() {
    // breakpoints just below a tight cluster of far samples make the upper
    // segment nearly collinear with the lower one
    let r = [
        (2.0, 781.5518560402292, 138.62624395590746),
        (2.0, 133.39069970089494, 89.87844221463469),
        (2.0, 565.8778980274149, 112.45915110851418),
        (2.0, 779.6037041393929, 96.30586101353278),
        (2.0, 744.8634107204991, 95.90991596170093),
        (2.0, 25.18168108541701, 66.4900775249049),
        (2.0, 546.1706032228344, 93.21494955941449),
        (2.0, 644.7287562950811, 94.65592395746353),
        (2.0, 614.2630339774752, 135.212575677102),
        (2.0, 784.0075584178092, 96.35478812771204),
    ];
    let ci = fit_ci_dual(&dataset(&r)).unwrap().sigma;
    assert!((ci - ci_dual_oracle(&r)).abs() < 1e-9, "{ci}");
    let r28: Vec<_> = r.iter().map(|&(_, d, pl)| (28.0, d, pl)).collect();
    let fi = fit_fi_dual(&dataset(&r28)).unwrap().sigma;
    assert!((fi - fi_dual_oracle(&r28).0).abs() < 1e-9, "{fi}");
}
