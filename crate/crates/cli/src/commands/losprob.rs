use serde::Serialize;

use propfit::dataset::los_samples;
use propfit::estimation::{
    empirical_los_curve, fit_los_model, LosFitReport, LOS_WINDOW_HALF_WIDTH_M,
};
use propfit::models::los_probability;

use super::{create_out_dir, load_dataset, CsvOut, Field};
use crate::args::FitLosprobArgs;
use crate::json::write_json;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult, Status};

#[derive(Serialize)]
struct LosRow {
    rank: usize,
    kind: &'static str,
    d1: f64,
    d2: f64,
    mse: f64,
}

#[derive(Serialize)]
struct Skipped {
    kind: &'static str,
    reason: String,
}

#[derive(Serialize)]
struct LosFitFile {
    input: String,
    n_samples: usize,
    n_curve_points: usize,
    window_half_width_m: f64,
    fits: Vec<LosRow>,
    skipped: Vec<Skipped>,
}

pub fn fit_losprob(args: &FitLosprobArgs) -> CliResult {
    let (parsed, digest) = load_dataset(&args.input)?;
    let samples = los_samples(&parsed.dataset);
    let curve = empirical_los_curve(&samples)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    create_out_dir(&args.out_dir)?;

    let mut fitted: Vec<LosFitReport> = Vec::new();
    let mut skipped = Vec::new();
    for &kind in &args.los_models {
        match fit_los_model(&curve, kind) {
            Ok(r) => fitted.push(r),
            Err(e) => skipped.push(Skipped {
                kind: kind.name(),
                reason: e.to_string(),
            }),
        }
    }

    let mut columns = vec!["distance_m", "empirical", "support"];
    columns.extend(fitted.iter().map(|r| r.params.kind().name()));
    let mut csv = CsvOut::new(&columns)?;
    for p in &curve.points {
        let mut row = vec![
            Field::Num(p.distance_m),
            Field::Num(p.probability),
            Field::Int(p.support),
        ];
        for r in &fitted {
            row.push(Field::Num(
                los_probability(p.distance_m, &r.params).map_err(anyhow::Error::from)?,
            ));
        }
        csv.row(&row)?;
    }

    let mut ranked: Vec<&LosFitReport> = fitted.iter().collect();
    ranked.sort_by(|a, b| a.mse.total_cmp(&b.mse));
    let file = LosFitFile {
        input: args.input.display().to_string(),
        n_samples: samples.len(),
        n_curve_points: curve.len(),
        window_half_width_m: LOS_WINDOW_HALF_WIDTH_M,
        fits: ranked
            .iter()
            .enumerate()
            .map(|(i, r)| LosRow {
                rank: i + 1,
                kind: r.params.kind().name(),
                d1: r.params.d1(),
                d2: r.params.d2(),
                mse: r.mse,
            })
            .collect(),
        skipped,
    };

    write_json(&args.out_dir.join("los_fit.json"), &file)?;
    csv.write(&args.out_dir.join("los_curves.csv"))?;
    let mut manifest = RunManifest::new("fit-losprob", args);
    manifest.inputs.push(digest);
    manifest.outputs = vec!["los_fit.json".into(), "los_curves.csv".into()];
    manifest.write(&args.out_dir)?;
    Ok(Status::Success)
}
