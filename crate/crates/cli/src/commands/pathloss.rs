use serde::Serialize;

use propfit::dataset::Dataset;
use propfit::estimation::{fit, shadow_fading_profile, FitReport, SfStatistic};
use propfit::models::{Distance3D, Frequency, ModelFamily, PathLossParams};

use super::{
    create_out_dir, distinct_frequencies, load_dataset, meter_grid, partitions, CsvOut, Field,
};
use crate::args::{FitPathlossArgs, ShadowArgs};
use crate::json::write_json;
use crate::manifest::RunManifest;
use crate::{CliResult, Status};

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum FitEntry {
    Ok {
        model: ModelFamily,
        params: PathLossParams,
        sigma_db: f64,
        n_samples: usize,
        mean_residual_db: f64,
        warnings: Vec<String>,
    },
    Skipped {
        model: ModelFamily,
        reason: String,
    },
}

#[derive(Serialize)]
struct PartitionFits {
    partition: &'static str,
    n_samples: usize,
    frequencies_ghz: Vec<f64>,
    fits: Vec<FitEntry>,
}

#[derive(Serialize)]
struct FitReportFile {
    input: String,
    valid_rows: usize,
    rejected_rows: usize,
    partitions: Vec<PartitionFits>,
}

fn fit_or_skip(ds: &Dataset, model: ModelFamily) -> Result<FitReport, String> {
    if ds.is_empty() {
        return Err("partition is empty".into());
    }
    fit(ds, model).map_err(|e| e.to_string())
}

pub fn fit_pathloss(args: &FitPathlossArgs) -> CliResult {
    let (parsed, digest) = load_dataset(&args.input)?;
    create_out_dir(&args.out_dir)?;

    let mut scatter = CsvOut::new(&["distance_m", "path_loss_db", "freq_ghz", "los"])?;
    for r in parsed.dataset.iter() {
        scatter.row(&[
            Field::Num(r.distance_3d.as_meters()),
            Field::Num(r.path_loss_db),
            Field::Num(r.frequency.as_ghz()),
            Field::Text(if r.los { "los" } else { "nlos" }),
        ])?;
    }

    let mut curves = CsvOut::new(&[
        "partition",
        "model",
        "freq_ghz",
        "distance_m",
        "path_loss_db",
    ])?;
    let mut report = FitReportFile {
        input: args.input.display().to_string(),
        valid_rows: parsed.dataset.len(),
        rejected_rows: parsed.rejected.len(),
        partitions: Vec::new(),
    };
    for (label, ds) in partitions(&parsed.dataset) {
        let freqs = distinct_frequencies(&ds);
        let grid = meter_grid(&ds);
        let mut fits = Vec::new();
        for &model in &args.models {
            match fit_or_skip(&ds, model) {
                Ok(rep) => {
                    for &f in &freqs {
                        let f = Frequency::ghz(f).map_err(anyhow::Error::from)?;
                        for &d in &grid {
                            let pl = rep
                                .params
                                .mean_path_loss(
                                    f,
                                    Distance3D::meters(d).map_err(anyhow::Error::from)?,
                                )
                                .map_err(anyhow::Error::from)?;
                            curves.row(&[
                                Field::Text(label),
                                Field::Text(model.name()),
                                Field::Num(f.as_ghz()),
                                Field::Num(d),
                                Field::Num(pl),
                            ])?;
                        }
                    }
                    fits.push(FitEntry::Ok {
                        model,
                        params: rep.params,
                        sigma_db: rep.sigma,
                        n_samples: rep.n_samples,
                        mean_residual_db: rep.mean_residual(),
                        warnings: rep.warnings,
                    });
                }
                Err(reason) => {
                    log::info!("{label}/{model}: skipped: {reason}");
                    fits.push(FitEntry::Skipped { model, reason });
                }
            }
        }
        report.partitions.push(PartitionFits {
            partition: label,
            n_samples: ds.len(),
            frequencies_ghz: freqs,
            fits,
        });
    }

    write_json(&args.out_dir.join("fit_report.json"), &report)?;
    scatter.write(&args.out_dir.join("scatter.csv"))?;
    curves.write(&args.out_dir.join("curves.csv"))?;
    let mut manifest = RunManifest::new("fit-pathloss", args);
    manifest.inputs.push(digest);
    manifest.outputs = vec![
        "fit_report.json".into(),
        "scatter.csv".into(),
        "curves.csv".into(),
    ];
    manifest.write(&args.out_dir)?;
    Ok(Status::Success)
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum SfEntry {
    Ok {
        partition: &'static str,
        model: ModelFamily,
        a_db_per_m: f64,
        b_db: f64,
        n_bins: usize,
        fit_sigma_db: f64,
        warnings: Vec<String>,
    },
    Skipped {
        partition: &'static str,
        model: ModelFamily,
        reason: String,
    },
}

#[derive(Serialize)]
struct SfProfileFile {
    input: String,
    statistic: SfStatistic,
    bin_width_m: f64,
    profiles: Vec<SfEntry>,
}

pub fn shadow(args: &ShadowArgs) -> CliResult {
    if !(args.bin_width.is_finite() && args.bin_width > 0.0) {
        return Err(crate::CliError::Input(format!(
            "--bin-width must be positive, got {}",
            args.bin_width
        )));
    }
    let (parsed, digest) = load_dataset(&args.input)?;
    create_out_dir(&args.out_dir)?;

    let mut bins = CsvOut::new(&["partition", "model", "center_m", "magnitude_db", "count"])?;
    let mut file = SfProfileFile {
        input: args.input.display().to_string(),
        statistic: args.sf_stat,
        bin_width_m: args.bin_width,
        profiles: Vec::new(),
    };
    for (partition, ds) in partitions(&parsed.dataset) {
        for &model in &args.models {
            let profile = fit_or_skip(&ds, model).and_then(|rep| {
                shadow_fading_profile(&rep, args.bin_width, args.sf_stat)
                    .map(|p| (rep.sigma, p))
                    .map_err(|e| e.to_string())
            });
            match profile {
                Ok((fit_sigma_db, p)) => {
                    for b in &p.bins {
                        bins.row(&[
                            Field::Text(partition),
                            Field::Text(model.name()),
                            Field::Num(b.center_m),
                            Field::Num(b.magnitude_db),
                            Field::Int(b.count),
                        ])?;
                    }
                    file.profiles.push(SfEntry::Ok {
                        partition,
                        model,
                        a_db_per_m: p.line.a,
                        b_db: p.line.b,
                        n_bins: p.bins.len(),
                        fit_sigma_db,
                        warnings: p.warnings,
                    });
                }
                Err(reason) => {
                    log::info!("{partition}/{model}: skipped: {reason}");
                    file.profiles.push(SfEntry::Skipped {
                        partition,
                        model,
                        reason,
                    });
                }
            }
        }
    }

    write_json(&args.out_dir.join("sf_profile.json"), &file)?;
    bins.write(&args.out_dir.join("sf_bins.csv"))?;
    let mut manifest = RunManifest::new("shadow", args);
    manifest.inputs.push(digest);
    manifest.outputs = vec!["sf_profile.json".into(), "sf_bins.csv".into()];
    manifest.write(&args.out_dir)?;
    Ok(Status::Success)
}
