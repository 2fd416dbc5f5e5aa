use std::collections::BTreeMap;
use std::io::Write;

use anyhow::Context;

use propfit::models::{
    fi_dual_path_loss, fi_path_loss, fspl_1m, los_probability, sf_line, AbgParams, CiDualParams,
    CiParams, Distance3D, FiDualParams, FiParams, Frequency, LosModelKind, LosProbParams,
    ModelFamily, PathLossParams, SfLineParams,
};

use super::{create_out_dir, CsvOut, Field};
use crate::args::EvalArgs;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult, Status};

enum Target {
    PathLoss(PathLossParams),
    Fspl,
    SfLine(SfLineParams),
    Los(LosProbParams),
}

struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    fn parse(raw: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for pair in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("parameter '{pair}' is not name=value")))?;
            let k = k.trim().to_ascii_lowercase();
            let v: f64 = v.trim().parse().map_err(|_| {
                CliError::Input(format!(
                    "parameter '{k}' has a non-numeric value '{}'",
                    v.trim()
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("parameter '{k}' must be finite")));
            }
            if values.insert(k.clone(), v).is_some() {
                return Err(CliError::Input(format!("parameter '{k}' given twice")));
            }
        }
        Ok(Self { values })
    }

    /// Takes one parameter by any of its accepted names.
    fn take(&mut self, names: &[&str]) -> Result<f64, CliError> {
        names
            .iter()
            .find_map(|n| self.values.remove(*n))
            .ok_or_else(|| CliError::Input(format!("missing parameter '{}'", names[0])))
    }

    fn finish(self) -> Result<(), CliError> {
        match self.values.keys().next() {
            Some(k) => Err(CliError::Input(format!("unknown parameter '{k}'"))),
            None => Ok(()),
        }
    }
}

fn target(model: &str, raw: &str) -> Result<Target, CliError> {
    let mut p = Params::parse(raw)?;
    let model = model.trim().to_ascii_lowercase();
    let t = match model.as_str() {
        "fspl" => Target::Fspl,
        "sf-line" => Target::SfLine(SfLineParams {
            a: p.take(&["a"])?,
            b: p.take(&["b"])?,
        }),
        _ => {
            if let Ok(kind) = model.parse::<LosModelKind>() {
                let los = if kind == LosModelKind::Uma3gpp {
                    LosProbParams::uma_3gpp()
                } else {
                    let (d1, d2) = (p.take(&["d1"])?, p.take(&["d2"])?);
                    LosProbParams::new(kind, d1, d2).map_err(|e| CliError::Input(e.to_string()))?
                };
                Target::Los(los)
            } else {
                let family: ModelFamily = model
                    .parse()
                    .map_err(|_| CliError::Input(format!("unknown model '{model}'")))?;
                Target::PathLoss(match family {
                    ModelFamily::Ci => PathLossParams::Ci(CiParams {
                        ple: p.take(&["n", "ple"])?,
                    }),
                    ModelFamily::Abg => PathLossParams::Abg(AbgParams {
                        alpha: p.take(&["alpha"])?,
                        beta: p.take(&["beta"])?,
                        gamma: p.take(&["gamma"])?,
                    }),
                    ModelFamily::Fi => PathLossParams::Fi(FiParams {
                        alpha: p.take(&["alpha"])?,
                        beta: p.take(&["beta"])?,
                    }),
                    ModelFamily::CiDual => PathLossParams::CiDual(CiDualParams {
                        n1: p.take(&["n1"])?,
                        n2: p.take(&["n2"])?,
                        d_th: p.take(&["d_th", "dth"])?,
                    }),
                    ModelFamily::FiDual => PathLossParams::FiDual(FiDualParams {
                        alpha1: p.take(&["alpha1"])?,
                        beta1: p.take(&["beta1"])?,
                        beta2: p.take(&["beta2"])?,
                        d_th: p.take(&["d_th", "dth"])?,
                    }),
                })
            }
        }
    };
    p.finish()?;
    Ok(t)
}

fn require(values: &[f64], flag: &str) -> Result<(), CliError> {
    if values.is_empty() {
        Err(CliError::Input(format!(
            "{flag} is required for this model"
        )))
    } else {
        Ok(())
    }
}

fn input<T>(r: Result<T, propfit::models::ModelError>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Input(e.to_string()))
}

fn table(args: &EvalArgs) -> Result<CsvOut, CliError> {
    let t = target(&args.model, &args.params)?;
    let freqs = args
        .freqs
        .iter()
        .map(|&f| input(Frequency::ghz(f)))
        .collect::<Result<Vec<_>, _>>()?;
    let out = match t {
        Target::Fspl => {
            require(&args.freqs, "--freqs")?;
            let mut csv = CsvOut::new(&["freq_ghz", "fspl_db"])?;
            for f in freqs {
                csv.row(&[Field::Num(f.as_ghz()), Field::Num(fspl_1m(f))])?;
            }
            csv
        }
        Target::Los(p) => {
            require(&args.distances, "--distances")?;
            let mut csv = CsvOut::new(&["distance_m", "los_probability"])?;
            for &d in &args.distances {
                csv.row(&[Field::Num(d), Field::Num(input(los_probability(d, &p))?)])?;
            }
            csv
        }
        Target::SfLine(p) => {
            require(&args.distances, "--distances")?;
            let mut csv = CsvOut::new(&["distance_m", "sf_db"])?;
            for &d in &args.distances {
                csv.row(&[
                    Field::Num(d),
                    Field::Num(sf_line(input(Distance3D::meters(d))?, &p)),
                ])?;
            }
            csv
        }
        Target::PathLoss(p) => {
            require(&args.distances, "--distances")?;
            let dists = args
                .distances
                .iter()
                .map(|&d| input(Distance3D::meters(d)))
                .collect::<Result<Vec<_>, _>>()?;
            let freq_free = matches!(p, PathLossParams::Fi(_) | PathLossParams::FiDual(_));
            if freq_free && freqs.is_empty() {
                let mut csv = CsvOut::new(&["distance_m", "path_loss_db"])?;
                for d in dists {
                    let pl = match &p {
                        PathLossParams::Fi(fp) => fi_path_loss(d, fp),
                        PathLossParams::FiDual(fp) => input(fi_dual_path_loss(d, fp))?,
                        _ => unreachable!("frequency-dependent model"),
                    };
                    csv.row(&[Field::Num(d.as_meters()), Field::Num(pl)])?;
                }
                csv
            } else {
                require(&args.freqs, "--freqs")?;
                let mut csv = CsvOut::new(&["freq_ghz", "distance_m", "path_loss_db"])?;
                for &f in &freqs {
                    for &d in &dists {
                        let pl = input(p.mean_path_loss(f, d))?;
                        csv.row(&[
                            Field::Num(f.as_ghz()),
                            Field::Num(d.as_meters()),
                            Field::Num(pl),
                        ])?;
                    }
                }
                csv
            }
        }
    };
    Ok(out)
}

pub fn eval(args: &EvalArgs) -> CliResult {
    let bytes = table(args)?.into_bytes()?;
    std::io::stdout()
        .write_all(&bytes)
        .context("writing to stdout")?;
    if let Some(dir) = &args.out_dir {
        create_out_dir(dir)?;
        std::fs::write(dir.join("eval.csv"), &bytes).context("writing eval.csv")?;
        let mut manifest = RunManifest::new("eval", args);
        manifest.outputs.push("eval.csv".into());
        manifest.write(dir)?;
    }
    Ok(Status::Success)
}
