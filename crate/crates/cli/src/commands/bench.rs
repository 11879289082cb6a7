use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use bscrls::dataio::{Dataset, DEFAULT_TRAIN_FRACTION};
use bscrls::linalg::frobenius_norm;
use bscrls::metrics::classification_metrics;
use bscrls::scn::{scn_predict, scn_train, ScnConfig};
use bscrls::{predict, train, Matrix, RandomSpec};
use clap::Args;
use rayon::prelude::*;

use crate::opts::{ArchArgs, DataArgs, Mode};
use crate::table::{metric_values, opt, Table, METRIC_NAMES};

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "synth"]))]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub arch: ArchArgs,
    /// Comma-separated seeds; each seeds the parameters, generated data and split
    #[arg(long, value_delimiter = ',', conflicts_with = "runs")]
    pub seeds: Vec<u64>,
    /// Use seeds 0..RUNS
    #[arg(long, default_value_t = 10)]
    pub runs: u64,
    /// Add the stochastic configuration network baseline
    #[arg(long)]
    pub scn: bool,
    /// Hidden nodes of the baseline
    #[arg(long, default_value_t = 100)]
    pub scn_nodes: usize,
    /// Learning parameter of the baseline
    #[arg(long, default_value_t = 0.99)]
    pub scn_gamma: f64,
    /// Leave out wall-clock columns so repeated runs give identical tables
    #[arg(long)]
    pub no_timing: bool,
    /// Summary table CSV (stdout when omitted)
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    /// One row per seed and method
    #[arg(long, value_name = "CSV")]
    pub per_seed: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
enum Method {
    Bscrls,
    Brls,
    Scn,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Bscrls => "bscrls",
            Method::Brls => "brls",
            Method::Scn => "scn",
        }
    }
}

struct Fit {
    train_out: Matrix<f64>,
    test_out: Matrix<f64>,
    seconds: f64,
}

fn fit(method: Method, args: &BenchArgs, seed: u64, train_set: &Dataset<f64>, test: &Dataset<f64>) -> Result<Fit> {
    let started = Instant::now();
    let (train_out, test_out) = match method {
        Method::Bscrls | Method::Brls => {
            let mode = if matches!(method, Method::Brls) {
                Mode::Brls
            } else {
                Mode::Bscrls
            };
            let (model, _) = train(&args.arch.config(mode, seed), &train_set.x, &train_set.y)
                .with_context(|| format!("{} with seed {seed}", method.name()))?;
            (predict(&model, &train_set.x)?, predict(&model, &test.x)?)
        }
        Method::Scn => {
            let cfg = ScnConfig {
                gamma: args.scn_gamma,
                max_nodes: args.scn_nodes,
                random: RandomSpec {
                    seed,
                    low: args.arch.low,
                    high: args.arch.high,
                },
                ..ScnConfig::default()
            };
            let (state, _) =
                scn_train(&train_set.y, &train_set.x, &cfg).with_context(|| format!("scn with seed {seed}"))?;
            (scn_predict(&state, &train_set.x)?, scn_predict(&state, &test.x)?)
        }
    };
    Ok(Fit {
        train_out,
        test_out,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn mean_std(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let seeds: Vec<u64> = if args.seeds.is_empty() {
        (0..args.runs).collect()
    } else {
        args.seeds.clone()
    };
    let mut methods = vec![Method::Bscrls, Method::Brls];
    if args.scn {
        methods.push(Method::Scn);
    }
    let mut data = args.data.clone();
    if data.test_data.is_none() && data.test_fraction <= 0.0 {
        data.test_fraction = 1.0 - DEFAULT_TRAIN_FRACTION;
    }
    let categorical = data.synth != Some(crate::opts::SynthKind::Regression) && !data.numeric_targets;

    let mut columns: Vec<&str> = Vec::new();
    if categorical {
        columns.extend(METRIC_NAMES);
    }
    columns.extend(["test_error", "train_residual"]);
    if !args.no_timing {
        columns.push("train_time_s");
    }

    // results[seed][method] -> column values
    let results: Vec<Vec<Vec<Option<f64>>>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut d = data.clone();
            d.split_seed = seed;
            let prep = d.prepare(seed, None, None)?;
            let test = prep.test.as_ref().expect("bench always holds out a test set");
            methods
                .iter()
                .map(|&m| {
                    let f = fit(m, args, seed, &prep.train, test)?;
                    let mut row = Vec::new();
                    if categorical {
                        row.extend(metric_values(&classification_metrics(&f.test_out, &test.y)?));
                    }
                    row.push(Some(frobenius_norm(&test.y.sub(&f.test_out)?)));
                    row.push(Some(frobenius_norm(&prep.train.y.sub(&f.train_out)?)));
                    if !args.no_timing {
                        row.push(Some(f.seconds));
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut header = vec!["runs".to_string()];
    for c in &columns {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_std"));
    }
    header.push("method".into());
    let mut summary = Table::new(header);
    for (mi, m) in methods.iter().enumerate() {
        let mut row = vec![seeds.len().to_string()];
        for ci in 0..columns.len() {
            let vals: Vec<Option<f64>> = results.iter().map(|r| r[mi][ci]).collect();
            let (mean, std) = mean_std(&vals);
            row.push(opt(mean));
            row.push(opt(std));
        }
        row.push(m.name().into());
        summary.push(row);
    }
    summary.emit(args.out.as_deref())?;

    if let Some(path) = &args.per_seed {
        let mut header = vec!["seed".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        header.push("method".into());
        let mut t = Table::new(header);
        for (seed, per_method) in seeds.iter().zip(&results) {
            for (m, vals) in methods.iter().zip(per_method) {
                let mut row = vec![seed.to_string()];
                row.extend(vals.iter().map(|v| opt(*v)));
                row.push(m.name().into());
                t.push(row);
            }
        }
        t.emit(Some(path))?;
    }
    if args.out.is_some() {
        say!("{} seeds × {} methods done", seeds.len(), methods.len());
    }
    Ok(())
}
