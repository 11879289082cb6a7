use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bscrls::dataio::{load_archive, ModelArchive};
use bscrls::metrics::{classification_metrics, error_curve, training_error};
use bscrls::predict;
use clap::Args;

use crate::opts::DataArgs;
use crate::table::{metric_values, num, opt, Table, METRIC_NAMES};

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "synth"]))]
pub struct EvalArgs {
    /// Model archive
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Metric row CSV (stdout when omitted)
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    /// Also write training and testing error for every depth 0..=m
    #[arg(long, value_name = "CSV")]
    pub curve: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let archive: ModelArchive<f64> =
        load_archive(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let model = &archive.model;
    let prep = args.data.prepare(
        model.config.random.seed,
        archive.normalization.as_ref(),
        archive.label_names.clone(),
    )?;
    let ds = prep.test.as_ref().unwrap_or(&prep.train);
    if ds.x.cols() != model.input_dim || ds.y.cols() != model.output_dim {
        bail!(
            "data has {} inputs and {} targets, model expects {} and {}",
            ds.x.cols(),
            ds.y.cols(),
            model.input_dim,
            model.output_dim
        );
    }

    let curve = error_curve(model, &ds.x, &ds.y)?;
    let mut header = vec!["rows".to_string(), "testing_error".to_string()];
    let mut row = vec![
        ds.len().to_string(),
        num(*curve.last().expect("depth 0 is always present")),
    ];
    if prep.categorical() {
        let m = classification_metrics(&predict(model, &ds.x)?, &ds.y)?;
        header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
        row.extend(metric_values(&m).into_iter().map(opt));
        header.extend(["tp", "fp", "tn", "fn"].map(String::from));
        row.extend([m.counts.tp, m.counts.fp, m.counts.tn, m.counts.fn_].map(|c| c.to_string()));
    }
    let mut table = Table::new(header);
    table.push(row);
    table.emit(args.out.as_deref())?;

    if let Some(path) = &args.curve {
        let mut t = Table::new(["depth", "training_error", "testing_error"]);
        for (depth, test) in curve.iter().enumerate() {
            let train = training_error(&archive.trace, depth).ok();
            t.push(vec![depth.to_string(), opt(train), num(*test)]);
        }
        t.emit(Some(path))?;
    }
    Ok(())
}
