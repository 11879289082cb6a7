use std::path::PathBuf;

use anyhow::Result;
use bscrls::dataio::{self, SynthTarget};
use clap::Args;

use crate::opts::SynthKind;
use crate::table::{num, Table};

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Label noise (classification)
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    /// Target function (regression): sine-mix, bump-mix or constant:C
    #[arg(long, default_value = "sine-mix")]
    pub target: SynthTarget,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (stdout when omitted)
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

/// Classification sets get a single `label` column, regression sets a `y`
/// column (load it with `--numeric-targets`).
pub fn run(args: &SynthArgs) -> Result<()> {
    let (ds, labelled) = match args.kind {
        SynthKind::Classification => (
            dataio::synth_classification::<f64>(args.seed, args.samples, args.noise, args.dims)?,
            true,
        ),
        SynthKind::Regression => (
            dataio::synth_regression::<f64>(args.seed, args.samples, args.target, args.dims)?,
            false,
        ),
    };
    let mut header: Vec<String> = (1..=ds.x.cols()).map(|j| format!("x{j}")).collect();
    header.push(if labelled { "label" } else { "y" }.into());
    let mut table = Table::new(header);
    let classes = ds.class_indices();
    let names = ds.label_names.clone().unwrap_or_default();
    for i in 0..ds.len() {
        let mut row: Vec<String> = ds.x.row(i).iter().map(|&v| num(v)).collect();
        row.push(if labelled {
            names[classes[i]].clone()
        } else {
            num(ds.y[(i, 0)])
        });
        table.push(row);
    }
    table.emit(args.out.as_deref())
}
