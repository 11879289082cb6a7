use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use bscrls::dataio::{save_archive, write_trace_csv, ModelArchive};
use bscrls::linalg::frobenius_norm;
use bscrls::metrics::{classification_metrics, testing_error};
use bscrls::{predict, train};
use clap::Args;

use crate::opts::{ArchArgs, DataArgs, Mode};
use crate::table::{metric_values, METRIC_NAMES};

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "synth"]))]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub arch: ArchArgs,
    #[arg(long, value_enum, default_value_t = Mode::Bscrls)]
    pub mode: Mode,
    /// Seed of the parameter stream
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model archive to write
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Per-layer trace CSV (defaults to the archive path with .trace.csv)
    #[arg(long, value_name = "CSV")]
    pub trace: Option<PathBuf>,
}

pub fn trace_path_for(out: &std::path::Path) -> PathBuf {
    out.with_extension("trace.csv")
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let prep = args.data.prepare(args.seed, None, None)?;
    let cfg = args.arch.config(args.mode, args.seed);
    let (model, trace) = train(&cfg, &prep.train.x, &prep.train.y)?;

    let archive = ModelArchive {
        model,
        trace,
        normalization: prep.normalization.clone(),
        label_names: prep.label_names.clone(),
    };
    save_archive(&archive, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let trace_path = args.trace.clone().unwrap_or_else(|| trace_path_for(&args.out));
    let f = File::create(&trace_path).with_context(|| format!("creating {}", trace_path.display()))?;
    write_trace_csv(&archive.trace, f)?;

    let records = &archive.trace.records;
    let accepted = records.iter().filter(|r| r.accepted).count();
    let exhausted = records.iter().filter(|r| r.exhausted).count();
    let initial = frobenius_norm(&prep.train.y);
    let last = archive.trace.final_residual().unwrap_or(initial);
    say!(
        "mode {:?}, {} rows, {} layers ({accepted} accepted, {exhausted} exhausted)",
        args.mode,
        prep.train.len(),
        records.len()
    );
    say!(
        "final train residual {last:.6e} (relative {:.6e})",
        last / initial.max(f64::MIN_POSITIVE)
    );
    if let Some(test) = &prep.test {
        let depth = archive.model.layers.len();
        let err = testing_error(&archive.model, &test.x, &test.y, depth)?;
        say!("test error {err:.6e} over {} rows", test.len());
        if prep.categorical() {
            let m = classification_metrics(&predict(&archive.model, &test.x)?, &test.y)?;
            let parts: Vec<String> = METRIC_NAMES
                .iter()
                .zip(metric_values(&m))
                .map(|(n, v)| format!("{n} {}", v.map_or("undefined".into(), |v| format!("{v:.4}"))))
                .collect();
            say!("test {}", parts.join(", "));
        }
    }
    say!("wrote {} and {}", args.out.display(), trace_path.display());
    Ok(())
}
