use std::f64::consts::FRAC_2_PI;
use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bscrls::dataio::{load_archive, read_trace_csv, ModelArchive};
use bscrls::diagnostics::{classify_regime, wallis_product};
use clap::Args;

use crate::table::{num, Table};

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Trace CSV written by `train`
    #[arg(long, value_name = "CSV", conflicts_with = "model")]
    pub trace: Option<PathBuf>,
    /// Read the trace stored in a model archive instead
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Relative residual below which a run counts as convergent
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Trailing layers examined for stagnation
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    /// Print the partial Wallis product of this many factors
    #[arg(long, value_name = "M")]
    pub wallis: Option<usize>,
    /// Per-layer table CSV (printed when omitted)
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

pub fn run(args: &DiagnoseArgs) -> Result<()> {
    if let Some(m) = args.wallis {
        let v = wallis_product(m);
        say!(
            "wallis product over {m} factors: {v:.10} (2/π = {FRAC_2_PI:.10}, gap {:.3e})",
            v - FRAC_2_PI
        );
    }
    let trace = match (&args.trace, &args.model) {
        (Some(p), _) => read_trace_csv(File::open(p).with_context(|| format!("opening {}", p.display()))?)
            .with_context(|| format!("reading {}", p.display()))?,
        (None, Some(p)) => {
            let a: ModelArchive<f64> = load_archive(p).with_context(|| format!("loading {}", p.display()))?;
            a.trace
        }
        (None, None) if args.wallis.is_some() => return Ok(()),
        (None, None) => bail!("pass --trace, --model or --wallis"),
    };

    let report = classify_regime(&trace, args.tolerance, args.horizon)?;
    let mut table = Table::new(["layer", "residual_norm", "epsilon", "partial_product"]);
    let norms = trace.residual_norms();
    let mut log_product = 0.0;
    for (j, eps) in report.epsilons.iter().enumerate() {
        log_product += (-eps.clamp(0.0, 1.0 - f64::EPSILON)).ln_1p();
        table.push(vec![
            (j + 1).to_string(),
            num(norms[j + 1]),
            num(*eps),
            num(log_product.exp()),
        ]);
    }
    match &args.out {
        Some(p) => table.emit(Some(p))?,
        None => {
            say!("{:>6} {:>14} {:>12} {:>14}", "layer", "residual", "epsilon", "product");
            for r in &table.rows {
                let v: Vec<f64> = r[1..].iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect();
                say!("{:>6} {:>14.6e} {:>12.6} {:>14.6e}", r[0], v[0], v[1], v[2]);
            }
        }
    }
    say!("layers {}", trace.len());
    say!("final relative residual {:.6e}", report.final_relative_residual);
    let flag = if report.product_underflow { " (underflow)" } else { "" };
    say!("stagnation product {:.6e}{flag}", report.product_lower_bound);
    say!(
        "tail epsilon sum {:.6e} over {} layers",
        report.tail_epsilon_sum,
        args.horizon.min(trace.len())
    );
    let note = if report.heuristic { " (heuristic)" } else { "" };
    say!("regime {}{note}", report.regime.name());
    Ok(())
}
