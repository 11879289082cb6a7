use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bscrls::dataio::{load_archive, save_archive, Dataset, ModelArchive};
use bscrls::linalg::frobenius_norm;
use bscrls::metrics::accuracy;
use bscrls::{add_enhancement_layer, add_feature_group, add_input_data, predict, IncrementKind, Matrix, TrainerState};
use clap::{Args, ValueEnum};

use crate::opts::DataArgs;
use crate::table::{num, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// One more layer of enhancement nodes
    Enh,
    /// One more feature group and a layer built on it
    Feat,
    /// New training rows
    Data,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "synth"]))]
pub struct IncrementArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    /// Model archive to extend
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Where to save the extended archive (defaults to --model)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Training data the model was fit on; same flags as for `train`
    #[command(flatten)]
    pub data: DataArgs,
    /// Rows added by earlier data increments, in the order they were added
    #[arg(long, value_name = "CSV")]
    pub seen_data: Vec<PathBuf>,
    /// Rows to add (data increments)
    #[arg(long, value_name = "CSV")]
    pub new_data: Option<PathBuf>,
    /// Rows per data increment (defaults to all new rows at once)
    #[arg(long)]
    pub chunk: Option<usize>,
    /// Number of enh/feat increments to apply
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Gamma for the new layers (defaults to the model's schedule)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Experiment table to append one row per increment to
    #[arg(long, value_name = "CSV")]
    pub table: Option<PathBuf>,
}

fn stack(a: &Dataset<f64>, b: &Dataset<f64>) -> Result<Dataset<f64>> {
    Ok(Dataset {
        x: Matrix::vstack(&[&a.x, &b.x])?,
        y: Matrix::vstack(&[&a.y, &b.y])?,
        ..a.clone()
    })
}

pub fn run(args: &IncrementArgs) -> Result<()> {
    if args.kind == Kind::Data && args.new_data.is_none() {
        bail!("data increments need --new-data");
    }
    if args.chunk == Some(0) || args.repeat == 0 {
        bail!("--chunk and --repeat must be at least 1");
    }
    let archive: ModelArchive<f64> =
        load_archive(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let norm = archive.normalization.clone();
    let labels = archive.label_names.clone();
    let prep = args
        .data
        .prepare(archive.model.config.random.seed, norm.as_ref(), labels.clone())?;
    let scaled = |path: &PathBuf| -> Result<Dataset<f64>> {
        let ds = args.data.read_csv(path, labels.clone())?;
        let x = match &norm {
            Some(n) => n.apply(&ds.x)?,
            None => ds.x.clone(),
        };
        Ok(Dataset { x, ..ds })
    };
    let mut seen = prep.train.clone();
    for path in &args.seen_data {
        seen = stack(&seen, &scaled(path)?)?;
    }
    if let Some(fit_rows) = archive.trace.records.last().map(|r| r.rows) {
        if fit_rows != seen.len() {
            bail!(
                "model was last fit on {fit_rows} rows but the given training data has {}",
                seen.len()
            );
        }
    }

    let mut accumulated: f64 = archive.trace.records.iter().map(|r| r.wall_time).sum();
    let ModelArchive {
        model,
        trace,
        normalization,
        label_names,
    } = archive;
    let mut state = TrainerState::resume(model, trace, seen.x, seen.y)?;
    let categorical = prep.categorical();
    let test = prep.test;

    let mut header = vec![
        "layer",
        "feature_nodes_before",
        "feature_nodes_after",
        "enhancement_nodes_before",
        "enhancement_nodes_after",
        "rows_before",
        "rows_after",
        "train_error",
    ];
    if test.is_some() {
        header.push("test_error");
    }
    if categorical {
        header.push("train_accuracy");
        if test.is_some() {
            header.push("test_accuracy");
        }
    }
    header.extend(["additional_time_s", "accumulative_time_s", "kind"]);
    let mut table = Table::new(header);

    let chunks: Vec<Dataset<f64>> = match (&args.kind, &args.new_data) {
        (Kind::Data, Some(path)) => {
            let new = scaled(path)?;
            let size = args.chunk.unwrap_or(new.len());
            (0..new.len())
                .step_by(size)
                .map(|s| new.slice(s, (s + size).min(new.len())))
                .collect::<bscrls::Result<_>>()?
        }
        _ => Vec::new(),
    };
    let plan: Vec<Option<&Dataset<f64>>> = match args.kind {
        Kind::Data => chunks.iter().map(Some).collect(),
        _ => vec![None; args.repeat],
    };

    for chunk in plan {
        let before = (
            state.model.feature_node_count(),
            state.model.enhancement_node_count(),
            state.x.rows(),
        );
        let gamma = args
            .gamma
            .unwrap_or_else(|| state.model.config.gamma.at(state.layer_count() + 1));
        let started = Instant::now();
        let event = match args.kind {
            Kind::Enh => add_enhancement_layer(&mut state, gamma)?,
            Kind::Feat => add_feature_group(&mut state, gamma)?,
            Kind::Data => {
                let chunk = chunk.expect("data steps carry a chunk");
                add_input_data(&mut state, &chunk.x, &chunk.y, gamma)?
            }
        };
        let additional = started.elapsed().as_secs_f64();
        accumulated += additional;

        let mut row = vec![
            event.layer_index.to_string(),
            before.0.to_string(),
            state.model.feature_node_count().to_string(),
            before.1.to_string(),
            state.model.enhancement_node_count().to_string(),
            before.2.to_string(),
            state.x.rows().to_string(),
            num(frobenius_norm(&state.residual)),
        ];
        let test_out = match &test {
            Some(t) => Some(predict(&state.model, &t.x)?),
            None => None,
        };
        if let (Some(t), Some(out)) = (&test, &test_out) {
            row.push(num(frobenius_norm(&t.y.sub(out)?)));
        }
        if categorical {
            let train_out = state.y.sub(&state.residual)?;
            row.push(num(accuracy(&train_out, &state.y)?));
            if let (Some(t), Some(out)) = (&test, &test_out) {
                row.push(num(accuracy(out, &t.y)?));
            }
        }
        let kind = match event.kind {
            IncrementKind::Enhancement => "enhancement",
            IncrementKind::Feature => "feature",
            IncrementKind::Data => "data",
        };
        row.extend([num(additional), num(accumulated), kind.to_string()]);
        say!(
            "{kind} increment: layer {}, feature nodes {}→{}, enhancement nodes {}→{}, rows {}→{}, train error {:.6e}",
            event.layer_index,
            row[1],
            row[2],
            row[3],
            row[4],
            row[5],
            row[6],
            frobenius_norm(&state.residual)
        );
        table.push(row);
    }

    let (model, trace) = state.into_parts();
    let out = args.out.as_ref().unwrap_or(&args.model);
    save_archive(
        &ModelArchive {
            model,
            trace,
            normalization,
            label_names,
        },
        out,
    )
    .with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = &args.table {
        table.append(path)?;
    }
    Ok(())
}
