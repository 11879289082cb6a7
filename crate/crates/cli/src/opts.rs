//! Flag groups shared between subcommands.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bscrls::dataio::{
    self, load_csv, normalize, CsvSchema, Dataset, Normalization, NormalizeMode, SynthTarget, TargetColumns, TargetKind,
};
use bscrls::{ActivationId, GammaSchedule, ModelConfig, OutputSolver, RandomSpec, SupervisoryMode};
use clap::{Args, ValueEnum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Two interleaved noisy arcs, labels 0 and 1
    Classification,
    /// Noise-free target function on uniform random inputs
    Regression,
}

#[derive(Args, Clone, Debug)]
pub struct DataArgs {
    /// Training data CSV (features then target columns)
    #[arg(long, value_name = "CSV", conflicts_with = "synth")]
    pub data: Option<PathBuf>,
    /// Generate the data set instead of reading one
    #[arg(long, value_enum)]
    pub synth: Option<SynthKind>,
    /// Rows to generate
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Label noise of the generated classification set
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    /// Input dimension of generated data
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    /// Target of generated regression data: sine-mix, bump-mix or constant:C
    #[arg(long, default_value = "sine-mix")]
    pub target: SynthTarget,
    /// Seed of the generator (defaults to the model seed)
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Number of trailing target columns
    #[arg(long, default_value_t = 1)]
    pub targets: usize,
    /// Treat targets as real values rather than class labels
    #[arg(long)]
    pub numeric_targets: bool,
    /// The CSV has no header row
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Input scaling fitted on the training rows
    #[arg(long, default_value = "minmax")]
    pub normalize: NormalizeMode,
    /// Separate test CSV
    #[arg(long, value_name = "CSV", conflicts_with = "test_fraction")]
    pub test_data: Option<PathBuf>,
    /// Hold out this fraction of the rows for testing
    #[arg(long, default_value_t = 0.0)]
    pub test_fraction: f64,
    /// Seed of the train/test shuffle
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

/// Normalized training and test rows plus what is needed to reproduce the
/// transform later.
pub struct Prepared {
    pub train: Dataset<f64>,
    pub test: Option<Dataset<f64>>,
    pub normalization: Option<Normalization>,
    pub label_names: Option<Vec<String>>,
}

impl Prepared {
    pub fn categorical(&self) -> bool {
        self.label_names.is_some()
    }
}

impl DataArgs {
    pub fn schema(&self, labels: Option<Vec<String>>) -> Result<CsvSchema> {
        if !self.delimiter.is_ascii() {
            bail!("delimiter must be a single ASCII character");
        }
        Ok(CsvSchema {
            targets: TargetColumns::Last(self.targets),
            target_kind: if self.numeric_targets {
                TargetKind::Numeric
            } else {
                TargetKind::Categorical
            },
            has_header: !self.no_header,
            delimiter: self.delimiter as u8,
            labels,
        })
    }

    pub fn read_csv(&self, path: &PathBuf, labels: Option<Vec<String>>) -> Result<Dataset<f64>> {
        load_csv(path, &self.schema(labels)?).with_context(|| format!("reading {}", path.display()))
    }

    /// The full data set before any split or scaling.
    pub fn load(&self, seed: u64, labels: Option<Vec<String>>) -> Result<Dataset<f64>> {
        let seed = self.data_seed.unwrap_or(seed);
        match (&self.data, self.synth) {
            (Some(path), _) => self.read_csv(path, labels),
            (None, Some(SynthKind::Classification)) => {
                Ok(dataio::synth_classification(seed, self.samples, self.noise, self.dims)?)
            }
            (None, Some(SynthKind::Regression)) => {
                Ok(dataio::synth_regression(seed, self.samples, self.target, self.dims)?)
            }
            (None, None) => bail!("no data source: pass --data or --synth"),
        }
    }

    /// Loads, splits and scales. A stored transform and label list, when
    /// given, are reused instead of fitted.
    pub fn prepare(&self, seed: u64, stored: Option<&Normalization>, labels: Option<Vec<String>>) -> Result<Prepared> {
        let full = self.load(seed, labels)?;
        let label_names = full.label_names.clone();
        let (train, test) = if let Some(path) = &self.test_data {
            let test = self.read_csv(path, label_names.clone())?;
            (full, Some(test))
        } else if self.test_fraction > 0.0 {
            let (a, b) = full.split(1.0 - self.test_fraction, self.split_seed)?;
            (a, Some(b))
        } else {
            (full, None)
        };
        let (train, normalization) = match stored {
            Some(n) => {
                let x = n.apply(&train.x)?;
                (Dataset { x, ..train }, Some(n.clone()))
            }
            None => {
                let ds = normalize(&train, self.normalize);
                let n = ds.normalization.clone();
                (ds, n)
            }
        };
        let test = match (test, &normalization) {
            (Some(t), Some(n)) => Some(Dataset { x: n.apply(&t.x)?, ..t }),
            (t, _) => t,
        };
        Ok(Prepared {
            train,
            test,
            normalization,
            label_names,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    /// Ridge-regularised normal equations
    Ridge,
    /// SVD pseudo-inverse
    Pinv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Gate {
    /// Accept a layer when the residual shrinks by the required factor
    Contraction,
    /// Accept a layer when ‖I − K K⁺‖₂ stays under the threshold
    OperatorNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Plain residual training
    Brls,
    /// Residual training with the supervisory gate
    Bscrls,
}

/// Architecture and training flags, everything in a model configuration
/// except the seed and the gated/ungated choice.
#[derive(Args, Clone, Debug)]
pub struct ArchArgs {
    /// Feature node groups
    #[arg(long = "n", default_value_t = 10)]
    pub feature_groups: usize,
    /// Nodes per feature group
    #[arg(long = "k", default_value_t = 10)]
    pub nodes_per_group: usize,
    /// Enhancement nodes per residual layer
    #[arg(long = "q", default_value_t = 50)]
    pub enhancement: usize,
    /// Residual layers
    #[arg(long = "m", default_value_t = 100)]
    pub layers: usize,
    /// Learning parameter of the gate
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// Let gamma rise from --gamma toward this value with depth
    #[arg(long)]
    pub gamma_limit: Option<f64>,
    /// Ridge regularisation
    #[arg(long, default_value_t = 1e-8)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = Solver::Ridge)]
    pub solver: Solver,
    /// sigmoid, tanh or identity
    #[arg(long, default_value = "sigmoid")]
    pub activation: ActivationId,
    /// Lower end of the weight sampling interval
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub low: f64,
    /// Upper end of the weight sampling interval
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub high: f64,
    /// Redraws allowed when a candidate layer fails the gate
    #[arg(long, default_value_t = 20)]
    pub max_retries: usize,
    #[arg(long, value_enum, default_value_t = Gate::Contraction)]
    pub gate: Gate,
    /// Do not gate layers added for new training rows
    #[arg(long)]
    pub ungated_data: bool,
}

impl ArchArgs {
    pub fn config(&self, mode: Mode, seed: u64) -> ModelConfig<f64> {
        let gamma = match self.gamma_limit {
            Some(limit) => GammaSchedule::Increasing {
                start: self.gamma,
                limit,
            },
            None => GammaSchedule::Constant(self.gamma),
        };
        let supervisory_mode = match (mode, self.gate) {
            (Mode::Brls, _) => SupervisoryMode::Off,
            (Mode::Bscrls, Gate::Contraction) => SupervisoryMode::Contraction,
            (Mode::Bscrls, Gate::OperatorNorm) => SupervisoryMode::OperatorNorm,
        };
        ModelConfig {
            n_feature_groups: self.feature_groups,
            nodes_per_group: self.nodes_per_group,
            n_layers: self.layers,
            enhancement_per_layer: self.enhancement,
            gamma,
            lambda: self.lambda,
            solver: match self.solver {
                Solver::Ridge => OutputSolver::Ridge,
                Solver::Pinv => OutputSolver::PseudoInverse,
            },
            activation: self.activation,
            random: RandomSpec {
                seed,
                low: self.low,
                high: self.high,
            },
            max_retries: self.max_retries,
            supervisory_mode,
            gate_data_increments: !self.ungated_data,
        }
    }
}
