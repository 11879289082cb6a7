//! Randomized broad networks trained layer by layer on their own residual.
//!
//! A model draws random feature nodes from the inputs and stacks residual
//! layers of random enhancement nodes; each layer's output weights are solved
//! in closed form against the residual the previous layers left behind. The
//! supervised variant keeps a layer only if it contracts that residual by a
//! prescribed factor, which makes the training error go to zero.
//!
//! ```
//! use bscrls::{dataio, train, ModelConfig64};
//!
//! let data = dataio::synth_classification::<f64>(7, 200, 0.1, 2).unwrap();
//! let config = ModelConfig64 {
//!     n_feature_groups: 4,
//!     nodes_per_group: 5,
//!     n_layers: 5,
//!     enhancement_per_layer: 10,
//!     ..Default::default()
//! };
//! let (model, trace) = train(&config, &data.x, &data.y).unwrap();
//! assert_eq!(model.layers.len(), 5);
//! assert!(trace.final_residual().unwrap() < trace.records[0].residual_norm_before);
//! ```

pub mod dataio;
pub mod diagnostics;
mod error;
pub mod incremental;
pub mod linalg;
pub mod metrics;
pub mod nodegen;
mod scalar;
pub mod scn;
pub mod trainer;

pub use error::{Error, Result};
pub use incremental::{
    add_enhancement_layer, add_feature_group, add_input_data, assemble_data_residual, residual_norm, IncrementEvent,
    IncrementKind, TrainerState,
};
pub use linalg::Matrix;
pub use nodegen::{ActivationId, RandomSpec, RandomStream};
pub use scalar::Scalar;
pub use trainer::{
    predict, supervisory_check, train, train_brls, train_bscrls, BroadModel, GammaSchedule, LayerKind, LayerRecord,
    ModelConfig, OutputSolver, SupervisoryMode, TrainingTrace,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type ModelConfig64 = ModelConfig<f64>;
pub type ModelConfig32 = ModelConfig<f32>;
pub type BroadModel64 = BroadModel<f64>;
pub type BroadModel32 = BroadModel<f32>;
pub type TrainerState64 = TrainerState<f64>;
pub type TrainerState32 = TrainerState<f32>;
pub type Dataset64 = dataio::Dataset<f64>;
pub type Dataset32 = dataio::Dataset<f32>;
