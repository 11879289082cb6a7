//! Growing a trained model without retraining it: new enhancement layers,
//! new feature groups, and new training rows. Every update appends exactly
//! one residual layer, so `W^(m+1) = [W^(m)ᵀ, W_{m+1}ᵀ]ᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, Matrix};
use crate::nodegen::{make_enhancement_nodes, make_feature_nodes, EnhancementGroup, FeatureGroup, RandomStream};
use crate::scalar::Scalar;
use crate::trainer::{
    fit_layer, predict, BroadModel, Candidate, GateParams, LayerKind, LayerRecord, ModelConfig, ResidualLayer,
    SupervisoryMode, TrainingTrace,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementKind {
    Enhancement,
    Feature,
    Data,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncrementEvent {
    pub kind: IncrementKind,
    /// 1-based index of the layer the event appended.
    pub layer_index: usize,
    /// Node columns (enhancement/feature) or training rows (data) added.
    pub added: usize,
    pub record: LayerRecord,
}

/// Everything needed to keep extending a model: the training rows seen so
/// far, their feature matrix `Z`, the current residual `E_m` and the
/// parameter stream position.
#[derive(Clone, Debug)]
pub struct TrainerState<T> {
    pub model: BroadModel<T>,
    pub x: Matrix<T>,
    pub y: Matrix<T>,
    pub z_cache: Matrix<T>,
    pub residual: Matrix<T>,
    pub trace: TrainingTrace,
    pub events: Vec<IncrementEvent>,
    rng: RandomStream,
}

impl<T: Scalar> TrainerState<T> {
    /// Draws the feature groups and trains `config.n_layers` layers.
    pub fn fit(config: ModelConfig<T>, x: Matrix<T>, y: Matrix<T>) -> Result<Self> {
        config.validate()?;
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch {
                op: "train",
                expected: format!("{} target rows", x.rows()),
                found: format!("{} rows", y.rows()),
            });
        }
        let mut rng = RandomStream::new(config.random.seed);
        let feature_groups: Vec<FeatureGroup<T>> = (0..config.n_feature_groups)
            .map(|_| {
                FeatureGroup::draw(
                    &mut rng,
                    &config.random,
                    x.cols(),
                    config.nodes_per_group,
                    config.activation,
                )
            })
            .collect();
        let parts = feature_groups
            .iter()
            .map(|g| make_feature_nodes(&x, g))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Matrix<T>> = parts.iter().collect();
        let z_cache = Matrix::hstack(&refs)?;
        let n_layers = config.n_layers;
        let model = BroadModel {
            input_dim: x.cols(),
            output_dim: y.cols(),
            feature_groups,
            layers: Vec::new(),
            rng_cursor: rng.cursor(),
            config,
        };
        let mut state = Self {
            model,
            residual: y.clone(),
            x,
            y,
            z_cache,
            trace: TrainingTrace::default(),
            events: Vec::new(),
            rng,
        };

        let n = state.model.feature_groups.len();
        let gamma = state.model.config.gamma.at(1);
        let z = state.z_cache.clone();
        state.push_layer(LayerKind::Initial, gamma, true, n, Some(&z), 0..n)?;
        for j in 2..=n_layers {
            let gamma = state.model.config.gamma.at(j);
            state.push_layer(LayerKind::Enhancement, gamma, true, n, None, 0..0)?;
        }
        Ok(state)
    }

    /// Rebuilds a state for a stored model from the training rows it was fit
    /// on. The residual is recomputed as `Y − predict(X)`.
    pub fn resume(model: BroadModel<T>, trace: TrainingTrace, x: Matrix<T>, y: Matrix<T>) -> Result<Self> {
        if x.rows() != y.rows() || y.cols() != model.output_dim {
            return Err(Error::DimensionMismatch {
                op: "resume",
                expected: format!("{} rows with {} targets", x.rows(), model.output_dim),
                found: format!("{}x{}", y.rows(), y.cols()),
            });
        }
        let z_cache = model.feature_matrix(&x)?;
        let residual = y.sub(&predict(&model, &x)?)?;
        let rng = RandomStream::resume(model.config.random.seed, model.rng_cursor);
        Ok(Self {
            model,
            x,
            y,
            z_cache,
            residual,
            trace,
            events: Vec::new(),
            rng,
        })
    }

    pub fn into_parts(self) -> (BroadModel<T>, TrainingTrace) {
        (self.model, self.trace)
    }

    pub fn rng_cursor(&self) -> u128 {
        self.rng.cursor()
    }

    pub fn layer_count(&self) -> usize {
        self.model.layers.len()
    }

    /// `max |(Y − predict(X)) − E|`; small whenever the state is consistent.
    pub fn consistency_error(&self) -> Result<T> {
        let recomputed = self.y.sub(&predict(&self.model, &self.x)?)?;
        Ok(recomputed.sub(&self.residual)?.max_abs())
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.x.rows();
        if self.y.rows() != n || self.z_cache.rows() != n || self.residual.rows() != n {
            return Err(Error::InconsistentState(format!(
                "row counts differ: x {}, y {}, z {}, residual {}",
                n,
                self.y.rows(),
                self.z_cache.rows(),
                self.residual.rows()
            )));
        }
        if self.z_cache.cols() != self.model.feature_node_count() || self.residual.cols() != self.model.output_dim {
            return Err(Error::InconsistentState(
                "feature or output width differs from the model".into(),
            ));
        }
        Ok(())
    }

    /// Draws, gates and appends one layer whose enhancement nodes read the
    /// first `input_groups` feature groups. `features`, when given, is the
    /// feature block placed in front of the enhancement nodes.
    fn push_layer(
        &mut self,
        kind: LayerKind,
        gamma: T,
        gated: bool,
        input_groups: usize,
        features: Option<&Matrix<T>>,
        feature_range: std::ops::Range<usize>,
    ) -> Result<LayerRecord> {
        let layer = self.model.layers.len() + 1;
        let cfg = &self.model.config;
        let params = GateParams {
            layer,
            kind,
            gamma,
            mode: if gated {
                cfg.supervisory_mode
            } else {
                SupervisoryMode::Off
            },
            solver: cfg.solver,
            lambda: cfg.lambda,
            max_retries: cfg.max_retries,
        };
        let input_width = self.model.feature_width(input_groups);
        let input = if input_width == self.z_cache.cols() {
            None
        } else {
            Some(self.z_cache.slice_cols(0, input_width)?)
        };
        let z_in = input.as_ref().unwrap_or(&self.z_cache);
        let (q, act, random) = (cfg.enhancement_per_layer, cfg.activation, cfg.random);
        let rng = &mut self.rng;
        let fitted = fit_layer(&params, &self.residual, || {
            let enhancement = EnhancementGroup::draw(rng, &random, input_width, q, act);
            let h = make_enhancement_nodes(z_in, &enhancement)?;
            let k = match features {
                Some(f) => Matrix::hstack(&[f, &h])?,
                None => h,
            };
            Ok(Candidate { enhancement, k })
        })?;
        self.model.layers.push(ResidualLayer {
            enhancement: fitted.enhancement,
            enhancement_input_groups: input_groups,
            feature_groups: feature_range,
            w_out: fitted.w,
        });
        self.residual = fitted.e_next;
        self.model.rng_cursor = self.rng.cursor();
        self.trace.records.push(fitted.record.clone());
        Ok(fitted.record)
    }

    fn record_event(&mut self, kind: IncrementKind, added: usize, record: LayerRecord) -> IncrementEvent {
        let ev = IncrementEvent {
            kind,
            layer_index: record.layer,
            added,
            record,
        };
        self.events.push(ev.clone());
        ev
    }
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if gamma > T::zero() && gamma < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma {gamma} must lie in (0, 1)")))
    }
}

/// Appends one layer of enhancement nodes built from the cached features.
pub fn add_enhancement_layer<T: Scalar>(state: &mut TrainerState<T>, gamma: T) -> Result<IncrementEvent> {
    check_gamma(gamma)?;
    state.check_shapes()?;
    let n = state.model.feature_groups.len();
    let record = state.push_layer(LayerKind::Enhancement, gamma, true, n, None, 0..0)?;
    let q = state.model.config.enhancement_per_layer;
    Ok(state.record_event(IncrementKind::Enhancement, q, record))
}

/// Draws feature group `n+1`, widens `Z`, and appends a layer whose input is
/// `[Z_{n+1} | ξ(Z^{n+1} W_h + β_h)]`. Gate failures redraw only the
/// enhancement weights.
pub fn add_feature_group<T: Scalar>(state: &mut TrainerState<T>, gamma: T) -> Result<IncrementEvent> {
    check_gamma(gamma)?;
    state.check_shapes()?;
    let cfg = state.model.config.clone();
    let group = FeatureGroup::draw(
        &mut state.rng,
        &cfg.random,
        state.model.input_dim,
        cfg.nodes_per_group,
        cfg.activation,
    );
    let z_new = make_feature_nodes(&state.x, &group)?;
    state.z_cache = Matrix::hstack(&[&state.z_cache, &z_new])?;
    state.model.feature_groups.push(group);
    let n = state.model.feature_groups.len();
    let record = state.push_layer(LayerKind::Feature, gamma, true, n, Some(&z_new), (n - 1)..n)?;
    Ok(state.record_event(IncrementKind::Feature, z_new.cols() + cfg.enhancement_per_layer, record))
}

/// Residual over old and new rows before the new layer is fit:
/// `[E_m ; Y_a − X_a^m W^(m)]`.
pub fn assemble_data_residual<T: Scalar>(
    state: &TrainerState<T>,
    x_a: &Matrix<T>,
    y_a: &Matrix<T>,
) -> Result<Matrix<T>> {
    if x_a.rows() != y_a.rows() || x_a.cols() != state.model.input_dim || y_a.cols() != state.model.output_dim {
        return Err(Error::DimensionMismatch {
            op: "add_input_data",
            expected: format!(
                "Bx{} inputs with Bx{} targets",
                state.model.input_dim, state.model.output_dim
            ),
            found: format!(
                "{}x{} inputs with {}x{} targets",
                x_a.rows(),
                x_a.cols(),
                y_a.rows(),
                y_a.cols()
            ),
        });
    }
    let e_new = y_a.sub(&predict(&state.model, x_a)?)?;
    Matrix::vstack(&[&state.residual, &e_new])
}

/// Appends new training rows and fits one layer over all rows.
pub fn add_input_data<T: Scalar>(
    state: &mut TrainerState<T>,
    x_a: &Matrix<T>,
    y_a: &Matrix<T>,
    gamma: T,
) -> Result<IncrementEvent> {
    check_gamma(gamma)?;
    state.check_shapes()?;
    let residual = assemble_data_residual(state, x_a, y_a)?;
    let z_a = state.model.feature_matrix(x_a)?;
    state.z_cache = Matrix::vstack(&[&state.z_cache, &z_a])?;
    state.x = Matrix::vstack(&[&state.x, x_a])?;
    state.y = Matrix::vstack(&[&state.y, y_a])?;
    state.residual = residual;
    let gated = state.model.config.gate_data_increments;
    let n = state.model.feature_groups.len();
    let record = state.push_layer(LayerKind::Data, gamma, gated, n, None, 0..0)?;
    Ok(state.record_event(IncrementKind::Data, x_a.rows(), record))
}

/// Residual norm of the state, `‖E_m‖`.
pub fn residual_norm<T: Scalar>(state: &TrainerState<T>) -> T {
    frobenius_norm(&state.residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodegen::{ActivationId, RandomSpec};
    use crate::trainer::{GammaSchedule, SupervisoryMode};

    fn small_config(mode: SupervisoryMode) -> ModelConfig<f64> {
        ModelConfig {
            n_feature_groups: 3,
            nodes_per_group: 4,
            n_layers: 3,
            enhancement_per_layer: 6,
            gamma: GammaSchedule::Constant(0.9),
            random: RandomSpec::new(5),
            max_retries: 5,
            supervisory_mode: mode,
            ..ModelConfig::default()
        }
    }

    fn data(n: usize, seed: u64) -> (Matrix<f64>, Matrix<f64>) {
        let mut rng = RandomStream::new(seed);
        let x = rng.uniform::<f64>(n, 3, 0.0, 1.0);
        let y = Matrix::from_fn(n, 2, |i, j| (x[(i, 0)] * 3.0 + j as f64).sin() + x[(i, 2)]);
        (x, y)
    }

    #[test]
    fn zero_residual_stays_zero() {
        let (x, _) = data(30, 1);
        let y = Matrix::zeros(30, 2);
        let mut st = TrainerState::fit(small_config(SupervisoryMode::Contraction), x, y).unwrap();
        let ev = add_enhancement_layer(&mut st, 0.9).unwrap();
        assert!(st.model.layers.last().unwrap().w_out.is_zero());
        assert!(st.residual.is_zero());
        assert_eq!(ev.layer_index, 4);
    }

    #[test]
    fn successive_increments_are_monotone_and_consistent() {
        let (x, y) = data(80, 2);
        let mut st = TrainerState::fit(small_config(SupervisoryMode::Contraction), x, y).unwrap();
        let mut last = residual_norm(&st);
        for _ in 0..10 {
            add_enhancement_layer(&mut st, 0.9).unwrap();
            let now = residual_norm(&st);
            assert!(now <= last + 1e-10);
            last = now;
        }
        assert!(st.consistency_error().unwrap() < 1e-8);
        let idx: Vec<usize> = st.events.iter().map(|e| e.layer_index).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn feature_increment_shapes_and_degenerate_block() {
        let (x, y) = data(60, 3);
        let mut st = TrainerState::fit(small_config(SupervisoryMode::Off), x, y).unwrap();
        let before = residual_norm(&st);
        let ev = add_feature_group(&mut st, 0.9).unwrap();
        assert!(residual_norm(&st) <= before + 1e-10);
        let layer = st.model.layers.last().unwrap();
        assert_eq!(layer.w_out.rows(), 4 + 6);
        assert_eq!(ev.added, 10);
        assert_eq!(layer.feature_groups, 3..4);
        assert_eq!(layer.enhancement.input_width(), 16);
        assert!(st.consistency_error().unwrap() < 1e-8);

        // a zeroed feature group contributes nothing through the identity map
        let mut g = st.model.feature_groups[3].clone();
        g.activation = ActivationId::Identity;
        g.w_e = Matrix::zeros(3, 4);
        g.beta_e = Matrix::zeros(1, 4);
        assert!(make_feature_nodes(&st.x, &g).unwrap().is_zero());
    }

    #[test]
    fn data_increment_self_prediction_has_zero_new_error() {
        let (x, y) = data(50, 4);
        let st = TrainerState::fit(small_config(SupervisoryMode::Contraction), x.clone(), y).unwrap();
        let x_a = x.slice_rows(0, 10).unwrap();
        let y_a = predict(&st.model, &x_a).unwrap();
        let e = assemble_data_residual(&st, &x_a, &y_a).unwrap();
        assert!(e.slice_rows(50, 60).unwrap().max_abs() < 1e-15);
        assert_eq!(e.slice_rows(0, 50).unwrap(), st.residual);
    }

    #[test]
    fn data_increment_grows_rows() {
        let (x, y) = data(40, 5);
        let mut st = TrainerState::fit(small_config(SupervisoryMode::Contraction), x, y).unwrap();
        let (xa, ya) = data(10, 6);
        let assembled = assemble_data_residual(&st, &xa, &ya).unwrap();
        let ev = add_input_data(&mut st, &xa, &ya, 0.9).unwrap();
        assert_eq!(st.residual.rows(), 50);
        assert_eq!(ev.added, 10);
        assert!(residual_norm(&st) <= frobenius_norm(&assembled) + 1e-10);
        assert!(st.consistency_error().unwrap() < 1e-8);
        assert!(add_input_data(&mut st, &Matrix::zeros(2, 4), &Matrix::zeros(2, 2), 0.9).is_err());
    }

    #[test]
    fn rejects_bad_gamma_and_inconsistent_state() {
        let (x, y) = data(20, 7);
        let mut st = TrainerState::fit(small_config(SupervisoryMode::Contraction), x, y).unwrap();
        assert!(add_enhancement_layer(&mut st, 1.0).is_err());
        st.residual = Matrix::zeros(3, 2);
        assert!(matches!(
            add_enhancement_layer(&mut st, 0.9),
            Err(Error::InconsistentState(_))
        ));
    }
}
