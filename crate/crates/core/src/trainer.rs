//! Layer-by-layer residual training.
//!
//! Plain residual training fits each new layer to the current residual,
//! `W_j = solve(K_j, E_{j-1})` and `E_j = E_{j-1} - K_j W_j` with `E_0 = Y`.
//! The supervised variant only keeps a randomly drawn layer if it shrinks the
//! residual by at least `γ + μ_j`, redrawing the enhancement weights
//! otherwise. Any geometric contraction factor below one drives the training
//! residual to zero in norm, which the unsupervised variant cannot promise.

use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incremental::TrainerState;
use crate::linalg::{frobenius_norm, pinv_solve, projector_complement_norm, ridge_solve, Matrix};
use crate::nodegen::{
    make_enhancement_nodes, make_feature_nodes, ActivationId, EnhancementGroup, FeatureGroup, RandomSpec,
};
use crate::scalar::Scalar;

/// How a candidate layer is admitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisoryMode {
    /// Accept iff `‖E_j‖ ≤ (γ + μ_j) ‖E_{j-1}‖`.
    #[default]
    Contraction,
    /// Accept iff `‖I − K K⁺‖₂ ≤ γ + μ_j`. Degenerate for tall `K` (the
    /// left side is then exactly 1), kept for fidelity experiments.
    OperatorNorm,
    /// No gate: plain residual training.
    Off,
}

impl SupervisoryMode {
    pub fn name(self) -> &'static str {
        match self {
            SupervisoryMode::Contraction => "contraction",
            SupervisoryMode::OperatorNorm => "operator_norm",
            SupervisoryMode::Off => "off",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            SupervisoryMode::Contraction => 0,
            SupervisoryMode::OperatorNorm => 1,
            SupervisoryMode::Off => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SupervisoryMode::Contraction),
            1 => Some(SupervisoryMode::OperatorNorm),
            2 => Some(SupervisoryMode::Off),
            _ => None,
        }
    }
}

impl std::str::FromStr for SupervisoryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "contraction" => Ok(SupervisoryMode::Contraction),
            "operator_norm" | "operator" => Ok(SupervisoryMode::OperatorNorm),
            "off" | "none" => Ok(SupervisoryMode::Off),
            other => Err(Error::InvalidArgument(format!("unknown supervisory mode '{other}'"))),
        }
    }
}

/// Output-weight solver for each layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputSolver {
    /// `(KᵀK + λI)⁻¹ KᵀE`
    #[default]
    Ridge,
    /// `K⁺ E` via the SVD pseudo-inverse (λ is ignored).
    PseudoInverse,
}

/// Learning parameter γ as a function of the 1-based layer index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaSchedule<T> {
    Constant(T),
    /// `γ_j = limit − (limit − start) / j`, increasing from `start` toward `limit`.
    Increasing {
        start: T,
        limit: T,
    },
}

impl<T: Scalar> GammaSchedule<T> {
    pub fn at(&self, layer: usize) -> T {
        match *self {
            GammaSchedule::Constant(g) => g,
            GammaSchedule::Increasing { start, limit } => limit - (limit - start) / T::of(layer.max(1) as f64),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |g: T| g > T::zero() && g < T::one();
        match *self {
            GammaSchedule::Constant(g) if ok(g) => Ok(()),
            GammaSchedule::Increasing { start, limit } if ok(start) && start < limit && limit <= T::one() => Ok(()),
            other => Err(Error::InvalidConfig(format!(
                "gamma schedule {other:?} must lie in (0, 1)"
            ))),
        }
    }
}

/// Slack `μ_j = (1 − γ) / (j + 1)` for the 1-based layer index `j`.
pub fn mu_schedule<T: Scalar>(gamma: T, layer_index: usize) -> T {
    (T::one() - gamma) / T::of((layer_index + 1) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig<T> {
    /// `n`
    pub n_feature_groups: usize,
    /// `k`
    pub nodes_per_group: usize,
    /// `m`
    pub n_layers: usize,
    /// `q`
    pub enhancement_per_layer: usize,
    pub gamma: GammaSchedule<T>,
    pub lambda: T,
    pub solver: OutputSolver,
    pub activation: ActivationId,
    pub random: RandomSpec,
    /// Redraws allowed after the first candidate of a layer.
    pub max_retries: usize,
    pub supervisory_mode: SupervisoryMode,
    /// Apply the gate to layers added for new input data.
    pub gate_data_increments: bool,
}

impl<T: Scalar> Default for ModelConfig<T> {
    fn default() -> Self {
        Self {
            n_feature_groups: 10,
            nodes_per_group: 10,
            n_layers: 100,
            enhancement_per_layer: 50,
            gamma: GammaSchedule::Constant(T::of(0.9)),
            lambda: T::of(1e-8),
            solver: OutputSolver::Ridge,
            activation: ActivationId::Sigmoid,
            random: RandomSpec::default(),
            max_retries: 20,
            supervisory_mode: SupervisoryMode::Contraction,
            gate_data_increments: true,
        }
    }
}

impl<T: Scalar> ModelConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_feature_groups", self.n_feature_groups),
            ("nodes_per_group", self.nodes_per_group),
            ("n_layers", self.n_layers),
            ("enhancement_per_layer", self.enhancement_per_layer),
            ("max_retries", self.max_retries),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        if self.lambda.is_nan() || self.lambda <= T::zero() {
            return Err(Error::InvalidConfig("lambda must be positive".into()));
        }
        self.gamma.validate()?;
        self.random.validate()
    }
}

/// One residual learning layer. Its node matrix is
/// `[Z_{feature_groups} | ξ(Z^{enhancement_input_groups} W_h + β_h)]`, where the
/// feature block is present for the first layer and for layers added with new
/// feature groups.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualLayer<T> {
    pub enhancement: EnhancementGroup<T>,
    /// Number of leading feature groups the enhancement nodes read.
    pub enhancement_input_groups: usize,
    /// Feature groups whose nodes are part of this layer's input.
    pub feature_groups: Range<usize>,
    /// `W_j`, one row per node column, one column per output.
    pub w_out: Matrix<T>,
}

impl<T> ResidualLayer<T> {
    pub fn includes_features(&self) -> bool {
        !self.feature_groups.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BroadModel<T> {
    pub config: ModelConfig<T>,
    pub input_dim: usize,
    pub output_dim: usize,
    pub feature_groups: Vec<FeatureGroup<T>>,
    pub layers: Vec<ResidualLayer<T>>,
    /// Position of the parameter stream after the last draw.
    pub rng_cursor: u128,
}

impl<T: Scalar> BroadModel<T> {
    /// Column offset of each feature group in `Z`, plus the total width.
    fn feature_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.feature_groups.len() + 1);
        let mut acc = 0;
        off.push(0);
        for g in &self.feature_groups {
            acc += g.width();
            off.push(acc);
        }
        off
    }

    /// Width of the first `groups` feature groups.
    pub fn feature_width(&self, groups: usize) -> usize {
        self.feature_groups[..groups].iter().map(FeatureGroup::width).sum()
    }

    /// `Z = [Z_1, …, Z_n]` for every stored feature group.
    pub fn feature_matrix(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                op: "predict",
                expected: format!("{} input columns", self.input_dim),
                found: format!("{} columns", x.cols()),
            });
        }
        let parts = self
            .feature_groups
            .iter()
            .map(|g| make_feature_nodes(x, g))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Matrix<T>> = parts.iter().collect();
        Matrix::hstack(&refs)
    }

    /// Node matrix `K_j` of `layer` given the full feature matrix.
    pub fn layer_nodes(&self, z: &Matrix<T>, layer: &ResidualLayer<T>) -> Result<Matrix<T>> {
        let off = self.feature_offsets();
        let input_width = off[layer.enhancement_input_groups];
        let input = if input_width == z.cols() {
            None
        } else {
            Some(z.slice_cols(0, input_width)?)
        };
        let h = make_enhancement_nodes(input.as_ref().unwrap_or(z), &layer.enhancement)?;
        if layer.includes_features() {
            let feats = z.slice_cols(off[layer.feature_groups.start], off[layer.feature_groups.end])?;
            Matrix::hstack(&[&feats, &h])
        } else {
            Ok(h)
        }
    }

    /// Output of the first `depth` layers, `Σ_{j≤depth} K_j W_j`.
    pub fn predict_depth(&self, x: &Matrix<T>, depth: usize) -> Result<Matrix<T>> {
        if depth > self.layers.len() {
            return Err(Error::OutOfRange {
                index: depth,
                len: self.layers.len(),
            });
        }
        let z = self.feature_matrix(x)?;
        let mut out = Matrix::zeros(x.rows(), self.output_dim);
        for layer in &self.layers[..depth] {
            let k = self.layer_nodes(&z, layer)?;
            out = out.add(&k.matmul(&layer.w_out)?)?;
        }
        Ok(out)
    }

    /// Outputs after each depth `0..=m`, computed in one pass.
    pub fn predict_curve(&self, x: &Matrix<T>) -> Result<Vec<Matrix<T>>> {
        let z = self.feature_matrix(x)?;
        let mut out = Matrix::zeros(x.rows(), self.output_dim);
        let mut curve = vec![out.clone()];
        for layer in &self.layers {
            let k = self.layer_nodes(&z, layer)?;
            out = out.add(&k.matmul(&layer.w_out)?)?;
            curve.push(out.clone());
        }
        Ok(curve)
    }

    /// `W^(m) = [W_1ᵀ, …, W_mᵀ]ᵀ`.
    pub fn stacked_weights(&self) -> Matrix<T> {
        let refs: Vec<&Matrix<T>> = self.layers.iter().map(|l| &l.w_out).collect();
        Matrix::vstack(&refs).expect("layers share the output dimension")
    }

    pub fn feature_node_count(&self) -> usize {
        self.feature_groups.iter().map(FeatureGroup::width).sum()
    }

    pub fn enhancement_node_count(&self) -> usize {
        self.layers.iter().map(|l| l.enhancement.width()).sum()
    }
}

/// Full model output `Σ_j K_j W_j`.
pub fn predict<T: Scalar>(model: &BroadModel<T>, x_new: &Matrix<T>) -> Result<Matrix<T>> {
    model.predict_depth(x_new, model.layers.len())
}

/// What kind of step produced a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Initial,
    Enhancement,
    Feature,
    Data,
}

/// Log entry for one residual layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    /// 1-based layer index.
    pub layer: usize,
    pub kind: LayerKind,
    /// Training rows the layer was fit on.
    pub rows: usize,
    pub residual_norm_before: f64,
    pub residual_norm_after: f64,
    /// `after / before` (0 when `before` is 0).
    pub contraction_ratio: f64,
    /// Statistic compared against `threshold` by the gate.
    pub gate_value: f64,
    pub gamma: f64,
    pub mu: f64,
    /// `γ + μ`.
    pub threshold: f64,
    pub retries_used: usize,
    /// Whether the kept candidate passed the gate.
    pub accepted: bool,
    /// Retries ran out and the best candidate was kept instead.
    pub exhausted: bool,
    /// Whether a gate was applied at all.
    pub gated: bool,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<LayerRecord>,
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `‖E_0‖, ‖E_1‖, …, ‖E_m‖`.
    pub fn residual_norms(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.records.len() + 1);
        if let Some(first) = self.records.first() {
            out.push(first.residual_norm_before);
        }
        out.extend(self.records.iter().map(|r| r.residual_norm_after));
        out
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual_norm_after)
    }
}

/// Result of gating one candidate node matrix.
#[derive(Clone, Debug)]
pub struct GateOutcome<T> {
    pub accepted: bool,
    /// Gate statistic: the residual contraction ratio, or `‖I − KK⁺‖₂` in
    /// operator-norm mode.
    pub ratio: T,
    pub residual_ratio: T,
    pub candidate_w: Matrix<T>,
    pub e_next: Matrix<T>,
}

/// Fits `K` to `e_prev` and applies the supervisory test at threshold
/// `gamma + mu`.
pub fn supervisory_check<T: Scalar>(
    k: &Matrix<T>,
    e_prev: &Matrix<T>,
    gamma: T,
    mu: T,
    mode: SupervisoryMode,
    solver: OutputSolver,
    lambda: T,
) -> Result<GateOutcome<T>> {
    if k.rows() != e_prev.rows() {
        return Err(Error::DimensionMismatch {
            op: "supervisory_check",
            expected: format!("residual with {} rows", k.rows()),
            found: format!("{} rows", e_prev.rows()),
        });
    }
    let candidate_w = match solver {
        OutputSolver::Ridge => ridge_solve(k, e_prev, lambda)?,
        OutputSolver::PseudoInverse => pinv_solve(k, e_prev)?,
    };
    let e_next = e_prev.sub(&k.matmul(&candidate_w)?)?;
    let before = frobenius_norm(e_prev);
    if before.is_zero() {
        return Ok(GateOutcome {
            accepted: true,
            ratio: T::zero(),
            residual_ratio: T::zero(),
            candidate_w,
            e_next,
        });
    }
    let residual_ratio = frobenius_norm(&e_next) / before;
    let threshold = gamma + mu;
    let (accepted, ratio) = match mode {
        SupervisoryMode::Contraction => (residual_ratio <= threshold, residual_ratio),
        SupervisoryMode::OperatorNorm => {
            let v = projector_complement_norm(k);
            (v <= threshold, v)
        }
        SupervisoryMode::Off => (true, residual_ratio),
    };
    Ok(GateOutcome {
        accepted,
        ratio,
        residual_ratio,
        candidate_w,
        e_next,
    })
}

/// A drawn candidate: enhancement parameters and the resulting `K`.
pub(crate) struct Candidate<T> {
    pub enhancement: EnhancementGroup<T>,
    pub k: Matrix<T>,
}

pub(crate) struct FittedLayer<T> {
    pub enhancement: EnhancementGroup<T>,
    pub w: Matrix<T>,
    pub e_next: Matrix<T>,
    pub record: LayerRecord,
}

pub(crate) struct GateParams<T> {
    pub layer: usize,
    pub kind: LayerKind,
    pub gamma: T,
    pub mode: SupervisoryMode,
    pub solver: OutputSolver,
    pub lambda: T,
    pub max_retries: usize,
}

/// Draws candidates until one passes the gate or retries run out, in which
/// case the candidate with the smallest gate statistic is kept and flagged.
pub(crate) fn fit_layer<T: Scalar>(
    params: &GateParams<T>,
    e_prev: &Matrix<T>,
    mut draw: impl FnMut() -> Result<Candidate<T>>,
) -> Result<FittedLayer<T>> {
    let start = Instant::now();
    let mu = mu_schedule(params.gamma, params.layer);
    let gated = params.mode != SupervisoryMode::Off;
    let attempts = if gated { params.max_retries + 1 } else { 1 };
    let mut best: Option<(Candidate<T>, GateOutcome<T>)> = None;
    let mut kept = None;
    let mut used = 0;
    for attempt in 0..attempts {
        used = attempt;
        let cand = draw()?;
        let out = supervisory_check(
            &cand.k,
            e_prev,
            params.gamma,
            mu,
            params.mode,
            params.solver,
            params.lambda,
        )?;
        if !out.e_next.is_finite() || !out.candidate_w.is_finite() {
            return Err(Error::NonFiniteLayer { layer: params.layer });
        }
        if out.accepted {
            kept = Some((cand, out));
            break;
        }
        if best.as_ref().is_none_or(|(_, b)| out.ratio < b.ratio) {
            best = Some((cand, out));
        }
    }
    let accepted = kept.is_some();
    let (cand, out) = kept.or(best).expect("at least one candidate is drawn");
    let before = frobenius_norm(e_prev).as_f64();
    let after = frobenius_norm(&out.e_next).as_f64();
    let record = LayerRecord {
        layer: params.layer,
        kind: params.kind,
        rows: e_prev.rows(),
        residual_norm_before: before,
        residual_norm_after: after,
        contraction_ratio: out.residual_ratio.as_f64(),
        gate_value: out.ratio.as_f64(),
        gamma: params.gamma.as_f64(),
        mu: mu.as_f64(),
        threshold: (params.gamma + mu).as_f64(),
        retries_used: used,
        accepted,
        exhausted: !accepted,
        gated,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(FittedLayer {
        enhancement: cand.enhancement,
        w: out.candidate_w,
        e_next: out.e_next,
        record,
    })
}

fn check_data<T: Scalar>(x: &Matrix<T>, y: &Matrix<T>) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            op: "train",
            expected: format!("{} target rows", x.rows()),
            found: format!("{} rows", y.rows()),
        });
    }
    Ok(())
}

/// Runs the full constructive procedure under `config.supervisory_mode`.
pub fn train<T: Scalar>(
    config: &ModelConfig<T>,
    x: &Matrix<T>,
    y: &Matrix<T>,
) -> Result<(BroadModel<T>, TrainingTrace)> {
    check_data(x, y)?;
    let state = TrainerState::fit(config.clone(), x.clone(), y.clone())?;
    Ok(state.into_parts())
}

/// Unsupervised residual training; the configured gate is ignored.
pub fn train_brls<T: Scalar>(
    config: &ModelConfig<T>,
    x: &Matrix<T>,
    y: &Matrix<T>,
) -> Result<(BroadModel<T>, TrainingTrace)> {
    let mut cfg = config.clone();
    cfg.supervisory_mode = SupervisoryMode::Off;
    train(&cfg, x, y)
}

/// Supervised residual training; `config.supervisory_mode` must not be `Off`.
pub fn train_bscrls<T: Scalar>(
    config: &ModelConfig<T>,
    x: &Matrix<T>,
    y: &Matrix<T>,
) -> Result<(BroadModel<T>, TrainingTrace)> {
    if config.supervisory_mode == SupervisoryMode::Off {
        return Err(Error::InvalidConfig(
            "supervised training needs the contraction or operator_norm gate".into(),
        ));
    }
    train(config, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodegen::RandomStream;

    #[test]
    fn mu_values() {
        assert!((mu_schedule(0.9f64, 1) - 0.05).abs() < 1e-15);
        assert!((mu_schedule(0.9f64, 2) - 0.1 / 3.0).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for j in 1..2000 {
            let m = mu_schedule(0.5f64, j);
            assert!(m < prev && m <= 0.5 && m > 0.0);
            prev = m;
        }
        assert!(prev < 3e-4);
    }

    #[test]
    fn gamma_schedule_increases_toward_limit() {
        let s = GammaSchedule::Increasing {
            start: 0.8f64,
            limit: 0.99,
        };
        assert_eq!(s.at(1), 0.8);
        assert!(s.at(2) > s.at(1) && s.at(100) < 0.99);
        assert!(GammaSchedule::Constant(1.0f64).validate().is_err());
    }

    #[test]
    fn gate_arithmetic_contract() {
        // ‖e_prev‖ = 10, K fits 0.9 of the way back: e_next = 0.9 e_prev
        let e = Matrix::from_rows(&[[6.0f64], [8.0]]).unwrap();
        let k = Matrix::from_rows(&[[6.0], [8.0]]).unwrap();
        // W = (KᵀK+λ)⁻¹KᵀE = 100/(100+λ); pick λ so the fit leaves 9
        let lambda = 100.0 / 0.1 - 100.0;
        let out = supervisory_check(
            &k,
            &e,
            0.9,
            0.05,
            SupervisoryMode::Contraction,
            OutputSolver::Ridge,
            lambda,
        )
        .unwrap();
        assert!((out.ratio - 0.9).abs() < 1e-12);
        assert!((frobenius_norm(&out.e_next) - 9.0).abs() < 1e-12);
        assert!(out.accepted);
        let out = supervisory_check(
            &k,
            &e,
            0.8,
            0.05,
            SupervisoryMode::Contraction,
            OutputSolver::Ridge,
            lambda,
        )
        .unwrap();
        assert!(!out.accepted);
    }

    #[test]
    fn identity_design_interpolates() {
        let e = RandomStream::new(3).uniform::<f64>(6, 2, -1.0, 1.0);
        let out = supervisory_check(
            &Matrix::identity(6),
            &e,
            0.5,
            0.1,
            SupervisoryMode::Contraction,
            OutputSolver::PseudoInverse,
            1e-8,
        )
        .unwrap();
        assert!(out.accepted && out.ratio < 1e-14 && frobenius_norm(&out.e_next) < 1e-14);
    }

    #[test]
    fn single_column_ratio_matches_projection_oracle() {
        let mut rng = RandomStream::new(21);
        let k = rng.uniform::<f64>(20, 1, -1.0, 1.0);
        let e = rng.uniform::<f64>(20, 3, -1.0, 1.0);
        let out = supervisory_check(
            &k,
            &e,
            0.9,
            0.05,
            SupervisoryMode::Contraction,
            OutputSolver::Ridge,
            1e-12,
        )
        .unwrap();
        // Gram-Schmidt: remove the component along the unit vector of k
        let kn = (0..20).map(|i| k[(i, 0)] * k[(i, 0)]).sum::<f64>().sqrt();
        let u: Vec<f64> = (0..20).map(|i| k[(i, 0)] / kn).collect();
        let mut rest = 0.0;
        let mut total = 0.0;
        for c in 0..3 {
            let d: f64 = (0..20).map(|i| u[i] * e[(i, c)]).sum();
            for i in 0..20 {
                let r = e[(i, c)] - d * u[i];
                rest += r * r;
                total += e[(i, c)] * e[(i, c)];
            }
        }
        let oracle = (rest / total).sqrt();
        assert!((out.ratio - oracle).abs() < 1e-9, "{} vs {oracle}", out.ratio);
    }

    #[test]
    fn zero_residual_is_trivially_accepted() {
        let k = RandomStream::new(1).uniform::<f64>(5, 2, -1.0, 1.0);
        let out = supervisory_check(
            &k,
            &Matrix::zeros(5, 1),
            0.1,
            0.0,
            SupervisoryMode::OperatorNorm,
            OutputSolver::Ridge,
            1e-8,
        )
        .unwrap();
        assert!(out.accepted && out.ratio == 0.0 && out.candidate_w.is_zero());
        assert!(supervisory_check(
            &k,
            &Matrix::zeros(4, 1),
            0.1,
            0.0,
            SupervisoryMode::Off,
            OutputSolver::Ridge,
            1e-8
        )
        .is_err());
    }

    #[test]
    fn operator_norm_mode_rejects_tall_layers() {
        let mut rng = RandomStream::new(8);
        let k = rng.uniform::<f64>(10, 3, -1.0, 1.0);
        let e = rng.uniform::<f64>(10, 1, -1.0, 1.0);
        let out = supervisory_check(
            &k,
            &e,
            0.9,
            0.05,
            SupervisoryMode::OperatorNorm,
            OutputSolver::Ridge,
            1e-8,
        )
        .unwrap();
        assert!(!out.accepted && (out.ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn config_validation() {
        let mut c = ModelConfig::<f64>::default();
        assert!(c.validate().is_ok());
        c.max_retries = 0;
        assert!(c.validate().is_err());
        c.max_retries = 1;
        c.gamma = GammaSchedule::Constant(0.0);
        assert!(c.validate().is_err());
        c.gamma = GammaSchedule::Constant(0.5);
        c.lambda = 0.0;
        assert!(c.validate().is_err());
    }
}
