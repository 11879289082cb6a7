//! Single-file model archive.
//!
//! Layout: `u32` format version, then a sequence of fields, each a `u16` tag,
//! a `u64` payload length and the payload. All integers and floats are
//! little-endian; matrices are `rows: u64, cols: u64` followed by row-major
//! `f64` values. Unknown tags are skipped so newer writers stay readable.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{Normalization, NormalizeMode};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nodegen::{ActivationId, EnhancementGroup, FeatureGroup, RandomSpec};
use crate::scalar::Scalar;
use crate::trainer::{
    BroadModel, GammaSchedule, LayerKind, LayerRecord, ModelConfig, OutputSolver, ResidualLayer, SupervisoryMode,
    TrainingTrace,
};

pub const ARCHIVE_VERSION: u32 = 1;

const TAG_CONFIG: u16 = 1;
const TAG_SHAPE: u16 = 2;
const TAG_FEATURE_GROUP: u16 = 3;
const TAG_LAYER: u16 = 4;
const TAG_RNG: u16 = 5;
const TAG_NORMALIZATION: u16 = 6;
const TAG_TRACE: u16 = 7;
const TAG_LABELS: u16 = 8;
const TAG_END: u16 = 0xFFFF;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelArchive<T> {
    pub model: BroadModel<T>,
    pub trace: TrainingTrace,
    /// Input transform to apply before `predict`.
    pub normalization: Option<Normalization>,
    /// Class names in one-hot column order.
    pub label_names: Option<Vec<String>>,
}

pub fn save_model<T: Scalar>(model: &BroadModel<T>, trace: &TrainingTrace, path: impl AsRef<Path>) -> Result<()> {
    save_archive(
        &ModelArchive {
            model: model.clone(),
            trace: trace.clone(),
            normalization: None,
            label_names: None,
        },
        path,
    )
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<(BroadModel<T>, TrainingTrace)> {
    let a = load_archive(path)?;
    Ok((a.model, a.trace))
}

/// Writes to a sibling temporary file and renames it into place.
pub fn save_archive<T: Scalar>(archive: &ModelArchive<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(archive);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_archive<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelArchive<T>> {
    decode(&fs::read(path)?)
}

struct Buf(Vec<u8>);

impl Buf {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u64(&mut self, v: usize) {
        self.0.write_u64::<LE>(v as u64).unwrap();
    }
    fn f64(&mut self, v: f64) {
        self.0.write_f64::<LE>(v).unwrap();
    }
    fn matrix<T: Scalar>(&mut self, m: &Matrix<T>) {
        self.u64(m.rows());
        self.u64(m.cols());
        for v in m.as_slice() {
            self.f64(v.as_f64());
        }
    }
    fn floats(&mut self, v: &[f64]) {
        self.u64(v.len());
        v.iter().for_each(|&x| self.f64(x));
    }
}

fn field(out: &mut Vec<u8>, tag: u16, write: impl FnOnce(&mut Buf)) {
    let mut b = Buf(Vec::new());
    write(&mut b);
    out.write_u16::<LE>(tag).unwrap();
    out.write_u64::<LE>(b.0.len() as u64).unwrap();
    out.extend_from_slice(&b.0);
}

fn encode<T: Scalar>(a: &ModelArchive<T>) -> Vec<u8> {
    let m = &a.model;
    let c = &m.config;
    let mut out = Vec::new();
    out.write_u32::<LE>(ARCHIVE_VERSION).unwrap();
    field(&mut out, TAG_CONFIG, |b| {
        b.u64(c.n_feature_groups);
        b.u64(c.nodes_per_group);
        b.u64(c.n_layers);
        b.u64(c.enhancement_per_layer);
        match c.gamma {
            GammaSchedule::Constant(g) => {
                b.u8(0);
                b.f64(g.as_f64());
                b.f64(g.as_f64());
            }
            GammaSchedule::Increasing { start, limit } => {
                b.u8(1);
                b.f64(start.as_f64());
                b.f64(limit.as_f64());
            }
        }
        b.f64(c.lambda.as_f64());
        b.u8(match c.solver {
            OutputSolver::Ridge => 0,
            OutputSolver::PseudoInverse => 1,
        });
        b.u8(c.activation.code());
        b.0.write_u64::<LE>(c.random.seed).unwrap();
        b.f64(c.random.low);
        b.f64(c.random.high);
        b.u64(c.max_retries);
        b.u8(c.supervisory_mode.code());
        b.u8(c.gate_data_increments as u8);
    });
    field(&mut out, TAG_SHAPE, |b| {
        b.u64(m.input_dim);
        b.u64(m.output_dim);
    });
    for g in &m.feature_groups {
        field(&mut out, TAG_FEATURE_GROUP, |b| {
            b.u8(g.activation.code());
            b.matrix(&g.w_e);
            b.matrix(&g.beta_e);
        });
    }
    for l in &m.layers {
        field(&mut out, TAG_LAYER, |b| {
            b.u8(l.enhancement.activation.code());
            b.matrix(&l.enhancement.w_h);
            b.matrix(&l.enhancement.beta_h);
            b.u64(l.enhancement_input_groups);
            b.u64(l.feature_groups.start);
            b.u64(l.feature_groups.end);
            b.matrix(&l.w_out);
        });
    }
    field(&mut out, TAG_RNG, |b| b.0.write_u128::<LE>(m.rng_cursor).unwrap());
    if let Some(n) = &a.normalization {
        field(&mut out, TAG_NORMALIZATION, |b| {
            b.u8(n.mode.code());
            b.floats(&n.shift);
            b.floats(&n.factor);
            b.floats(&n.offset);
        });
    }
    if let Some(names) = &a.label_names {
        field(&mut out, TAG_LABELS, |b| {
            b.u64(names.len());
            for n in names {
                b.u64(n.len());
                b.0.extend_from_slice(n.as_bytes());
            }
        });
    }
    field(&mut out, TAG_TRACE, |b| {
        b.u64(a.trace.records.len());
        for r in &a.trace.records {
            b.u64(r.layer);
            b.u8(match r.kind {
                LayerKind::Initial => 0,
                LayerKind::Enhancement => 1,
                LayerKind::Feature => 2,
                LayerKind::Data => 3,
            });
            b.u64(r.rows);
            for v in [
                r.residual_norm_before,
                r.residual_norm_after,
                r.contraction_ratio,
                r.gate_value,
                r.gamma,
                r.mu,
                r.threshold,
                r.wall_time,
            ] {
                b.f64(v);
            }
            b.u64(r.retries_used);
            b.u8(r.accepted as u8 | (r.exhausted as u8) << 1 | (r.gated as u8) << 2);
        }
    });
    field(&mut out, TAG_END, |_| {});
    out
}

fn truncated(what: &str) -> Error {
    Error::Archive(format!("truncated while reading {what}"))
}

struct Payload<'a>(Cursor<&'a [u8]>, &'static str);

impl Payload<'_> {
    fn u8(&mut self) -> Result<u8> {
        self.0.read_u8().map_err(|_| truncated(self.1))
    }
    fn u64(&mut self) -> Result<usize> {
        let v = self.0.read_u64::<LE>().map_err(|_| truncated(self.1))?;
        usize::try_from(v).map_err(|_| Error::Archive(format!("{}: count {v} too large", self.1)))
    }
    fn raw_u64(&mut self) -> Result<u64> {
        self.0.read_u64::<LE>().map_err(|_| truncated(self.1))
    }
    fn f64(&mut self) -> Result<f64> {
        self.0.read_f64::<LE>().map_err(|_| truncated(self.1))
    }
    fn remaining(&self) -> usize {
        self.0.get_ref().len() - self.0.position() as usize
    }
    fn floats(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()?;
        if n.saturating_mul(8) > self.remaining() {
            return Err(truncated(self.1));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn matrix<T: Scalar>(&mut self) -> Result<Matrix<T>> {
        let (r, c) = (self.u64()?, self.u64()?);
        if r.saturating_mul(c).saturating_mul(8) > self.remaining() {
            return Err(truncated(self.1));
        }
        let data = (0..r * c).map(|_| self.f64().map(T::of)).collect::<Result<Vec<_>>>()?;
        Matrix::from_vec(r, c, data).map_err(|e| Error::Archive(format!("{}: {e}", self.1)))
    }
    fn string(&mut self) -> Result<String> {
        let n = self.u64()?;
        if n > self.remaining() {
            return Err(truncated(self.1));
        }
        let start = self.0.position() as usize;
        let bytes = &self.0.get_ref()[start..start + n];
        self.0.set_position((start + n) as u64);
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Archive(format!("{}: invalid utf-8", self.1)))
    }
    fn activation(&mut self) -> Result<ActivationId> {
        let c = self.u8()?;
        ActivationId::from_code(c).ok_or_else(|| Error::Archive(format!("{}: unknown activation {c}", self.1)))
    }
}

fn decode<T: Scalar>(bytes: &[u8]) -> Result<ModelArchive<T>> {
    let mut cur = Cursor::new(bytes);
    let version = cur.read_u32::<LE>().map_err(|_| truncated("version"))?;
    if version != ARCHIVE_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: ARCHIVE_VERSION,
        });
    }
    let mut config = None;
    let mut shape = None;
    let mut feature_groups = Vec::new();
    let mut layers = Vec::new();
    let mut rng_cursor = None;
    let mut normalization = None;
    let mut trace = None;
    let mut label_names = None;
    let mut ended = false;

    while !ended {
        let tag = cur.read_u16::<LE>().map_err(|_| truncated("field tag"))?;
        let len = cur.read_u64::<LE>().map_err(|_| truncated("field length"))? as usize;
        let start = cur.position() as usize;
        let end = start
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| truncated("field payload"))?;
        let body = &bytes[start..end];
        cur.set_position(end as u64);
        match tag {
            TAG_CONFIG => config = Some(read_config(Payload(Cursor::new(body), "config"))?),
            TAG_SHAPE => {
                let mut p = Payload(Cursor::new(body), "shape");
                shape = Some((p.u64()?, p.u64()?));
            }
            TAG_FEATURE_GROUP => {
                let mut p = Payload(Cursor::new(body), "feature group");
                let activation = p.activation()?;
                feature_groups.push(FeatureGroup {
                    activation,
                    w_e: p.matrix()?,
                    beta_e: p.matrix()?,
                });
            }
            TAG_LAYER => {
                let mut p = Payload(Cursor::new(body), "layer");
                let activation = p.activation()?;
                let w_h = p.matrix()?;
                let beta_h = p.matrix()?;
                let enhancement_input_groups = p.u64()?;
                let feature_range = p.u64()?..p.u64()?;
                layers.push(ResidualLayer {
                    enhancement: EnhancementGroup {
                        w_h,
                        beta_h,
                        activation,
                    },
                    enhancement_input_groups,
                    feature_groups: feature_range,
                    w_out: p.matrix()?,
                });
            }
            TAG_RNG => {
                let mut c = Cursor::new(body);
                rng_cursor = Some(c.read_u128::<LE>().map_err(|_| truncated("rng cursor"))?);
            }
            TAG_NORMALIZATION => {
                let mut p = Payload(Cursor::new(body), "normalization");
                let code = p.u8()?;
                let mode = NormalizeMode::from_code(code)
                    .ok_or_else(|| Error::Archive(format!("unknown normalization mode {code}")))?;
                normalization = Some(Normalization {
                    mode,
                    shift: p.floats()?,
                    factor: p.floats()?,
                    offset: p.floats()?,
                });
            }
            TAG_TRACE => trace = Some(read_trace(Payload(Cursor::new(body), "trace"))?),
            TAG_LABELS => {
                let mut p = Payload(Cursor::new(body), "labels");
                let n = p.u64()?;
                if n > body.len() {
                    return Err(truncated("labels"));
                }
                label_names = Some((0..n).map(|_| p.string()).collect::<Result<Vec<_>>>()?);
            }
            TAG_END => ended = true,
            _ => {}
        }
    }

    let missing = |what: &str| Error::Archive(format!("missing {what} field"));
    let (input_dim, output_dim) = shape.ok_or_else(|| missing("shape"))?;
    let model = BroadModel {
        config: config.ok_or_else(|| missing("config"))?,
        input_dim,
        output_dim,
        feature_groups,
        layers,
        rng_cursor: rng_cursor.ok_or_else(|| missing("rng"))?,
    };
    validate_structure(&model)?;
    Ok(ModelArchive {
        model,
        trace: trace.ok_or_else(|| missing("trace"))?,
        normalization,
        label_names,
    })
}

fn read_config<T: Scalar>(mut p: Payload) -> Result<ModelConfig<T>> {
    let n_feature_groups = p.u64()?;
    let nodes_per_group = p.u64()?;
    let n_layers = p.u64()?;
    let enhancement_per_layer = p.u64()?;
    let gamma_kind = p.u8()?;
    let (g0, g1) = (p.f64()?, p.f64()?);
    let gamma = match gamma_kind {
        0 => GammaSchedule::Constant(T::of(g0)),
        1 => GammaSchedule::Increasing {
            start: T::of(g0),
            limit: T::of(g1),
        },
        k => return Err(Error::Archive(format!("unknown gamma schedule {k}"))),
    };
    let lambda = T::of(p.f64()?);
    let solver = match p.u8()? {
        0 => OutputSolver::Ridge,
        1 => OutputSolver::PseudoInverse,
        k => return Err(Error::Archive(format!("unknown solver {k}"))),
    };
    let activation = p.activation()?;
    let random = RandomSpec {
        seed: p.raw_u64()?,
        low: p.f64()?,
        high: p.f64()?,
    };
    let max_retries = p.u64()?;
    let mode = p.u8()?;
    let supervisory_mode =
        SupervisoryMode::from_code(mode).ok_or_else(|| Error::Archive(format!("unknown supervisory mode {mode}")))?;
    let gate_data_increments = p.u8()? != 0;
    Ok(ModelConfig {
        n_feature_groups,
        nodes_per_group,
        n_layers,
        enhancement_per_layer,
        gamma,
        lambda,
        solver,
        activation,
        random,
        max_retries,
        supervisory_mode,
        gate_data_increments,
    })
}

fn read_trace(mut p: Payload) -> Result<TrainingTrace> {
    let n = p.u64()?;
    let mut records = Vec::with_capacity(n.min(p.remaining()));
    for _ in 0..n {
        let layer = p.u64()?;
        let kind = match p.u8()? {
            0 => LayerKind::Initial,
            1 => LayerKind::Enhancement,
            2 => LayerKind::Feature,
            3 => LayerKind::Data,
            k => return Err(Error::Archive(format!("unknown layer kind {k}"))),
        };
        let rows = p.u64()?;
        let mut f = [0.0; 8];
        for v in &mut f {
            *v = p.f64()?;
        }
        let retries_used = p.u64()?;
        let flags = p.u8()?;
        records.push(LayerRecord {
            layer,
            kind,
            rows,
            residual_norm_before: f[0],
            residual_norm_after: f[1],
            contraction_ratio: f[2],
            gate_value: f[3],
            gamma: f[4],
            mu: f[5],
            threshold: f[6],
            wall_time: f[7],
            retries_used,
            accepted: flags & 1 != 0,
            exhausted: flags & 2 != 0,
            gated: flags & 4 != 0,
        });
    }
    Ok(TrainingTrace { records })
}

/// Rejects archives whose pieces do not fit together, so a loaded model
/// never fails later inside `predict`.
fn validate_structure<T: Scalar>(m: &BroadModel<T>) -> Result<()> {
    let bad = |msg: String| Err(Error::Archive(msg));
    for (i, g) in m.feature_groups.iter().enumerate() {
        if g.w_e.rows() != m.input_dim || g.beta_e.shape() != (1, g.width()) {
            return bad(format!("feature group {i} has inconsistent shape"));
        }
    }
    for (j, l) in m.layers.iter().enumerate() {
        let groups = m.feature_groups.len();
        if l.enhancement_input_groups > groups
            || l.feature_groups.end > groups
            || l.feature_groups.start > l.feature_groups.end
        {
            return bad(format!("layer {} references missing feature groups", j + 1));
        }
        let fw = m.feature_width(l.enhancement_input_groups);
        let inputs =
            m.feature_width(l.feature_groups.end) - m.feature_width(l.feature_groups.start) + l.enhancement.width();
        if l.enhancement.input_width() != fw
            || l.enhancement.beta_h.shape() != (1, l.enhancement.width())
            || l.w_out.shape() != (inputs, m.output_dim)
        {
            return bad(format!("layer {} has inconsistent shape", j + 1));
        }
    }
    Ok(())
}
