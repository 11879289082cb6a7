//! Residual training checked against a plain nested-`Vec` reimplementation
//! that consumes the same parameter stream.

use bscrls::dataio::{self, SynthTarget};
use bscrls::{predict, train, GammaSchedule, Matrix, ModelConfig, RandomSpec, RandomStream, SupervisoryMode};

type Rows = Vec<Vec<f64>>;

fn draw(rng: &mut RandomStream, rows: usize, cols: usize) -> Rows {
    (0..rows)
        .map(|_| (0..cols).map(|_| -1.0 + 2.0 * rng.next_unit()).collect())
        .collect()
}

fn to_rows(m: &Matrix<f64>) -> Rows {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn mul(a: &Rows, b: &Rows) -> Rows {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|r| (0..cols).map(|j| (0..inner).map(|t| r[t] * b[t][j]).sum()).collect())
        .collect()
}

fn sigmoid_layer(x: &Rows, w: &Rows, bias: &[f64]) -> Rows {
    mul(x, w)
        .into_iter()
        .map(|r| {
            r.iter()
                .zip(bias)
                .map(|(v, b)| 1.0 / (1.0 + (-(v + b)).exp()))
                .collect()
        })
        .collect()
}

fn hcat(a: &Rows, b: &Rows) -> Rows {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().chain(y).copied().collect())
        .collect()
}

fn transpose(a: &Rows) -> Rows {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Gauss-Jordan with partial pivoting on `(KᵀK + λI) W = KᵀE`.
#[allow(clippy::needless_range_loop)]
fn ridge(k: &Rows, e: &Rows, lambda: f64) -> Rows {
    let kt = transpose(k);
    let mut a = mul(&kt, k);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let mut b = mul(&kt, e);
    let n = a.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    for c in 0..b[0].len() {
                        b[r][c] -= f * b[col][c];
                    }
                }
            }
        }
    }
    b.iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|v| v / a[i][i]).collect())
        .collect()
}

fn sub(a: &Rows, b: &Rows) -> Rows {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

fn norm(a: &Rows) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn plain_training_matches_reference() {
    let (n, k, q, m, dims, seed) = (4, 10, 20, 10, 5, 17);
    let ds = dataio::synth_regression::<f64>(3, 200, SynthTarget::BumpMix, dims).unwrap();
    let cfg = ModelConfig {
        n_feature_groups: n,
        nodes_per_group: k,
        n_layers: m,
        enhancement_per_layer: q,
        random: RandomSpec::new(seed),
        supervisory_mode: SupervisoryMode::Off,
        ..ModelConfig::default()
    };
    let (model, trace) = train(&cfg, &ds.x, &ds.y).unwrap();

    let x = to_rows(&ds.x);
    let y = to_rows(&ds.y);
    let mut rng = RandomStream::new(seed);
    let mut z: Rows = vec![Vec::new(); x.len()];
    for _ in 0..n {
        let w = draw(&mut rng, dims, k);
        let b = draw(&mut rng, 1, k).remove(0);
        z = hcat(&z, &sigmoid_layer(&x, &w, &b));
    }
    let mut e = y.clone();
    let mut norms = vec![norm(&e)];
    for j in 0..m {
        let w = draw(&mut rng, n * k, q);
        let b = draw(&mut rng, 1, q).remove(0);
        let h = sigmoid_layer(&z, &w, &b);
        let kj = if j == 0 { hcat(&z, &h) } else { h };
        let wj = ridge(&kj, &e, 1e-8);
        e = sub(&e, &mul(&kj, &wj));
        norms.push(norm(&e));
    }

    let logged = trace.residual_norms();
    assert_eq!(logged.len(), norms.len());
    for (j, (a, b)) in logged.iter().zip(&norms).enumerate() {
        assert!((a - b).abs() <= 1e-8 * norms[0], "layer {j}: {a} vs reference {b}");
    }
    let fitted = sub(&y, &e);
    let pred = to_rows(&predict(&model, &ds.x).unwrap());
    assert!(norm(&sub(&pred, &fitted)) <= 1e-8 * norm(&y));
    assert_eq!(model.rng_cursor, rng.cursor());
}

#[test]
fn gate_that_never_fires_changes_nothing() {
    let ds = dataio::synth_classification::<f64>(9, 240, 0.3, 4).unwrap();
    let base = ModelConfig {
        n_feature_groups: 3,
        nodes_per_group: 4,
        n_layers: 6,
        enhancement_per_layer: 8,
        gamma: GammaSchedule::Constant(0.9999),
        random: RandomSpec::new(5),
        ..ModelConfig::default()
    };
    let (gated, trace) = train(&base, &ds.x, &ds.y).unwrap();
    assert!(trace.records.iter().all(|r| r.accepted && r.retries_used == 0));
    let plain_cfg = ModelConfig {
        supervisory_mode: SupervisoryMode::Off,
        ..base
    };
    let (plain, _) = train(&plain_cfg, &ds.x, &ds.y).unwrap();
    assert_eq!(gated.stacked_weights(), plain.stacked_weights());
    assert_eq!(gated.rng_cursor, plain.rng_cursor);
}

#[test]
fn pseudo_inverse_solver_interpolates_wide_systems() {
    // 20 rows, 6·2 feature + 18 enhancement = 30 columns in the first layer
    let ds = dataio::synth_regression::<f64>(1, 20, SynthTarget::SineMix, 2).unwrap();
    let cfg = ModelConfig {
        n_feature_groups: 6,
        nodes_per_group: 2,
        n_layers: 1,
        enhancement_per_layer: 18,
        solver: bscrls::OutputSolver::PseudoInverse,
        supervisory_mode: SupervisoryMode::Off,
        random: RandomSpec::new(2),
        ..ModelConfig::default()
    };
    let (_, trace) = train(&cfg, &ds.x, &ds.y).unwrap();
    let rel = trace.final_residual().unwrap() / trace.records[0].residual_norm_before;
    assert!(rel < 1e-6, "relative residual {rel}");
}
