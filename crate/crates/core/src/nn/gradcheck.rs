//! Central finite-difference checks for every layer primitive.
//!
//! Each check contracts the layer output with a fixed random tensor `r`,
//! `L = sum(r * out)`, and compares the analytic gradient of `L` against
//! `(L(x + h) - L(x - h)) / 2h` coordinate by coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::*;

pub const STEP: f64 = 1e-6;
/// Gradient magnitudes below this are compared on an absolute scale.
pub const MAGNITUDE_FLOOR: f64 = 1e-4;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

pub fn max_rel_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shapes differ");
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| rel_error(a, n))
        .fold(0.0, f64::max)
}

/// Central-difference gradient of a scalar function at `x`.
pub fn numeric_grad(x: &Tensor, step: f64, mut f: impl FnMut(&Tensor) -> f64) -> Tensor {
    let mut probe = x.clone();
    let mut out = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let up = f(&probe);
        probe.data_mut()[i] = orig - step;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (up - down) / (2.0 * step);
    }
    out
}

fn contract(r: &Tensor, out: &Tensor) -> f64 {
    r.data().iter().zip(out.data()).map(|(a, b)| a * b).sum()
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape product matches")
}

/// Uniform values whose magnitude is at least `gap`, away from relu's kink.
fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize], gap: f64) -> Tensor {
    let mut t = uniform(rng, shape, 1.0);
    for v in t.data_mut() {
        *v = v.signum() * (gap + v.abs());
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerCheck {
    pub layer: String,
    pub max_rel_error: f64,
}

fn check(name: &str, errs: &[f64]) -> LayerCheck {
    LayerCheck {
        layer: name.to_string(),
        max_rel_error: errs.iter().copied().fold(0.0, f64::max),
    }
}

pub fn check_conv(rng: &mut ChaCha8Rng) -> Result<LayerCheck, NnError> {
    let x = uniform(rng, &[3, 7], 1.0);
    let f = uniform(rng, &[4, 3, 3], 1.0);
    let pad = 2;
    let r = uniform(rng, &[4, conv_output_len(7, 3, pad)], 1.0);
    let (gx, gf) = conv1d_backward(&x, &f, pad, &r)?;
    let nx = numeric_grad(&x, STEP, |x| contract(&r, &conv1d_wide(x, &f, pad).unwrap()));
    let nf = numeric_grad(&f, STEP, |f| contract(&r, &conv1d_wide(&x, f, pad).unwrap()));
    Ok(check("conv1d", &[max_rel_error(&gx, &nx), max_rel_error(&gf, &nf)]))
}

pub fn check_kmax(rng: &mut ChaCha8Rng) -> Result<LayerCheck, NnError> {
    // continuous draws: ties have probability zero
    let x = uniform(rng, &[4, 9], 1.0);
    let k = 3;
    let r = uniform(rng, &[4, k], 1.0);
    let (_, sel) = kmax_pool(&x, k)?;
    let g = kmax_backward(&sel, &r, 9)?;
    let n = numeric_grad(&x, STEP, |x| contract(&r, &kmax_pool(x, k).unwrap().0));
    Ok(check("kmax_pool", &[max_rel_error(&g, &n)]))
}

pub fn check_fold(rng: &mut ChaCha8Rng) -> Result<LayerCheck, NnError> {
    let x = uniform(rng, &[6, 5], 1.0);
    let r = uniform(rng, &[3, 5], 1.0);
    let g = fold_backward(&r)?;
    let n = numeric_grad(&x, STEP, |x| contract(&r, &fold(x).unwrap()));
    Ok(check("fold", &[max_rel_error(&g, &n)]))
}

pub fn check_activation(rng: &mut ChaCha8Rng, kind: Activation) -> Result<LayerCheck, NnError> {
    let x = away_from_zero(rng, &[3, 6], 0.05);
    let r = uniform(rng, &[3, 6], 1.0);
    let g = kind.backward(&x, &r);
    let n = numeric_grad(&x, STEP, |x| contract(&r, &kind.forward(x)));
    let name = match kind {
        Activation::Tanh => "activation_tanh",
        Activation::Relu => "activation_relu",
    };
    Ok(check(name, &[max_rel_error(&g, &n)]))
}

pub fn check_dense(rng: &mut ChaCha8Rng) -> Result<LayerCheck, NnError> {
    let x = uniform(rng, &[5], 1.0);
    let w = uniform(rng, &[3, 5], 1.0);
    let b = uniform(rng, &[3], 1.0);
    let r = uniform(rng, &[3], 1.0);
    let g = dense_backward(&x, &w, &b, &r)?;
    let nx = numeric_grad(&x, STEP, |x| contract(&r, &dense(x, &w, &b).unwrap()));
    let nw = numeric_grad(&w, STEP, |w| contract(&r, &dense(&x, w, &b).unwrap()));
    let nb = numeric_grad(&b, STEP, |b| contract(&r, &dense(&x, &w, b).unwrap()));
    Ok(check(
        "dense",
        &[
            max_rel_error(&g.input, &nx),
            max_rel_error(&g.weights, &nw),
            max_rel_error(&g.bias, &nb),
        ],
    ))
}

pub fn check_embedding(rng: &mut ChaCha8Rng) -> Result<LayerCheck, NnError> {
    let table = uniform(rng, &[6, 4], 1.0);
    let ids = [2, 0, 2, 5, 2];
    let r = uniform(rng, &[4, ids.len()], 1.0);
    let rows = embedding_backward(&ids, &r)?;
    let mut g = Tensor::zeros(&[6, 4]);
    scatter_rows(&mut g, &rows, 1.0);
    let n = numeric_grad(&table, STEP, |t| contract(&r, &embedding_lookup(&ids, t).unwrap()));
    Ok(check("embedding", &[max_rel_error(&g, &n)]))
}

pub fn check_rnn(rng: &mut ChaCha8Rng) -> Result<LayerCheck, NnError> {
    let (d_in, h, steps) = (3, 4, 5);
    let x = uniform(rng, &[d_in, steps], 1.0);
    let wx = uniform(rng, &[h, d_in], 0.8);
    let wh = uniform(rng, &[h, h], 0.8);
    let b = uniform(rng, &[h], 0.5);
    let r = uniform(rng, &[h, steps], 1.0);
    let run = |x: &Tensor, wx: &Tensor, wh: &Tensor, b: &Tensor| {
        let w = RnnWeights {
            w_xh: wx,
            w_hh: wh,
            bias: b,
            activation: Activation::Tanh,
        };
        contract(&r, &rnn_forward(x, &w).unwrap().hidden)
    };
    let w = RnnWeights {
        w_xh: &wx,
        w_hh: &wh,
        bias: &b,
        activation: Activation::Tanh,
    };
    let state = rnn_forward(&x, &w)?;
    let g = rnn_backward(&x, &w, &state, &r)?;
    let nx = numeric_grad(&x, STEP, |x| run(x, &wx, &wh, &b));
    let nwx = numeric_grad(&wx, STEP, |wx| run(&x, wx, &wh, &b));
    let nwh = numeric_grad(&wh, STEP, |wh| run(&x, &wx, wh, &b));
    let nb = numeric_grad(&b, STEP, |b| run(&x, &wx, &wh, b));
    Ok(check(
        "rnn",
        &[
            max_rel_error(&g.input, &nx),
            max_rel_error(&g.w_xh, &nwx),
            max_rel_error(&g.w_hh, &nwh),
            max_rel_error(&g.bias, &nb),
        ],
    ))
}

/// Run every layer check once from `seed`.
pub fn layer_checks(seed: u64) -> Result<Vec<LayerCheck>, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        check_conv(&mut rng)?,
        check_kmax(&mut rng)?,
        check_fold(&mut rng)?,
        check_activation(&mut rng, Activation::Relu)?,
        check_activation(&mut rng, Activation::Tanh)?,
        check_dense(&mut rng)?,
        check_embedding(&mut rng)?,
        check_rnn(&mut rng)?,
    ])
}
