//! Central finite-difference checks of the analytic layer gradients.
//!
//! Each check draws a random small instance from `seed`, reduces the layer
//! output to a scalar with a random projection and compares every analytic
//! partial derivative (inputs and parameters) with
//! `(f(x + h) - f(x - h)) / 2h`. The returned value is the largest relative
//! error `|a - n| / max(|a| + |n|, 1e-6)` over all coordinates.

use ndarray::{Array, Array1, Array2, Array3, ArrayView2, Dimension};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    conv1d_backward, conv1d_forward, dense_backward, dense_forward, gru_backward, gru_forward,
    Activation, GruParams,
};
use super::loss::dice_loss;

pub const STEP: f64 = 1e-5;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-6)
}

fn random<D: Dimension, Sh: ndarray::ShapeBuilder<Dim = D>>(
    rng: &mut ChaCha8Rng,
    shape: Sh,
    scale: f64,
) -> Array<f64, D> {
    Array::from_shape_simple_fn(shape, || rng.gen_range(-scale..scale))
}

/// Compares `analytic` with central differences of `f` around `x`.
fn compare<D: Dimension>(
    x: &Array<f64, D>,
    analytic: &Array<f64, D>,
    mut f: impl FnMut(&Array<f64, D>) -> f64,
) -> f64 {
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.as_slice_memory_order().expect("standard layout")[i];
        probe.as_slice_memory_order_mut().unwrap()[i] = orig + STEP;
        let up = f(&probe);
        probe.as_slice_memory_order_mut().unwrap()[i] = orig - STEP;
        let down = f(&probe);
        probe.as_slice_memory_order_mut().unwrap()[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let a = analytic.as_slice_memory_order().expect("standard layout")[i];
        worst = worst.max(rel_err(a, numeric));
    }
    worst
}

fn project(out: ArrayView2<'_, f64>, r: &Array2<f64>) -> f64 {
    (&out * r).sum()
}

pub fn check_conv1d(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(3..12);
    let k = rng.gen_range(1..7);
    let cin = rng.gen_range(1..4);
    let cout = rng.gen_range(1..4);
    let x: Array2<f64> = random(&mut rng, (len, cin), 1.0);
    let w: Array3<f64> = random(&mut rng, (k, cin, cout), 1.0);
    let b: Array1<f64> = random(&mut rng, cout, 0.5);
    let r: Array2<f64> = random(&mut rng, (len, cout), 1.0);
    let f = |x: &Array2<f64>, w: &Array3<f64>, b: &Array1<f64>| {
        project(conv1d_forward(x.view(), w.view(), b.view()).unwrap().0.view(), &r)
    };
    let (_, cache) = conv1d_forward(x.view(), w.view(), b.view()).unwrap();
    let (dx, dw, db) = conv1d_backward(&cache, w.view(), r.view());
    let dw = dw.into_shape_with_order((k, cin, cout)).unwrap();
    compare(&x, &dx, |p| f(p, &w, &b))
        .max(compare(&w, &dw, |p| f(&x, p, &b)))
        .max(compare(&b, &db, |p| f(&x, &w, p)))
}

pub fn check_gru(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(2..9);
    let c = rng.gen_range(1..4);
    let h = rng.gen_range(1..5);
    let x: Array2<f64> = random(&mut rng, (len, c), 1.0);
    let wi: Array2<f64> = random(&mut rng, (c, 3 * h), 0.8);
    let wr: Array2<f64> = random(&mut rng, (h, 3 * h), 0.8);
    let b: Array1<f64> = random(&mut rng, 3 * h, 0.3);
    let h0: Array1<f64> = random(&mut rng, h, 0.5);
    let r: Array2<f64> = random(&mut rng, (len, h), 1.0);
    let f = |x: &Array2<f64>, wi: &Array2<f64>, wr: &Array2<f64>, b: &Array1<f64>, h0: &Array1<f64>| {
        let p = GruParams {
            input_weight: wi.view(),
            recurrent_weight: wr.view(),
            bias: b.view(),
        };
        project(gru_forward(x.view(), p, Some(h0.view())).unwrap().0.view(), &r)
    };
    let params = GruParams {
        input_weight: wi.view(),
        recurrent_weight: wr.view(),
        bias: b.view(),
    };
    let (_, cache) = gru_forward(x.view(), params, Some(h0.view())).unwrap();
    let g = gru_backward(&cache, params, r.view());
    compare(&x, &g.input, |p| f(p, &wi, &wr, &b, &h0))
        .max(compare(&wi, &g.input_weight, |p| f(&x, p, &wr, &b, &h0)))
        .max(compare(&wr, &g.recurrent_weight, |p| f(&x, &wi, p, &b, &h0)))
        .max(compare(&b, &g.bias, |p| f(&x, &wi, &wr, p, &h0)))
        .max(compare(&h0, &g.h0, |p| f(&x, &wi, &wr, &b, p)))
}

fn check_dense_with(seed: u64, activation: Activation) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(1..8);
    let cin = rng.gen_range(1..5);
    let cout = rng.gen_range(2..5);
    let x: Array2<f64> = random(&mut rng, (len, cin), 1.0);
    let w: Array2<f64> = random(&mut rng, (cin, cout), 1.0);
    let b: Array1<f64> = random(&mut rng, cout, 0.5);
    let r: Array2<f64> = random(&mut rng, (len, cout), 1.0);
    let f = |x: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>| {
        project(dense_forward(x.view(), w.view(), b.view(), activation).unwrap().0.view(), &r)
    };
    let (_, cache) = dense_forward(x.view(), w.view(), b.view(), activation).unwrap();
    let (dx, dw, db) = dense_backward(&cache, w.view(), activation, r.view());
    compare(&x, &dx, |p| f(p, &w, &b))
        .max(compare(&w, &dw, |p| f(&x, p, &b)))
        .max(compare(&b, &db, |p| f(&x, &w, p)))
}

/// Affine map with no activation.
pub fn check_dense(seed: u64) -> f64 {
    check_dense_with(seed, Activation::Identity)
}

pub fn check_leaky_relu(seed: u64) -> f64 {
    check_dense_with(seed, Activation::LeakyRelu(0.3))
}

pub fn check_softmax(seed: u64) -> f64 {
    check_dense_with(seed, Activation::Softmax)
}

/// Gradient of the dice loss with respect to the prediction. Odd seeds put
/// the prediction exactly on the target.
pub fn check_dice(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(2..12);
    let classes = rng.gen_range(2..5);
    let mut target = Array2::zeros((len, classes));
    for t in 0..len {
        target[[t, rng.gen_range(0..classes)]] = 1.0;
    }
    let mask: Vec<bool> = (0..len).map(|t| t == 0 || rng.gen_bool(0.8)).collect();
    let pred = if seed % 2 == 1 {
        target.clone()
    } else {
        let logits: Array2<f64> = random(&mut rng, (len, classes), 2.0);
        super::layers::softmax_rows(logits.view())
    };
    let (_, grad) = dice_loss(pred.view(), target.view(), &mask).unwrap();
    compare(&pred, &grad, |p| dice_loss(p.view(), target.view(), &mask).unwrap().0)
}
