//! Time-distributed layers with explicit forward caches and backward passes.
//!
//! All tensors are time-major: row `t` holds the features of timestep `t`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayView3, Axis};

use crate::error::{Error, Result};

fn shape_err(msg: impl Into<String>) -> Error {
    Error::ShapeMismatch(msg.into())
}

/// Same-padded stride-1 patches: row `t` is `[x[t - K/2], ..., x[t + K - 1 - K/2]]`
/// with out-of-range rows read as zero.
fn im2col(input: ArrayView2<'_, f64>, kernel: usize) -> Array2<f64> {
    let (len, cin) = input.dim();
    let offset = kernel / 2;
    let mut cols = Array2::zeros((len, kernel * cin));
    for t in 0..len {
        for k in 0..kernel {
            let src = t + k;
            if src >= offset && src - offset < len {
                cols.slice_mut(s![t, k * cin..(k + 1) * cin])
                    .assign(&input.row(src - offset));
            }
        }
    }
    cols
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    cols: Array2<f64>,
    out: Array2<f64>,
}

/// 1-D convolution over time followed by ReLU.
///
/// `weight` has shape `K x C_in x C_out`; `out[t, o] = relu(bias[o] +
/// sum_{k,i} w[k, i, o] * in[t + k - K/2, i])`.
pub fn conv1d_forward(
    input: ArrayView2<'_, f64>,
    weight: ArrayView3<'_, f64>,
    bias: ArrayView1<'_, f64>,
) -> Result<(Array2<f64>, ConvCache)> {
    let pre = conv1d_linear(input, weight, bias)?;
    let cols = im2col(input, weight.dim().0);
    let out = pre.mapv(|v| v.max(0.0));
    Ok((out.clone(), ConvCache { cols, out }))
}

/// The convolution without its activation.
pub fn conv1d_linear(
    input: ArrayView2<'_, f64>,
    weight: ArrayView3<'_, f64>,
    bias: ArrayView1<'_, f64>,
) -> Result<Array2<f64>> {
    let (k, cin, cout) = weight.dim();
    if k == 0 || input.ncols() != cin || bias.len() != cout {
        return Err(shape_err(format!(
            "conv1d: input {:?}, weight {:?}, bias {}",
            input.dim(),
            weight.dim(),
            bias.len()
        )));
    }
    let cols = im2col(input, k);
    let w2 = weight
        .to_shape((k * cin, cout))
        .map_err(|e| shape_err(e.to_string()))?;
    Ok(cols.dot(&w2) + &bias)
}

/// Returns `(d_input, d_weight, d_bias)`.
pub fn conv1d_backward(
    cache: &ConvCache,
    weight: ArrayView3<'_, f64>,
    d_out: ArrayView2<'_, f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    let (k, cin, cout) = weight.dim();
    let len = d_out.nrows();
    let mut d_pre = d_out.to_owned();
    d_pre.zip_mut_with(&cache.out, |d, &o| {
        if o <= 0.0 {
            *d = 0.0
        }
    });
    let w2 = weight.to_shape((k * cin, cout)).expect("contiguous weight");
    let d_weight = cache.cols.t().dot(&d_pre);
    let d_bias = d_pre.sum_axis(Axis(0));
    let d_cols = d_pre.dot(&w2.t());
    let offset = k / 2;
    let mut d_input = Array2::zeros((len, cin));
    for t in 0..len {
        for kk in 0..k {
            let src = t + kk;
            if src >= offset && src - offset < len {
                let mut row = d_input.row_mut(src - offset);
                row += &d_cols.slice(s![t, kk * cin..(kk + 1) * cin]);
            }
        }
    }
    (d_input, d_weight, d_bias)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gate activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct GruCache {
    input: Array2<f64>,
    h0: Array1<f64>,
    z: Array2<f64>,
    r: Array2<f64>,
    c: Array2<f64>,
    h: Array2<f64>,
    /// `r_t * h_{t-1}`
    rh: Array2<f64>,
}

/// GRU parameters. Gate blocks are ordered `[update | reset | candidate]`
/// along the last axis of `input_weight` (`C x 3H`), `recurrent_weight`
/// (`H x 3H`) and `bias` (`3H`).
#[derive(Debug, Clone, Copy)]
pub struct GruParams<'a> {
    pub input_weight: ArrayView2<'a, f64>,
    pub recurrent_weight: ArrayView2<'a, f64>,
    pub bias: ArrayView1<'a, f64>,
}

impl GruParams<'_> {
    fn hidden(&self) -> usize {
        self.recurrent_weight.nrows()
    }

    fn check(&self, input_channels: usize) -> Result<()> {
        let h = self.hidden();
        let ok = self.input_weight.dim() == (input_channels, 3 * h)
            && self.recurrent_weight.dim() == (h, 3 * h)
            && self.bias.len() == 3 * h;
        if ok {
            Ok(())
        } else {
            Err(shape_err(format!(
                "gru: input channels {input_channels}, W {:?}, U {:?}, b {}",
                self.input_weight.dim(),
                self.recurrent_weight.dim(),
                self.bias.len()
            )))
        }
    }
}

/// Sequence-to-sequence GRU; returns every hidden state (`L x H`).
///
/// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
/// `ĥ = tanh(W_c x + U_c (r ∘ h) + b_c)`, `h' = (1 - z) ∘ h + z ∘ ĥ`.
pub fn gru_forward(
    input: ArrayView2<'_, f64>,
    params: GruParams<'_>,
    h0: Option<ArrayView1<'_, f64>>,
) -> Result<(Array2<f64>, GruCache)> {
    params.check(input.ncols())?;
    let hd = params.hidden();
    let len = input.nrows();
    let h0 = match h0 {
        Some(h) if h.len() == hd => h.to_owned(),
        Some(h) => return Err(shape_err(format!("gru: h0 has {} units, expected {hd}", h.len()))),
        None => Array1::zeros(hd),
    };
    let xw = input.dot(&params.input_weight) + &params.bias;
    let u = params.recurrent_weight.as_standard_layout();
    let u = u.as_slice().expect("standard layout");
    let mut z = Array2::zeros((len, hd));
    let mut r = Array2::zeros((len, hd));
    let mut c = Array2::zeros((len, hd));
    let mut h = Array2::zeros((len, hd));
    let mut rh = Array2::zeros((len, hd));
    let mut prev = h0.to_vec();
    let mut acc = vec![0.0; 3 * hd];
    let mut rh_t = vec![0.0; hd];
    for t in 0..len {
        let xw_t = xw.row(t);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for j in 0..hd {
            let hj = prev[j];
            let row = &u[j * 3 * hd..j * 3 * hd + 2 * hd];
            for (a, &w) in acc[..2 * hd].iter_mut().zip(row) {
                *a += hj * w;
            }
        }
        for j in 0..hd {
            let zj = sigmoid(xw_t[j] + acc[j]);
            let rj = sigmoid(xw_t[hd + j] + acc[hd + j]);
            z[[t, j]] = zj;
            r[[t, j]] = rj;
            rh_t[j] = rj * prev[j];
        }
        for j in 0..hd {
            let rhj = rh_t[j];
            let row = &u[j * 3 * hd + 2 * hd..(j + 1) * 3 * hd];
            for (a, &w) in acc[2 * hd..].iter_mut().zip(row) {
                *a += rhj * w;
            }
        }
        for j in 0..hd {
            let cj = (xw_t[2 * hd + j] + acc[2 * hd + j]).tanh();
            let zj = z[[t, j]];
            let hj = (1.0 - zj) * prev[j] + zj * cj;
            c[[t, j]] = cj;
            h[[t, j]] = hj;
            rh[[t, j]] = rh_t[j];
            prev[j] = hj;
        }
    }
    let cache = GruCache {
        input: input.to_owned(),
        h0,
        z,
        r,
        c,
        h: h.clone(),
        rh,
    };
    Ok((h, cache))
}

/// Gradients of a GRU layer.
#[derive(Debug, Clone)]
pub struct GruGrads {
    pub input: Array2<f64>,
    pub input_weight: Array2<f64>,
    pub recurrent_weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub h0: Array1<f64>,
}

/// Backpropagation through time over the full sequence.
pub fn gru_backward(cache: &GruCache, params: GruParams<'_>, d_h: ArrayView2<'_, f64>) -> GruGrads {
    let hd = params.hidden();
    let len = d_h.nrows();
    let u = params.recurrent_weight.as_standard_layout();
    let u = u.as_slice().expect("standard layout");
    // pre-activation gradients [dz | dr | dc]
    let mut d_gates = Array2::zeros((len, 3 * hd));
    let mut carry = vec![0.0; hd];
    let mut d_prev = vec![0.0; hd];
    let mut d_cand = vec![0.0; hd];
    for t in (0..len).rev() {
        let prev_h = |j: usize| if t == 0 { cache.h0[j] } else { cache.h[[t - 1, j]] };
        for j in 0..hd {
            let dh = d_h[[t, j]] + carry[j];
            let zj = cache.z[[t, j]];
            let cj = cache.c[[t, j]];
            let dc = dh * zj;
            let dz = dh * (cj - prev_h(j));
            d_prev[j] = dh * (1.0 - zj);
            d_cand[j] = dc * (1.0 - cj * cj);
            d_gates[[t, j]] = dz * zj * (1.0 - zj);
            d_gates[[t, 2 * hd + j]] = d_cand[j];
        }
        // d(r ∘ h_prev) = U_c · d_cand
        for j in 0..hd {
            let row = &u[j * 3 * hd + 2 * hd..(j + 1) * 3 * hd];
            let drh: f64 = row.iter().zip(&d_cand).map(|(w, d)| w * d).sum();
            let rj = cache.r[[t, j]];
            d_prev[j] += drh * rj;
            let dr = drh * prev_h(j);
            d_gates[[t, hd + j]] = dr * rj * (1.0 - rj);
        }
        let dzr = d_gates.slice(s![t, ..2 * hd]);
        for j in 0..hd {
            let row = &u[j * 3 * hd..j * 3 * hd + 2 * hd];
            let s: f64 = row.iter().zip(dzr.iter()).map(|(w, d)| w * d).sum();
            carry[j] = d_prev[j] + s;
        }
    }
    let mut h_prev = Array2::zeros((len, hd));
    if len > 0 {
        h_prev.row_mut(0).assign(&cache.h0);
        h_prev
            .slice_mut(s![1.., ..])
            .assign(&cache.h.slice(s![..len - 1, ..]));
    }
    let mut d_u = Array2::zeros((hd, 3 * hd));
    d_u.slice_mut(s![.., ..2 * hd])
        .assign(&h_prev.t().dot(&d_gates.slice(s![.., ..2 * hd])));
    d_u.slice_mut(s![.., 2 * hd..])
        .assign(&cache.rh.t().dot(&d_gates.slice(s![.., 2 * hd..])));
    GruGrads {
        input: d_gates.dot(&params.input_weight.t()),
        input_weight: cache.input.t().dot(&d_gates),
        recurrent_weight: d_u,
        bias: d_gates.sum_axis(Axis(0)),
        h0: Array1::from(carry),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu(f64),
    Softmax,
    Identity,
}

pub fn leaky_relu(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Backward through a row-wise softmax given its output.
pub fn softmax_backward(probs: ArrayView2<'_, f64>, d_probs: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros(probs.raw_dim());
    for ((p, dp), mut o) in probs.rows().into_iter().zip(d_probs.rows()).zip(out.rows_mut()) {
        let dot: f64 = p.iter().zip(dp.iter()).map(|(a, b)| a * b).sum();
        for ((o, &pi), &dpi) in o.iter_mut().zip(p.iter()).zip(dp.iter()) {
            *o = pi * (dpi - dot);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Array2<f64>,
    pre: Array2<f64>,
    out: Array2<f64>,
}

/// Time-distributed affine map `x W + b` followed by `activation`.
pub fn dense_forward(
    input: ArrayView2<'_, f64>,
    weight: ArrayView2<'_, f64>,
    bias: ArrayView1<'_, f64>,
    activation: Activation,
) -> Result<(Array2<f64>, DenseCache)> {
    if input.ncols() != weight.nrows() || weight.ncols() != bias.len() {
        return Err(shape_err(format!(
            "dense: input {:?}, weight {:?}, bias {}",
            input.dim(),
            weight.dim(),
            bias.len()
        )));
    }
    let pre = input.dot(&weight) + &bias;
    let out = match activation {
        Activation::LeakyRelu(alpha) => pre.mapv(|v| leaky_relu(v, alpha)),
        Activation::Softmax => softmax_rows(pre.view()),
        Activation::Identity => pre.clone(),
    };
    Ok((
        out.clone(),
        DenseCache {
            input: input.to_owned(),
            pre,
            out,
        },
    ))
}

/// Returns `(d_input, d_weight, d_bias)`.
pub fn dense_backward(
    cache: &DenseCache,
    weight: ArrayView2<'_, f64>,
    activation: Activation,
    d_out: ArrayView2<'_, f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    let d_pre = match activation {
        Activation::LeakyRelu(alpha) => {
            let mut d = d_out.to_owned();
            d.zip_mut_with(&cache.pre, |d, &p| {
                if p < 0.0 {
                    *d *= alpha
                }
            });
            d
        }
        Activation::Softmax => softmax_backward(cache.out.view(), d_out),
        Activation::Identity => d_out.to_owned(),
    };
    (
        d_pre.dot(&weight.t()),
        cache.input.t().dot(&d_pre),
        d_pre.sum_axis(Axis(0)),
    )
}
