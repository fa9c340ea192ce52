//! Segment cost functions.
//!
//! A [`SegmentCostModel`] is a configuration; [`SegmentCostModel::fit`]
//! precomputes whatever a signal needs (prefix sums, ranks, a Gram matrix) and
//! returns a [`FittedCost`] answering `cost(a, b)` for half-open segments.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// Least absolute deviation from the per-channel median.
    L1,
    /// Least squared deviation from the per-channel mean.
    L2,
    /// Gaussian log-likelihood with a segment-specific covariance.
    Normal,
    /// Residuals of a per-segment linear regression of responses on covariates.
    Linear,
    /// Kernelized mean change under a Gaussian kernel.
    Rbf,
    /// Mahalanobis-type cost on rank-transformed channels.
    Rank,
    /// Residuals of a per-channel autoregressive fit.
    Ar,
}

impl CostKind {
    pub const ALL: [CostKind; 7] = [
        CostKind::Ar,
        CostKind::L1,
        CostKind::L2,
        CostKind::Linear,
        CostKind::Normal,
        CostKind::Rank,
        CostKind::Rbf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::L1 => "l1",
            CostKind::L2 => "l2",
            CostKind::Normal => "normal",
            CostKind::Linear => "linear",
            CostKind::Rbf => "rbf",
            CostKind::Rank => "rank",
            CostKind::Ar => "ar",
        }
    }

    /// Human-readable name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            CostKind::L1 => "Least Absolute Deviation",
            CostKind::L2 => "Least Squared Deviation",
            CostKind::Normal => "Gaussian Process Change",
            CostKind::Linear => "Linear Model Change",
            CostKind::Rbf => "Kernelized Mean Change",
            CostKind::Rank => "Rank-based Cost Function",
            CostKind::Ar => "Autoregressive Model",
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CostKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown cost `{s}`")))
    }
}

/// Cost family plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentCostModel {
    pub kind: CostKind,
    /// Autoregressive order.
    #[serde(default = "default_ar_order")]
    pub ar_order: usize,
    /// Gaussian kernel `exp(-gamma * |x - y|^2)`; `None` selects the median heuristic.
    #[serde(default)]
    pub rbf_gamma: Option<f64>,
    /// Ridge added to covariance and Gram matrices before factorization.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Covariate channels for [`CostKind::Linear`]; the rest are responses.
    /// `None` uses the first half of the channels.
    #[serde(default)]
    pub covariates: Option<Vec<usize>>,
}

fn default_ar_order() -> usize {
    4
}

fn default_epsilon() -> f64 {
    1e-6
}

/// Signals up to this length get a precomputed Gram matrix for the RBF cost.
const GRAM_LIMIT: usize = 4096;
const MEDIAN_HEURISTIC_PAIRS: usize = 1000;

impl SegmentCostModel {
    pub fn new(kind: CostKind) -> Self {
        Self {
            kind,
            ar_order: default_ar_order(),
            rbf_gamma: None,
            epsilon: default_epsilon(),
            covariates: None,
        }
    }

    fn covariate_channels(&self, n: usize) -> Vec<usize> {
        self.covariates.clone().unwrap_or_else(|| (0..n / 2).collect())
    }

    /// Smallest admissible segment for a signal with `n` channels.
    pub fn min_size(&self, n: usize) -> usize {
        match self.kind {
            CostKind::L1 | CostKind::L2 => 1,
            CostKind::Normal | CostKind::Rbf | CostKind::Rank => 2,
            CostKind::Linear => self.covariate_channels(n).len() + 2,
            CostKind::Ar => self.ar_order + 2,
        }
    }

    pub fn fit<'a>(&self, signal: ArrayView2<'a, f64>) -> Result<FittedCost<'a>> {
        let (len, n) = signal.dim();
        let inner = match self.kind {
            CostKind::L1 => Inner::L1,
            CostKind::L2 => Inner::L2(Prefix::new(len, 2 * n, |t, out| {
                for i in 0..n {
                    let x = signal[[t, i]];
                    out[i] = x;
                    out[n + i] = x * x;
                }
            })),
            CostKind::Normal => {
                let dim = n + n * (n + 1) / 2;
                Inner::Normal(Prefix::new(len, dim, |t, out| {
                    let row = signal.row(t);
                    for i in 0..n {
                        out[i] = row[i];
                    }
                    let mut k = n;
                    for i in 0..n {
                        for j in i..n {
                            out[k] = row[i] * row[j];
                            k += 1;
                        }
                    }
                }))
            }
            CostKind::Linear => {
                let cov = self.covariate_channels(n);
                if cov.iter().any(|&c| c >= n) || cov.len() >= n {
                    return Err(Error::InvalidConfig(format!(
                        "covariate channels {cov:?} invalid for {n} channels"
                    )));
                }
                let resp: Vec<usize> = (0..n).filter(|c| !cov.contains(c)).collect();
                // z = [1, covariates..., responses...]
                let order: Vec<Option<usize>> = std::iter::once(None)
                    .chain(cov.iter().map(|&c| Some(c)))
                    .chain(resp.iter().map(|&c| Some(c)))
                    .collect();
                let d = order.len();
                Inner::Linear {
                    num_covariates: cov.len() + 1,
                    dim: d,
                    prefix: Prefix::new(len, d * (d + 1) / 2, |t, out| {
                        let z = |k: usize| order[k].map_or(1.0, |c| signal[[t, c]]);
                        let mut idx = 0;
                        for i in 0..d {
                            for j in i..d {
                                out[idx] = z(i) * z(j);
                                idx += 1;
                            }
                        }
                    }),
                }
            }
            CostKind::Ar => {
                let p = self.ar_order;
                // v_t = [1, x_t, x_{t-1}, ..., x_{t-p}] for t >= p; rows before p are zero.
                let d = p + 2;
                let tri = d * (d + 1) / 2;
                Inner::Ar {
                    order: p,
                    prefix: Prefix::new(len, n * tri, |t, out| {
                        if t < p {
                            out.iter_mut().for_each(|v| *v = 0.0);
                            return;
                        }
                        for c in 0..n {
                            let v = |k: usize| if k == 0 { 1.0 } else { signal[[t + 1 - k, c]] };
                            let base = c * tri;
                            let mut idx = 0;
                            for i in 0..d {
                                for j in i..d {
                                    out[base + idx] = v(i) * v(j);
                                    idx += 1;
                                }
                            }
                        }
                    }),
                }
            }
            CostKind::Rank => {
                let ranks = centered_ranks(signal);
                let denom = (len.max(2) - 1) as f64;
                let mut cov = DMatrix::<f64>::zeros(n, n);
                for row in ranks.rows() {
                    for i in 0..n {
                        for j in 0..n {
                            cov[(i, j)] += row[i] * row[j] / denom;
                        }
                    }
                }
                for i in 0..n {
                    cov[(i, i)] += self.epsilon;
                }
                let inv_cov = cov
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidConfig("rank covariance not invertible".into()))?;
                Inner::Rank {
                    inv_cov,
                    prefix: Prefix::new(len, n, |t, out| {
                        for i in 0..n {
                            out[i] = ranks[[t, i]];
                        }
                    }),
                }
            }
            CostKind::Rbf => {
                let gamma = match self.rbf_gamma {
                    Some(g) if g > 0.0 => g,
                    Some(g) => {
                        return Err(Error::InvalidConfig(format!("rbf gamma must be positive, got {g}")))
                    }
                    None => median_heuristic_gamma(signal),
                };
                let gram = (len <= GRAM_LIMIT).then(|| gram_prefix(signal, gamma));
                Inner::Rbf { gamma, gram }
            }
        };
        Ok(FittedCost {
            signal,
            epsilon: self.epsilon,
            min_size: self.min_size(n),
            inner,
        })
    }
}

/// Cumulative sums of a per-timestep feature vector, stored row-major with
/// `len + 1` rows so that `sum(a, b) = row(b) - row(a)`.
#[derive(Debug, Clone)]
struct Prefix {
    dim: usize,
    data: Vec<f64>,
}

impl Prefix {
    fn new(len: usize, dim: usize, mut feature: impl FnMut(usize, &mut [f64])) -> Self {
        let mut data = vec![0.0; (len + 1) * dim];
        let mut row = vec![0.0; dim];
        for t in 0..len {
            feature(t, &mut row);
            let (prev, next) = data.split_at_mut((t + 1) * dim);
            let prev = &prev[t * dim..];
            for k in 0..dim {
                next[k] = prev[k] + row[k];
            }
        }
        Self { dim, data }
    }

    fn sum(&self, a: usize, b: usize, k: usize) -> f64 {
        self.data[b * self.dim + k] - self.data[a * self.dim + k]
    }
}

#[derive(Debug, Clone)]
enum Inner {
    L1,
    L2(Prefix),
    Normal(Prefix),
    Linear {
        num_covariates: usize,
        dim: usize,
        prefix: Prefix,
    },
    Ar {
        order: usize,
        prefix: Prefix,
    },
    Rank {
        inv_cov: DMatrix<f64>,
        prefix: Prefix,
    },
    Rbf {
        gamma: f64,
        gram: Option<Vec<f64>>,
    },
}

/// A cost model bound to one signal.
#[derive(Debug, Clone)]
pub struct FittedCost<'a> {
    signal: ArrayView2<'a, f64>,
    epsilon: f64,
    min_size: usize,
    inner: Inner,
}

impl FittedCost<'_> {
    pub fn min_size(&self) -> usize {
        self.min_size
    }

    pub fn len(&self) -> usize {
        self.signal.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.nrows() == 0
    }

    /// Cost of the half-open segment `[a, b)`.
    pub fn cost(&self, a: usize, b: usize) -> Result<f64> {
        if a >= b || b > self.len() {
            return Err(Error::ShapeMismatch(format!(
                "segment [{a}, {b}) invalid for signal of length {}",
                self.len()
            )));
        }
        if b - a < self.min_size {
            return Err(Error::SegmentTooShort {
                start: a,
                end: b,
                min_size: self.min_size,
            });
        }
        Ok(self.cost_unchecked(a, b))
    }

    pub(crate) fn cost_unchecked(&self, a: usize, b: usize) -> f64 {
        let n = self.signal.ncols();
        let m = (b - a) as f64;
        match &self.inner {
            Inner::L1 => {
                let mut total = 0.0;
                let mut buf = Vec::with_capacity(b - a);
                for i in 0..n {
                    buf.clear();
                    buf.extend(self.signal.slice(ndarray::s![a..b, i]).iter().copied());
                    let med = median(&mut buf);
                    total += buf.iter().map(|x| (x - med).abs()).sum::<f64>();
                }
                total
            }
            Inner::L2(prefix) => (0..n)
                .map(|i| {
                    let s1 = prefix.sum(a, b, i);
                    let s2 = prefix.sum(a, b, n + i);
                    (s2 - s1 * s1 / m).max(0.0)
                })
                .sum(),
            Inner::Normal(prefix) => {
                let mut cov = DMatrix::<f64>::zeros(n, n);
                let mean: Vec<f64> = (0..n).map(|i| prefix.sum(a, b, i) / m).collect();
                let mut k = n;
                for i in 0..n {
                    for j in i..n {
                        let c = prefix.sum(a, b, k) / m - mean[i] * mean[j];
                        cov[(i, j)] = c;
                        cov[(j, i)] = c;
                        k += 1;
                    }
                }
                for i in 0..n {
                    cov[(i, i)] += self.epsilon;
                }
                m * log_det(cov)
            }
            Inner::Linear {
                num_covariates,
                dim,
                prefix,
            } => {
                let g = unpack_symmetric(*dim, |k| prefix.sum(a, b, k));
                regression_rss(&g, *num_covariates, self.epsilon)
            }
            Inner::Ar { order, prefix } => {
                let d = order + 2;
                let tri = d * (d + 1) / 2;
                // Regression rows are t in [a + p, b).
                let lo = a + order;
                (0..n)
                    .map(|c| {
                        let g = unpack_symmetric(d, |k| prefix.sum(lo, b, c * tri + k));
                        // reorder to [1, lags..., target] so the response is last
                        let perm: Vec<usize> =
                            std::iter::once(0).chain(2..d).chain(std::iter::once(1)).collect();
                        let g = DMatrix::from_fn(d, d, |i, j| g[(perm[i], perm[j])]);
                        regression_rss(&g, d - 1, self.epsilon)
                    })
                    .sum()
            }
            Inner::Rank { inv_cov, prefix } => {
                let mean = DVector::from_fn(n, |i, _| prefix.sum(a, b, i) / m);
                -m * (mean.transpose() * inv_cov * &mean)[(0, 0)]
            }
            Inner::Rbf { gamma, gram } => {
                let block = match gram {
                    Some(p) => {
                        let w = self.len() + 1;
                        p[b * w + b] - p[a * w + b] - p[b * w + a] + p[a * w + a]
                    }
                    None => {
                        let mut s = 0.0;
                        for t in a..b {
                            for u in a..b {
                                s += rbf(self.signal, t, u, *gamma);
                            }
                        }
                        s
                    }
                };
                (m - block / m).max(0.0)
            }
        }
    }
}

/// Median of `values` (mean of the two central values for even counts).
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

fn log_det(m: DMatrix<f64>) -> f64 {
    match m.clone().cholesky() {
        Some(ch) => 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
        None => m.lu().determinant().abs().ln(),
    }
}

fn unpack_symmetric(d: usize, mut packed: impl FnMut(usize) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            let v = packed(k);
            g[(i, j)] = v;
            g[(j, i)] = v;
            k += 1;
        }
    }
    g
}

/// Residual sum of squares of regressing the trailing block of `g` (a Gram
/// matrix of `[regressors, responses]`) on its leading `p` regressors.
fn regression_rss(g: &DMatrix<f64>, p: usize, epsilon: f64) -> f64 {
    let d = g.nrows();
    let mut xx = g.view((0, 0), (p, p)).into_owned();
    for i in 0..p {
        xx[(i, i)] += epsilon;
    }
    let xy = g.view((0, p), (p, d - p)).into_owned();
    let yy_trace: f64 = (p..d).map(|i| g[(i, i)]).sum();
    let explained = match xx.clone().cholesky() {
        Some(ch) => {
            let beta = ch.solve(&xy);
            (xy.transpose() * beta).trace()
        }
        None => match xx.lu().solve(&xy) {
            Some(beta) => (xy.transpose() * beta).trace(),
            None => 0.0,
        },
    };
    (yy_trace - explained).max(0.0)
}

/// Per-channel average ranks (1-based) centered on their mean `(len + 1) / 2`.
fn centered_ranks(signal: ArrayView2<'_, f64>) -> Array2<f64> {
    let (len, n) = signal.dim();
    let mut ranks = Array2::zeros((len, n));
    let center = (len as f64 + 1.0) / 2.0;
    let mut idx: Vec<usize> = Vec::with_capacity(len);
    for c in 0..n {
        idx.clear();
        idx.extend(0..len);
        idx.sort_by(|&x, &y| signal[[x, c]].total_cmp(&signal[[y, c]]));
        let mut start = 0;
        while start < len {
            let mut end = start + 1;
            while end < len && signal[[idx[end], c]] == signal[[idx[start], c]] {
                end += 1;
            }
            let avg = (start + 1 + end) as f64 / 2.0;
            for &i in &idx[start..end] {
                ranks[[i, c]] = avg - center;
            }
            start = end;
        }
    }
    ranks
}

fn sq_dist(signal: ArrayView2<'_, f64>, t: usize, u: usize) -> f64 {
    signal
        .row(t)
        .iter()
        .zip(signal.row(u).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn rbf(signal: ArrayView2<'_, f64>, t: usize, u: usize, gamma: f64) -> f64 {
    (-gamma * sq_dist(signal, t, u)).exp()
}

/// `1 / median` of squared pairwise distances over at most 1000 pairs, drawn
/// with a fixed seed so the result depends only on the signal.
fn median_heuristic_gamma(signal: ArrayView2<'_, f64>) -> f64 {
    let len = signal.nrows();
    let mut dists = Vec::new();
    if len * len.saturating_sub(1) / 2 <= MEDIAN_HEURISTIC_PAIRS {
        for t in 0..len {
            for u in t + 1..len {
                dists.push(sq_dist(signal, t, u));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        while dists.len() < MEDIAN_HEURISTIC_PAIRS {
            let t = rng.gen_range(0..len);
            let u = rng.gen_range(0..len);
            if t != u {
                dists.push(sq_dist(signal, t, u));
            }
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    let med = median(&mut dists);
    if med > 0.0 {
        1.0 / med
    } else {
        1.0
    }
}

/// Two-dimensional prefix sums of the Gram matrix, `(len + 1)^2` entries.
fn gram_prefix(signal: ArrayView2<'_, f64>, gamma: f64) -> Vec<f64> {
    let len = signal.nrows();
    let w = len + 1;
    let mut p = vec![0.0; w * w];
    for t in 0..len {
        let mut row_sum = 0.0;
        for u in 0..len {
            row_sum += rbf(signal, t, u, gamma);
            p[(t + 1) * w + u + 1] = p[t * w + u + 1] + row_sum;
        }
    }
    p
}

/// Cost of `[a, b)` under `model`, fitting the model to `signal` first.
pub fn segment_cost(
    model: &SegmentCostModel,
    signal: ArrayView2<'_, f64>,
    a: usize,
    b: usize,
) -> Result<f64> {
    model.fit(signal)?.cost(a, b)
}
