use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::window::WindowedFeatures;
use crate::data::argmax_rows;
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 5;

/// 13 points, 1e-6 to 1e6.
pub fn default_alpha_grid() -> Vec<f64> {
    (-6..=6).map(|e| 10f64.powi(e)).collect()
}

/// One-vs-rest ridge classifier. `weights` is `(d + 1) x N_s`; the last row
/// is the unregularized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Array2<f64>,
    pub chosen_alpha: f64,
    pub alpha_grid: Vec<f64>,
    pub num_states: usize,
    pub width: usize,
    /// Mean cross-validated accuracy per grid point.
    pub cv_accuracy: Vec<f64>,
}

fn one_hot(labels: &[usize], classes: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), classes));
    for (i, &l) in labels.iter().enumerate() {
        y[[i, l]] = 1.0;
    }
    y
}

/// Centered sufficient statistics of one subset of rows.
struct Moments {
    n: f64,
    sum_x: Array1<f64>,
    sum_y: Array1<f64>,
    xtx: Array2<f64>,
    xty: Array2<f64>,
}

impl Moments {
    fn of(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Self {
        Self {
            n: x.nrows() as f64,
            sum_x: x.sum_axis(Axis(0)),
            sum_y: y.sum_axis(Axis(0)),
            xtx: x.t().dot(&x),
            xty: x.t().dot(&y),
        }
    }

    fn minus(&self, other: &Moments) -> Moments {
        Moments {
            n: self.n - other.n,
            sum_x: &self.sum_x - &other.sum_x,
            sum_y: &self.sum_y - &other.sum_y,
            xtx: &self.xtx - &other.xtx,
            xty: &self.xty - &other.xty,
        }
    }

    /// Solves the ridge problem with an unpenalized intercept by centering.
    fn solve(&self, alpha: f64) -> Array2<f64> {
        let d = self.sum_x.len();
        let mx = &self.sum_x / self.n;
        let my = &self.sum_y / self.n;
        // X_c^T X_c = X^T X - n mx mx^T, same for X_c^T Y_c.
        let outer = |a: &Array1<f64>, b: &Array1<f64>| {
            Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
        };
        let mut a = &self.xtx - &(outer(&mx, &mx) * self.n);
        for i in 0..d {
            a[[i, i]] += alpha;
        }
        let b = &self.xty - &(outer(&mx, &my) * self.n);
        let w = solve_spd(&a, &b);
        let intercept = &my - &mx.dot(&w);
        let mut out = Array2::zeros((d + 1, my.len()));
        out.slice_mut(ndarray::s![..d, ..]).assign(&w);
        out.row_mut(d).assign(&intercept);
        out
    }
}

fn solve_spd(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (n, k) = b.dim();
    let am = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let bm = DMatrix::from_fn(n, k, |i, j| b[[i, j]]);
    let x = match am.clone().cholesky() {
        Some(c) => c.solve(&bm),
        None => am
            .clone()
            .lu()
            .solve(&bm)
            .unwrap_or_else(|| am.pseudo_inverse(1e-12).expect("pseudo-inverse") * &bm),
    };
    Array2::from_shape_fn((n, k), |(i, j)| x[(i, j)])
}

fn scores(x: ArrayView2<'_, f64>, weights: &Array2<f64>) -> Array2<f64> {
    let d = weights.nrows() - 1;
    x.dot(&weights.slice(ndarray::s![..d, ..])) + &weights.row(d)
}

/// Fits with `folds`-fold cross-validation over `alpha_grid`; rows are assigned
/// to folds by a shuffle seeded with `seed`.
pub fn ridge_fit(features: &WindowedFeatures, alpha_grid: &[f64], folds: usize, seed: u64) -> Result<RidgeModel> {
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; features.len()];
    for (pos, &row) in order.iter().enumerate() {
        assignment[row] = pos % folds.max(1);
    }
    ridge_fit_with_folds(features, alpha_grid, folds, &assignment)
}

/// Cross-validation with an explicit fold id per row.
pub fn ridge_fit_with_folds(
    features: &WindowedFeatures,
    alpha_grid: &[f64],
    folds: usize,
    fold_of_row: &[usize],
) -> Result<RidgeModel> {
    if folds < 2 || alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "need >= 2 folds and non-negative alphas, got {folds} folds"
        )));
    }
    if fold_of_row.len() != features.len() || fold_of_row.iter().any(|&f| f >= folds) {
        return Err(Error::InvalidConfig("fold assignment does not cover the rows".into()));
    }
    let present: std::collections::BTreeSet<usize> = features.labels.iter().copied().collect();
    if present.len() < 2 {
        return Err(Error::SingleClass(present.into_iter().next().unwrap_or(0)));
    }
    let x = features.matrix.view();
    if x.rows().into_iter().all(|r| r == x.row(0)) {
        log::warn!("all {} feature rows are identical", x.nrows());
    }
    let num_states = present.iter().max().unwrap() + 1;
    let y = one_hot(&features.labels, num_states);

    let fold_rows: Vec<Vec<usize>> = (0..folds)
        .map(|f| (0..features.len()).filter(|&r| fold_of_row[r] == f).collect())
        .collect();
    let total = Moments::of(x, y.view());
    let mut correct = vec![0usize; alpha_grid.len()];
    let mut evaluated = 0usize;
    for rows in fold_rows.iter().filter(|r| !r.is_empty()) {
        let xf = x.select(Axis(0), rows);
        let yf = y.select(Axis(0), rows);
        let train = total.minus(&Moments::of(xf.view(), yf.view()));
        if train.n < 1.0 {
            continue;
        }
        evaluated += rows.len();
        let truth: Vec<usize> = rows.iter().map(|&r| features.labels[r]).collect();
        for (ai, &alpha) in alpha_grid.iter().enumerate() {
            let w = train.solve(alpha);
            let pred = argmax_rows(scores(xf.view(), &w).view());
            correct[ai] += pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
        }
    }
    let cv_accuracy: Vec<f64> = correct.iter().map(|&c| c as f64 / evaluated.max(1) as f64).collect();
    let best = (0..alpha_grid.len())
        .fold(0, |b, i| if cv_accuracy[i] > cv_accuracy[b] { i } else { b });
    let chosen_alpha = alpha_grid[best];
    log::info!("ridge w={}: alpha {chosen_alpha:e}, cv accuracy {:.4}", features.width, cv_accuracy[best]);
    Ok(RidgeModel {
        weights: total.solve(chosen_alpha),
        chosen_alpha,
        alpha_grid: alpha_grid.to_vec(),
        num_states,
        width: features.width,
        cv_accuracy,
    })
}

impl RidgeModel {
    pub fn feature_width(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn scores(&self, matrix: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if matrix.ncols() != self.feature_width() {
            return Err(Error::WidthMismatch {
                expected: self.feature_width(),
                found: matrix.ncols(),
            });
        }
        Ok(scores(matrix, &self.weights))
    }
}

/// Argmax of the affine scores per row, ties to the lowest class.
pub fn ridge_predict(model: &RidgeModel, matrix: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    Ok(argmax_rows(model.scores(matrix)?.view()))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::Rng;

    use super::*;

    fn features(x: Array2<f64>, labels: Vec<usize>) -> WindowedFeatures {
        WindowedFeatures {
            matrix: x,
            labels,
            width: 1,
        }
    }

    fn random_problem(seed: u64, rows: usize, cols: usize, classes: usize) -> WindowedFeatures {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-2.0..2.0));
        let labels = (0..rows).map(|i| i % classes).collect();
        features(x, labels)
    }

    #[test]
    fn grid() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[12], 1e6);
    }

    #[test]
    fn separable_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((60, 1), |(i, _)| if i % 2 == 0 { -5.0 } else { 5.0 } + rng.gen_range(-0.5..0.5));
        let labels: Vec<usize> = (0..60).map(|i| i % 2).collect();
        let f = features(x.clone(), labels.clone());
        let m = ridge_fit(&f, &[1e-6], 5, 0).unwrap();
        assert_eq!(ridge_predict(&m, x.view()).unwrap(), labels);
        let m = ridge_fit(&f, &default_alpha_grid(), 5, 0).unwrap();
        assert_eq!(ridge_predict(&m, x.view()).unwrap(), labels);
    }

    #[test]
    fn normal_equations_hold() {
        // (X1^T X1 + alpha I') W = X1^T Y with I' zero on the intercept entry.
        for seed in 0..5 {
            let f = random_problem(seed, 80, 6, 3);
            for alpha in [1e-6, 1e-2, 1.0, 1e3] {
                let m = ridge_fit(&f, &[alpha], 2, 0).unwrap();
                let n = f.len();
                let mut x1 = Array2::ones((n, 7));
                x1.slice_mut(ndarray::s![.., ..6]).assign(&f.matrix);
                let y = one_hot(&f.labels, 3);
                let mut lhs = x1.t().dot(&x1);
                for i in 0..6 {
                    lhs[[i, i]] += alpha;
                }
                let residual = lhs.dot(&m.weights) - x1.t().dot(&y);
                let rhs = x1.t().dot(&y);
                let rel = residual.mapv(f64::abs).sum() / rhs.mapv(f64::abs).sum();
                assert!(rel < 1e-8, "seed {seed} alpha {alpha}: {rel:e}");
            }
        }
    }

    #[test]
    fn heavy_regularization_gives_class_means() {
        let f = random_problem(3, 90, 4, 3);
        let mut centered = f.clone();
        let mean = centered.matrix.mean_axis(Axis(0)).unwrap();
        centered.matrix -= &mean;
        let m = ridge_fit(&centered, &[1e12], 3, 0).unwrap();
        let w = m.weights.slice(ndarray::s![..4, ..]);
        assert!(w.iter().all(|v| v.abs() < 1e-9));
        for c in 0..3 {
            assert_relative_eq!(m.weights[[4, c]], 1.0 / 3.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn fold_assignment_is_permutation_invariant() {
        let f = random_problem(7, 120, 5, 4);
        let folds: Vec<usize> = (0..120).map(|i| (i * 7) % 5).collect();
        let a = ridge_fit_with_folds(&f, &default_alpha_grid(), 5, &folds).unwrap();
        let perm: Vec<usize> = (0..120).rev().collect();
        let g = features(
            f.matrix.select(Axis(0), &perm),
            perm.iter().map(|&i| f.labels[i]).collect(),
        );
        let pf: Vec<usize> = perm.iter().map(|&i| folds[i]).collect();
        let b = ridge_fit_with_folds(&g, &default_alpha_grid(), 5, &pf).unwrap();
        assert_eq!(a.chosen_alpha, b.chosen_alpha);
        assert_eq!(a.cv_accuracy, b.cv_accuracy);
    }

    #[test]
    fn argmax_shift_invariance_and_identical_rows() {
        let f = random_problem(2, 50, 3, 3);
        let mut m = ridge_fit(&f, &default_alpha_grid(), 5, 1).unwrap();
        let before = ridge_predict(&m, f.matrix.view()).unwrap();
        m.weights.row_mut(3).mapv_inplace(|v| v + 42.0);
        assert_eq!(ridge_predict(&m, f.matrix.view()).unwrap(), before);
        let same = Array2::from_elem((4, 3), 0.3);
        let p = ridge_predict(&m, same.view()).unwrap();
        assert!(p.iter().all(|&l| l == p[0]));
    }

    #[test]
    fn errors() {
        let f = random_problem(0, 20, 3, 2);
        let m = ridge_fit(&f, &[1.0], 2, 0).unwrap();
        assert!(matches!(
            ridge_predict(&m, Array2::zeros((2, 5)).view()),
            Err(Error::WidthMismatch { expected: 3, found: 5 })
        ));
        let single = features(Array2::zeros((5, 2)), vec![1; 5]);
        assert!(matches!(ridge_fit(&single, &[1.0], 2, 0), Err(Error::SingleClass(1))));
        assert!(ridge_fit(&f, &[1.0], 1, 0).is_err());
    }
}
