//! Sliding-window ridge classifier.

mod ridge;
mod window;

pub use ridge::{default_alpha_grid, ridge_fit, ridge_fit_with_folds, ridge_predict, RidgeModel, DEFAULT_FOLDS};
pub use window::{window_features, window_matrix, WindowedFeatures, DEFAULT_WIDTHS};
