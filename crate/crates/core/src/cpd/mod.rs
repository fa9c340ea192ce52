//! Offline change point detection: approximate search over pluggable segment
//! costs with a linear penalty on the number of change points.

mod cost;
mod search;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use cost::{segment_cost, CostKind, FittedCost, SegmentCostModel};
pub use search::{
    bottom_up, bottom_up_grid, total_cost, window_based, window_discrepancy, SegmentationResult,
};

use crate::error::{Error, Result};

pub const DEFAULT_JUMP: usize = 5;
pub const DEFAULT_WIDTH: usize = 100;
pub const GRID_PENALTIES: [f64; 3] = [100.0, 500.0, 1000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    #[serde(alias = "bottom_up")]
    BottomUp,
    Window,
}

impl SearchMethod {
    pub const ALL: [SearchMethod; 2] = [SearchMethod::BottomUp, SearchMethod::Window];

    pub fn as_str(self) -> &'static str {
        match self {
            SearchMethod::BottomUp => "bottomup",
            SearchMethod::Window => "window",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            SearchMethod::BottomUp => "Bottom Up",
            SearchMethod::Window => "Window Based",
        }
    }
}

impl std::str::FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottomup" | "bottom_up" | "bottom-up" => Ok(SearchMethod::BottomUp),
            "window" => Ok(SearchMethod::Window),
            other => Err(Error::InvalidConfig(format!("unknown search `{other}`"))),
        }
    }
}

/// One detector configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpdConfig {
    pub search: SearchMethod,
    pub cost: SegmentCostModel,
    pub penalty: f64,
    #[serde(default = "default_jump")]
    pub jump: usize,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
}

fn default_jump() -> usize {
    DEFAULT_JUMP
}
fn default_width() -> usize {
    DEFAULT_WIDTH
}
fn default_min_size() -> usize {
    2
}

impl CpdConfig {
    pub fn new(search: SearchMethod, kind: CostKind, penalty: f64) -> Self {
        Self {
            search,
            cost: SegmentCostModel::new(kind),
            penalty,
            jump: DEFAULT_JUMP,
            width: DEFAULT_WIDTH,
            min_size: default_min_size(),
        }
    }

    /// Stable identifier such as `bottomup-l2-100`.
    pub fn label(&self) -> String {
        format!("{}-{}-{}", self.search.as_str(), self.cost.kind.as_str(), self.penalty)
    }
}

/// The full sweep: every cost family under both searches and the three penalties.
pub fn config_grid() -> Vec<CpdConfig> {
    let mut grid = Vec::with_capacity(42);
    for kind in CostKind::ALL {
        for search in SearchMethod::ALL {
            for penalty in GRID_PENALTIES {
                grid.push(CpdConfig::new(search, kind, penalty));
            }
        }
    }
    grid
}

/// Runs the configured search and returns its segmentation. Breakpoints are
/// change timestamps only; change point detection carries no state labels.
pub fn detect(signal: ArrayView2<'_, f64>, config: &CpdConfig) -> Result<SegmentationResult> {
    match config.search {
        SearchMethod::BottomUp => bottom_up(
            signal,
            &config.cost,
            config.penalty,
            config.jump,
            config.min_size,
        ),
        SearchMethod::Window => window_based(signal, &config.cost, config.penalty, config.width),
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn grid_has_42_distinct_configurations() {
        let grid = config_grid();
        assert_eq!(grid.len(), 42);
        let labels: std::collections::HashSet<_> = grid.iter().map(CpdConfig::label).collect();
        assert_eq!(labels.len(), 42);
    }

    #[test]
    fn grid_runs_on_multichannel_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sig = Array2::from_shape_fn((260, 10), |(t, c)| {
            let level = if t < 130 { 0.0 } else { (c as f64) - 4.0 };
            level + rng.gen_range(-0.3..0.3)
        });
        for cfg in config_grid() {
            let res = detect(sig.view(), &cfg).unwrap();
            assert!(res.breakpoints.windows(2).all(|w| w[0] < w[1]));
            assert!(res.breakpoints.iter().all(|&b| b > 0 && b < 260));
        }
    }

    #[test]
    fn higher_penalty_gives_subset() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sig = Array2::from_shape_fn((300, 3), |(t, _)| {
                ((t / 37) % 3) as f64 * 2.0 + rng.gen_range(-3.0..3.0)
            });
            for kind in [CostKind::L1, CostKind::L2, CostKind::Normal] {
                let lo = detect(sig.view(), &CpdConfig::new(SearchMethod::BottomUp, kind, 100.0)).unwrap();
                let hi = detect(sig.view(), &CpdConfig::new(SearchMethod::BottomUp, kind, 1000.0)).unwrap();
                assert!(hi.breakpoints.iter().all(|b| lo.breakpoints.contains(b)));
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sig = Array2::from_shape_fn((240, 4), |_| rng.gen_range(-1.0..1.0));
        for cfg in config_grid().into_iter().step_by(5) {
            assert_eq!(detect(sig.view(), &cfg).unwrap(), detect(sig.view(), &cfg).unwrap());
        }
    }

    #[test]
    fn config_parses_cli_names() {
        assert_eq!("bottomup".parse::<SearchMethod>().unwrap(), SearchMethod::BottomUp);
        assert_eq!("rbf".parse::<CostKind>().unwrap(), CostKind::Rbf);
        assert!("pelt".parse::<SearchMethod>().is_err());
    }
}
