//! Tree-ensemble rankers.
//!
//! Three training modes share one tree learner ([`tree::fit_tree`]):
//!
//! * `random_forest`: bagged trees on grades as regression targets, three
//!   random features per split, prediction is the mean tree output;
//! * `gbrt_pointwise`: squared-loss gradient boosting from the mean grade;
//! * `lambdamart`: boosting on LambdaRank gradients recomputed per query
//!   group every iteration.

mod ensemble;
pub mod lambda;
mod train;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ensemble::{Ensemble, MODEL_FORMAT, MODEL_VERSION};
pub use lambda::{compute_lambdas, compute_lambdas_with, LambdaPair, SwapContext};
pub use train::{pairwise_inversions, train, train_with_progress, Progress};
pub use tree::{fit_tree, Growth, Node, RegressionTree, TreeParams};

/// Features sampled per split by the random forest (about sqrt of 8).
pub const RF_FEATURES_PER_SPLIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    RandomForest,
    GbrtPointwise,
    Lambdamart,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::RandomForest => "random_forest",
            Mode::GbrtPointwise => "gbrt_pointwise",
            Mode::Lambdamart => "lambdamart",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf" | "random_forest" => Ok(Mode::RandomForest),
            "gbrt" | "gbrt_pointwise" => Ok(Mode::GbrtPointwise),
            "lambdamart" => Ok(Mode::Lambdamart),
            _ => Err(Error::domain(format!("unknown mode {s:?} (expected rf, gbrt or lambdamart)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub n_trees: usize,
    pub learning_rate: f64,
    #[serde(flatten)]
    pub growth: Growth,
    pub min_samples_leaf: usize,
    pub seed: u64,
    /// Cutoff of the NDCG whose swap deltas weight the lambdas.
    pub ndcg_k: usize,
    pub sigma: f64,
}

impl TrainConfig {
    /// Bagged forest of 20 trees.
    pub fn random_forest() -> Self {
        TrainConfig {
            mode: Mode::RandomForest,
            n_trees: 20,
            learning_rate: 1.0,
            growth: Growth::DepthWise { max_depth: 32 },
            min_samples_leaf: 1,
            seed: 0,
            ndcg_k: 5,
            sigma: 1.0,
        }
    }

    /// Pointwise boosting, learning rate 0.01, depth 6.
    pub fn gbrt() -> Self {
        TrainConfig {
            mode: Mode::GbrtPointwise,
            n_trees: 100,
            learning_rate: 0.01,
            growth: Growth::DepthWise { max_depth: 6 },
            ..Self::random_forest()
        }
    }

    /// LambdaMART with leaf-wise growth, 15 leaves, learning rate 0.1.
    pub fn lambdamart() -> Self {
        TrainConfig {
            mode: Mode::Lambdamart,
            n_trees: 100,
            learning_rate: 0.1,
            growth: Growth::LeafWise { num_leaves: 15 },
            ..Self::random_forest()
        }
    }

    /// LambdaMART gradients with depth-wise growth: learning rate 0.01,
    /// depth 6 (the XGBoost-style preset).
    pub fn lambdamart_depthwise() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            growth: Growth::DepthWise { max_depth: 6 },
            ..Self::lambdamart()
        }
    }

    pub fn preset(mode: Mode) -> Self {
        match mode {
            Mode::RandomForest => Self::random_forest(),
            Mode::GbrtPointwise => Self::gbrt(),
            Mode::Lambdamart => Self::lambdamart(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::domain(format!("invalid training config: {msg}")));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.mode == Mode::RandomForest && self.learning_rate != 1.0 {
            return bad("random_forest uses no shrinkage (learning_rate 1)");
        }
        match self.growth {
            Growth::DepthWise { max_depth } if max_depth == 0 || max_depth > 48 => {
                return bad("max_depth must lie in 1..=48")
            }
            Growth::LeafWise { num_leaves } if num_leaves < 2 => return bad("num_leaves must be at least 2"),
            _ => {}
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if self.ndcg_k == 0 {
            return bad("ndcg_k must be positive");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        Ok(())
    }
}
