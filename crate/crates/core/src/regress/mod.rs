//! Regression models: a mean-predicting dummy, ordinary least squares, CART
//! regression trees and bagged random forests, plus randomized
//! hyperparameter search with sequence-respecting cross validation.

mod dummy;
mod forest;
mod linear;
mod persist;
mod tree;
mod tune;

pub use dummy::{fit_dummy, DummyModel};
pub use forest::{fit_forest, ForestModel, TrainingMetadata};
pub use linear::{fit_linear, LinearModel};
pub use persist::{
    forest_from_json, forest_to_json, load_forest, save_forest, FOREST_FORMAT, FOREST_FORMAT_VERSION,
};
pub use tree::{fit_tree, RegressionTree, TreeNode, TreeParams, TIE_TOLERANCE};
pub use tune::{
    sample_hyperparameters, tune, tune_candidates, CandidateReport, CvReport, TuningConfig,
};

use crate::features::{Dataset, FeaturesError};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("need at least {needed} training examples, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("input has {got} features, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error(transparent)]
    Features(#[from] FeaturesError),
    #[error("model file {path}: {message}")]
    Persist { path: PathBuf, message: String },
}

pub type Result<T, E = RegressError> = std::result::Result<T, E>;

/// A fitted model mapping a feature row to a predicted ATE.
pub trait Regressor: Sync {
    /// Number of input features.
    fn width(&self) -> usize;

    /// Predict without checking the row width.
    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.width() {
            return Err(RegressError::WidthMismatch {
                expected: self.width(),
                got: x.len(),
            });
        }
        Ok(self.predict_row(x))
    }

    fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        data.rows().map(|r| self.predict(r)).collect()
    }
}

/// Predict with any fitted model.
pub fn predict(model: &dyn Regressor, descriptor: &[f64]) -> Result<f64> {
    model.predict(descriptor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// Every feature is a split candidate.
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    pub const ALL: [MaxFeatures; 3] = [MaxFeatures::All, MaxFeatures::Sqrt, MaxFeatures::Log2];

    /// Candidate count for `width` features, at least 1.
    pub fn count(self, width: usize) -> usize {
        let w = width as f64;
        let k = match self {
            MaxFeatures::All => width,
            MaxFeatures::Sqrt => w.sqrt().floor() as usize,
            MaxFeatures::Log2 => w.log2().floor() as usize,
        };
        k.clamp(1, width.max(1))
    }
}

/// Random-forest hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub n_estimators: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub max_depth: usize,
    pub bootstrap: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            max_depth: 100,
            bootstrap: true,
        }
    }
}

/// Ranges searched by [`tune`].
pub mod search_space {
    pub const N_ESTIMATORS: (usize, usize) = (10, 1000);
    pub const MIN_SAMPLES_SPLIT: [usize; 3] = [2, 5, 10];
    pub const MIN_SAMPLES_LEAF: [usize; 3] = [1, 2, 4];
    pub const MAX_DEPTH: (usize, usize) = (10, 100);
}

impl Hyperparameters {
    pub fn in_search_space(&self) -> bool {
        use search_space::*;
        (N_ESTIMATORS.0..=N_ESTIMATORS.1).contains(&self.n_estimators)
            && MIN_SAMPLES_SPLIT.contains(&self.min_samples_split)
            && MIN_SAMPLES_LEAF.contains(&self.min_samples_leaf)
            && (MAX_DEPTH.0..=MAX_DEPTH.1).contains(&self.max_depth)
    }

    /// Reject values no model can be fitted with (zero trees, depth 0, ...).
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(RegressError::InvalidHyperparameters(
                "n_estimators must be >= 1".into(),
            ));
        }
        self.tree_params().validate()
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
            max_depth: self.max_depth,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_features_counts() {
        assert_eq!(MaxFeatures::All.count(10), 10);
        assert_eq!(MaxFeatures::Sqrt.count(10), 3);
        assert_eq!(MaxFeatures::Log2.count(10), 3);
        assert_eq!(MaxFeatures::Sqrt.count(1), 1);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
    }

    #[test]
    fn defaults_lie_in_search_space() {
        assert!(Hyperparameters::default().in_search_space());
        let stump = Hyperparameters {
            max_depth: 1,
            ..Hyperparameters::default()
        };
        assert!(!stump.in_search_space());
        assert!(stump.validate().is_ok());
        let none = Hyperparameters {
            n_estimators: 0,
            ..Hyperparameters::default()
        };
        assert!(none.validate().is_err());
    }
}
