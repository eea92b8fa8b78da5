use super::tree::grow;
use super::{Hyperparameters, RegressError, RegressionTree, Regressor, Result};
use crate::features::{Dataset, FeatureMask};
use crate::{par, rng};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub testcase_id: String,
    pub pooling_kind: String,
    pub train_fraction: f64,
}

/// A bagged ensemble of regression trees. Trees consume rows already
/// projected through `feature_mask`; `input_feature_names` is the layout
/// before projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub hyperparameters: Hyperparameters,
    pub feature_mask: FeatureMask,
    pub input_feature_names: Vec<String>,
    pub rng_seed: u64,
    pub metadata: TrainingMetadata,
    pub trees: Vec<RegressionTree>,
}

/// Fit `n_estimators` trees. Tree `t` draws its bootstrap sample and its
/// feature subsets from streams keyed by `(rng_seed, t)`, so the result does
/// not depend on how trees are scheduled across threads.
pub fn fit_forest(train: &Dataset, hp: &Hyperparameters, rng_seed: u64) -> Result<ForestModel> {
    hp.validate()?;
    let n = train.len();
    if n == 0 {
        return Err(RegressError::EmptyDataset);
    }
    let columns: Vec<Vec<f64>> = (0..train.width()).map(|j| train.column(j)).collect();
    let targets = train.targets();
    let params = hp.tree_params();
    let trees = par::map_range(hp.n_estimators, |t| {
        let t = t as u64;
        let mut samples: Vec<usize> = if hp.bootstrap {
            let mut draw = rng::stream(rng_seed, "bootstrap", t);
            (0..n).map(|_| draw.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut features = rng::stream(rng_seed, "tree-features", t);
        grow(&columns, &targets, &mut samples, &params, &mut features)
    });
    Ok(ForestModel {
        hyperparameters: *hp,
        feature_mask: FeatureMask::identity(train.width()),
        input_feature_names: train.feature_names().to_vec(),
        rng_seed,
        metadata: TrainingMetadata::default(),
        trees,
    })
}

impl ForestModel {
    /// Attach the mask that produced the training layout.
    pub fn with_mask(mut self, mask: FeatureMask, input_feature_names: Vec<String>) -> Self {
        self.feature_mask = mask;
        self.input_feature_names = input_feature_names;
        self
    }

    pub fn with_metadata(mut self, metadata: TrainingMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    /// Predict from an unmasked descriptor (the layout the mask was computed on).
    pub fn predict_descriptor(&self, descriptor: &[f64]) -> Result<f64> {
        if descriptor.len() != self.input_feature_names.len() {
            return Err(RegressError::WidthMismatch {
                expected: self.input_feature_names.len(),
                got: descriptor.len(),
            });
        }
        let row = self.feature_mask.project(descriptor)?;
        self.predict(&row)
    }
}

impl Regressor for ForestModel {
    fn width(&self) -> usize {
        self.feature_mask.width()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        sum / self.trees.len() as f64
    }
}
