use super::{RegressError, Regressor, Result};
use crate::features::Dataset;

/// Predicts the mean training target for every input.
#[derive(Debug, Clone, PartialEq)]
pub struct DummyModel {
    pub mean: f64,
    width: usize,
}

pub fn fit_dummy(train: &Dataset) -> Result<DummyModel> {
    if train.is_empty() {
        return Err(RegressError::EmptyDataset);
    }
    let y = train.targets();
    Ok(DummyModel {
        mean: y.iter().sum::<f64>() / y.len() as f64,
        width: train.width(),
    })
}

impl Regressor for DummyModel {
    fn width(&self) -> usize {
        self.width
    }

    fn predict_row(&self, _x: &[f64]) -> f64 {
        self.mean
    }
}
