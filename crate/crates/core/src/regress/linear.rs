use super::{RegressError, Regressor, Result};
use crate::features::Dataset;
use nalgebra::{DMatrix, DVector};

/// Ordinary least squares with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Fit by SVD on centered data. Rank-deficient designs get the minimum-norm
/// coefficient vector, so constant columns end up with coefficient 0.
pub fn fit_linear(train: &Dataset) -> Result<LinearModel> {
    let n = train.len();
    if n < 2 {
        return Err(RegressError::TooFewExamples { needed: 2, got: n });
    }
    let p = train.width();
    let y = train.targets();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let x_mean: Vec<f64> = (0..p)
        .map(|j| train.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    if p == 0 {
        return Ok(LinearModel {
            coefficients: Vec::new(),
            intercept: y_mean,
        });
    }
    let ex = train.examples();
    let x = DMatrix::from_fn(n, p, |i, j| ex[i].features[j] - x_mean[j]);
    let b = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let svd = x.svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = (max_sv * 1e-12).max(f64::MIN_POSITIVE);
    let beta = svd
        .solve(&b, eps)
        .map_err(|e| RegressError::InvalidHyperparameters(e.to_string()))?;
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok(LinearModel {
        coefficients,
        intercept,
    })
}

impl Regressor for LinearModel {
    fn width(&self) -> usize {
        self.coefficients.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}
