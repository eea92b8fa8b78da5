//! Regression metrics, failed-regression detection and the experiment
//! drivers built on them: training-fraction sweeps, pooling and model
//! comparisons, and the early-ATE baseline.

mod experiments;
mod metrics;
mod report;

pub use experiments::*;
pub use metrics::{failed_flag, mae, mape, r2, rmse};
pub use report::{
    evaluate, evaluate_predictions, fmt_opt, fmt_pct, prediction_rows, render_reports,
    render_table, write_predictions_csv, EvalReport, PredictionRow,
};

use crate::features::FeaturesError;
use crate::regress::RegressError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("R² is undefined for constant targets")]
    UndefinedR2,
    #[error("MAPE is undefined: target {index} is zero")]
    UndefinedMape { index: usize },
    #[error("sequence `{sequence_id}` has no label at keyframe {cutoff_k}")]
    InsufficientPrefix { sequence_id: String, cutoff_k: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Features(#[from] FeaturesError),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
