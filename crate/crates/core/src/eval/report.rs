use super::metrics::{failed_flag, mae, rmse, sums_of_squares};
use super::{EvalError, Result};
use crate::features::Dataset;
use crate::regress::Regressor;
use serde::{Deserialize, Serialize};

/// Test-set metrics of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub testcase_id: String,
    pub pooling_kind: String,
    pub train_fraction: f64,
    pub model_family: String,
    pub n: usize,
    /// `None` when the targets are constant and the predictions miss them.
    pub r2: Option<f64>,
    /// Fraction; `None` when every target is zero.
    pub mape: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
    /// Zero-valued targets left out of MAPE.
    pub mape_excluded: usize,
    pub failed: bool,
    pub partition_hash: String,
}

impl EvalReport {
    /// 100 % minus MAPE.
    pub fn accuracy(&self) -> Option<f64> {
        self.mape.map(|m| 1.0 - m)
    }
}

/// Score predictions against targets. Constant targets give R² = 1 when every
/// prediction is exact and an undefined R² otherwise.
pub fn evaluate_predictions(y: &[f64], yhat: &[f64]) -> Result<EvalReport> {
    let mae = mae(y, yhat)?;
    let rmse = rmse(y, yhat)?;
    let (sse, sst) = sums_of_squares(y, yhat);
    let r2 = if sst > 0.0 {
        Some(1.0 - sse / sst)
    } else if sse == 0.0 {
        Some(1.0)
    } else {
        None
    };
    let kept: Vec<(f64, f64)> = y
        .iter()
        .zip(yhat)
        .filter(|(a, _)| **a != 0.0)
        .map(|(a, b)| (*a, *b))
        .collect();
    let mape = (!kept.is_empty())
        .then(|| kept.iter().map(|(a, b)| ((a - b) / a).abs()).sum::<f64>() / kept.len() as f64);
    Ok(EvalReport {
        testcase_id: String::new(),
        pooling_kind: String::new(),
        train_fraction: 0.0,
        model_family: String::new(),
        n: y.len(),
        r2,
        mape,
        mae,
        rmse,
        mape_excluded: y.len() - kept.len(),
        failed: failed_flag(r2, mape),
        partition_hash: String::new(),
    })
}

pub fn evaluate(model: &dyn Regressor, test: &Dataset) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(EvalError::TooShort { needed: 1, got: 0 });
    }
    let yhat = model.predict_dataset(test)?;
    let mut report = evaluate_predictions(&test.targets(), &yhat)?;
    report.testcase_id = test.testcase_id.clone();
    Ok(report)
}

/// One line of a prediction dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sequence_id: String,
    pub cutoff_k: usize,
    pub y: f64,
    pub yhat: f64,
    /// `None` for zero targets.
    pub abs_pct_error: Option<f64>,
}

pub fn prediction_rows(test: &Dataset, yhat: &[f64]) -> Vec<PredictionRow> {
    test.examples()
        .iter()
        .zip(yhat)
        .map(|(e, &p)| PredictionRow {
            sequence_id: e.sequence_id.clone(),
            cutoff_k: e.cutoff_k,
            y: e.ate,
            yhat: p,
            abs_pct_error: (e.ate != 0.0).then(|| ((e.ate - p) / e.ate).abs()),
        })
        .collect()
}

pub fn write_predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from("sequence_id,cutoff_k,y,yhat,abs_pct_error\n");
    for r in rows {
        let ape = r.abs_pct_error.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", r.sequence_id, r.cutoff_k, r.y, r.yhat, ape));
    }
    out
}

/// Fixed-width text table; the first column is left aligned, the rest right
/// aligned.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.zip(&widths).enumerate() {
            if i == 0 {
                s.push_str(&format!("{c:<w$}"));
            } else {
                s.push_str(&format!("  {c:>w$}"));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&mut header.iter().copied());
    out.push_str(&line(&mut widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str)));
    for r in rows {
        out.push_str(&line(&mut r.iter().map(String::as_str)));
    }
    out
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undef".to_string(), |x| format!("{x:.4}"))
}

pub fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "undef".to_string(), |x| format!("{:.2}%", 100.0 * x))
}

pub fn render_reports(label: &str, rows: &[(String, &EvalReport)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            vec![
                name.clone(),
                r.n.to_string(),
                fmt_opt(r.r2),
                fmt_pct(r.mape),
                format!("{:.4}", r.mae),
                format!("{:.4}", r.rmse),
                if r.failed { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect();
    render_table(&[label, "n", "R2", "MAPE", "MAE", "RMSE", "failed"], &body)
}
