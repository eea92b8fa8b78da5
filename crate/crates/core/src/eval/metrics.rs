use super::{EvalError, Result};

fn check(y: &[f64], yhat: &[f64], min: usize) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch(y.len(), yhat.len()));
    }
    if y.len() < min {
        return Err(EvalError::TooShort {
            needed: min,
            got: y.len(),
        });
    }
    Ok(())
}

pub(crate) fn sums_of_squares(y: &[f64], yhat: &[f64]) -> (f64, f64) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sse = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    let sst = y.iter().map(|a| (a - mean).powi(2)).sum();
    (sse, sst)
}

/// Coefficient of determination `1 - SSE / SST`.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 2)?;
    let (sse, sst) = sums_of_squares(y, yhat);
    if sst == 0.0 {
        return Err(EvalError::UndefinedR2);
    }
    Ok(1.0 - sse / sst)
}

/// Mean absolute percentage error as a fraction (0.1 is 10 %).
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 1)?;
    if let Some(i) = y.iter().position(|&v| v == 0.0) {
        return Err(EvalError::UndefinedMape { index: i });
    }
    let s: f64 = y.iter().zip(yhat).map(|(a, b)| ((a - b) / a).abs()).sum();
    Ok(s / y.len() as f64)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 1)?;
    let s: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum();
    Ok(s / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 1)?;
    let s: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((s / y.len() as f64).sqrt())
}

/// Out-of-range rule: a regression failed when R² or MAPE leaves `[0, 1]`.
/// An undefined R² counts as out of range; an undefined MAPE does not decide.
pub fn failed_flag(r2: Option<f64>, mape: Option<f64>) -> bool {
    let inside = |v: f64| (0.0..=1.0).contains(&v);
    !r2.is_some_and(inside) || mape.is_some_and(|m| !inside(m))
}
