use super::{PipelineError, Result};
use crate::regress::{load_forest, ForestModel};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Column layout of a predict input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputLayout {
    /// `source_id,feature...`, as written by `characterize`.
    Descriptors,
    /// `sequence_id,cutoff_k,ate,feature...`, as written by
    /// `generate-examples`.
    Dataset,
}

impl InputLayout {
    fn detect(header: &csv::StringRecord) -> Option<Self> {
        let fixed: Vec<&str> = header.iter().take(3).collect();
        if fixed.first() == Some(&"source_id") {
            Some(Self::Descriptors)
        } else if fixed == ["sequence_id", "cutoff_k", "ate"] {
            Some(Self::Dataset)
        } else {
            None
        }
    }

    fn fixed_columns(self) -> usize {
        match self {
            Self::Descriptors => 1,
            Self::Dataset => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictSummary {
    pub layout: InputLayout,
    pub rows: usize,
}

/// Stream `input` through the model at `model_path` into `output`.
///
/// Descriptor input yields `source_id,yhat`; dataset input yields the
/// prediction dump `sequence_id,cutoff_k,y,yhat,abs_pct_error`. Feature
/// columns must match the model's input names in order.
pub fn cmd_predict(model_path: &Path, input: &Path, output: &Path) -> Result<PredictSummary> {
    let model = load_forest(model_path).map_err(|e| PipelineError::Predict(e.to_string()))?;
    let file = File::open(input).map_err(|e| PipelineError::io(input, e))?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    let out = File::create(output).map_err(|e| PipelineError::io(output, e))?;
    let summary = predict_stream(&model, file, BufWriter::new(out), input)?;
    Ok(summary)
}

/// Streaming core of [`cmd_predict`]; `label` names the input in errors.
pub fn predict_stream(
    model: &ForestModel,
    input: impl std::io::Read,
    mut out: impl Write,
    label: &Path,
) -> Result<PredictSummary> {
    let io = |e: &dyn std::fmt::Display| PipelineError::io(label, e);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| io(&e))?.clone();
    let layout = InputLayout::detect(&header).ok_or_else(|| {
        PipelineError::Predict("header must start with `source_id` or `sequence_id,cutoff_k,ate`".into())
    })?;
    let names: Vec<&str> = header.iter().skip(layout.fixed_columns()).collect();
    let expected = &model.input_feature_names;
    if names.len() != expected.len() {
        return Err(PipelineError::Predict(format!(
            "input has {} feature columns, model expects {}",
            names.len(),
            expected.len()
        )));
    }
    if let Some(j) = (0..names.len()).find(|&j| names[j] != expected[j]) {
        return Err(PipelineError::Predict(format!(
            "feature column {} is `{}`, model expects `{}`",
            j + 1,
            names[j],
            expected[j]
        )));
    }
    let w = |r: std::io::Result<()>| r.map_err(|e| io(&e));
    w(match layout {
        InputLayout::Descriptors => writeln!(out, "source_id,yhat"),
        InputLayout::Dataset => writeln!(out, "sequence_id,cutoff_k,y,yhat,abs_pct_error"),
    })?;
    let mut rows = 0;
    let mut rec = csv::StringRecord::new();
    while reader.read_record(&mut rec).map_err(|e| io(&e))? {
        let line = rec.position().map_or(rows + 2, |p| p.line() as usize);
        let bad = |m: String| PipelineError::Predict(format!("{}, line {line}: {m}", label.display()));
        let x = rec
            .iter()
            .skip(layout.fixed_columns())
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if x.len() != expected.len() {
            return Err(bad(format!("{} features, model expects {}", x.len(), expected.len())));
        }
        let yhat = model.predict_descriptor(&x).map_err(|e| bad(e.to_string()))?;
        match layout {
            InputLayout::Descriptors => w(writeln!(out, "{},{yhat}", &rec[0]))?,
            InputLayout::Dataset => {
                let y: f64 = rec[2].parse().map_err(|e| bad(format!("ate: {e}")))?;
                let ape = if y != 0.0 { ((y - yhat) / y).abs().to_string() } else { String::new() };
                w(writeln!(out, "{},{},{y},{yhat},{ape}", &rec[0], &rec[1]))?;
            }
        }
        rows += 1;
    }
    w(out.flush())?;
    Ok(PredictSummary { layout, rows })
}
