use super::{Dataset, Example, FeaturesError, Result};
use std::path::Path;

const FIXED_COLUMNS: [&str; 3] = ["sequence_id", "cutoff_k", "ate"];

/// CSV with columns `sequence_id,cutoff_k,ate,<features...>`.
pub fn write_dataset_csv(dataset: &Dataset) -> String {
    let mut out = FIXED_COLUMNS.join(",");
    for n in dataset.feature_names() {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for e in dataset.examples() {
        out.push_str(&format!("{},{},{}", e.sequence_id, e.cutoff_k, e.ate));
        for v in &e.features {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn read_dataset_csv(path: &Path, testcase_id: &str) -> Result<Dataset> {
    let io_err = |e: csv::Error| FeaturesError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::Reader::from_path(path).map_err(io_err)?;
    let header = reader.headers().map_err(io_err)?.clone();
    if header.len() < 3 || header.iter().take(3).ne(FIXED_COLUMNS) {
        return Err(FeaturesError::Parse {
            line: 1,
            message: format!("expected leading columns {}", FIXED_COLUMNS.join(",")),
        });
    }
    let names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let mut examples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(io_err)?;
        let parse_err = |m: String| FeaturesError::Parse { line, message: m };
        let cutoff_k = rec[1]
            .parse::<usize>()
            .map_err(|e| parse_err(e.to_string()))?;
        let values = rec
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(e.to_string()))?;
        examples.push(Example {
            sequence_id: rec[0].to_string(),
            cutoff_k,
            ate: values[0],
            features: values[1..].to_vec(),
        });
    }
    Dataset::new(testcase_id, names, examples)
}
