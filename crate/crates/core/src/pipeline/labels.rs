use super::{PipelineError, Result};
use crate::trajectory::{SkipReason, SubTrajectoryExample};
use std::path::Path;

const HEADER: &str = "sequence_id,cutoff_k,end_timestamp,n_frames,ate,skipped";

fn skip_name(r: SkipReason) -> &'static str {
    match r {
        SkipReason::TooFewPoses => "too_few_poses",
        SkipReason::Degenerate => "degenerate",
    }
}

/// Every prefix of every sequence, labelled or skipped, with the number of
/// characterized frames it covers.
pub fn write_labels_csv(rows: &[(SubTrajectoryExample, usize)]) -> String {
    let mut out = format!("{HEADER}\n");
    for (e, n) in rows {
        let ate = e.ate.map(|v| v.to_string()).unwrap_or_default();
        let skipped = e.skipped.map(skip_name).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{n},{ate},{skipped}\n",
            e.sequence_id, e.cutoff_k, e.end_timestamp
        ));
    }
    out
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<(SubTrajectoryExample, usize)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| PipelineError::io(path, e))?;
    let header = reader.headers().map_err(|e| PipelineError::io(path, e))?;
    if header.iter().collect::<Vec<_>>().join(",") != HEADER {
        return Err(PipelineError::io(path, format!("expected header `{HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| PipelineError::io(path, e))?;
        let bad = |m: String| PipelineError::io(path, format!("line {}: {m}", i + 2));
        let num = |j: usize| rec[j].parse::<f64>().map_err(|e| bad(e.to_string()));
        let int = |j: usize| rec[j].parse::<usize>().map_err(|e| bad(e.to_string()));
        let skipped = match &rec[5] {
            "" => None,
            "too_few_poses" => Some(SkipReason::TooFewPoses),
            "degenerate" => Some(SkipReason::Degenerate),
            other => return Err(bad(format!("unknown skip reason `{other}`"))),
        };
        let ate = if rec[4].is_empty() { None } else { Some(num(4)?) };
        if ate.is_some() == skipped.is_some() {
            return Err(bad("exactly one of ate and skipped must be set".into()));
        }
        out.push((
            SubTrajectoryExample {
                sequence_id: rec[0].to_string(),
                cutoff_k: int(1)?,
                ate,
                skipped,
                end_timestamp: num(2)?,
            },
            int(3)?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let rows = vec![
            (
                SubTrajectoryExample {
                    sequence_id: "s".into(),
                    cutoff_k: 1,
                    ate: None,
                    skipped: Some(SkipReason::TooFewPoses),
                    end_timestamp: 0.1,
                },
                1,
            ),
            (
                SubTrajectoryExample {
                    sequence_id: "s".into(),
                    cutoff_k: 3,
                    ate: Some(0.123456789012345),
                    skipped: None,
                    end_timestamp: 0.30000000000000004,
                },
                4,
            ),
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        std::fs::write(&p, write_labels_csv(&rows)).unwrap();
        assert_eq!(read_labels_csv(&p).unwrap(), rows);
        std::fs::write(&p, format!("{HEADER}\ns,1,0,1,0.5,degenerate\n")).unwrap();
        assert!(read_labels_csv(&p).is_err());
    }
}
