use super::{CharacterizationError, CharacterizationMatrix, Frame, ImuSample, Result};
use nalgebra::Vector3;
use std::path::{Path, PathBuf};

/// A row of a frame index file.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub timestamp: f64,
    pub image_path: Option<PathBuf>,
}

/// Where a sequence's frames live on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSource {
    /// CSV of `timestamp,image_path`; image paths relative to this file.
    pub index_path: PathBuf,
    /// Optional CSV of `timestamp,gx,gy,gz,ax,ay,az`.
    pub imu_path: Option<PathBuf>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CharacterizationError {
    CharacterizationError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn parse_err(path: &Path, line: usize, e: impl std::fmt::Display) -> CharacterizationError {
    CharacterizationError::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Read a headerless-or-headed CSV, yielding `(line number, fields)` for data
/// rows. A first row whose first field is not numeric is treated as a header.
fn data_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rows.is_empty() && i == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

pub fn load_frame_index(path: &Path) -> Result<Vec<FrameRecord>> {
    let base = path.parent().unwrap_or(Path::new("."));
    data_rows(path)?
        .into_iter()
        .map(|(line, f)| {
            let timestamp = f[0].parse::<f64>().map_err(|e| parse_err(path, line, e))?;
            let image_path = f
                .get(1)
                .filter(|s| !s.is_empty())
                .map(|s| base.join(s));
            Ok(FrameRecord {
                timestamp,
                image_path,
            })
        })
        .collect()
}

pub fn load_imu_csv(path: &Path) -> Result<Vec<(f64, ImuSample)>> {
    data_rows(path)?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 7 {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected 7 fields, found {}", f.len()),
                ));
            }
            let v = f
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(path, line, e))?;
            Ok((
                v[0],
                ImuSample {
                    gyro: Vector3::new(v[1], v[2], v[3]),
                    accel: Vector3::new(v[4], v[5], v[6]),
                },
            ))
        })
        .collect()
}

/// Load all frames of a sequence. IMU samples are assigned to the first frame
/// whose timestamp is at or after theirs, so frame `j` holds the samples in
/// `(t_{j-1}, t_j]`; samples after the last frame are dropped.
pub fn load_sequence(source: &SequenceSource) -> Result<Vec<Frame>> {
    let mut records = load_frame_index(&source.index_path)?;
    records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    let mut windows: Vec<Vec<ImuSample>> = vec![Vec::new(); records.len()];
    if let Some(imu_path) = &source.imu_path {
        let ts: Vec<f64> = records.iter().map(|r| r.timestamp).collect();
        for (t, sample) in load_imu_csv(imu_path)? {
            let j = ts.partition_point(|&f| f < t);
            if j < windows.len() {
                windows[j].push(sample);
            }
        }
    }
    records
        .into_iter()
        .zip(windows)
        .enumerate()
        .map(|(j, (rec, imu))| {
            let pixels = match &rec.image_path {
                Some(p) => Some(
                    image::open(p)
                        .map_err(|e| io_err(p, e))?
                        .to_luma8(),
                ),
                None => None,
            };
            Frame::new(rec.timestamp, pixels, Some(imu)).map_err(|e| CharacterizationError::Frame {
                frame: j,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Render a matrix as CSV: header `metric,0,1,...`, then one row per metric
/// with one column per frame.
pub fn write_matrix_csv(matrix: &CharacterizationMatrix) -> String {
    let mut out = String::from("metric");
    for j in 0..matrix.n_frames() {
        out.push_str(&format!(",{j}"));
    }
    out.push('\n');
    for (name, row) in matrix.metric_names().iter().zip(matrix.rows()) {
        out.push_str(name);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix_csv(sequence_id: &str, path: &Path) -> Result<CharacterizationMatrix> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let mut it = rec.iter();
        names.push(it.next().unwrap_or_default().to_string());
        rows.push(
            it.map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(path, i + 2, e))?,
        );
    }
    CharacterizationMatrix::from_rows(sequence_id, names, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::{characterize_sequence, MetricSet};
    use image::{GrayImage, Luma};

    #[test]
    fn loads_pgm_frames_and_imu_windows() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3u8 {
            GrayImage::from_pixel(8, 8, Luma([i * 50]))
                .save(dir.path().join(format!("f{i}.pgm")))
                .unwrap();
        }
        std::fs::write(
            dir.path().join("frames.csv"),
            "timestamp,image_path\n0.0,f0.pgm\n0.1,f1.pgm\n0.2,f2.pgm\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("imu.csv"),
            "timestamp,gx,gy,gz,ax,ay,az\n0.05,1,0,0,0,0,9.81\n0.1,0,2,0,0,0,9.81\n0.15,0,0,3,0,0,9.81\n0.5,9,9,9,0,0,0\n",
        )
        .unwrap();
        let frames = load_sequence(&SequenceSource {
            index_path: dir.path().join("frames.csv"),
            imu_path: Some(dir.path().join("imu.csv")),
        })
        .unwrap();
        assert_eq!(frames.len(), 3);
        assert!(frames[0].imu_window().is_none());
        assert_eq!(frames[1].imu_window().unwrap().len(), 2);
        assert_eq!(frames[2].imu_window().unwrap().len(), 1);
        assert_eq!(frames[2].pixels().unwrap().get_pixel(0, 0)[0], 100);

        let m = characterize_sequence("s", &frames, &MetricSet::default()).unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, write_matrix_csv(&m)).unwrap();
        assert_eq!(read_matrix_csv("s", &path).unwrap(), m);
    }

    #[test]
    fn bad_imu_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("imu.csv");
        std::fs::write(&p, "0.0,1,2,3,4,5,6\n0.1,1,2\n").unwrap();
        match load_imu_csv(&p) {
            Err(CharacterizationError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
