//! Per-frame characterization metrics and the m x n characterization matrix.

mod io;
mod metrics;

pub use io::{
    load_frame_index, load_imu_csv, load_sequence, read_matrix_csv, write_matrix_csv, FrameRecord, SequenceSource,
};
pub use metrics::{Metric, MetricSet};

use crate::par;
use image::GrayImage;
use nalgebra::Vector3;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CharacterizationError {
    #[error("frame has neither pixels nor IMU samples")]
    EmptyFrame,
    #[error("image is {0}x{1}, smaller than the 8x8 minimum")]
    ImageTooSmall(u32, u32),
    #[error("no enabled metric applies to frame {frame}")]
    NoApplicableMetric { frame: usize },
    #[error("metric set is empty")]
    EmptyMetricSet,
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<CharacterizationError>,
    },
    #[error("failed to read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("matrix is inconsistent: {0}")]
    Shape(String),
}

pub type Result<T, E = CharacterizationError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// rad/s
    pub gyro: Vector3<f64>,
    /// m/s^2
    pub accel: Vector3<f64>,
}

/// One raw measurement: a grayscale image, the IMU samples since the previous
/// frame, or both.
#[derive(Debug, Clone)]
pub struct Frame {
    pub timestamp: f64,
    pixels: Option<GrayImage>,
    imu_window: Option<Vec<ImuSample>>,
}

impl Frame {
    pub fn new(
        timestamp: f64,
        pixels: Option<GrayImage>,
        imu_window: Option<Vec<ImuSample>>,
    ) -> Result<Self> {
        let imu_window = imu_window.filter(|w| !w.is_empty());
        if pixels.is_none() && imu_window.is_none() {
            return Err(CharacterizationError::EmptyFrame);
        }
        if let Some(img) = &pixels {
            if img.width() < 8 || img.height() < 8 {
                return Err(CharacterizationError::ImageTooSmall(
                    img.width(),
                    img.height(),
                ));
            }
        }
        Ok(Self {
            timestamp,
            pixels,
            imu_window,
        })
    }

    pub fn pixels(&self) -> Option<&GrayImage> {
        self.pixels.as_ref()
    }

    pub fn imu_window(&self) -> Option<&[ImuSample]> {
        self.imu_window.as_deref()
    }
}

/// Metric values of a single frame; `covered[i]` is false when metric `i`
/// had no input modality and was filled with the neutral value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCharacterization {
    pub values: Vec<f64>,
    pub covered: Vec<bool>,
}

/// Compute the enabled metrics for one frame, in metric-set order.
pub fn characterize_frame(frame: &Frame, metrics: &MetricSet) -> Result<FrameCharacterization> {
    if metrics.is_empty() {
        return Err(CharacterizationError::EmptyMetricSet);
    }
    let mut values = Vec::with_capacity(metrics.len());
    let mut covered = Vec::with_capacity(metrics.len());
    for metric in metrics.iter() {
        match metric.evaluate(frame) {
            Some(v) => {
                values.push(v);
                covered.push(true);
            }
            None => {
                values.push(0.0);
                covered.push(false);
            }
        }
    }
    if !covered.iter().any(|&c| c) {
        return Err(CharacterizationError::NoApplicableMetric { frame: 0 });
    }
    Ok(FrameCharacterization { values, covered })
}

/// An m x n matrix: one row per metric, one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationMatrix {
    /// Row-major, `m * n` values.
    values: Vec<f64>,
    n_frames: usize,
    metric_names: Vec<String>,
    pub sequence_id: String,
}

impl CharacterizationMatrix {
    /// Build from rows (one per metric).
    pub fn from_rows(
        sequence_id: impl Into<String>,
        metric_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != metric_names.len() || rows.is_empty() {
            return Err(CharacterizationError::Shape(format!(
                "{} rows for {} metric names",
                rows.len(),
                metric_names.len()
            )));
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(CharacterizationError::Shape("ragged or empty rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CharacterizationError::Shape("non-finite entry".into()));
        }
        Ok(Self {
            values: rows.into_iter().flatten().collect(),
            n_frames: n,
            metric_names,
            sequence_id: sequence_id.into(),
        })
    }

    pub fn n_metrics(&self) -> usize {
        self.metric_names.len()
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn metric_names(&self) -> &[String] {
        &self.metric_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_frames..(i + 1) * self.n_frames]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, f64> {
        self.values.chunks(self.n_frames)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// The matrix of the first `k` frames.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n_frames {
            return Err(CharacterizationError::Shape(format!(
                "prefix {k} of {} frames",
                self.n_frames
            )));
        }
        Self::from_rows(
            self.sequence_id.clone(),
            self.metric_names.clone(),
            self.rows().map(|r| r[..k].to_vec()).collect(),
        )
    }
}

/// Characterize every frame; column `j` is frame `j`.
pub fn characterize_sequence(
    sequence_id: &str,
    frames: &[Frame],
    metrics: &MetricSet,
) -> Result<CharacterizationMatrix> {
    if frames.is_empty() {
        return Err(CharacterizationError::EmptySequence);
    }
    let columns = par::map(frames, |f| characterize_frame(f, metrics));
    let columns = columns
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            c.map_err(|e| match e {
                CharacterizationError::NoApplicableMetric { .. } => {
                    CharacterizationError::NoApplicableMetric { frame: j }
                }
                other => CharacterizationError::Frame {
                    frame: j,
                    source: Box::new(other),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..metrics.len())
        .map(|i| columns.iter().map(|c| c.values[i]).collect())
        .collect();
    CharacterizationMatrix::from_rows(sequence_id, metrics.names(), rows)
}
