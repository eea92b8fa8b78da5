//! Trajectories, timestamp association, least-squares alignment and
//! absolute trajectory error (ATE).

mod align;
mod associate;
mod ate;
mod tum;

pub use align::{align, AlignMode, AlignmentResult};
pub use associate::{associate, Association, DEFAULT_MAX_TIME_OFFSET};
pub use ate::{
    ate_from_points, compute_ate, generate_subtrajectory_examples, SkipReason,
    SubTrajectoryExample, MIN_ALIGNABLE_POSES,
};
pub use tum::{load_trajectory, parse_tum, write_tum};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trajectory is empty")]
    Empty,
    #[error("timestamps must be strictly increasing (violated at pose {index})")]
    NotIncreasing { index: usize },
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("no pose pairs within {max_time_offset} s of each other")]
    AssociationFailure { max_time_offset: f64 },
    #[error("alignment needs at least 3 point pairs, got {0}")]
    InsufficientData(usize),
    #[error("point sets have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degenerate point geometry (all points coincident)")]
    DegenerateGeometry,
}

pub type Result<T, E = TrajectoryError> = std::result::Result<T, E>;

/// A timestamped 6-DoF pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub timestamp: f64,
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Pose {
    /// Build a pose from a translation and a `(w, x, y, z)` quaternion, which
    /// is normalized.
    pub fn new(timestamp: f64, translation: [f64; 3], quat_wxyz: [f64; 4]) -> Result<Self> {
        if !timestamp.is_finite() {
            return Err(TrajectoryError::InvalidPose("non-finite timestamp".into()));
        }
        if translation.iter().chain(quat_wxyz.iter()).any(|v| !v.is_finite()) {
            return Err(TrajectoryError::InvalidPose("non-finite component".into()));
        }
        let [w, x, y, z] = quat_wxyz;
        let q = Quaternion::new(w, x, y, z);
        if q.norm() < 1e-12 {
            return Err(TrajectoryError::InvalidPose("zero-norm quaternion".into()));
        }
        Ok(Self {
            timestamp,
            translation: Vector3::from(translation),
            rotation: UnitQuaternion::new_normalize(q),
        })
    }

    pub fn identity(timestamp: f64) -> Self {
        Self {
            timestamp,
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Estimate,
    GroundTruth,
}

/// An ordered, non-empty list of poses with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
    kind: FrameKind,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>, kind: FrameKind) -> Result<Self> {
        if poses.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if let Some(i) = poses
            .windows(2)
            .position(|w| w[1].timestamp <= w[0].timestamp)
        {
            return Err(TrajectoryError::NotIncreasing { index: i + 1 });
        }
        Ok(Self { poses, kind })
    }

    /// Sort by timestamp, then validate.
    pub fn from_unsorted(mut poses: Vec<Pose>, kind: FrameKind) -> Result<Self> {
        poses.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Self::new(poses, kind)
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.poses.iter().map(|p| p.timestamp).collect()
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.poses.iter().map(|p| p.translation).collect()
    }

    /// Apply `p -> scale * R * p + t` to every pose (rotations are composed
    /// with `R` as well).
    pub fn transformed(
        &self,
        rotation: &UnitQuaternion<f64>,
        translation: &Vector3<f64>,
        scale: f64,
    ) -> Self {
        let poses = self
            .poses
            .iter()
            .map(|p| Pose {
                timestamp: p.timestamp,
                translation: rotation * p.translation * scale + translation,
                rotation: rotation * p.rotation,
            })
            .collect();
        Self {
            poses,
            kind: self.kind,
        }
    }

    /// A copy relabelled with another frame kind.
    pub fn with_kind(mut self, kind: FrameKind) -> Self {
        self.kind = kind;
        self
    }
}
