use super::{align, associate, AlignMode, Result, Trajectory, TrajectoryError};
use crate::par;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

/// Fewest matched poses for which an alignment, and hence an ATE, exists.
pub const MIN_ALIGNABLE_POSES: usize = 3;

/// Translational RMSE after least-squares alignment of paired points.
pub fn ate_from_points(
    estimate: &[Vector3<f64>],
    truth: &[Vector3<f64>],
    mode: AlignMode,
) -> Result<f64> {
    let fit = align(estimate, truth, mode)?;
    Ok((fit.sse(estimate, truth) / estimate.len() as f64).sqrt())
}

/// Absolute trajectory error: associate by timestamp, align, take the RMSE of
/// the translational residuals.
pub fn compute_ate(
    estimate: &Trajectory,
    ground_truth: &Trajectory,
    mode: AlignMode,
    max_time_offset: f64,
) -> Result<f64> {
    let assoc = associate(estimate, ground_truth, max_time_offset)?;
    let (est, truth) = paired_points(estimate, ground_truth, &assoc.pairs);
    ate_from_points(&est, &truth, mode)
}

fn paired_points(
    estimate: &Trajectory,
    ground_truth: &Trajectory,
    pairs: &[(usize, usize)],
) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    pairs
        .iter()
        .map(|&(i, j)| {
            (
                estimate.poses()[i].translation,
                ground_truth.poses()[j].translation,
            )
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// Fewer than [`MIN_ALIGNABLE_POSES`] matched poses in the prefix.
    TooFewPoses,
    /// All matched poses of the prefix coincide.
    Degenerate,
}

/// One prefix `[1, k]` of a keyframe trajectory and its ATE label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTrajectoryExample {
    pub sequence_id: String,
    pub cutoff_k: usize,
    /// `None` when the prefix was skipped.
    pub ate: Option<f64>,
    pub skipped: Option<SkipReason>,
    /// Timestamp of keyframe `k`.
    pub end_timestamp: f64,
}

impl SubTrajectoryExample {
    /// 1-based inclusive keyframe range covered by this example.
    pub fn frame_range(&self) -> RangeInclusive<usize> {
        1..=self.cutoff_k
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

/// Expand a trajectory of `K` keyframes into `K` prefix examples, each
/// labelled with the ATE of keyframes `1..=k`. Prefixes that cannot be
/// aligned are emitted with a skip reason instead of a label.
pub fn generate_subtrajectory_examples(
    sequence_id: &str,
    estimate: &Trajectory,
    ground_truth: &Trajectory,
    mode: AlignMode,
    max_time_offset: f64,
) -> Result<Vec<SubTrajectoryExample>> {
    let assoc = associate(estimate, ground_truth, max_time_offset)?;
    let (est, truth) = paired_points(estimate, ground_truth, &assoc.pairs);
    let est_index: Vec<usize> = assoc.pairs.iter().map(|&(i, _)| i).collect();

    let examples = par::map_range(estimate.len(), |k0| {
        let k = k0 + 1;
        // Pairs of a greedy association for a prefix are a prefix of the pairs.
        let used = est_index.partition_point(|&i| i < k);
        let (ate, skipped) = if used < MIN_ALIGNABLE_POSES {
            (None, Some(SkipReason::TooFewPoses))
        } else {
            match ate_from_points(&est[..used], &truth[..used], mode) {
                Ok(v) => (Some(v), None),
                Err(TrajectoryError::DegenerateGeometry) => (None, Some(SkipReason::Degenerate)),
                Err(e) => return Err(e),
            }
        };
        Ok(SubTrajectoryExample {
            sequence_id: sequence_id.to_string(),
            cutoff_k: k,
            ate,
            skipped,
            end_timestamp: estimate.poses()[k0].timestamp,
        })
    });
    examples.into_iter().collect()
}
