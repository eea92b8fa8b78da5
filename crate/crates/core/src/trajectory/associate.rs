use super::{Result, Trajectory, TrajectoryError};

/// Default maximum timestamp difference for a matched pose pair, in seconds.
pub const DEFAULT_MAX_TIME_OFFSET: f64 = 0.02;

/// Monotone matching between estimate and ground-truth poses.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    /// `(estimate index, ground-truth index)`, strictly increasing on both sides.
    pub pairs: Vec<(usize, usize)>,
    pub max_time_offset: f64,
}

impl Association {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Greedy nearest-timestamp matching in estimate order.
///
/// Each estimate pose is matched to the closest not-yet-passed ground-truth
/// pose (ties go to the earlier one) and kept only if within
/// `max_time_offset`. Because the scan is greedy in estimate order, the pairs
/// for any estimate prefix are a prefix of the full pair list.
pub fn associate(
    estimate: &Trajectory,
    ground_truth: &Trajectory,
    max_time_offset: f64,
) -> Result<Association> {
    let truth_ts = ground_truth.timestamps();
    let mut next = 0usize;
    let mut pairs = Vec::new();
    for (i, pose) in estimate.poses().iter().enumerate() {
        if next >= truth_ts.len() {
            break;
        }
        let t = pose.timestamp;
        let j = next + truth_ts[next..].partition_point(|&s| s < t);
        let mut best: Option<(usize, f64)> = None;
        for cand in [j.checked_sub(1), Some(j)].into_iter().flatten() {
            if cand < next || cand >= truth_ts.len() {
                continue;
            }
            let dt = (truth_ts[cand] - t).abs();
            if best.is_none_or(|(_, d)| dt < d) {
                best = Some((cand, dt));
            }
        }
        if let Some((j, dt)) = best {
            if dt <= max_time_offset {
                pairs.push((i, j));
                next = j + 1;
            }
        }
    }
    if pairs.is_empty() {
        return Err(TrajectoryError::AssociationFailure { max_time_offset });
    }
    Ok(Association {
        pairs,
        max_time_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{FrameKind, Pose};
    use proptest::prelude::*;

    fn traj(ts: &[f64]) -> Trajectory {
        Trajectory::new(
            ts.iter().map(|&t| Pose::identity(t)).collect(),
            FrameKind::Estimate,
        )
        .unwrap()
    }

    /// Enumerate every monotone matching within the offset; prefer the most
    /// pairs, then the smallest total offset.
    fn brute_force(est: &[f64], gt: &[f64], max: f64) -> Vec<(usize, usize)> {
        fn rec(
            est: &[f64],
            gt: &[f64],
            max: f64,
            i: usize,
            j0: usize,
            cur: &mut Vec<(usize, usize)>,
            best: &mut (Vec<(usize, usize)>, f64),
        ) {
            if i == est.len() {
                let cost: f64 = cur.iter().map(|&(a, b)| (est[a] - gt[b]).abs()).sum();
                if cur.len() > best.0.len() || (cur.len() == best.0.len() && cost < best.1) {
                    *best = (cur.clone(), cost);
                }
                return;
            }
            rec(est, gt, max, i + 1, j0, cur, best);
            for j in j0..gt.len() {
                if (est[i] - gt[j]).abs() <= max {
                    cur.push((i, j));
                    rec(est, gt, max, i + 1, j + 1, cur, best);
                    cur.pop();
                }
            }
        }
        let mut best = (Vec::new(), f64::INFINITY);
        rec(est, gt, max, 0, 0, &mut Vec::new(), &mut best);
        best.0
    }

    #[test]
    fn identical_timestamps_pair_one_to_one() {
        let ts: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let a = associate(&traj(&ts), &traj(&ts), 0.01).unwrap();
        assert_eq!(a.pairs, (0..10).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn shifted_beyond_offset_fails() {
        let gt: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let est: Vec<f64> = gt.iter().map(|t| t + 0.5).collect();
        assert!(matches!(
            associate(&traj(&est), &traj(&gt), 0.02),
            Err(TrajectoryError::AssociationFailure { .. })
        ));
    }

    #[test]
    fn nearest_match_agrees_with_enumeration() {
        let est = [0.0, 1.0];
        let gt = [0.001, 0.9, 1.001];
        let expected = brute_force(&est, &gt, 0.01);
        assert_eq!(expected, vec![(0, 0), (1, 2)]);
        let a = associate(&traj(&est), &traj(&gt), 0.01).unwrap();
        assert_eq!(a.pairs, expected);
    }

    proptest! {
        #[test]
        fn pairs_are_monotone_and_within_offset(
            est in proptest::collection::btree_set(0u32..500, 1..40),
            gt in proptest::collection::btree_set(0u32..500, 1..40),
        ) {
            let est: Vec<f64> = est.into_iter().map(|v| v as f64 * 0.01).collect();
            let gt: Vec<f64> = gt.into_iter().map(|v| v as f64 * 0.01).collect();
            if let Ok(a) = associate(&traj(&est), &traj(&gt), 0.025) {
                for w in a.pairs.windows(2) {
                    prop_assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
                }
                for &(i, j) in &a.pairs {
                    prop_assert!((est[i] - gt[j]).abs() <= 0.025);
                }
            }
        }
    }
}
