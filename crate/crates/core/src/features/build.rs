use super::{Dataset, Example, FeaturesError, Result};
use crate::characterization::CharacterizationMatrix;
use crate::par;
use crate::pooling::{pool_prefix, PoolingFunction};
use crate::trajectory::SubTrajectoryExample;

/// A sequence's characterization matrix and its prefix labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledSequence {
    pub matrix: CharacterizationMatrix,
    pub examples: Vec<SubTrajectoryExample>,
    /// Matrix columns covered by each example.
    pub frame_counts: Vec<usize>,
}

impl LabelledSequence {
    /// One frame per keyframe: example `k` covers the first `k` columns.
    pub fn keyframe_aligned(matrix: CharacterizationMatrix, examples: Vec<SubTrajectoryExample>) -> Self {
        let frame_counts = examples.iter().map(|e| e.cutoff_k).collect();
        Self {
            matrix,
            examples,
            frame_counts,
        }
    }

    /// Example `k` covers every frame stamped at or before its last keyframe
    /// (within `tolerance` seconds).
    pub fn by_timestamp(
        matrix: CharacterizationMatrix,
        examples: Vec<SubTrajectoryExample>,
        frame_times: &[f64],
        tolerance: f64,
    ) -> Self {
        let frame_counts = examples
            .iter()
            .map(|e| frame_times.partition_point(|&t| t <= e.end_timestamp + tolerance))
            .collect();
        Self {
            matrix,
            examples,
            frame_counts,
        }
    }
}

/// Pool the prefix of every labelled example. Skipped prefixes are dropped;
/// sequences keep their listed order.
pub fn build_dataset(
    testcase_id: &str,
    sequences: &[LabelledSequence],
    f: &PoolingFunction,
) -> Result<Dataset> {
    let Some(first) = sequences.first() else {
        return Err(FeaturesError::InvalidExample("no sequences".into()));
    };
    let names = f.feature_names(first.matrix.metric_names());
    let mut jobs = Vec::new();
    for s in sequences {
        if s.matrix.metric_names() != first.matrix.metric_names() {
            return Err(FeaturesError::InvalidExample(format!(
                "sequence `{}` uses a different metric set",
                s.matrix.sequence_id
            )));
        }
        if s.frame_counts.len() != s.examples.len() {
            return Err(FeaturesError::LengthMismatch(s.frame_counts.len(), s.examples.len()));
        }
        for (e, &n) in s.examples.iter().zip(&s.frame_counts) {
            if e.is_skipped() {
                continue;
            }
            if n == 0 || n > s.matrix.n_frames() {
                return Err(FeaturesError::InvalidExample(format!(
                    "sequence `{}`: keyframe {} covers {n} of {} characterized frames",
                    e.sequence_id,
                    e.cutoff_k,
                    s.matrix.n_frames()
                )));
            }
            jobs.push((&s.matrix, e, n));
        }
    }
    let examples = par::map(&jobs, |(m, e, n)| Example {
        sequence_id: e.sequence_id.clone(),
        cutoff_k: e.cutoff_k,
        ate: e.ate.expect("unskipped example has a label"),
        features: pool_prefix(m, *n, f).values,
    });
    Dataset::new(testcase_id, names, examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pooling::PoolKind;
    use crate::trajectory::SkipReason;

    fn seq(id: &str, k: usize) -> LabelledSequence {
        let matrix = CharacterizationMatrix::from_rows(
            id,
            vec!["a".into(), "b".into()],
            vec![(0..k).map(|j| j as f64).collect(), vec![2.0; k]],
        )
        .unwrap();
        let examples = (1..=k)
            .map(|c| SubTrajectoryExample {
                sequence_id: id.into(),
                cutoff_k: c,
                ate: (c >= 3).then_some(c as f64),
                skipped: (c < 3).then_some(SkipReason::TooFewPoses),
                end_timestamp: c as f64,
            })
            .collect();
        LabelledSequence::keyframe_aligned(matrix, examples)
    }

    #[test]
    fn one_row_per_labelled_prefix() {
        let d = build_dataset("tc", &[seq("s0", 10), seq("s1", 20), seq("s2", 30)], &PoolingFunction::new(PoolKind::Mean))
            .unwrap();
        assert_eq!(d.len(), 60 - 3 * 2);
        assert_eq!(d.feature_names(), ["a:mean", "b:mean"]);
        let e = &d.examples()[0];
        assert_eq!((e.cutoff_k, e.ate), (3, 3.0));
        assert_eq!(e.features, vec![1.0, 2.0]);
    }

    #[test]
    fn concat_all_has_eleven_m_columns() {
        let d = build_dataset("tc", &[seq("s0", 5)], &PoolingFunction::new(PoolKind::ConcatAll)).unwrap();
        assert_eq!(d.width(), 22);
    }

    #[test]
    fn timestamps_select_frames() {
        let s = seq("s0", 6);
        // Frames every 0.5 s, keyframe k at t = k.
        let times: Vec<f64> = (0..6).map(|j| 0.5 * j as f64 + 0.5).collect();
        let t = LabelledSequence::by_timestamp(s.matrix, s.examples, &times, 1e-6);
        assert_eq!(t.frame_counts, vec![2, 4, 6, 6, 6, 6]);
        let d = build_dataset("tc", &[t], &PoolingFunction::new(PoolKind::Mean)).unwrap();
        // Keyframe 3 at t = 3 covers all six frames.
        assert_eq!(d.examples()[0].features, vec![2.5, 2.0]);
    }

    #[test]
    fn cutoff_beyond_matrix_is_rejected() {
        let mut s = seq("s0", 5);
        s.matrix = s.matrix.prefix(4).unwrap();
        assert!(build_dataset("tc", &[s], &PoolingFunction::new(PoolKind::Mean)).is_err());
    }
}
