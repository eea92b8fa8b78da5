use super::{Dataset, FeaturesError, Result};
use sha2::{Digest, Sha256};
use std::ops::Range;

/// Assign whole sequences, in listed order, to the training side until it
/// holds at least `train_fraction * N` examples; the rest form the test side.
pub fn sequential_split(dataset: &Dataset, train_fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(FeaturesError::Split(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let blocks = dataset.sequence_blocks()?;
    if blocks.len() < 2 {
        return Err(FeaturesError::Split(format!(
            "{} sequence(s) cannot populate both sides",
            blocks.len()
        )));
    }
    let target = train_fraction * dataset.len() as f64;
    let mut end = 0usize;
    for (_, r) in &blocks {
        if end as f64 >= target - 1e-9 {
            break;
        }
        end = r.end;
    }
    if end == dataset.len() {
        return Err(FeaturesError::Split(format!(
            "train fraction {train_fraction} leaves no sequence for testing"
        )));
    }
    Ok((dataset.slice(0..end), dataset.slice(end..dataset.len())))
}

/// Split into `k` contiguous, sequence-respecting folds of roughly equal
/// example count. Returns example ranges.
pub fn contiguous_folds(dataset: &Dataset, k: usize) -> Result<Vec<Range<usize>>> {
    let blocks = dataset.sequence_blocks()?;
    if k < 2 || blocks.len() < k {
        return Err(FeaturesError::Split(format!(
            "{} sequence(s) cannot form {k} folds",
            blocks.len()
        )));
    }
    let n = dataset.len() as f64;
    let by_midpoint: Vec<usize> = blocks
        .iter()
        .map(|(_, r)| {
            let mid = (r.start + r.end) as f64 / 2.0;
            ((mid / n * k as f64) as usize).min(k - 1)
        })
        .collect();
    let all_used = (0..k).all(|f| by_midpoint.contains(&f));
    let assignment: Vec<usize> = if all_used {
        by_midpoint
    } else {
        (0..blocks.len()).map(|i| i * k / blocks.len()).collect()
    };
    let mut folds: Vec<Range<usize>> = Vec::with_capacity(k);
    for ((_, r), f) in blocks.iter().zip(assignment) {
        if f == folds.len() {
            folds.push(r.clone());
        } else {
            folds[f].end = r.end;
        }
    }
    Ok(folds)
}

/// Short digest of which examples landed on each side of a split.
pub fn partition_hash(train: &Dataset, test: &Dataset) -> String {
    let mut h = Sha256::new();
    for (tag, d) in [("train", train), ("test", test)] {
        h.update(tag.as_bytes());
        for e in d.examples() {
            h.update(format!("\n{}#{}", e.sequence_id, e.cutoff_k).as_bytes());
        }
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::test_support::dataset_from;

    fn ten_by_ten() -> Dataset {
        dataset_from(
            (0..100).map(|i| vec![i as f64]).collect(),
            (0..100).map(|i| i as f64).collect(),
            10,
        )
    }

    fn n_sequences(d: &Dataset) -> usize {
        d.sequence_blocks().unwrap().len()
    }

    #[test]
    fn seventy_thirty() {
        let (train, test) = sequential_split(&ten_by_ten(), 0.7).unwrap();
        assert_eq!((n_sequences(&train), n_sequences(&test)), (7, 3));
        assert_eq!(train.len(), 70);
    }

    #[test]
    fn twenty_eighty() {
        let (train, test) = sequential_split(&ten_by_ten(), 0.2).unwrap();
        assert_eq!((n_sequences(&train), n_sequences(&test)), (2, 8));
    }

    #[test]
    fn all_fractions_keep_order_and_disjointness() {
        let d = ten_by_ten();
        for f in 1..10 {
            let (train, test) = sequential_split(&d, f as f64 / 10.0).unwrap();
            assert_eq!(n_sequences(&train), f);
            let joined = train.concat(&test).unwrap();
            assert_eq!(joined, d);
            let train_ids: Vec<_> = train.sequence_blocks().unwrap().into_iter().map(|b| b.0).collect();
            for (id, _) in test.sequence_blocks().unwrap() {
                assert!(!train_ids.contains(&id));
            }
        }
    }

    #[test]
    fn single_sequence_is_unsplittable() {
        let d = dataset_from(vec![vec![0.0]; 10], vec![1.0; 10], 10);
        assert!(matches!(sequential_split(&d, 0.5), Err(FeaturesError::Split(_))));
    }

    #[test]
    fn folds_are_contiguous_and_cover() {
        let d = ten_by_ten();
        let folds = contiguous_folds(&d, 3).unwrap();
        assert_eq!(folds.len(), 3);
        assert_eq!(folds[0].start, 0);
        assert_eq!(folds[2].end, 100);
        for w in folds.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert_eq!(w[0].end % 10, 0);
        }
        assert!(contiguous_folds(&d.slice(0..20), 3).is_err());
    }

    #[test]
    fn uneven_sequences_still_fill_every_fold() {
        // One huge sequence followed by two tiny ones.
        let mut rows = vec![vec![0.0]; 100];
        rows.extend(vec![vec![1.0]; 4]);
        let mut d = dataset_from(rows, vec![1.0; 104], 100);
        let mut ex = d.examples().to_vec();
        ex[102].sequence_id = "seq002".into();
        ex[103].sequence_id = "seq002".into();
        d = Dataset::new("t", d.feature_names().to_vec(), ex).unwrap();
        let folds = contiguous_folds(&d, 3).unwrap();
        assert_eq!(folds, vec![0..100, 100..102, 102..104]);
    }

    #[test]
    fn partition_hash_tracks_membership() {
        let d = ten_by_ten();
        let (a, b) = sequential_split(&d, 0.7).unwrap();
        let (c, e) = sequential_split(&d, 0.6).unwrap();
        assert_eq!(partition_hash(&a, &b), partition_hash(&a, &b));
        assert_ne!(partition_hash(&a, &b), partition_hash(&c, &e));
    }
}
