use super::{Dataset, FeaturesError, Result};
use crate::par;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PMCC_THRESHOLD: f64 = 0.95;

/// A Pearson correlation; `degenerate` is set (and `r` is 0) when either
/// input has zero variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub r: f64,
    pub degenerate: bool,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<Pearson> {
    if a.len() != b.len() {
        return Err(FeaturesError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(FeaturesError::TooShort {
            needed: 2,
            got: a.len(),
        });
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(a) || constant(b) {
        return Ok(Pearson {
            r: 0.0,
            degenerate: true,
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Ok(Pearson {
        r: (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Which features survive correlated-feature pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub threshold: f64,
    /// Correlated groups with two or more members; the first member is kept.
    pub groups: Vec<Vec<usize>>,
    pub kept_indices: Vec<usize>,
    /// Zero-variance features removed before grouping.
    #[serde(default)]
    pub dropped_constant: Vec<usize>,
}

impl FeatureMask {
    pub fn identity(width: usize) -> Self {
        Self {
            threshold: 1.0,
            groups: Vec::new(),
            kept_indices: (0..width).collect(),
            dropped_constant: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.kept_indices.len()
    }

    /// Select the kept entries of a full-width row.
    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.kept_indices
            .iter()
            .map(|&i| {
                row.get(i).copied().ok_or(FeaturesError::IndexOutOfRange {
                    index: i,
                    width: row.len(),
                })
            })
            .collect()
    }
}

/// Greedy correlated-feature grouping.
///
/// Zero-variance features are dropped. The remaining features are scanned in
/// index order; a feature joins the group of the lowest-indexed keeper whose
/// `|PMCC|` with it exceeds `threshold`, otherwise it becomes a keeper itself.
pub fn decorrelate(dataset: &Dataset, threshold: f64) -> Result<FeatureMask> {
    if dataset.len() < 2 {
        return Err(FeaturesError::TooShort {
            needed: 2,
            got: dataset.len(),
        });
    }
    let columns: Vec<Vec<f64>> = (0..dataset.width()).map(|j| dataset.column(j)).collect();
    // |r| of feature j against every earlier feature.
    let corr: Vec<Vec<Pearson>> = par::map_range(columns.len(), |j| {
        (0..j)
            .map(|i| pearson(&columns[i], &columns[j]))
            .collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let constant: Vec<bool> = columns
        .iter()
        .map(|c| c.iter().all(|&v| v == c[0]))
        .collect();
    let mut keepers: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for j in 0..columns.len() {
        if constant[j] {
            continue;
        }
        match keepers
            .iter()
            .position(|&k| corr[j][k].r.abs() > threshold)
        {
            Some(g) => members[g].push(j),
            None => {
                keepers.push(j);
                members.push(vec![j]);
            }
        }
    }
    let dropped_constant: Vec<usize> = (0..columns.len()).filter(|&j| constant[j]).collect();
    if keepers.is_empty() && !columns.is_empty() {
        // Every feature is constant; keep the first so the mask stays usable.
        keepers.push(0);
    }
    Ok(FeatureMask {
        threshold,
        groups: members.into_iter().filter(|g| g.len() > 1).collect(),
        kept_indices: keepers,
        dropped_constant,
    })
}

/// Project every example onto the kept features.
pub fn apply_mask(dataset: &Dataset, mask: &FeatureMask) -> Result<Dataset> {
    let names = mask
        .kept_indices
        .iter()
        .map(|&i| {
            dataset
                .feature_names()
                .get(i)
                .cloned()
                .ok_or(FeaturesError::IndexOutOfRange {
                    index: i,
                    width: dataset.width(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let examples = dataset
        .examples()
        .iter()
        .map(|e| {
            Ok(super::Example {
                features: mask.project(&e.features)?,
                ..e.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(dataset.testcase_id.clone(), names, examples)
}
