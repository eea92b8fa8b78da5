//! 1-D global pooling: reduce each row of a characterization matrix to one
//! scalar, turning a variable-length sequence into a fixed-length descriptor.

use crate::characterization::CharacterizationMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    Mean,
    Median,
    Min,
    Max,
    /// Population standard deviation.
    Std,
    /// Population skewness `m3 / m2^1.5`; 0 for constant rows.
    Skewness,
    /// Excess kurtosis `m4 / m2^2 - 3`; 0 for constant rows.
    Kurtosis,
    /// Shannon entropy (bits) of the row histogram.
    ShannonEntropy,
    /// Simpson index `sum p_b^2`.
    Simpson,
    /// `1 - sum p_b^2`.
    GiniSimpson,
    /// `1 / sum p_b^2`.
    InverseSimpson,
    /// The 11 single pools concatenated in order.
    ConcatAll,
}

impl PoolKind {
    pub const ALL: [PoolKind; 12] = [
        PoolKind::Mean,
        PoolKind::Median,
        PoolKind::Min,
        PoolKind::Max,
        PoolKind::Std,
        PoolKind::Skewness,
        PoolKind::Kurtosis,
        PoolKind::ShannonEntropy,
        PoolKind::Simpson,
        PoolKind::GiniSimpson,
        PoolKind::InverseSimpson,
        PoolKind::ConcatAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PoolKind::Mean => "mean",
            PoolKind::Median => "median",
            PoolKind::Min => "min",
            PoolKind::Max => "max",
            PoolKind::Std => "std",
            PoolKind::Skewness => "skewness",
            PoolKind::Kurtosis => "kurtosis",
            PoolKind::ShannonEntropy => "shannon_entropy",
            PoolKind::Simpson => "simpson",
            PoolKind::GiniSimpson => "gini_simpson",
            PoolKind::InverseSimpson => "inverse_simpson",
            PoolKind::ConcatAll => "concat_all",
        }
    }

    /// The 11 single (non-concatenated) kinds.
    pub fn singles() -> &'static [PoolKind] {
        &Self::ALL[..11]
    }

    pub fn is_diversity(self) -> bool {
        matches!(
            self,
            PoolKind::ShannonEntropy
                | PoolKind::Simpson
                | PoolKind::GiniSimpson
                | PoolKind::InverseSimpson
        )
    }
}

/// All 12 pooling kinds in their fixed order.
pub fn pool_kinds() -> Vec<PoolKind> {
    PoolKind::ALL.to_vec()
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PoolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown pooling kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolingFunction {
    pub kind: PoolKind,
    /// Equal-width bins over `[row min, row max]` for the diversity kinds.
    pub histogram_bins: usize,
}

impl PoolingFunction {
    pub fn new(kind: PoolKind) -> Self {
        Self {
            kind,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
        }
    }

    pub fn with_bins(mut self, bins: usize) -> Self {
        self.histogram_bins = bins.max(1);
        self
    }

    /// Output length for an `m`-row matrix.
    pub fn output_len(&self, m: usize) -> usize {
        match self.kind {
            PoolKind::ConcatAll => 11 * m,
            _ => m,
        }
    }

    /// Reduce a single row with a single (non-concatenated) kind.
    pub fn apply_row(&self, kind: PoolKind, row: &[f64]) -> f64 {
        match kind {
            PoolKind::Mean => row_mean(row),
            PoolKind::Median => median(row),
            PoolKind::Min => row.iter().copied().fold(f64::INFINITY, f64::min),
            PoolKind::Max => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            PoolKind::Std => central_moment(row, 2).sqrt(),
            PoolKind::Skewness => standardized_moment(row, 3),
            PoolKind::Kurtosis => {
                if is_constant(row) {
                    0.0
                } else {
                    standardized_moment(row, 4) - 3.0
                }
            }
            PoolKind::ShannonEntropy => {
                let p = histogram(row, self.histogram_bins);
                p.iter()
                    .filter(|&&q| q > 0.0)
                    .map(|&q| -q * q.log2())
                    .sum::<f64>()
                    .max(0.0)
            }
            PoolKind::Simpson => simpson(row, self.histogram_bins),
            PoolKind::GiniSimpson => 1.0 - simpson(row, self.histogram_bins),
            PoolKind::InverseSimpson => 1.0 / simpson(row, self.histogram_bins),
            PoolKind::ConcatAll => panic!("concat_all is not a single-row pool"),
        }
    }

    /// Pool rows (each non-empty) into feature values.
    pub fn apply_rows<'a>(&self, rows: impl Iterator<Item = &'a [f64]> + Clone) -> Vec<f64> {
        match self.kind {
            PoolKind::ConcatAll => PoolKind::singles()
                .iter()
                .flat_map(|&k| rows.clone().map(move |r| (k, r)))
                .map(|(k, r)| self.apply_row(k, r))
                .collect(),
            k => rows.map(|r| self.apply_row(k, r)).collect(),
        }
    }

    /// Feature labels `<metric>:<pool>` for the given metric names.
    pub fn feature_names(&self, metric_names: &[String]) -> Vec<String> {
        let kinds: &[PoolKind] = match self.kind {
            PoolKind::ConcatAll => PoolKind::singles(),
            _ => std::slice::from_ref(&self.kind),
        };
        kinds
            .iter()
            .flat_map(|k| metric_names.iter().map(move |m| format!("{m}:{k}")))
            .collect()
    }
}

/// A fixed-length pooled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
    pub source_id: String,
}

/// Pool every row of `matrix`.
pub fn pool(matrix: &CharacterizationMatrix, f: &PoolingFunction) -> Descriptor {
    pool_prefix(matrix, matrix.n_frames(), f)
}

/// Pool the first `k` columns of `matrix` (`1 <= k <= n`), which equals
/// pooling `matrix.prefix(k)`.
pub fn pool_prefix(matrix: &CharacterizationMatrix, k: usize, f: &PoolingFunction) -> Descriptor {
    assert!(k >= 1 && k <= matrix.n_frames(), "prefix out of range");
    let rows = matrix.rows().map(|r| &r[..k]);
    Descriptor {
        values: f.apply_rows(rows),
        feature_names: f.feature_names(matrix.metric_names()),
        source_id: matrix.sequence_id.clone(),
    }
}

/// CSV with a `source_id` column followed by one column per feature.
pub fn write_descriptors_csv(descriptors: &[Descriptor]) -> String {
    let mut out = String::from("source_id");
    if let Some(first) = descriptors.first() {
        for n in &first.feature_names {
            out.push(',');
            out.push_str(n);
        }
    }
    out.push('\n');
    for d in descriptors {
        out.push_str(&d.source_id);
        for v in &d.values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

fn row_mean(row: &[f64]) -> f64 {
    row.iter().sum::<f64>() / row.len() as f64
}

fn is_constant(row: &[f64]) -> bool {
    row.iter().all(|&v| v == row[0])
}

fn median(row: &[f64]) -> f64 {
    let mut s = row.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn central_moment(row: &[f64], order: i32) -> f64 {
    let m = row_mean(row);
    row.iter().map(|v| (v - m).powi(order)).sum::<f64>() / row.len() as f64
}

fn standardized_moment(row: &[f64], order: i32) -> f64 {
    if is_constant(row) {
        return 0.0;
    }
    let m2 = central_moment(row, 2);
    central_moment(row, order) / m2.powf(f64::from(order) / 2.0)
}

/// Bin proportions over `[min, max]`; a constant row fills one bin.
fn histogram(row: &[f64], bins: usize) -> Vec<f64> {
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    for &v in row {
        let b = if width > 0.0 {
            (((v - lo) / width * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let n = row.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

fn simpson(row: &[f64], bins: usize) -> f64 {
    histogram(row, bins).iter().map(|p| p * p).sum()
}
