//! Labelled datasets of pooled descriptors, correlated-feature pruning and
//! order-preserving train/test splits.

mod build;
mod correlation;
mod io;
mod split;

pub use build::{build_dataset, LabelledSequence};
pub use correlation::{apply_mask, decorrelate, pearson, FeatureMask, Pearson, DEFAULT_PMCC_THRESHOLD};
pub use io::{read_dataset_csv, write_dataset_csv};
pub use split::{contiguous_folds, partition_hash, sequential_split};

use std::ops::Range;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeaturesError {
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("feature index {index} out of range for width {width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("examples of sequence `{0}` are not contiguous")]
    NonContiguousSequence(String),
    #[error("cannot split: {0}")]
    Split(String),
    #[error("invalid example: {0}")]
    InvalidExample(String),
    #[error("failed to read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = FeaturesError> = std::result::Result<T, E>;

/// One `(descriptor, ATE)` pair with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub sequence_id: String,
    pub cutoff_k: usize,
    pub ate: f64,
    pub features: Vec<f64>,
}

/// Examples sharing one feature layout. Examples of the same sequence are
/// expected to be contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub testcase_id: String,
    feature_names: Vec<String>,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(
        testcase_id: impl Into<String>,
        feature_names: Vec<String>,
        examples: Vec<Example>,
    ) -> Result<Self> {
        let width = feature_names.len();
        for e in &examples {
            if e.features.len() != width {
                return Err(FeaturesError::InvalidExample(format!(
                    "{}#{} has {} features, expected {width}",
                    e.sequence_id,
                    e.cutoff_k,
                    e.features.len()
                )));
            }
            if !(e.ate >= 0.0 && e.ate.is_finite()) {
                return Err(FeaturesError::InvalidExample(format!(
                    "{}#{} has ATE {}",
                    e.sequence_id, e.cutoff_k, e.ate
                )));
            }
            if e.features.iter().any(|v| !v.is_finite()) {
                return Err(FeaturesError::InvalidExample(format!(
                    "{}#{} has a non-finite feature",
                    e.sequence_id, e.cutoff_k
                )));
            }
        }
        Ok(Self {
            testcase_id: testcase_id.into(),
            feature_names,
            examples,
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.examples.iter().map(|e| e.ate).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.examples.iter().map(|e| e.features[j]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.examples.iter().map(|e| e.features.as_slice())
    }

    /// A dataset of the selected examples, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            testcase_id: self.testcase_id.clone(),
            feature_names: self.feature_names.clone(),
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            testcase_id: self.testcase_id.clone(),
            feature_names: self.feature_names.clone(),
            examples: self.examples[range].to_vec(),
        }
    }

    /// Concatenate two datasets with identical layouts.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.feature_names != other.feature_names {
            return Err(FeaturesError::LengthMismatch(self.width(), other.width()));
        }
        let mut examples = self.examples.clone();
        examples.extend(other.examples.iter().cloned());
        Ok(Self {
            testcase_id: self.testcase_id.clone(),
            feature_names: self.feature_names.clone(),
            examples,
        })
    }

    /// Contiguous `(sequence_id, example range)` blocks in listed order.
    pub fn sequence_blocks(&self) -> Result<Vec<(String, Range<usize>)>> {
        let mut blocks: Vec<(String, Range<usize>)> = Vec::new();
        for (i, e) in self.examples.iter().enumerate() {
            match blocks.last_mut() {
                Some((id, r)) if *id == e.sequence_id => r.end = i + 1,
                _ => {
                    if blocks.iter().any(|(id, _)| *id == e.sequence_id) {
                        return Err(FeaturesError::NonContiguousSequence(e.sequence_id.clone()));
                    }
                    blocks.push((e.sequence_id.clone(), i..i + 1));
                }
            }
        }
        Ok(blocks)
    }
}
