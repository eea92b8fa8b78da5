use super::{MaxFeatures, RegressError, Regressor, Result};
use crate::features::Dataset;
use crate::rng::{self, StreamRng};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Objective differences within this fraction of the node's total squared
/// error count as ties, which are broken by lower feature index, then lower
/// threshold.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    /// Root is at depth 0; a node at `max_depth` is always a leaf.
    pub max_depth: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        super::Hyperparameters::default().tree_params()
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 || self.min_samples_leaf < 1 || self.max_depth < 1 {
            return Err(RegressError::InvalidHyperparameters(format!(
                "min_samples_split={} min_samples_leaf={} max_depth={}",
                self.min_samples_split, self.min_samples_leaf, self.max_depth
            )));
        }
        Ok(())
    }
}

/// Flattened tree node; children are indices into the node list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

/// A CART regression tree; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
    pub width: usize,
}

impl RegressionTree {
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            TreeNode::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Depth of the deepest leaf (a lone root leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value, n_samples } => Some((*value, *n_samples)),
            TreeNode::Split { .. } => None,
        })
    }
}

impl Regressor for RegressionTree {
    fn width(&self) -> usize {
        self.width
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

/// Fit a single tree on the whole dataset. `seed` drives feature subsampling.
pub fn fit_tree(train: &Dataset, params: &TreeParams, seed: u64) -> Result<RegressionTree> {
    params.validate()?;
    if train.is_empty() {
        return Err(RegressError::EmptyDataset);
    }
    let columns: Vec<Vec<f64>> = (0..train.width()).map(|j| train.column(j)).collect();
    let targets = train.targets();
    let mut samples: Vec<usize> = (0..train.len()).collect();
    let mut feature_rng = rng::stream(seed, "tree-features", 0);
    Ok(grow(&columns, &targets, &mut samples, params, &mut feature_rng))
}

/// Grow a tree over `samples` (indices into the columns; repeats allowed).
pub(crate) fn grow(
    columns: &[Vec<f64>],
    targets: &[f64],
    samples: &mut [usize],
    params: &TreeParams,
    feature_rng: &mut StreamRng,
) -> RegressionTree {
    let mut builder = Builder {
        columns,
        targets,
        params,
        rng: feature_rng,
        nodes: Vec::new(),
        scratch: Vec::with_capacity(samples.len()),
    };
    builder.build(samples, 0);
    RegressionTree {
        nodes: builder.nodes,
        width: columns.len(),
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    objective: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate, tolerance: f64) -> bool {
        if self.objective < other.objective - tolerance {
            return true;
        }
        if self.objective > other.objective + tolerance {
            return false;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    targets: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut StreamRng,
    nodes: Vec<TreeNode>,
    scratch: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let n = samples.len();
        let mean = samples.iter().map(|&i| self.targets[i]).sum::<f64>() / n as f64;
        self.nodes.push(TreeNode::Leaf {
            value: mean,
            n_samples: n,
        });

        let first = self.targets[samples[0]];
        let constant = samples.iter().all(|&i| self.targets[i] == first);
        if constant
            || depth >= self.params.max_depth
            || n < self.params.min_samples_split
            || n < 2 * self.params.min_samples_leaf
        {
            return id;
        }
        let Some(best) = self.best_split(samples, mean) else {
            return id;
        };

        // Stable partition: left = x <= threshold.
        let col = &self.columns[best.feature];
        let mut left: Vec<usize> = Vec::with_capacity(n);
        let mut right: Vec<usize> = Vec::with_capacity(n);
        for &i in samples.iter() {
            if col[i] <= best.threshold {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        let n_left = left.len();
        samples[..n_left].copy_from_slice(&left);
        samples[n_left..].copy_from_slice(&right);
        let (ls, rs) = samples.split_at_mut(n_left);
        let l = self.build(ls, depth + 1);
        let r = self.build(rs, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }

    fn best_split(&mut self, samples: &[usize], mean: f64) -> Option<Candidate> {
        let width = self.columns.len();
        let wanted = self.params.max_features.count(width);
        let order: Vec<usize> = if wanted >= width {
            (0..width).collect()
        } else {
            let mut all: Vec<usize> = (0..width).collect();
            all.shuffle(self.rng);
            all
        };
        let node_sse: f64 = samples
            .iter()
            .map(|&i| (self.targets[i] - mean).powi(2))
            .sum();
        let tolerance = TIE_TOLERANCE * node_sse.max(f64::MIN_POSITIVE);

        let mut best: Option<Candidate> = None;
        for (visited, &f) in order.iter().enumerate() {
            // Past the quota, keep drawing features only until one splits.
            if visited >= wanted && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(f, samples, mean, tolerance) {
                if best.is_none_or(|b| c.beats(&b, tolerance)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_split_on(
        &mut self,
        feature: usize,
        samples: &[usize],
        mean: f64,
        tolerance: f64,
    ) -> Option<Candidate> {
        let col = &self.columns[feature];
        self.scratch.clear();
        self.scratch
            .extend(samples.iter().map(|&i| (col[i], self.targets[i] - mean)));
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let pairs = &self.scratch;
        let n = pairs.len();
        let min_leaf = self.params.min_samples_leaf;

        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
        let (mut sum_l, mut sq_l) = (0.0, 0.0);
        let mut best: Option<Candidate> = None;
        for i in 1..n {
            let (x_prev, y_prev) = pairs[i - 1];
            sum_l += y_prev;
            sq_l += y_prev * y_prev;
            let n_l = i;
            let n_r = n - i;
            if n_l < min_leaf || n_r < min_leaf || x_prev >= pairs[i].0 {
                continue;
            }
            let sum_r = total - sum_l;
            let sq_r = total_sq - sq_l;
            let objective =
                (sq_l - sum_l * sum_l / n_l as f64) + (sq_r - sum_r * sum_r / n_r as f64);
            let x_next = pairs[i].0;
            let mut threshold = x_prev + (x_next - x_prev) / 2.0;
            if threshold >= x_next {
                threshold = x_prev;
            }
            let c = Candidate {
                objective,
                feature,
                threshold,
            };
            if best.is_none_or(|b| c.beats(&b, tolerance)) {
                best = Some(c);
            }
        }
        best
    }
}
