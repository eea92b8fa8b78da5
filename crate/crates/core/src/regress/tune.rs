use super::{fit_forest, search_space, Hyperparameters, MaxFeatures, RegressError, Regressor, Result};
use crate::features::{contiguous_folds, Dataset};
use crate::{eval, par, rng};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    pub n_candidates: usize,
    pub k_folds: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            n_candidates: 60,
            k_folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub index: usize,
    pub hyperparameters: Hyperparameters,
    /// R² per fold; `None` where the fold's validation targets are constant
    /// and the predictions are not.
    pub fold_r2: Vec<Option<f64>>,
    /// Mean over the defined folds.
    pub mean_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k_folds: usize,
    pub fold_sizes: Vec<usize>,
    pub candidates: Vec<CandidateReport>,
    pub best_index: usize,
}

impl CvReport {
    pub fn best(&self) -> &CandidateReport {
        &self.candidates[self.best_index]
    }
}

/// Draw one candidate: `n_estimators` log-uniform, `max_depth` uniform, the
/// rest uniform over their sets.
pub fn sample_hyperparameters<R: Rng>(r: &mut R) -> Hyperparameters {
    use search_space::*;
    let (lo, hi) = (N_ESTIMATORS.0 as f64, N_ESTIMATORS.1 as f64);
    let n_estimators = (lo.ln() + r.random::<f64>() * (hi.ln() - lo.ln()))
        .exp()
        .round()
        .clamp(lo, hi) as usize;
    Hyperparameters {
        n_estimators,
        min_samples_split: *MIN_SAMPLES_SPLIT.choose(r).unwrap(),
        min_samples_leaf: *MIN_SAMPLES_LEAF.choose(r).unwrap(),
        max_features: *MaxFeatures::ALL.choose(r).unwrap(),
        max_depth: r.random_range(MAX_DEPTH.0..=MAX_DEPTH.1),
        bootstrap: r.random(),
    }
}

/// Randomized search: `config.n_candidates` draws scored by contiguous
/// k-fold cross validation on `train`.
pub fn tune(train: &Dataset, config: &TuningConfig, seed: u64) -> Result<CvReport> {
    if config.n_candidates == 0 {
        return Err(RegressError::InvalidHyperparameters(
            "n_candidates must be >= 1".into(),
        ));
    }
    let candidates: Vec<Hyperparameters> = (0..config.n_candidates)
        .map(|i| sample_hyperparameters(&mut rng::stream(seed, "tune-candidate", i as u64)))
        .collect();
    tune_candidates(train, &candidates, config.k_folds, seed)
}

/// Score fixed candidates. The fold count drops to the number of sequences
/// when there are fewer than `k_folds`.
pub fn tune_candidates(
    train: &Dataset,
    candidates: &[Hyperparameters],
    k_folds: usize,
    seed: u64,
) -> Result<CvReport> {
    if candidates.is_empty() {
        return Err(RegressError::InvalidHyperparameters("no candidates".into()));
    }
    for c in candidates {
        c.validate()?;
    }
    let n_sequences = train.sequence_blocks()?.len();
    let k = k_folds.min(n_sequences);
    if k < 2 {
        return Err(RegressError::TooFewExamples {
            needed: 2,
            got: n_sequences,
        });
    }
    let folds = contiguous_folds(train, k)?;
    let splits: Vec<(Dataset, Dataset)> = folds
        .iter()
        .map(|r| {
            let fit: Vec<usize> = (0..train.len()).filter(|i| !r.contains(i)).collect();
            (train.select(&fit), train.slice(r.clone()))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..k).map(move |f| (c, f)))
        .collect();
    let scores = par::map(&jobs, |&(c, f)| -> Result<Option<f64>> {
        let (fit, val) = &splits[f];
        let fold_seed = rng::derive_seed(seed, "cv-fold", f as u64);
        let model = fit_forest(fit, &candidates[c], fold_seed)?;
        let pred = model.predict_dataset(val)?;
        Ok(fold_r2(&val.targets(), &pred))
    });
    let mut scores = scores.into_iter();

    let mut reports = Vec::with_capacity(candidates.len());
    for (index, hp) in candidates.iter().enumerate() {
        let fold_r2 = (0..k)
            .map(|_| scores.next().unwrap())
            .collect::<Result<Vec<_>>>()?;
        let defined: Vec<f64> = fold_r2.iter().flatten().copied().collect();
        let mean_r2 = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        reports.push(CandidateReport {
            index,
            hyperparameters: *hp,
            fold_r2,
            mean_r2,
        });
    }
    let best_index = reports
        .iter()
        .min_by(|a, b| rank(a).partial_cmp(&rank(b)).unwrap())
        .unwrap()
        .index;
    Ok(CvReport {
        k_folds: k,
        fold_sizes: folds.iter().map(|r| r.len()).collect(),
        candidates: reports,
        best_index,
    })
}

/// Sort key, smaller is better: higher R², then fewer trees, then shallower,
/// then earlier draw.
fn rank(c: &CandidateReport) -> (f64, usize, usize, usize) {
    let score = c.mean_r2.map_or(f64::INFINITY, |r| -r);
    (
        score,
        c.hyperparameters.n_estimators,
        c.hyperparameters.max_depth,
        c.index,
    )
}

fn fold_r2(y: &[f64], yhat: &[f64]) -> Option<f64> {
    match eval::r2(y, yhat) {
        Ok(r) => Some(r),
        Err(_) if y.iter().zip(yhat).all(|(a, b)| a == b) => Some(1.0),
        Err(_) => None,
    }
}
