use super::report::{evaluate_predictions, fmt_opt, fmt_pct, prediction_rows, render_table, EvalReport, PredictionRow};
use super::{EvalError, Result};
use crate::features::{
    apply_mask, build_dataset, decorrelate, partition_hash, sequential_split, Dataset,
    LabelledSequence, DEFAULT_PMCC_THRESHOLD,
};
use crate::pooling::{PoolKind, PoolingFunction, DEFAULT_HISTOGRAM_BINS};
use crate::regress::{
    fit_dummy, fit_forest, fit_linear, fit_tree, tune, CvReport, ForestModel, Hyperparameters,
    Regressor, TrainingMetadata, TuningConfig,
};
use crate::trajectory::SubTrajectoryExample;
use crate::{par, rng};
use serde::{Deserialize, Serialize};

/// Split, decorrelation and tuning settings shared by every experiment row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingPlan {
    pub train_fraction: f64,
    pub pmcc_threshold: f64,
    pub tuning: TuningConfig,
    pub seed: u64,
}

impl Default for TrainingPlan {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            pmcc_threshold: DEFAULT_PMCC_THRESHOLD,
            tuning: TuningConfig::default(),
            seed: 0,
        }
    }
}

impl TrainingPlan {
    pub fn with_fraction(self, train_fraction: f64) -> Self {
        Self {
            train_fraction,
            ..self
        }
    }
}

/// A split with the train-side mask applied to both halves.
struct Prepared {
    train: Dataset,
    test: Dataset,
    mask: crate::features::FeatureMask,
    hash: String,
}

fn prepare(dataset: &Dataset, plan: &TrainingPlan) -> Result<Prepared> {
    let (train, test) = sequential_split(dataset, plan.train_fraction)?;
    let hash = partition_hash(&train, &test);
    let mask = decorrelate(&train, plan.pmcc_threshold)?;
    Ok(Prepared {
        train: apply_mask(&train, &mask)?,
        test: apply_mask(&test, &mask)?,
        mask,
        hash,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedForest {
    pub model: ForestModel,
    pub cv: CvReport,
    pub report: EvalReport,
    pub predictions: Vec<PredictionRow>,
}

/// The standard path: sequential split, train-side decorrelation, tuning,
/// final fit and held-out evaluation.
pub fn train_forest(dataset: &Dataset, plan: &TrainingPlan, pooling_kind: &str) -> Result<TrainedForest> {
    let p = prepare(dataset, plan)?;
    let cv = tune(&p.train, &plan.tuning, rng::derive_seed(plan.seed, "tune", 0))?;
    let best = cv.best().hyperparameters;
    let model = fit_forest(&p.train, &best, rng::derive_seed(plan.seed, "forest", 0))?
        .with_mask(p.mask.clone(), dataset.feature_names().to_vec())
        .with_metadata(TrainingMetadata {
            testcase_id: dataset.testcase_id.clone(),
            pooling_kind: pooling_kind.to_string(),
            train_fraction: plan.train_fraction,
        });
    let yhat = model.predict_dataset(&p.test)?;
    let mut report = evaluate_predictions(&p.test.targets(), &yhat)?;
    fill(&mut report, dataset, pooling_kind, plan, "forest", &p.hash);
    Ok(TrainedForest {
        predictions: prediction_rows(&p.test, &yhat),
        model,
        cv,
        report,
    })
}

fn fill(r: &mut EvalReport, d: &Dataset, pool: &str, plan: &TrainingPlan, family: &str, hash: &str) {
    r.testcase_id = d.testcase_id.clone();
    r.pooling_kind = pool.to_string();
    r.train_fraction = plan.train_fraction;
    r.model_family = family.to_string();
    r.partition_hash = hash.to_string();
}

/// A report or the error that prevented it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub report: Option<EvalReport>,
    pub error: Option<String>,
    /// Set when the report failed or no report could be produced.
    pub failed: bool,
}

impl Outcome {
    fn from(r: Result<EvalReport>) -> Self {
        match r {
            Ok(report) => Self {
                failed: report.failed,
                report: Some(report),
                error: None,
            },
            Err(e) => Self {
                report: None,
                error: Some(e.to_string()),
                failed: true,
            },
        }
    }

    fn cells(&self) -> Vec<String> {
        match &self.report {
            Some(r) => vec![
                r.n.to_string(),
                fmt_opt(r.r2),
                fmt_pct(r.mape),
                format!("{:.4}", r.mae),
                format!("{:.4}", r.rmse),
                yes_no(r.failed),
            ],
            None => {
                let mut c = vec!["-".to_string(); 5];
                c.push("error".to_string());
                c
            }
        }
    }
}

/// Error messages listed under a table, one per errored row.
fn error_notes<'a>(rows: impl Iterator<Item = (String, &'a Outcome)>) -> String {
    rows.filter_map(|(label, o)| o.error.as_ref().map(|e| format!("{label}: {e}\n")))
        .collect()
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

const METRIC_HEADER: [&str; 6] = ["n", "R2", "MAPE", "MAE", "RMSE", "failed"];

fn header(first: &'static str) -> Vec<&'static str> {
    std::iter::once(first).chain(METRIC_HEADER).collect()
}

// ---------------------------------------------------------------- sweep

pub const SWEEP_FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub train_fraction: f64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub testcase_id: String,
    pub pooling_kind: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

/// Train and evaluate once per fraction with the same tuning budget and seed.
/// Fractions that cannot be split or tuned yield failed rows.
pub fn sweep_train_fraction(
    dataset: &Dataset,
    fractions: &[f64],
    pooling_kind: &str,
    plan: &TrainingPlan,
) -> Result<SweepReport> {
    if fractions.is_empty() || fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidArgument(
            "sweep fractions must be non-empty and strictly increasing".into(),
        ));
    }
    let rows = par::map(fractions, |&f| SweepRow {
        train_fraction: f,
        outcome: Outcome::from(
            train_forest(dataset, &plan.with_fraction(f), pooling_kind).map(|t| t.report),
        ),
    });
    Ok(SweepReport {
        testcase_id: dataset.testcase_id.clone(),
        pooling_kind: pooling_kind.to_string(),
        seed: plan.seed,
        rows,
    })
}

impl SweepReport {
    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut c = vec![format!("{:.1}", r.train_fraction)];
                c.extend(r.outcome.cells());
                c
            })
            .collect();
        format!(
            "testcase {} pooling {} seed {}\n{}{}",
            self.testcase_id,
            self.pooling_kind,
            self.seed,
            render_table(&header("train_fraction"), &rows),
            error_notes(self.rows.iter().map(|r| (format!("{:.1}", r.train_fraction), &r.outcome)))
        )
    }
}

// ---------------------------------------------------------------- models

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Dummy,
    Linear,
    Tree,
    Forest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [Self::Dummy, Self::Linear, Self::Tree, Self::Forest];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dummy => "dummy",
            Self::Linear => "linear",
            Self::Tree => "tree",
            Self::Forest => "forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub family: ModelFamily,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub testcase_id: String,
    pub pooling_kind: String,
    pub partition_hash: String,
    pub rows: Vec<ModelRow>,
}

/// Fit every family on the same masked split. Only the forest is tuned.
pub fn compare_models(dataset: &Dataset, pooling_kind: &str, plan: &TrainingPlan) -> Result<ModelComparison> {
    let p = prepare(dataset, plan)?;
    let rows = par::map(&ModelFamily::ALL, |&family| {
        let report = (|| -> Result<EvalReport> {
            let mut report = if family == ModelFamily::Forest {
                train_forest(dataset, plan, pooling_kind)?.report
            } else {
                let model: Box<dyn Regressor> = match family {
                    ModelFamily::Dummy => Box::new(fit_dummy(&p.train)?),
                    ModelFamily::Linear => Box::new(fit_linear(&p.train)?),
                    _ => Box::new(fit_tree(
                        &p.train,
                        &Hyperparameters::default().tree_params(),
                        rng::derive_seed(plan.seed, "tree", 0),
                    )?),
                };
                let yhat = model.predict_dataset(&p.test)?;
                evaluate_predictions(&p.test.targets(), &yhat)?
            };
            fill(&mut report, dataset, pooling_kind, plan, family.name(), &p.hash);
            Ok(report)
        })();
        ModelRow {
            family,
            outcome: Outcome::from(report),
        }
    });
    Ok(ModelComparison {
        testcase_id: dataset.testcase_id.clone(),
        pooling_kind: pooling_kind.to_string(),
        partition_hash: p.hash,
        rows,
    })
}

impl ModelComparison {
    pub fn row(&self, family: ModelFamily) -> &ModelRow {
        self.rows.iter().find(|r| r.family == family).expect("every family present")
    }

    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut c = vec![r.family.name().to_string()];
                c.extend(r.outcome.cells());
                c
            })
            .collect();
        format!(
            "testcase {}\n{}{}",
            self.testcase_id,
            render_table(&header("model"), &rows),
            error_notes(self.rows.iter().map(|r| (r.family.name().to_string(), &r.outcome)))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCount {
    pub family: ModelFamily,
    pub failed: usize,
    pub total: usize,
}

/// Failed-regression count per family across test cases.
pub fn model_failure_counts(comparisons: &[ModelComparison]) -> Vec<FailureCount> {
    ModelFamily::ALL
        .iter()
        .map(|&family| FailureCount {
            family,
            failed: comparisons.iter().filter(|c| c.row(family).outcome.failed).count(),
            total: comparisons.len(),
        })
        .collect()
}

pub fn render_failure_counts(counts: &[FailureCount]) -> String {
    let rows: Vec<Vec<String>> = counts
        .iter()
        .map(|c| {
            let rate = if c.total == 0 { 0.0 } else { c.failed as f64 / c.total as f64 };
            vec![
                c.family.name().to_string(),
                c.failed.to_string(),
                c.total.to_string(),
                format!("{:.1}%", 100.0 * rate),
            ]
        })
        .collect();
    render_table(&["model", "failed", "total", "rate"], &rows)
}

// ---------------------------------------------------------------- poolings

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingRow {
    pub kind: PoolKind,
    /// Descriptor width before decorrelation.
    pub input_width: usize,
    pub partition_hash: String,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingComparison {
    pub testcase_id: String,
    pub rows: Vec<PoolingRow>,
}

/// Pool the same labelled sequences with each kind and run the standard
/// training path on each. Per-kind errors are recorded in the row.
pub fn compare_poolings(
    testcase_id: &str,
    sequences: &[LabelledSequence],
    kinds: &[PoolKind],
    histogram_bins: usize,
    plan: &TrainingPlan,
) -> PoolingComparison {
    let rows = par::map(kinds, |&kind| {
        let f = PoolingFunction::new(kind).with_bins(histogram_bins);
        let result = build_dataset(testcase_id, sequences, &f)
            .map_err(EvalError::from)
            .and_then(|d| {
                let t = train_forest(&d, plan, kind.name())?;
                Ok((d.width(), t.report))
            });
        let (input_width, outcome) = match result {
            Ok((w, r)) => (w, Outcome::from(Ok(r))),
            Err(e) => (0, Outcome::from(Err(e))),
        };
        PoolingRow {
            kind,
            input_width,
            partition_hash: outcome
                .report
                .as_ref()
                .map(|r| r.partition_hash.clone())
                .unwrap_or_default(),
            outcome,
        }
    });
    PoolingComparison {
        testcase_id: testcase_id.to_string(),
        rows,
    }
}

/// Default bin count for diversity pools in comparisons.
pub const COMPARISON_BINS: usize = DEFAULT_HISTOGRAM_BINS;

impl PoolingComparison {
    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut c = vec![r.kind.name().to_string(), r.input_width.to_string()];
                c.extend(r.outcome.cells());
                c
            })
            .collect();
        let mut h = vec!["pooling", "width"];
        h.extend(METRIC_HEADER);
        format!(
            "testcase {}\n{}{}",
            self.testcase_id,
            render_table(&h, &rows),
            error_notes(self.rows.iter().map(|r| (r.kind.name().to_string(), &r.outcome)))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingSummaryRow {
    pub kind: PoolKind,
    pub mean_r2: Option<f64>,
    pub median_r2: Option<f64>,
    pub mean_mape: Option<f64>,
    pub median_mape: Option<f64>,
    pub mean_mae: Option<f64>,
    pub median_mae: Option<f64>,
    pub mean_rmse: Option<f64>,
    pub median_rmse: Option<f64>,
    pub failed: usize,
    pub total: usize,
}

pub fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

/// Mean and median of each metric per pooling kind across test cases,
/// over the reports that exist.
pub fn pooling_summary(comparisons: &[PoolingComparison]) -> Vec<PoolingSummaryRow> {
    let kinds: Vec<PoolKind> = comparisons
        .first()
        .map(|c| c.rows.iter().map(|r| r.kind).collect())
        .unwrap_or_default();
    kinds
        .into_iter()
        .map(|kind| {
            let rows: Vec<&PoolingRow> = comparisons
                .iter()
                .flat_map(|c| c.rows.iter().filter(move |r| r.kind == kind))
                .collect();
            let reports: Vec<&EvalReport> = rows.iter().filter_map(|r| r.outcome.report.as_ref()).collect();
            let pick = |f: &dyn Fn(&EvalReport) -> Option<f64>| -> Vec<f64> {
                reports.iter().filter_map(|r| f(r)).collect()
            };
            let r2 = pick(&|r| r.r2);
            let mape = pick(&|r| r.mape);
            let mae = pick(&|r| Some(r.mae));
            let rmse = pick(&|r| Some(r.rmse));
            PoolingSummaryRow {
                kind,
                mean_r2: mean(&r2),
                median_r2: median(&r2),
                mean_mape: mean(&mape),
                median_mape: median(&mape),
                mean_mae: mean(&mae),
                median_mae: median(&mae),
                mean_rmse: mean(&rmse),
                median_rmse: median(&rmse),
                failed: rows.iter().filter(|r| r.outcome.failed).count(),
                total: rows.len(),
            }
        })
        .collect()
}

pub fn render_pooling_summary(rows: &[PoolingSummaryRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.kind.name().to_string(),
                fmt_opt(r.mean_r2),
                fmt_opt(r.median_r2),
                fmt_pct(r.mean_mape),
                fmt_pct(r.median_mape),
                fmt_opt(r.mean_mae),
                fmt_opt(r.median_mae),
                fmt_opt(r.mean_rmse),
                fmt_opt(r.median_rmse),
                format!("{}/{}", r.failed, r.total),
            ]
        })
        .collect();
    render_table(
        &[
            "pooling", "mean R2", "median R2", "mean MAPE", "median MAPE", "mean MAE",
            "median MAE", "mean RMSE", "median RMSE", "failed",
        ],
        &body,
    )
}

// ---------------------------------------------------------------- baseline

/// Keyframe index used as the early observation: `ceil(fraction * K)`.
pub fn baseline_cutoff(k: usize, fraction: f64) -> usize {
    ((fraction * k as f64 - 1e-9).ceil() as usize).clamp(1, k)
}

/// Predict each sequence's final ATE by the ATE observed at `fraction` of
/// its keyframes.
pub fn ate_at_fraction_baseline(sequences: &[Vec<SubTrajectoryExample>], fraction: f64) -> Result<EvalReport> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(EvalError::InvalidArgument(format!("fraction {fraction} outside (0, 1]")));
    }
    let mut y = Vec::with_capacity(sequences.len());
    let mut yhat = Vec::with_capacity(sequences.len());
    for s in sequences {
        let id = s.first().map_or("", |e| e.sequence_id.as_str());
        let k = s.len();
        let cut = baseline_cutoff(k, fraction);
        let label = |c: usize| {
            s.iter()
                .find(|e| e.cutoff_k == c)
                .and_then(|e| e.ate)
                .ok_or_else(|| EvalError::InsufficientPrefix {
                    sequence_id: id.to_string(),
                    cutoff_k: c,
                })
        };
        yhat.push(label(cut)?);
        y.push(label(k)?);
    }
    if y.is_empty() {
        return Err(EvalError::TooShort { needed: 1, got: 0 });
    }
    let mut r = evaluate_predictions(&y, &yhat)?;
    r.model_family = format!("ate_at_{:.0}pct", 100.0 * fraction);
    r.train_fraction = fraction;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub testcase_id: String,
    pub baseline: Outcome,
    pub model: Outcome,
}

/// Early-ATE baseline against the forest trained on the same fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pub fraction: f64,
    pub rows: Vec<BaselineRow>,
}

pub fn baseline_row(
    testcase_id: &str,
    sequences: &[LabelledSequence],
    pooling: &PoolingFunction,
    fraction: f64,
    plan: &TrainingPlan,
) -> BaselineRow {
    let labels: Vec<Vec<SubTrajectoryExample>> = sequences.iter().map(|s| s.examples.clone()).collect();
    let mut baseline = Outcome::from(ate_at_fraction_baseline(&labels, fraction));
    if let Some(r) = baseline.report.as_mut() {
        r.testcase_id = testcase_id.to_string();
    }
    let model = Outcome::from(
        build_dataset(testcase_id, sequences, pooling)
            .map_err(EvalError::from)
            .and_then(|d| train_forest(&d, &plan.with_fraction(fraction), pooling.kind.name()))
            .map(|t| t.report),
    );
    BaselineRow {
        testcase_id: testcase_id.to_string(),
        baseline,
        model,
    }
}

impl BaselineTable {
    pub fn render(&self) -> String {
        let pct = format!("{:.0}%", 100.0 * self.fraction);
        let r2 = |o: &Outcome| o.report.as_ref().and_then(|r| r.r2);
        let mp = |o: &Outcome| o.report.as_ref().and_then(|r| r.mape);
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.testcase_id.clone(),
                    fmt_opt(r2(&r.baseline)),
                    fmt_opt(mp(&r.baseline)),
                    fmt_opt(r2(&r.model)),
                    fmt_opt(mp(&r.model)),
                ]
            })
            .collect();
        let col = |f: &dyn Fn(&BaselineRow) -> Option<f64>| {
            let v: Vec<f64> = self.rows.iter().filter_map(f).collect();
            fmt_opt(mean(&v))
        };
        rows.push(vec![
            "mean".to_string(),
            col(&|r| r2(&r.baseline)),
            col(&|r| mp(&r.baseline)),
            col(&|r| r2(&r.model)),
            col(&|r| mp(&r.model)),
        ]);
        let h = [
            "Testcase".to_string(),
            format!("ATE@{pct} R2"),
            format!("ATE@{pct} MAPE"),
            "Forest R2".to_string(),
            "Forest MAPE".to_string(),
        ];
        let h: Vec<&str> = h.iter().map(String::as_str).collect();
        render_table(&h, &rows)
    }
}
