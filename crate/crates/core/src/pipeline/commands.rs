use super::config::{ResolvedConfig, SequenceConfig, TestcaseConfig};
use super::labels::{read_labels_csv, write_labels_csv};
use super::manifest::{digest_bytes, to_json, OutputSink, RunManifest, StageRecord, Timings};
use super::{PipelineError, Result};
use crate::characterization::{
    characterize_sequence, load_frame_index, load_sequence, read_matrix_csv, write_matrix_csv,
    CharacterizationMatrix, MetricSet, SequenceSource,
};
use crate::eval::{
    baseline_row, compare_models, compare_poolings, model_failure_counts, pooling_summary,
    render_failure_counts, render_pooling_summary, render_reports, sweep_train_fraction,
    train_forest, write_predictions_csv, BaselineTable,
};
use crate::features::{build_dataset, write_dataset_csv, Dataset, LabelledSequence};
use crate::pooling::{pool, write_descriptors_csv, PoolKind, PoolingFunction};
use crate::regress::forest_to_json;
use crate::trajectory::{generate_subtrajectory_examples, load_trajectory, FrameKind, SubTrajectoryExample};
use crate::par;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Result of one command over all testcases.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub manifest: RunManifest,
    pub timings: Timings,
    /// `(testcase id, message)` of every testcase that hit a hard error.
    pub errors: Vec<(String, String)>,
}

impl CommandOutcome {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Run `stage` for every testcase in parallel. A failing testcase is recorded
/// and does not stop the others.
fn for_each_testcase<T: Send>(
    rc: &ResolvedConfig,
    command: &str,
    stage: impl Fn(&TestcaseConfig, &mut OutputSink) -> Result<T> + Sync,
) -> (Vec<Option<T>>, CommandOutcome) {
    let results = par::map(&rc.config.testcases, |tc| {
        let start = Instant::now();
        let mut sink = OutputSink::new(&rc.output_root, &tc.id, command);
        let r = stage(tc, &mut sink);
        let mut record = sink.record;
        let value = match r {
            Ok(v) => Some(v),
            Err(e) => {
                log::error!("testcase `{}`: {e}", tc.id);
                record.error = Some(e.to_string());
                None
            }
        };
        (value, record, start.elapsed())
    });
    let mut outcome = CommandOutcome {
        manifest: RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: rc.config.hash(),
            master_seed: rc.config.master_seed,
            stages: Vec::new(),
        },
        timings: Timings {
            command: command.to_string(),
            ..Timings::default()
        },
        errors: Vec::new(),
    };
    let mut values = Vec::new();
    for (v, record, elapsed) in results {
        outcome.timings.record(&record.testcase_id, command, elapsed);
        if let Some(e) = &record.error {
            outcome.errors.push((record.testcase_id.clone(), e.clone()));
        }
        outcome.manifest.stages.push(record);
        values.push(v);
    }
    (values, outcome)
}

/// Write the manifest and timings of a finished command.
fn finish(rc: &ResolvedConfig, mut outcome: CommandOutcome, extra: Option<StageRecord>) -> Result<CommandOutcome> {
    outcome.manifest.stages.extend(extra);
    let dir = rc.output_root.join("manifests");
    let name = &outcome.manifest.command;
    crate::fsio::write_atomic(&dir.join(format!("{name}.json")), to_json(&outcome.manifest).as_bytes())
        .map_err(|e| PipelineError::io(&dir, e))?;
    crate::fsio::write_atomic(&dir.join(format!("{name}.timings.json")), to_json(&outcome.timings).as_bytes())
        .map_err(|e| PipelineError::io(&dir, e))?;
    Ok(outcome)
}

fn pooling(rc: &ResolvedConfig, kind: PoolKind) -> PoolingFunction {
    PoolingFunction::new(kind).with_bins(rc.config.histogram_bins)
}

fn tc_err(tc: &TestcaseConfig, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Testcase {
        testcase: tc.id.clone(),
        message: e.to_string(),
    }
}

/// Characterize a sequence, reusing a cached matrix when the frame index,
/// every image and the IMU file are byte-identical to a previous run.
/// Returns the matrix and the sorted frame timestamps.
fn characterize_cached(
    rc: &ResolvedConfig,
    seq: &SequenceConfig,
) -> Result<(CharacterizationMatrix, Vec<f64>, Vec<(PathBuf, String)>)> {
    let metrics = MetricSet::default();
    let index_path = rc.input(&seq.frames_index);
    let records = load_frame_index(&index_path)?;
    let mut inputs = Vec::new();
    let mut key = Sha256::new();
    key.update(metrics.names().join(",").as_bytes());
    let index_bytes = read(&index_path)?;
    inputs.push((seq.frames_index.clone(), digest_bytes(&index_bytes)));
    key.update(&index_bytes);
    for r in &records {
        if let Some(p) = &r.image_path {
            key.update(read(p)?);
        }
    }
    let imu_path = seq.imu.as_ref().map(|p| rc.input(p));
    if let (Some(label), Some(p)) = (&seq.imu, &imu_path) {
        let bytes = read(p)?;
        inputs.push((label.clone(), digest_bytes(&bytes)));
        key.update(&bytes);
    }
    let digest = hex::encode(key.finalize());
    inputs.push((PathBuf::from(format!("{}#frames", seq.id)), digest.clone()));

    let mut times: Vec<f64> = records.iter().map(|r| r.timestamp).collect();
    times.sort_by(f64::total_cmp);
    let cache = rc.output_root.join("cache").join("characterization").join(format!("{digest}.csv"));
    if cache.is_file() {
        if let Ok(m) = read_matrix_csv(&seq.id, &cache) {
            if m.n_frames() == times.len() && m.metric_names() == metrics.names() {
                log::debug!("sequence `{}`: characterization cache hit", seq.id);
                return Ok((m, times, inputs));
            }
        }
    }
    let frames = load_sequence(&SequenceSource {
        index_path,
        imu_path,
    })?;
    let matrix = characterize_sequence(&seq.id, &frames, &metrics)?;
    crate::fsio::write_atomic(&cache, write_matrix_csv(&matrix).as_bytes())
        .map_err(|e| PipelineError::io(&cache, e))?;
    Ok((matrix, times, inputs))
}

fn read(p: &Path) -> Result<Vec<u8>> {
    std::fs::read(p).map_err(|e| PipelineError::io(p, e))
}

fn sequence_labels(
    rc: &ResolvedConfig,
    tc: &TestcaseConfig,
    seq: &SequenceConfig,
) -> Result<(Vec<SubTrajectoryExample>, Vec<(PathBuf, String)>)> {
    let est_path = rc.input(&seq.estimate);
    let gt_path = rc.input(&seq.ground_truth);
    let est = load_trajectory(&est_path, FrameKind::Estimate)?;
    let gt = load_trajectory(&gt_path, FrameKind::GroundTruth)?;
    let labels = generate_subtrajectory_examples(&seq.id, &est, &gt, tc.alignment_mode, rc.config.max_time_offset)?;
    let inputs = vec![
        (seq.estimate.clone(), digest_bytes(&read(&est_path)?)),
        (seq.ground_truth.clone(), digest_bytes(&read(&gt_path)?)),
    ];
    Ok((labels, inputs))
}

fn rel(tc: &str, file: &str) -> PathBuf {
    Path::new(tc).join(file)
}

/// Characterize every sequence; write the matrices and whole-sequence
/// descriptors under the configured pooling.
pub fn cmd_characterize(rc: &ResolvedConfig) -> Result<CommandOutcome> {
    let f = pooling(rc, rc.config.pooling_kind);
    let (_, outcome) = for_each_testcase(rc, "characterize", |tc, sink| {
        let done = par::map(&tc.sequences, |s| characterize_cached(rc, s));
        let mut descriptors = Vec::new();
        for (s, r) in tc.sequences.iter().zip(done) {
            let (m, _, inputs) = r.map_err(|e| tc_err(tc, format!("sequence `{}`: {e}", s.id)))?;
            for (label, d) in inputs {
                sink.input_digest(label, d);
            }
            sink.write(rel(&tc.id, &format!("matrices/{}.csv", s.id)), write_matrix_csv(&m).as_bytes())?;
            descriptors.push(pool(&m, &f));
        }
        sink.write(rel(&tc.id, "descriptors.csv"), write_descriptors_csv(&descriptors).as_bytes())?;
        Ok(())
    });
    finish(rc, outcome, None)
}

/// Label every keyframe prefix with its ATE, characterize the frames and
/// write `labels.csv`, the matrices and the pooled `examples.csv`.
pub fn cmd_generate_examples(rc: &ResolvedConfig) -> Result<CommandOutcome> {
    let f = pooling(rc, rc.config.pooling_kind);
    let (_, outcome) = for_each_testcase(rc, "generate-examples", |tc, sink| {
        let done = par::map(&tc.sequences, |s| -> Result<_> {
            let (labels, mut inputs) = sequence_labels(rc, tc, s)?;
            let (m, times, more) = characterize_cached(rc, s)?;
            inputs.extend(more);
            Ok((LabelledSequence::by_timestamp(m, labels, &times, rc.config.max_time_offset), inputs))
        });
        let mut seqs = Vec::new();
        let mut label_rows = Vec::new();
        for (s, r) in tc.sequences.iter().zip(done) {
            let (ls, inputs) = r.map_err(|e| tc_err(tc, format!("sequence `{}`: {e}", s.id)))?;
            for (label, d) in inputs {
                sink.input_digest(label, d);
            }
            let skipped = ls.examples.iter().filter(|e| e.is_skipped()).count();
            if skipped > 0 {
                log::info!("testcase `{}`, sequence `{}`: {skipped} prefix(es) skipped", tc.id, s.id);
            }
            sink.write(rel(&tc.id, &format!("matrices/{}.csv", s.id)), write_matrix_csv(&ls.matrix).as_bytes())?;
            label_rows.extend(ls.examples.iter().cloned().zip(ls.frame_counts.iter().copied()));
            seqs.push(ls);
        }
        sink.write(rel(&tc.id, "labels.csv"), write_labels_csv(&label_rows).as_bytes())?;
        let dataset = build_dataset(&tc.id, &seqs, &f).map_err(|e| tc_err(tc, e))?;
        sink.write(rel(&tc.id, "examples.csv"), write_dataset_csv(&dataset).as_bytes())?;
        log::info!("testcase `{}`: {} examples", tc.id, dataset.len());
        Ok(())
    });
    finish(rc, outcome, None)
}

/// Labelled sequences as written by `generate-examples`, in config order.
fn load_labelled(rc: &ResolvedConfig, tc: &TestcaseConfig, sink: &mut OutputSink) -> Result<Vec<LabelledSequence>> {
    let labels_path = rc.testcase_dir(&tc.id).join("labels.csv");
    if !labels_path.is_file() {
        return Err(tc_err(tc, "labels.csv missing; run generate-examples first"));
    }
    sink.input(rel(&tc.id, "labels.csv"), &labels_path)?;
    let rows = read_labels_csv(&labels_path)?;
    tc.sequences
        .iter()
        .map(|s| {
            let (examples, frame_counts): (Vec<_>, Vec<_>) =
                rows.iter().filter(|(e, _)| e.sequence_id == s.id).cloned().unzip();
            if examples.is_empty() {
                return Err(tc_err(tc, format!("no labels for sequence `{}`", s.id)));
            }
            let mrel = rel(&tc.id, &format!("matrices/{}.csv", s.id));
            let mpath = rc.output_root.join(&mrel);
            sink.input(&mrel, &mpath)?;
            let matrix = read_matrix_csv(&s.id, &mpath)?;
            Ok(LabelledSequence {
                matrix,
                examples,
                frame_counts,
            })
        })
        .collect()
}

fn load_dataset(rc: &ResolvedConfig, tc: &TestcaseConfig, sink: &mut OutputSink) -> Result<(Vec<LabelledSequence>, Dataset)> {
    let seqs = load_labelled(rc, tc, sink)?;
    let d = build_dataset(&tc.id, &seqs, &pooling(rc, rc.config.pooling_kind)).map_err(|e| tc_err(tc, e))?;
    Ok((seqs, d))
}

/// Decorrelate, tune, fit and evaluate; persist the model and its reports.
pub fn cmd_train(rc: &ResolvedConfig) -> Result<CommandOutcome> {
    let kind = rc.config.pooling_kind;
    let (_, outcome) = for_each_testcase(rc, "train", |tc, sink| {
        let (_, dataset) = load_dataset(rc, tc, sink)?;
        let t = train_forest(&dataset, &rc.config.plan(&tc.id), kind.name()).map_err(|e| tc_err(tc, e))?;
        sink.write(rel(&tc.id, "model.json"), forest_to_json(&t.model).as_bytes())?;
        sink.write(rel(&tc.id, "mask.json"), to_json(&t.model.feature_mask).as_bytes())?;
        sink.write(rel(&tc.id, "cv.json"), to_json(&t.cv).as_bytes())?;
        sink.write(rel(&tc.id, "report.json"), to_json(&t.report).as_bytes())?;
        let text = format!(
            "testcase {}  pooling {}  train_fraction {}  partition {}\nhyperparameters {:?}\nfeatures kept {} of {}\n{}",
            tc.id,
            kind,
            rc.config.train_fraction,
            t.report.partition_hash,
            t.model.hyperparameters,
            t.model.feature_mask.kept_indices.len(),
            dataset.width(),
            render_reports("model", &[("forest".to_string(), &t.report)])
        );
        sink.write(rel(&tc.id, "report.txt"), text.as_bytes())?;
        sink.write(rel(&tc.id, "predictions.csv"), write_predictions_csv(&t.predictions).as_bytes())?;
        log::info!(
            "testcase `{}`: R2 {} MAPE {} failed {}",
            tc.id,
            crate::eval::fmt_opt(t.report.r2),
            crate::eval::fmt_pct(t.report.mape),
            t.report.failed
        );
        Ok(())
    });
    finish(rc, outcome, None)
}

/// Training-fraction sweep per testcase plus the early-ATE baseline table.
pub fn cmd_sweep(rc: &ResolvedConfig) -> Result<CommandOutcome> {
    let f = pooling(rc, rc.config.pooling_kind);
    let (rows, outcome) = for_each_testcase(rc, "sweep", |tc, sink| {
        let (seqs, dataset) = load_dataset(rc, tc, sink)?;
        let plan = rc.config.plan(&tc.id);
        let sweep = sweep_train_fraction(&dataset, &rc.config.sweep_fractions, f.kind.name(), &plan)
            .map_err(|e| tc_err(tc, e))?;
        sink.write(rel(&tc.id, "sweep.json"), to_json(&sweep).as_bytes())?;
        sink.write(rel(&tc.id, "sweep.txt"), sweep.render().as_bytes())?;
        Ok(baseline_row(&tc.id, &seqs, &f, rc.config.baseline_fraction, &plan))
    });
    let table = BaselineTable {
        fraction: rc.config.baseline_fraction,
        rows: rows.into_iter().flatten().collect(),
    };
    let mut sink = OutputSink::new(&rc.output_root, "*", "sweep");
    sink.write("baseline.json", to_json(&table).as_bytes())?;
    sink.write("baseline.txt", table.render().as_bytes())?;
    finish(rc, outcome, Some(sink.record))
}

/// All twelve pooling kinds per testcase, with a cross-testcase summary.
pub fn cmd_compare_poolings(rc: &ResolvedConfig) -> Result<CommandOutcome> {
    let (rows, outcome) = for_each_testcase(rc, "compare-poolings", |tc, sink| {
        let seqs = load_labelled(rc, tc, sink)?;
        let c = compare_poolings(&tc.id, &seqs, &PoolKind::ALL, rc.config.histogram_bins, &rc.config.plan(&tc.id));
        sink.write(rel(&tc.id, "poolings.json"), to_json(&c).as_bytes())?;
        sink.write(rel(&tc.id, "poolings.txt"), c.render().as_bytes())?;
        Ok(c)
    });
    let all: Vec<_> = rows.into_iter().flatten().collect();
    let summary = pooling_summary(&all);
    let mut sink = OutputSink::new(&rc.output_root, "*", "compare-poolings");
    sink.write("pooling_summary.json", to_json(&summary).as_bytes())?;
    sink.write("pooling_summary.txt", render_pooling_summary(&summary).as_bytes())?;
    finish(rc, outcome, Some(sink.record))
}

/// Dummy, linear, tree and forest on one split per testcase, with failure
/// counts across testcases.
pub fn cmd_compare_models(rc: &ResolvedConfig) -> Result<CommandOutcome> {
    let kind = rc.config.pooling_kind;
    let (rows, outcome) = for_each_testcase(rc, "compare-models", |tc, sink| {
        let (_, dataset) = load_dataset(rc, tc, sink)?;
        let c = compare_models(&dataset, kind.name(), &rc.config.plan(&tc.id)).map_err(|e| tc_err(tc, e))?;
        sink.write(rel(&tc.id, "models.json"), to_json(&c).as_bytes())?;
        sink.write(rel(&tc.id, "models.txt"), c.render().as_bytes())?;
        Ok(c)
    });
    let all: Vec<_> = rows.into_iter().flatten().collect();
    let counts = model_failure_counts(&all);
    let mut sink = OutputSink::new(&rc.output_root, "*", "compare-models");
    sink.write("model_failures.json", to_json(&counts).as_bytes())?;
    sink.write("model_failures.txt", render_failure_counts(&counts).as_bytes())?;
    finish(rc, outcome, Some(sink.record))
}
