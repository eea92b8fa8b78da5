use super::{PipelineError, Result};
use crate::eval::{TrainingPlan, SWEEP_FRACTIONS};
use crate::features::DEFAULT_PMCC_THRESHOLD;
use crate::pooling::{PoolKind, DEFAULT_HISTOGRAM_BINS};
use crate::regress::TuningConfig;
use crate::rng;
use crate::trajectory::{AlignMode, DEFAULT_MAX_TIME_OFFSET};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "ATE_PREDICT_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "ate-predict-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub id: String,
    /// TUM estimate, one pose per keyframe.
    pub estimate: PathBuf,
    pub ground_truth: PathBuf,
    /// CSV of `timestamp,image_path`.
    pub frames_index: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imu: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestcaseConfig {
    pub id: String,
    #[serde(default)]
    pub alignment_mode: AlignMode,
    pub sequences: Vec<SequenceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub testcases: Vec<TestcaseConfig>,
    pub pooling_kind: PoolKind,
    pub train_fraction: f64,
    pub pmcc_threshold: f64,
    pub tuning: TuningConfig,
    pub master_seed: u64,
    /// Relative to the config file. Falls back to `$ATE_PREDICT_OUT`, then
    /// `ate-predict-out`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub max_time_offset: f64,
    pub histogram_bins: usize,
    pub sweep_fractions: Vec<f64>,
    /// Trajectory fraction observed by the early-ATE baseline.
    pub baseline_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            testcases: Vec::new(),
            pooling_kind: PoolKind::Mean,
            train_fraction: 0.7,
            pmcc_threshold: DEFAULT_PMCC_THRESHOLD,
            tuning: TuningConfig::default(),
            master_seed: 0,
            output_dir: None,
            max_time_offset: DEFAULT_MAX_TIME_OFFSET,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            sweep_fractions: SWEEP_FRACTIONS.to_vec(),
            baseline_fraction: 0.2,
        }
    }
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub pooling_kind: Option<PoolKind>,
    pub train_fraction: Option<f64>,
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// A validated config with absolute input paths and a resolved output root.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: PipelineConfig,
    /// Directory the config's relative paths are resolved against.
    pub base_dir: PathBuf,
    pub output_root: PathBuf,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.testcases.is_empty() {
            return bad("no testcases".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if !(self.pmcc_threshold > 0.0 && self.pmcc_threshold <= 1.0) {
            return bad(format!("pmcc_threshold {} outside (0, 1]", self.pmcc_threshold));
        }
        if !(self.baseline_fraction > 0.0 && self.baseline_fraction < 1.0) {
            return bad(format!("baseline_fraction {} outside (0, 1)", self.baseline_fraction));
        }
        if !(self.max_time_offset >= 0.0) {
            return bad("max_time_offset must be non-negative".into());
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be >= 1".into());
        }
        if self.tuning.n_candidates == 0 || self.tuning.k_folds < 2 {
            return bad("tuning needs n_candidates >= 1 and k_folds >= 2".into());
        }
        if self.sweep_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0))
            || self.sweep_fractions.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("sweep_fractions must be strictly increasing within (0, 1)".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for tc in &self.testcases {
            if !ids.insert(tc.id.as_str()) {
                return bad(format!("duplicate testcase id `{}`", tc.id));
            }
            if tc.sequences.is_empty() {
                return bad(format!("testcase `{}` has no sequences", tc.id));
            }
            let mut seqs = std::collections::BTreeSet::new();
            for s in &tc.sequences {
                if !seqs.insert(s.id.as_str()) {
                    return bad(format!("testcase `{}`: duplicate sequence id `{}`", tc.id, s.id));
                }
                if s.id.is_empty() || s.id.contains([',', '/', '\\', '\n']) {
                    return bad(format!("testcase `{}`: invalid sequence id `{}`", tc.id, s.id));
                }
            }
            if tc.id.is_empty() || tc.id.contains(['/', '\\']) || tc.id.starts_with('.') {
                return bad(format!("invalid testcase id `{}`", tc.id));
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.pooling_kind {
            self.pooling_kind = p;
        }
        if let Some(f) = o.train_fraction {
            self.train_fraction = f;
        }
        if let Some(s) = o.master_seed {
            self.master_seed = s;
        }
    }

    /// Digest of every field that affects results (the output location is
    /// excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        hex::encode(Sha256::digest(c.to_json().as_bytes()))
    }

    /// Split and tuning plan of one testcase. Each testcase draws from its own
    /// seed so adding or reordering testcases changes nothing else.
    pub fn plan(&self, testcase_id: &str) -> TrainingPlan {
        TrainingPlan {
            train_fraction: self.train_fraction,
            pmcc_threshold: self.pmcc_threshold,
            tuning: self.tuning,
            seed: rng::derive_seed(self.master_seed, testcase_id, 0),
        }
    }
}

/// Read, override, validate and resolve a config file. Input paths must
/// exist.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut config = PipelineConfig::from_json(&text)?;
    config.apply(overrides);
    config.validate()?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    for tc in &config.testcases {
        for s in &tc.sequences {
            let mut paths = vec![&s.estimate, &s.ground_truth, &s.frames_index];
            paths.extend(&s.imu);
            for p in paths {
                let full = base_dir.join(p);
                if !full.is_file() {
                    return Err(PipelineError::Config(format!(
                        "testcase `{}`, sequence `{}`: {} does not exist",
                        tc.id,
                        s.id,
                        full.display()
                    )));
                }
            }
        }
    }
    let output_root = resolve_output(overrides.output_dir.as_deref(), config.output_dir.as_deref(), &base_dir);
    Ok(ResolvedConfig {
        config,
        base_dir,
        output_root,
    })
}

/// `--out`, then the config's `output_dir`, then `$ATE_PREDICT_OUT`, then
/// `ate-predict-out`.
pub fn resolve_output(flag: Option<&Path>, configured: Option<&Path>, base_dir: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = configured {
        return base_dir.join(p);
    }
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

impl ResolvedConfig {
    pub fn input(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn testcase_dir(&self, id: &str) -> PathBuf {
        self.output_root.join(id)
    }
}
