//! File-level pipeline behind the command-line tool: config loading, the
//! per-command drivers, run manifests and the synthetic corpus writer.

mod commands;
mod config;
mod corpus;
mod labels;
mod manifest;
mod predict;

pub use commands::{
    cmd_characterize, cmd_compare_models, cmd_compare_poolings, cmd_generate_examples, cmd_sweep,
    cmd_train, CommandOutcome,
};
pub use config::{
    load_config, resolve_output, Overrides, PipelineConfig, ResolvedConfig, SequenceConfig,
    TestcaseConfig, DEFAULT_OUTPUT_DIR, OUTPUT_ENV,
};
pub use corpus::{cmd_synth, SynthSummary};
pub use labels::{read_labels_csv, write_labels_csv};
pub use manifest::{digest_bytes, digest_file, OutputSink, RunManifest, StageRecord, Timings};
pub use predict::{cmd_predict, predict_stream, InputLayout, PredictSummary};

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("testcase `{testcase}`: {message}")]
    Testcase { testcase: String, message: String },
    #[error("predict: {0}")]
    Predict(String),
    #[error(transparent)]
    Characterization(#[from] crate::characterization::CharacterizationError),
    #[error(transparent)]
    Trajectory(#[from] crate::trajectory::TrajectoryError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
}

impl PipelineError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
