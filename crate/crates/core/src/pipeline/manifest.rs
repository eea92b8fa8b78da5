use super::{PipelineError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(digest_bytes(&bytes))
}

/// Inputs and outputs of one stage of one testcase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub testcase_id: String,
    pub stage: String,
    /// Path (as configured, or relative to the output root) to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Digests of everything a command read and wrote. Contains no timings or
/// absolute paths, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub command: String,
    /// `testcase/stage` to seconds.
    pub seconds: BTreeMap<String, f64>,
}

impl Timings {
    pub fn record(&mut self, testcase: &str, stage: &str, d: Duration) {
        self.seconds.insert(format!("{testcase}/{stage}"), d.as_secs_f64());
    }
}

/// Writes files under an output root and remembers their digests.
pub struct OutputSink<'a> {
    root: &'a Path,
    pub record: StageRecord,
}

impl<'a> OutputSink<'a> {
    pub fn new(root: &'a Path, testcase_id: &str, stage: &str) -> Self {
        Self {
            root,
            record: StageRecord {
                testcase_id: testcase_id.to_string(),
                stage: stage.to_string(),
                ..StageRecord::default()
            },
        }
    }

    /// Write `bytes` atomically to `root/rel`.
    pub fn write(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        crate::fsio::write_atomic(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
        self.record.outputs.insert(slash(rel), digest_bytes(bytes));
        Ok(path)
    }

    pub fn input(&mut self, label: impl AsRef<Path>, path: &Path) -> Result<()> {
        let d = digest_file(path)?;
        self.record.inputs.insert(slash(label.as_ref()), d);
        Ok(())
    }

    pub fn input_digest(&mut self, label: impl AsRef<Path>, digest: String) {
        self.record.inputs.insert(slash(label.as_ref()), digest);
    }
}

fn slash(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}
