use super::config::{PipelineConfig, SequenceConfig, TestcaseConfig};
use super::manifest::to_json;
use super::{PipelineError, Result};
use crate::synth::{generate, SynthConfig, SyntheticSequence};
use crate::trajectory::write_tum;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub config: SynthConfig,
    pub testcase_id: String,
    /// Per sequence, prefixes whose target was below the reachable minimum.
    pub clamped: Vec<(String, usize)>,
    /// The pipeline config written next to the corpus.
    #[serde(skip)]
    pub config_path: PathBuf,
}

fn encode_pgm(img: &GrayImage) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::L8)
        .map_err(|e| PipelineError::Config(format!("encoding PGM: {e}")))?;
    Ok(buf)
}

fn put(path: &Path, bytes: &[u8]) -> Result<()> {
    crate::fsio::write_atomic(path, bytes).map_err(|e| PipelineError::io(path, e))
}

fn write_sequence(dir: &Path, s: &SyntheticSequence) -> Result<()> {
    put(&dir.join("groundtruth.txt"), write_tum(&s.ground_truth).as_bytes())?;
    put(&dir.join("estimate.txt"), write_tum(&s.estimate).as_bytes())?;
    let mut index = String::from("timestamp,image_path\n");
    for (j, (t, img)) in s.ground_truth.timestamps().iter().zip(&s.images).enumerate() {
        let name = format!("images/{j:06}.pgm");
        put(&dir.join(&name), &encode_pgm(img)?)?;
        index.push_str(&format!("{t},{name}\n"));
    }
    put(&dir.join("frames.csv"), index.as_bytes())?;
    let mut imu = String::from("timestamp,gx,gy,gz,ax,ay,az\n");
    for (t, m) in &s.imu {
        imu.push_str(&format!(
            "{t},{},{},{},{},{},{}\n",
            m.gyro.x, m.gyro.y, m.gyro.z, m.accel.x, m.accel.y, m.accel.z
        ));
    }
    put(&dir.join("imu.csv"), imu.as_bytes())?;
    let mut targets = String::from("cutoff_k,target\n");
    for (k, t) in s.targets.iter().enumerate() {
        let t = t.map(|v| v.to_string()).unwrap_or_default();
        targets.push_str(&format!("{},{t}\n", k + 1));
    }
    put(&dir.join("targets.csv"), targets.as_bytes())
}

/// Generate a synthetic corpus under `out` together with a pipeline config
/// (`out/config.json`) that points at it. Results default to `out/results`.
pub fn cmd_synth(cfg: &SynthConfig, out: &Path, testcase_id: &str) -> Result<SynthSummary> {
    let sequences = generate(cfg)?;
    let mut configs = Vec::new();
    let mut clamped = Vec::new();
    for s in &sequences {
        let rel = Path::new(testcase_id).join(&s.id);
        write_sequence(&out.join(&rel), s)?;
        configs.push(SequenceConfig {
            id: s.id.clone(),
            estimate: rel.join("estimate.txt"),
            ground_truth: rel.join("groundtruth.txt"),
            frames_index: rel.join("frames.csv"),
            imu: Some(rel.join("imu.csv")),
        });
        clamped.push((s.id.clone(), s.clamped));
    }
    let pipeline = PipelineConfig {
        testcases: vec![TestcaseConfig {
            id: testcase_id.to_string(),
            alignment_mode: Default::default(),
            sequences: configs,
        }],
        master_seed: cfg.seed,
        output_dir: Some(PathBuf::from("results")),
        ..PipelineConfig::default()
    };
    pipeline.validate()?;
    let config_path = out.join("config.json");
    put(&config_path, pipeline.to_json().as_bytes())?;
    let summary = SynthSummary {
        config: cfg.clone(),
        testcase_id: testcase_id.to_string(),
        clamped,
        config_path,
    };
    put(&out.join("synth.json"), to_json(&summary).as_bytes())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::{load_frame_index, load_sequence, SequenceSource};

    #[test]
    fn pgm_round_trips_through_the_image_loader() {
        let img = GrayImage::from_fn(9, 8, |x, y| image::Luma([(x * 20 + y) as u8]));
        let bytes = encode_pgm(&img).unwrap();
        assert!(bytes.starts_with(b"P5"));
        let back = image::load_from_memory(&bytes).unwrap().to_luma8();
        assert_eq!(back, img);
    }

    #[test]
    fn written_corpus_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            n_sequences: 2,
            keyframes: 5,
            seed: 3,
            ..SynthConfig::default()
        };
        let summary = cmd_synth(&cfg, dir.path(), "T").unwrap();
        let rc = super::super::load_config(&summary.config_path, &Default::default()).unwrap();
        assert_eq!(rc.output_root, dir.path().join("results"));
        let seq = &rc.config.testcases[0].sequences[0];
        let index = load_frame_index(&rc.input(&seq.frames_index)).unwrap();
        assert_eq!(index.len(), 5);
        let frames = load_sequence(&SequenceSource {
            index_path: rc.input(&seq.frames_index),
            imu_path: seq.imu.as_ref().map(|p| rc.input(p)),
        })
        .unwrap();
        let original = &generate(&cfg).unwrap()[0];
        for (a, b) in frames.iter().zip(original.frames()) {
            assert_eq!(a.pixels(), b.pixels());
            assert_eq!(a.imu_window(), b.imu_window());
        }
    }
}
