//! Synthetic sequences with a known relationship between sensor
//! characterization and trajectory error.
//!
//! Every sequence gets a smooth ground-truth curve, one rendered frame and a
//! burst of IMU samples per keyframe. Latent image and motion parameters
//! drift over the sequence. The target ATE of prefix `k` is a fixed function
//! of the mean-pooled measured characterization of frames `1..=k`, scaled by
//! a per-sequence noise factor. Estimate pose `k` is then placed so that the
//! SE3 ATE of the prefix equals that target.

use crate::characterization::{characterize_frame, Frame, ImuSample, Metric, MetricSet};
use crate::trajectory::{align, ate_from_points, AlignMode, FrameKind, Pose, Trajectory};
use crate::{par, rng};
use image::GrayImage;
use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Characterization(#[from] crate::characterization::CharacterizationError),
    #[error(transparent)]
    Trajectory(#[from] crate::trajectory::TrajectoryError),
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

/// How the target error depends on the pooled characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthProfile {
    /// Saturating in darkness, scaled by gyro rate.
    #[default]
    Smooth,
    /// Brightness falls linearly and error is cubic in the darkening, so it
    /// grows faster than linearly along each sequence.
    Superlinear,
}

impl std::str::FromStr for SynthProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "smooth" => Ok(Self::Smooth),
            "superlinear" => Ok(Self::Superlinear),
            _ => Err(format!("unknown profile `{s}` (smooth, superlinear)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_sequences: usize,
    pub keyframes: usize,
    pub image_size: u32,
    pub imu_per_frame: usize,
    /// Seconds between keyframes.
    pub frame_period: f64,
    /// Relative standard deviation of the per-sequence target factor.
    pub noise: f64,
    pub profile: SynthProfile,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_sequences: 20,
            keyframes: 30,
            image_size: 32,
            imu_per_frame: 10,
            frame_period: 0.5,
            noise: 0.05,
            profile: SynthProfile::Smooth,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.n_sequences == 0 {
            return bad("n_sequences must be >= 1");
        }
        if self.keyframes < 4 {
            return bad("keyframes must be >= 4");
        }
        if self.image_size < 8 {
            return bad("image_size must be >= 8");
        }
        if self.imu_per_frame == 0 {
            return bad("imu_per_frame must be >= 1");
        }
        if !(self.frame_period > 0.0) {
            return bad("frame_period must be positive");
        }
        if !(self.noise >= 0.0 && self.noise < 0.5) {
            return bad("noise must lie in [0, 0.5)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub id: String,
    pub ground_truth: Trajectory,
    pub estimate: Trajectory,
    pub images: Vec<GrayImage>,
    /// `(timestamp, sample)` in time order.
    pub imu: Vec<(f64, ImuSample)>,
    /// Intended ATE per prefix; `None` for prefixes too short to align.
    pub targets: Vec<Option<f64>>,
    /// Prefixes whose intended ATE was below the smallest reachable value.
    pub clamped: usize,
}

impl SyntheticSequence {
    /// In-memory frames, each holding the IMU samples since the previous one.
    pub fn frames(&self) -> Vec<Frame> {
        assemble_frames(&self.ground_truth.timestamps(), &self.images, &self.imu)
    }
}

fn assemble_frames(times: &[f64], images: &[GrayImage], imu: &[(f64, ImuSample)]) -> Vec<Frame> {
    let mut rest = imu;
    times
        .iter()
        .zip(images)
        .map(|(&t, img)| {
            let n = rest.partition_point(|(ts, _)| *ts <= t);
            let window = rest[..n].iter().map(|(_, s)| *s).collect();
            rest = &rest[n..];
            Frame::new(t, Some(img.clone()), Some(window)).expect("valid frame")
        })
        .collect()
}

fn gauss(r: &mut impl Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Latent per-frame drivers of one sequence.
struct Latent {
    brightness: Vec<f64>,
    contrast: Vec<f64>,
    gyro: Vec<f64>,
}

fn latent(profile: SynthProfile, k: usize, r: &mut impl Rng) -> Latent {
    let ramp = |start: f64, delta: f64| -> Vec<f64> {
        (0..k).map(|j| start + delta * j as f64 / (k - 1) as f64).collect()
    };
    match profile {
        SynthProfile::Smooth => Latent {
            brightness: ramp(r.random_range(195.0..210.0), -r.random_range(60.0..160.0)),
            contrast: ramp(r.random_range(10.0..30.0), 0.0),
            gyro: ramp(r.random_range(0.1..0.3), r.random_range(0.5..2.0)),
        },
        SynthProfile::Superlinear => Latent {
            brightness: ramp(r.random_range(200.0..210.0), -r.random_range(60.0..150.0)),
            contrast: ramp(20.0, 0.0),
            gyro: ramp(0.3, 0.0),
        },
    }
}

/// Target ATE (meters) from the mean-pooled characterization.
fn target(profile: SynthProfile, pooled: &Pooled) -> f64 {
    match profile {
        SynthProfile::Smooth => {
            let dark = (205.0 - pooled.brightness) / 150.0;
            let sigmoid = 1.0 / (1.0 + (-14.0 * (dark - 0.3)).exp());
            0.15 + 0.7 * sigmoid * (0.5 + 0.5 * (2.0 * pooled.gyro_mean).tanh())
        }
        SynthProfile::Superlinear => {
            let dark = ((210.0 - pooled.brightness) / 150.0).max(0.0);
            0.02 + 3.0 * dark.powi(3)
        }
    }
}

struct Pooled {
    brightness: f64,
    gyro_mean: f64,
}

fn render(size: u32, brightness: f64, contrast: f64, phase: f64, freq: (f64, f64), r: &mut impl Rng) -> GrayImage {
    let n = f64::from(size);
    GrayImage::from_fn(size, size, |x, y| {
        let wave = (TAU * (freq.0 * f64::from(x) + freq.1 * f64::from(y)) / n + phase).sin();
        let noise = gauss(r);
        let v = brightness + contrast * std::f64::consts::SQRT_2 * wave + 2.0 * noise;
        image::Luma([v.round().clamp(0.0, 255.0) as u8])
    })
}

fn truth_curve(k: usize, period: f64, r: &mut impl Rng) -> Vec<Pose> {
    let a = [r.random_range(2.0..6.0), r.random_range(1.0..4.0), r.random_range(0.2..0.8)];
    let w = [r.random_range(0.1..0.3), r.random_range(0.2..0.5), r.random_range(0.3..0.7)];
    let ph: [f64; 3] = [r.random_range(0.0..TAU), r.random_range(0.0..TAU), r.random_range(0.0..TAU)];
    let speed = r.random_range(0.5..1.5);
    (0..k)
        .map(|j| {
            let t = j as f64 * period;
            let p = Vector3::new(
                speed * t + a[0] * (w[0] * t + ph[0]).sin(),
                a[1] * (w[1] * t + ph[1]).sin(),
                a[2] * (w[2] * t + ph[2]).sin(),
            );
            let yaw = 0.3 * (w[1] * t).sin();
            Pose {
                timestamp: t,
                translation: p,
                rotation: UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
            }
        })
        .collect()
}

/// Place estimate positions so that prefix `k` has SE3 ATE `targets[k]`.
/// Returns the positions and how many targets had to be raised to the
/// smallest reachable value.
fn place_estimates(
    truth: &[Vector3<f64>],
    targets: &[Option<f64>],
    r: &mut impl Rng,
) -> Result<(Vec<Vector3<f64>>, usize)> {
    let mut est: Vec<Vector3<f64>> = Vec::with_capacity(truth.len());
    let mut clamped = 0;
    for (k0, p) in truth.iter().enumerate() {
        let Some(goal) = targets[k0] else {
            est.push(*p);
            continue;
        };
        // Zero residual under the alignment of the previous prefix.
        let base = if est.len() >= 3 {
            let fit = align(&est, &truth[..k0], AlignMode::Se3)?;
            fit.rotation.transpose() * (p - fit.translation) / fit.scale
        } else {
            *p
        };
        let dir: Vector3<f64> = loop {
            let v = Vector3::new(
                gauss(r),
                gauss(r),
                gauss(r),
            );
            if v.norm() > 1e-3 {
                break v.normalize();
            }
        };
        let ate_at = |a: f64, est: &mut Vec<Vector3<f64>>| -> Result<f64> {
            est.push(base + dir * a);
            let v = ate_from_points(est, &truth[..=k0], AlignMode::Se3);
            est.pop();
            Ok(v?)
        };
        let floor = ate_at(0.0, &mut est)?;
        if goal <= floor {
            if goal < floor - 1e-12 {
                clamped += 1;
            }
            est.push(base);
            continue;
        }
        let mut hi = goal.max(1e-3);
        while ate_at(hi, &mut est)? < goal {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ate_at(mid, &mut est)? < goal {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi.max(1.0) {
                break;
            }
        }
        est.push(base + dir * (0.5 * (lo + hi)));
    }
    Ok((est, clamped))
}

fn sequence(cfg: &SynthConfig, index: usize) -> Result<SyntheticSequence> {
    let mut r = rng::stream(cfg.seed, "synth-sequence", index as u64);
    let k = cfg.keyframes;
    let lat = latent(cfg.profile, k, &mut r);
    let truth_poses = truth_curve(k, cfg.frame_period, &mut r);
    let freq = (r.random_range(1.0..4.0), r.random_range(1.0..4.0));
    let noise_factor = 1.0 + cfg.noise * gauss(&mut r);

    let mut images = Vec::with_capacity(k);
    let mut imu = Vec::with_capacity(k * cfg.imu_per_frame);
    for j in 0..k {
        let phase = 0.7 * j as f64;
        images.push(render(cfg.image_size, lat.brightness[j], lat.contrast[j], phase, freq, &mut r));
        let n = cfg.imu_per_frame;
        for i in 0..n {
            // The last sample of each burst lands exactly on the frame time.
            let t = truth_poses[j].timestamp - cfg.frame_period * (n - 1 - i) as f64 / n as f64;
            let g = lat.gyro[j] * (1.0 + 0.2 * gauss(&mut r));
            let axis = Vector3::new(0.3 * (0.5 * t).sin(), 0.3 * (0.5 * t).cos(), 1.0).normalize();
            let accel = Vector3::new(
                0.2 * gauss(&mut r),
                0.2 * gauss(&mut r),
                9.81 + 0.2 * gauss(&mut r),
            );
            imu.push((t, ImuSample { gyro: axis * g, accel }));
        }
    }

    // Mean-pooled measured characterization of each prefix.
    let metrics = MetricSet::new(vec![Metric::Brightness, Metric::GyroMean])
        .expect("non-empty");
    let times: Vec<f64> = truth_poses.iter().map(|p| p.timestamp).collect();
    let frames = assemble_frames(&times, &images, &imu);
    let mut sums = [0.0; 2];
    let mut targets = Vec::with_capacity(k);
    for (j, f) in frames.iter().enumerate() {
        let v = characterize_frame(f, &metrics)?.values;
        for (s, x) in sums.iter_mut().zip(&v) {
            *s += x;
        }
        let n = (j + 1) as f64;
        let pooled = Pooled {
            brightness: sums[0] / n,
            gyro_mean: sums[1] / n,
        };
        let y = target(cfg.profile, &pooled) * noise_factor;
        targets.push((j + 1 >= crate::trajectory::MIN_ALIGNABLE_POSES).then_some(y));
    }

    let id = format!("seq{index:03}");
    let truth_pos: Vec<Vector3<f64>> = truth_poses.iter().map(|p| p.translation).collect();
    let (est_pos, clamped) = place_estimates(&truth_pos, &targets, &mut r)?;
    if clamped > 0 {
        log::debug!("{id}: {clamped} prefix target(s) raised to the reachable minimum");
    }
    let est_poses = truth_poses
        .iter()
        .zip(est_pos)
        .map(|(p, t)| Pose {
            translation: t,
            ..p.clone()
        })
        .collect();
    Ok(SyntheticSequence {
        id,
        ground_truth: Trajectory::new(truth_poses, FrameKind::GroundTruth)?,
        estimate: Trajectory::new(est_poses, FrameKind::Estimate)?,
        images,
        imu,
        targets,
        clamped,
    })
}

/// Generate `cfg.n_sequences` sequences. Sequence `i` depends only on
/// `(cfg, i)`.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<SyntheticSequence>> {
    cfg.validate()?;
    par::map_range(cfg.n_sequences, |i| sequence(cfg, i))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{generate_subtrajectory_examples, DEFAULT_MAX_TIME_OFFSET};

    fn small(profile: SynthProfile) -> SynthConfig {
        SynthConfig {
            n_sequences: 3,
            keyframes: 12,
            profile,
            seed: 3,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn labels_reproduce_targets() {
        for profile in [SynthProfile::Smooth, SynthProfile::Superlinear] {
            for s in generate(&small(profile)).unwrap() {
                let ex = generate_subtrajectory_examples(
                    &s.id,
                    &s.estimate,
                    &s.ground_truth,
                    AlignMode::Se3,
                    DEFAULT_MAX_TIME_OFFSET,
                )
                .unwrap();
                assert_eq!(ex.len(), 12);
                assert_eq!(s.clamped, 0, "{profile:?}");
                for (e, t) in ex.iter().zip(&s.targets) {
                    match t {
                        Some(t) => assert!((e.ate.unwrap() - t).abs() < 1e-9 * t.max(1.0)),
                        None => assert!(e.is_skipped()),
                    }
                }
            }
        }
    }

    #[test]
    fn sequences_are_reproducible_and_independent() {
        let a = generate(&small(SynthProfile::Smooth)).unwrap();
        let b = generate(&SynthConfig {
            n_sequences: 2,
            ..small(SynthProfile::Smooth)
        })
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.estimate, y.estimate);
            assert_eq!(x.images, y.images);
        }
    }

    #[test]
    fn superlinear_error_accelerates() {
        for s in generate(&small(SynthProfile::Superlinear)).unwrap() {
            let t: Vec<f64> = s.targets.iter().flatten().copied().collect();
            let early = t[1] - t[0];
            let late = t[t.len() - 1] - t[t.len() - 2];
            assert!(late > early, "{t:?}");
        }
    }

    #[test]
    fn frames_receive_their_imu_burst() {
        let s = &generate(&small(SynthProfile::Smooth)).unwrap()[0];
        for f in s.frames() {
            assert_eq!(f.imu_window().unwrap().len(), 10);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SynthConfig { keyframes: 2, ..SynthConfig::default() }).is_err());
        assert!(generate(&SynthConfig { noise: -1.0, ..SynthConfig::default() }).is_err());
    }
}
