use super::{CharacterizationError, Frame, Result};
use image::GrayImage;
use serde::{Deserialize, Serialize};

/// A scalar characterization metric of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Mean intensity.
    Brightness,
    /// Population standard deviation of intensity.
    Contrast,
    /// Shannon entropy (bits) of the 256-bin intensity histogram.
    Entropy,
    /// Variance of the 3x3 Laplacian response, zero-padded borders.
    Sharpness,
    /// Mean central-difference gradient magnitude over interior pixels.
    Gradient,
    /// Fraction of pixels <= 10.
    Underexposure,
    /// Fraction of pixels >= 245.
    Overexposure,
    /// Mean gyroscope magnitude over the IMU window.
    GyroMean,
    /// Mean accelerometer magnitude over the IMU window.
    AccelMean,
    /// Population standard deviation of gyroscope magnitude.
    GyroStd,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::Brightness,
        Metric::Contrast,
        Metric::Entropy,
        Metric::Sharpness,
        Metric::Gradient,
        Metric::Underexposure,
        Metric::Overexposure,
        Metric::GyroMean,
        Metric::AccelMean,
        Metric::GyroStd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Brightness => "brightness",
            Metric::Contrast => "contrast",
            Metric::Entropy => "entropy",
            Metric::Sharpness => "sharpness",
            Metric::Gradient => "gradient",
            Metric::Underexposure => "underexposure",
            Metric::Overexposure => "overexposure",
            Metric::GyroMean => "gyro_mean",
            Metric::AccelMean => "accel_mean",
            Metric::GyroStd => "gyro_std",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| CharacterizationError::UnknownMetric(name.to_string()))
    }

    /// `None` when the frame lacks the modality this metric reads.
    pub fn evaluate(self, frame: &Frame) -> Option<f64> {
        match self {
            Metric::Brightness => frame.pixels().map(brightness),
            Metric::Contrast => frame.pixels().map(contrast),
            Metric::Entropy => frame.pixels().map(entropy),
            Metric::Sharpness => frame.pixels().map(laplacian_variance),
            Metric::Gradient => frame.pixels().map(mean_gradient),
            Metric::Underexposure => frame.pixels().map(|p| fraction(p, |v| v <= 10)),
            Metric::Overexposure => frame.pixels().map(|p| fraction(p, |v| v >= 245)),
            Metric::GyroMean => frame
                .imu_window()
                .map(|w| mean(w.iter().map(|s| s.gyro.norm()))),
            Metric::AccelMean => frame
                .imu_window()
                .map(|w| mean(w.iter().map(|s| s.accel.norm()))),
            Metric::GyroStd => frame
                .imu_window()
                .map(|w| std_dev(&w.iter().map(|s| s.gyro.norm()).collect::<Vec<_>>())),
        }
    }
}

/// Ordered, non-empty list of enabled metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet(Vec<Metric>);

impl Default for MetricSet {
    fn default() -> Self {
        Self(Metric::ALL.to_vec())
    }
}

impl MetricSet {
    pub fn new(metrics: Vec<Metric>) -> Result<Self> {
        if metrics.is_empty() {
            return Err(CharacterizationError::EmptyMetricSet);
        }
        Ok(Self(metrics))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Metric> + '_ {
        self.0.iter().copied()
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|m| m.name().to_string()).collect()
    }
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len() as f64;
    it.sum::<f64>() / n
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn brightness(img: &GrayImage) -> f64 {
    mean(img.as_raw().iter().map(|&v| f64::from(v)))
}

fn contrast(img: &GrayImage) -> f64 {
    let v: Vec<f64> = img.as_raw().iter().map(|&p| f64::from(p)).collect();
    std_dev(&v)
}

fn entropy(img: &GrayImage) -> f64 {
    let mut hist = [0usize; 256];
    for &p in img.as_raw() {
        hist[p as usize] += 1;
    }
    let n = img.as_raw().len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

fn fraction(img: &GrayImage, pred: impl Fn(u8) -> bool) -> f64 {
    let raw = img.as_raw();
    raw.iter().filter(|&&p| pred(p)).count() as f64 / raw.len() as f64
}

fn laplacian_variance(img: &GrayImage) -> f64 {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let raw = img.as_raw();
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            f64::from(raw[(y * w + x) as usize])
        }
    };
    let mut resp = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            resp.push(at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y));
        }
    }
    std_dev(&resp).powi(2)
}

fn mean_gradient(img: &GrayImage) -> f64 {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = img.as_raw();
    let at = |x: usize, y: usize| f64::from(raw[y * w + x]);
    let mut sum = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            let gy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
            sum += gx.hypot(gy);
        }
    }
    sum / ((w - 2) * (h - 2)) as f64
}
