use super::{Result, TrajectoryError};
use nalgebra::{Matrix3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    /// Rotation and translation.
    #[default]
    Se3,
    /// Rotation, translation and uniform scale.
    Sim3,
}

impl std::fmt::Display for AlignMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AlignMode::Se3 => "se3",
            AlignMode::Sim3 => "sim3",
        })
    }
}

impl std::str::FromStr for AlignMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "se3" => Ok(AlignMode::Se3),
            "sim3" => Ok(AlignMode::Sim3),
            other => Err(format!("unknown alignment mode `{other}`")),
        }
    }
}

/// The transform `p -> scale * rotation * p + translation` mapping estimate
/// points onto ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub scale: f64,
    pub mode: AlignMode,
}

impl AlignmentResult {
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p * self.scale + self.translation
    }

    /// Sum of squared residuals `|truth_i - T(est_i)|^2`.
    pub fn sse(&self, estimate: &[Vector3<f64>], truth: &[Vector3<f64>]) -> f64 {
        estimate
            .iter()
            .zip(truth)
            .map(|(e, t)| (t - self.apply(e)).norm_squared())
            .sum()
    }
}

/// Closed-form least-squares alignment of paired point sets (Umeyama).
///
/// Minimizes `sum |truth_i - (s R est_i + t)|^2`; `s` is fixed to 1 in SE3 mode.
pub fn align(
    estimate: &[Vector3<f64>],
    truth: &[Vector3<f64>],
    mode: AlignMode,
) -> Result<AlignmentResult> {
    if estimate.len() != truth.len() {
        return Err(TrajectoryError::LengthMismatch(estimate.len(), truth.len()));
    }
    let n = estimate.len();
    if n < 3 {
        return Err(TrajectoryError::InsufficientData(n));
    }
    let nf = n as f64;
    let mu_e = estimate.iter().sum::<Vector3<f64>>() / nf;
    let mu_t = truth.iter().sum::<Vector3<f64>>() / nf;

    let var_e = estimate.iter().map(|e| (e - mu_e).norm_squared()).sum::<f64>() / nf;
    let var_t = truth.iter().map(|t| (t - mu_t).norm_squared()).sum::<f64>() / nf;
    if var_e <= 1e-20 * (1.0 + mu_e.norm_squared()) || var_t <= 1e-20 * (1.0 + mu_t.norm_squared())
    {
        return Err(TrajectoryError::DegenerateGeometry);
    }

    let mut cov = Matrix3::zeros();
    for (e, t) in estimate.iter().zip(truth) {
        cov += (t - mu_t) * (e - mu_e).transpose();
    }
    cov /= nf;

    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(TrajectoryError::DegenerateGeometry),
    };
    let d = svd.singular_values;
    let mut sign = Vector3::new(1.0, 1.0, 1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        // Flip the axis of the smallest singular value to stay in SO(3).
        let smallest = (0..3)
            .min_by(|&a, &b| d[a].total_cmp(&d[b]))
            .unwrap_or(2);
        sign[smallest] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&sign) * v_t;
    let scale = match mode {
        AlignMode::Se3 => 1.0,
        AlignMode::Sim3 => d.component_mul(&sign).sum() / var_e,
    };
    let translation = mu_t - rotation * mu_e * scale;
    Ok(AlignmentResult {
        rotation,
        translation,
        scale,
        mode,
    })
}
