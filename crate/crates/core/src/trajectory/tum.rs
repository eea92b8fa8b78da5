use super::{FrameKind, Pose, Result, Trajectory, TrajectoryError};
use std::fmt::Write as _;
use std::path::Path;

/// Load a TUM-format trajectory (`timestamp tx ty tz qx qy qz qw` per line,
/// `#` comments). Poses are sorted by timestamp.
pub fn load_trajectory(path: &Path, kind: FrameKind) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|source| TrajectoryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tum(&text, kind)
}

pub fn parse_tum(text: &str, kind: FrameKind) -> Result<Trajectory> {
    let mut poses = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| TrajectoryError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        if fields.len() != 8 {
            return Err(TrajectoryError::Parse {
                line: idx + 1,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let pose = Pose::new(
            fields[0],
            [fields[1], fields[2], fields[3]],
            [fields[7], fields[4], fields[5], fields[6]],
        )
        .map_err(|e| TrajectoryError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        poses.push(pose);
    }
    if poses.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    Trajectory::from_unsorted(poses, kind)
}

/// Render a trajectory in TUM format.
pub fn write_tum(traj: &Trajectory) -> String {
    let mut out = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for p in traj.poses() {
        let q = p.rotation.quaternion();
        let t = &p.translation;
        let _ = writeln!(
            out,
            "{:.9} {:.12} {:.12} {:.12} {:.12} {:.12} {:.12} {:.12}",
            p.timestamp, t.x, t.y, t.z, q.i, q.j, q.k, q.w
        );
    }
    out
}
