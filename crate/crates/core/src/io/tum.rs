use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Stamped, TimedTrajectory, Vec3};

const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

/// Parses `timestamp tx ty tz qx qy qz qw` lines; `#` lines and blank lines
/// are skipped. Quaternions are renormalized.
pub fn parse_tum(text: &str, path: &str) -> Result<TimedTrajectory> {
    let mut entries: Vec<Stamped> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse(path, format!("line {line_no}: non-numeric field")))?;
        let [t, tx, ty, tz, qx, qy, qz, qw] = fields[..] else {
            return Err(Error::parse(
                path,
                format!("line {line_no}: expected 8 fields, found {}", fields.len()),
            ));
        };
        if !fields.iter().all(|v| v.is_finite()) {
            return Err(Error::parse(path, format!("line {line_no}: non-finite value")));
        }
        let q = Quaternion::new(qw, qx, qy, qz);
        if (q.norm() - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(Error::parse(
                path,
                format!("line {line_no}: quaternion norm {} is not 1", q.norm()),
            ));
        }
        if let Some(prev) = entries.last() {
            if t <= prev.timestamp {
                return Err(Error::NonMonotonicTimestamps {
                    path: path.to_string(),
                    line: line_no,
                });
            }
        }
        let rotation = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        entries.push(Stamped {
            timestamp: t,
            pose: Pose::from_parts(rotation, Vec3::new(tx, ty, tz)),
        });
    }
    TimedTrajectory::new(entries)
}

pub fn read_tum(path: impl AsRef<Path>) -> Result<TimedTrajectory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tum(&text, &path.display().to_string())
}

/// One line per pose; numbers use the shortest representation that parses
/// back to the same `f64`.
pub fn format_tum(traj: &TimedTrajectory) -> String {
    let mut out = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for e in traj.entries() {
        let q = UnitQuaternion::from_rotation_matrix(&e.pose.rotation);
        let t = e.pose.translation;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            e.timestamp, t.x, t.y, t.z, q.i, q.j, q.k, q.w
        );
    }
    out
}

pub fn write_tum(traj: &TimedTrajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_tum(traj)).map_err(|e| Error::io(path, e))
}
