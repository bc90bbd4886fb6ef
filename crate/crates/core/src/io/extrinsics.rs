use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::geometry::{project_to_so3, Mat3, Pose};
use crate::prefusion::Extrinsics;

const ORTHONORMAL_TOLERANCE: f64 = 1e-3;

/// 16 numbers (row-major 4×4 `cam_from_lidar`) then the time offset.
/// Text after `#` on a line is ignored.
pub fn parse_extrinsics(text: &str, path: &str) -> Result<Extrinsics> {
    let mut values = Vec::with_capacity(17);
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for tok in content.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: `{tok}` is not a number", idx + 1)))?;
            if !v.is_finite() {
                return Err(Error::parse(path, format!("line {}: non-finite value", idx + 1)));
            }
            values.push(v);
        }
    }
    if values.len() != 17 {
        return Err(Error::parse(
            path,
            format!(
                "expected 16 matrix entries and a time offset, found {} numbers",
                values.len()
            ),
        ));
    }
    let m = Matrix4::from_row_slice(&values[..16]);
    let bottom = m.fixed_view::<1, 4>(3, 0);
    if bottom[(0, 0)] != 0.0 || bottom[(0, 1)] != 0.0 || bottom[(0, 2)] != 0.0 || bottom[(0, 3)] != 1.0 {
        return Err(Error::parse(path, "bottom row must be 0 0 0 1"));
    }
    let r: Mat3 = m.fixed_view::<3, 3>(0, 0).into_owned();
    if (r.transpose() * r - Mat3::identity()).norm() > ORTHONORMAL_TOLERANCE
        || (r.determinant() - 1.0).abs() > ORTHONORMAL_TOLERANCE
    {
        return Err(Error::parse(path, "rotation block is not a proper rotation"));
    }
    let rotation = project_to_so3(&r).map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(Extrinsics {
        cam_from_lidar: Pose::from_parts(rotation, m.fixed_view::<3, 1>(0, 3).into_owned()),
        time_offset: values[16],
    })
}

pub fn read_extrinsics(path: impl AsRef<Path>) -> Result<Extrinsics> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_extrinsics(&text, &path.display().to_string())
}

pub fn format_extrinsics(ext: &Extrinsics) -> String {
    let m = ext.cam_from_lidar.to_homogeneous();
    let mut out = String::from("# cam_from_lidar (row-major 4x4), then time offset in seconds\n");
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| m[(r, c)].to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    let _ = writeln!(out, "{}", ext.time_offset);
    out
}

pub fn write_extrinsics(ext: &Extrinsics, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_extrinsics(ext)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{so3, Vec3};

    #[test]
    fn round_trip() {
        let ext = Extrinsics {
            cam_from_lidar: Pose::from_parts(so3::exp(&Vec3::new(0.1, -1.5, 0.2)), Vec3::new(0.05, 0.1, -0.2)),
            time_offset: -0.0125,
        };
        let back = parse_extrinsics(&format_extrinsics(&ext), "e").unwrap();
        assert_eq!(back.time_offset, ext.time_offset);
        assert!((back.cam_from_lidar.rotation.matrix() - ext.cam_from_lidar.rotation.matrix()).norm() < 1e-12);
        assert_eq!(back.cam_from_lidar.translation, ext.cam_from_lidar.translation);
    }

    #[test]
    fn identity_with_comments() {
        let text = "1 0 0 0 # row 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n# offset\n0.5\n";
        let ext = parse_extrinsics(text, "e").unwrap();
        assert_eq!(ext.time_offset, 0.5);
        assert_eq!(ext.cam_from_lidar.translation, Vec3::zeros());
    }

    #[test]
    fn malformed() {
        assert!(matches!(parse_extrinsics("1 0 0", "e"), Err(Error::Parse { .. })));
        let skew = "2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n0\n";
        assert!(matches!(parse_extrinsics(skew, "e"), Err(Error::Parse { .. })));
    }
}
