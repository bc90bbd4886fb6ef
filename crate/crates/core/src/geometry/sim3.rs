use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{ColoredPointCloud, Pose, Rot3, Vec3};
use crate::error::{Error, Result};

/// Similarity transform `p ↦ s·R·p + t` with `s > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim3 {
    scale: f64,
    pub rotation: Rot3,
    pub translation: Vec3,
}

impl Sim3 {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Rot3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(scale: f64, rotation: Rot3, translation: Vec3) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    pub fn from_pose(pose: &Pose) -> Self {
        Self {
            scale: 1.0,
            rotation: pose.rotation,
            translation: pose.translation,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same rotation and translation with a different scale.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(scale, self.rotation, self.translation)
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.scale * (self.rotation * p) + self.translation
    }

    pub fn inverse(&self) -> Self {
        let r_inv = self.rotation.inverse();
        let s_inv = 1.0 / self.scale;
        Self {
            scale: s_inv,
            rotation: r_inv,
            translation: -s_inv * (r_inv * self.translation),
        }
    }

    /// Maps a camera pose expressed in this transform's source frame into the
    /// target frame. The scale is absorbed into the camera-local metric, so the
    /// result is rigid: `(R·R_c, s·R·t_c + t)`.
    pub fn transform_pose(&self, pose: &Pose) -> Pose {
        Pose::from_parts(self.rotation * pose.rotation, self.apply(&pose.translation))
    }
}

impl Default for Sim3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Sim3 {
    type Output = Sim3;

    /// `(a * b).apply(p) == a.apply(&b.apply(p))`.
    fn mul(self, rhs: Sim3) -> Sim3 {
        Sim3 {
            scale: self.scale * rhs.scale,
            rotation: self.rotation * rhs.rotation,
            translation: self.apply(&rhs.translation),
        }
    }
}

/// Maps every position through `transform`; colors are carried over untouched.
pub fn apply_sim3(transform: &Sim3, cloud: &ColoredPointCloud) -> ColoredPointCloud {
    let positions = cloud.positions().iter().map(|p| transform.apply(p)).collect();
    ColoredPointCloud::from_parts_unchecked(positions, cloud.colors().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::so3;

    fn sample() -> Sim3 {
        Sim3::new(0.37, so3::exp(&Vec3::new(0.5, -0.2, 1.4)), Vec3::new(5.0, -2.0, 1.0)).unwrap()
    }

    #[test]
    fn rejects_nonpositive_scale() {
        assert!(Sim3::new(0.0, Rot3::identity(), Vec3::zeros()).is_err());
        assert!(Sim3::new(-1.0, Rot3::identity(), Vec3::zeros()).is_err());
        assert!(Sim3::new(f64::NAN, Rot3::identity(), Vec3::zeros()).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let t = sample();
        let p = Vec3::new(812.0, -433.5, 999.0);
        let back = t.inverse().apply(&t.apply(&p));
        assert!((back - p).amax() < 1e-9);
    }

    #[test]
    fn composition_applies_right_to_left() {
        let a = sample();
        let b = Sim3::new(2.5, so3::exp(&Vec3::new(0.0, 0.3, 0.0)), Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert!(((a * b).apply(&p) - a.apply(&b.apply(&p))).norm() < 1e-12);
    }

    #[test]
    fn identity_leaves_positions_bit_identical() {
        let cloud = ColoredPointCloud::new(
            vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-7.25, 1e6, 3.0)],
            vec![Vec3::new(0.0, 0.5, 1.0), Vec3::new(1.0, 1.0, 1.0)],
        )
        .unwrap();
        let out = apply_sim3(&Sim3::identity(), &cloud);
        assert_eq!(out.positions(), cloud.positions());
        assert_eq!(out.colors(), cloud.colors());
    }

    #[test]
    fn pure_scale_on_single_point() {
        let cloud = ColoredPointCloud::new(vec![Vec3::new(1.0, 1.0, 1.0)], vec![Vec3::new(0.2, 0.2, 0.2)]).unwrap();
        let t = Sim3::new(2.0, Rot3::identity(), Vec3::zeros()).unwrap();
        assert_eq!(apply_sim3(&t, &cloud).positions()[0], Vec3::new(2.0, 2.0, 2.0));
    }
}
