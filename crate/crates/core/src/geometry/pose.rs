use std::ops::Mul;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::{so3, Mat3, Rot3, Vec3};
use crate::error::{Error, Result};

/// Rigid transform in SE(3). Applied to a point as `R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rot3,
    pub translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Rot3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Builds a pose from a raw matrix, rejecting anything that is not a proper rotation.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !so3::is_rotation(&rotation) {
            return Err(Error::invalid("rotation is not orthonormal with det +1"));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("translation is not finite"));
        }
        Ok(Self {
            rotation: Rot3::from_matrix_unchecked(rotation),
            translation,
        })
    }

    pub fn from_parts(rotation: Rot3, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::from_parts(Rot3::identity(), translation)
    }

    pub fn inverse(&self) -> Self {
        let r_inv = self.rotation.inverse();
        Self {
            rotation: r_inv,
            translation: -(r_inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Accepts a homogeneous matrix whose bottom row is `[0 0 0 1]`.
    pub fn from_homogeneous(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = m.fixed_view::<1, 4>(3, 0);
        if (bottom - nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0)).norm() > 1e-12 {
            return Err(Error::invalid("homogeneous matrix bottom row is not [0 0 0 1]"));
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        Pose {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_rotation() {
        let m = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(Pose::new(m, Vec3::zeros()).is_err());
        assert!(Pose::new(Mat3::identity() * 1.01, Vec3::zeros()).is_err());
    }

    #[test]
    fn compose_matches_homogeneous_product() {
        let a = Pose::from_parts(so3::exp(&Vec3::new(0.1, 0.2, 0.3)), Vec3::new(1.0, -2.0, 0.5));
        let b = Pose::from_parts(so3::exp(&Vec3::new(-0.4, 0.0, 0.9)), Vec3::new(0.0, 3.0, 1.0));
        let lhs = (a * b).to_homogeneous();
        let rhs = a.to_homogeneous() * b.to_homogeneous();
        assert!((lhs - rhs).norm() < 1e-14);
        let id = (a * a.inverse()).to_homogeneous();
        assert!((id - Matrix4::identity()).norm() < 1e-14);
    }
}
