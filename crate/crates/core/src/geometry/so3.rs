//! SO(3) helpers: SVD projection, exponential/logarithm maps and the
//! rotation Jacobians used by the pose graph solver.

use super::{Mat3, Rot3, Vec3, ROTATION_TOLERANCE};
use crate::error::{Error, Result};

const SMALL_ANGLE: f64 = 1e-6;

/// Skew-symmetric matrix with `hat(a) * b == a.cross(&b)`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Nearest proper rotation to `m` in the Frobenius norm:
/// `U · diag(1, 1, det(UVᵀ)) · Vᵀ` where `m = UΣVᵀ`.
pub fn project_to_so3(m: &Mat3) -> Result<Rot3> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::degenerate("matrix has non-finite entries"));
    }
    if m.iter().all(|&x| x == 0.0) {
        return Err(Error::degenerate("cannot project the zero matrix onto SO(3)"));
    }
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    // singular values come back sorted, so the last column pairs with the smallest one
    let d = (u * v_t).determinant().signum();
    let correction = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    Ok(Rot3::from_matrix_unchecked(u * correction * v_t))
}

/// Checks orthonormality and orientation to [`ROTATION_TOLERANCE`].
pub fn is_rotation(m: &Mat3) -> bool {
    let ortho = (m.transpose() * m - Mat3::identity()).norm();
    ortho <= ROTATION_TOLERANCE && (m.determinant() - 1.0).abs() <= ROTATION_TOLERANCE
}

pub fn exp(phi: &Vec3) -> Rot3 {
    let theta = phi.norm();
    let k = hat(phi);
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta * theta / 6.0, 0.5 - theta * theta / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Rot3::from_matrix_unchecked(Mat3::identity() + a * k + b * k * k)
}

/// Rotation vector of `r`, with angle in `[0, π]`.
pub fn log(r: &Rot3) -> Vec3 {
    let m = r.matrix();
    let w = 0.5 * Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let cos = (0.5 * (m.trace() - 1.0)).clamp(-1.0, 1.0);
    let sin = w.norm();
    let theta = sin.atan2(cos);
    if theta < SMALL_ANGLE {
        return w * (1.0 + theta * theta / 6.0);
    }
    if cos > -0.5 {
        return w * (theta / sin);
    }
    // near π the antisymmetric part vanishes; read the axis off the symmetric part
    let b = (0.5 * (m + m.transpose()) - Mat3::identity() * cos) / (1.0 - cos);
    let k = (0..3).max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)])).unwrap_or(0);
    let mut axis: Vec3 = b.column(k).into_owned() / b[(k, k)].max(0.0).sqrt();
    axis.normalize_mut();
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// Angle of `a⁻¹·b` in radians.
pub fn geodesic_angle(a: &Rot3, b: &Rot3) -> f64 {
    a.rotation_to(b).angle()
}

/// Left Jacobian of SO(3); also the `V` matrix of the SE(3) exponential.
pub fn left_jacobian(phi: &Vec3) -> Mat3 {
    let theta = phi.norm();
    let k = hat(phi);
    let t2 = theta * theta;
    let (b, c) = if theta < SMALL_ANGLE {
        (0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        ((1.0 - theta.cos()) / t2, (theta - theta.sin()) / (t2 * theta))
    };
    Mat3::identity() + b * k + c * k * k
}

pub fn left_jacobian_inverse(phi: &Vec3) -> Mat3 {
    let theta = phi.norm();
    let k = hat(phi);
    let t2 = theta * theta;
    let c = if theta < SMALL_ANGLE {
        1.0 / 12.0 + t2 / 720.0
    } else {
        1.0 / t2 - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    };
    Mat3::identity() - 0.5 * k + c * k * k
}
