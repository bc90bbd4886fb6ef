//! SE(3) tangent-space maps. Twists are ordered `[ρ (translation), φ (rotation)]`.

use nalgebra::{Matrix6, Vector6};

use crate::geometry::so3::{self, hat};
use crate::geometry::{Mat3, Pose, Vec3};

pub type Twist = Vector6<f64>;

const SMALL_ANGLE: f64 = 1e-5;

fn split(xi: &Twist) -> (Vec3, Vec3) {
    (xi.fixed_rows::<3>(0).into_owned(), xi.fixed_rows::<3>(3).into_owned())
}

pub fn exp(xi: &Twist) -> Pose {
    let (rho, phi) = split(xi);
    Pose::from_parts(so3::exp(&phi), so3::left_jacobian(&phi) * rho)
}

pub fn log(pose: &Pose) -> Twist {
    let phi = so3::log(&pose.rotation);
    let rho = so3::left_jacobian_inverse(&phi) * pose.translation;
    let mut xi = Twist::zeros();
    xi.fixed_rows_mut::<3>(0).copy_from(&rho);
    xi.fixed_rows_mut::<3>(3).copy_from(&phi);
    xi
}

/// `Ad(T)` with `T · exp(ξ) · T⁻¹ = exp(Ad(T) ξ)`.
pub fn adjoint(pose: &Pose) -> Matrix6<f64> {
    let r = pose.rotation.matrix();
    let mut ad = Matrix6::zeros();
    ad.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    ad.fixed_view_mut::<3, 3>(0, 3).copy_from(&(hat(&pose.translation) * r));
    ad.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    ad
}

// Coupling block of the SE(3) left Jacobian.
fn q_block(rho: &Vec3, phi: &Vec3) -> Mat3 {
    let theta = phi.norm();
    let t2 = theta * theta;
    let (a, b, c) = if theta < SMALL_ANGLE {
        (
            1.0 / 6.0 - t2 / 120.0,
            1.0 / 24.0 - t2 / 720.0,
            1.0 / 120.0 - t2 / 2520.0,
        )
    } else {
        let (s, co) = theta.sin_cos();
        (
            (theta - s) / (t2 * theta),
            (t2 + 2.0 * co - 2.0) / (2.0 * t2 * t2),
            (2.0 * theta - 3.0 * s + theta * co) / (2.0 * t2 * t2 * theta),
        )
    };
    let p = hat(phi);
    let r = hat(rho);
    let prp = p * r * p;
    0.5 * r + a * (p * r + r * p + prp) + b * (p * p * r + r * p * p - 3.0 * prp) + c * (prp * p + p * prp)
}

pub fn left_jacobian_inverse(xi: &Twist) -> Matrix6<f64> {
    let (rho, phi) = split(xi);
    let j_inv = so3::left_jacobian_inverse(&phi);
    let q = q_block(&rho, &phi);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&j_inv);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-j_inv * q * j_inv));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&j_inv);
    out
}

/// Inverse right Jacobian: `log(exp(ξ)·exp(δ)) ≈ ξ + J_r⁻¹(ξ)·δ`.
pub fn right_jacobian_inverse(xi: &Twist) -> Matrix6<f64> {
    left_jacobian_inverse(&(-xi))
}
