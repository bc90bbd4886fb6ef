//! Rigid and similarity transforms, colored clouds, trajectories and the
//! small closed-form solvers the rest of the crate is built on.

mod cloud;
mod index;
mod pca;
mod pose;
mod sim3;
pub mod so3;
mod trajectory;
mod umeyama;

pub use cloud::ColoredPointCloud;
pub use index::SpatialIndex;
pub use pca::{covariance_eigenvalues, pca_linearity};
pub use pose::Pose;
pub use sim3::{apply_sim3, Sim3};
pub use so3::project_to_so3;
pub use trajectory::{Stamped, TimedTrajectory};
pub use umeyama::umeyama_sim3;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Rot3 = nalgebra::Rotation3<f64>;

/// Tolerance on ‖RᵀR − I‖_F and |det R − 1| for accepting a matrix as a rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Sum with pairwise (cascade) reduction. Deterministic for a fixed input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Axis-aligned `(min, max)` of a point set, `None` when empty.
pub fn bounding_box(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
}

pub(crate) fn centroid(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n
}
