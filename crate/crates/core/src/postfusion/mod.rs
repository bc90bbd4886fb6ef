//! Fine registration of a coarsely aligned reconstruction onto its metric
//! LiDAR counterpart: Sim(3) ICP whose scale is pulled towards an anchor with
//! a weight proportional to the source size.

mod icp;

pub use icp::{regularized_sim3_icp, regularized_sim3_icp_indexed, IcpConfig, IcpResult};
pub(crate) use icp::{run_icp, ScaleMode};

use crate::error::{Error, Result};
use crate::geometry::{centroid, project_to_so3, Mat3, Rot3, Sim3, Vec3};

/// A source point (in its own frame) paired with its matched target point.
pub type Correspondence = (Vec3, Vec3);

/// Regularization weight `β · n · D²`.
pub fn compute_lambda(n: usize, bbox_diagonal: f64, beta: f64) -> f64 {
    beta * n as f64 * bbox_diagonal * bbox_diagonal
}

/// Scale minimizing `Σ‖q − (sRp + t)‖² + λ(s − s*)²` with `R`, `t` held:
/// `[Σ (q − t)ᵀRp + λs*] / [Σ ‖Rp‖² + λ]`.
pub fn closed_form_scale(
    correspondences: &[Correspondence],
    rotation: &Rot3,
    translation: &Vec3,
    lambda: f64,
    anchor: f64,
) -> Result<f64> {
    let (num, den) = correspondences
        .iter()
        .fold((lambda * anchor, lambda), |(num, den), (p, q)| {
            let rp = rotation * p;
            (num + (q - translation).dot(&rp), den + rp.norm_squared())
        });
    if den <= 1e-15 {
        return Err(Error::degenerate("scale denominator vanishes"));
    }
    Ok(num / den)
}

/// Rotation and translation minimizing `Σ‖q − (sRp + t)‖²` for a fixed scale.
pub fn estimate_rt_fixed_scale(correspondences: &[Correspondence], scale: f64) -> Result<(Rot3, Vec3)> {
    if correspondences.len() < 3 {
        return Err(Error::degenerate(format!(
            "rigid fit needs at least 3 correspondences, got {}",
            correspondences.len()
        )));
    }
    let (src, tgt): (Vec<Vec3>, Vec<Vec3>) = correspondences.iter().copied().unzip();
    if src.iter().all(|p| *p == src[0]) {
        return Err(Error::degenerate("source points all coincide"));
    }
    let mu_p = centroid(&src);
    let mu_q = centroid(&tgt);
    let cross = src
        .iter()
        .zip(&tgt)
        .fold(Mat3::zeros(), |acc, (p, q)| acc + (q - mu_q) * (p - mu_p).transpose());
    let rotation = project_to_so3(&cross)?;
    Ok((rotation, mu_q - scale * (rotation * mu_p)))
}

/// Residual sum plus `λ(s − anchor)²`.
pub fn regularized_objective(correspondences: &[Correspondence], transform: &Sim3, lambda: f64, anchor: f64) -> f64 {
    let residual: f64 = correspondences
        .iter()
        .map(|(p, q)| (q - transform.apply(p)).norm_squared())
        .sum();
    residual + lambda * (transform.scale() - anchor).powi(2)
}
