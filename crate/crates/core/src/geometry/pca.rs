use nalgebra::SymmetricEigen;

use super::{centroid, Mat3, Vec3};
use crate::error::{Error, Result};

/// Eigenvalues of the centered (1/N) covariance, sorted descending and
/// clamped at zero.
pub fn covariance_eigenvalues(points: &[Vec3]) -> Result<[f64; 3]> {
    if points.len() < 2 {
        return Err(Error::degenerate("need at least two points for PCA"));
    }
    let mean = centroid(points);
    let cov = points.iter().fold(Mat3::zeros(), |acc, p| {
        let d = p - mean;
        acc + d * d.transpose()
    }) / points.len() as f64;
    let mut ev: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok([ev[0], ev[1], ev[2]])
}

/// `1 − (λ₂ + λ₃)/λ₁` over the positional covariance. 1 for collinear points,
/// 0 for an isotropic planar spread.
pub fn pca_linearity(points: &[Vec3]) -> Result<f64> {
    if points.len() >= 2 && points.iter().all(|p| *p == points[0]) {
        return Err(Error::degenerate("all points coincide"));
    }
    let [l1, l2, l3] = covariance_eigenvalues(points)?;
    if l1 <= 0.0 {
        return Err(Error::degenerate("all points coincide"));
    }
    Ok(1.0 - (l2 + l3) / l1)
}
