//! Colored point cloud quality metrics.
//!
//! Colors are compared in `[0, 1]` RGB; correspondences are nearest
//! neighbors in 3D position.

mod voxel;

pub use voxel::VoxelGrid;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairwise_sum, ColoredPointCloud, Mat3, SpatialIndex, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Color threshold; a reference point is recalled within `3·tau`.
    pub tau: f64,
    /// Neighborhood radius for recall, meters.
    pub r_g: f64,
    pub voxel_size: f64,
    /// Reported fidelity when the color distance is exactly zero, dB.
    pub cf_cap: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            r_g: 0.5,
            voxel_size: 0.1,
            cf_cap: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorMetricsReport {
    pub cd: f64,
    pub cf: f64,
    pub lcr: f64,
    pub ccs: f64,
    pub tau: f64,
    pub r_g: f64,
    pub voxel_size: f64,
    pub source_points: usize,
    pub reference_points: usize,
}

impl ColorMetricsReport {
    /// `name value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "cd {}\ncf {}\nlcr {}\nccs {}\ntau {}\nr_g {}\nvoxel_size {}\nsource_points {}\nreference_points {}\n",
            self.cd,
            self.cf,
            self.lcr,
            self.ccs,
            self.tau,
            self.r_g,
            self.voxel_size,
            self.source_points,
            self.reference_points
        )
    }

    /// Machine-readable variant with parameters nested.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "metrics": { "cd": self.cd, "cf": self.cf, "lcr": self.lcr, "ccs": self.ccs },
            "parameters": { "tau": self.tau, "r_g": self.r_g, "voxel_size": self.voxel_size },
            "points": { "source": self.source_points, "reference": self.reference_points },
        })
    }
}

fn non_empty(clouds: &[&ColoredPointCloud]) -> Result<()> {
    if clouds.iter().any(|c| c.is_empty()) {
        Err(Error::EmptyCloud)
    } else {
        Ok(())
    }
}

// Mean over `from` of `term(i, nearest id in to)`.
fn mean_over_nearest(
    from: &ColoredPointCloud,
    to_index: &SpatialIndex,
    term: impl Fn(usize, usize, f64) -> f64 + Sync,
) -> f64 {
    let terms: Vec<f64> = from
        .positions()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let (j, d2) = to_index.nearest_squared(p).expect("non-empty");
            term(i, j, d2)
        })
        .collect();
    pairwise_sum(&terms) / from.len() as f64
}

/// Symmetric nearest-neighbor color error:
/// `½·mean_i ‖c_i − c_π(i)‖ + ½·mean_j ‖c_j − c_π′(j)‖`.
pub fn color_distance(src: &ColoredPointCloud, reference: &ColoredPointCloud) -> Result<f64> {
    non_empty(&[src, reference])?;
    let src_index = SpatialIndex::new(src.positions());
    let ref_index = SpatialIndex::new(reference.positions());
    let forward = mean_over_nearest(src, &ref_index, |i, j, _| {
        (src.colors()[i] - reference.colors()[j]).norm()
    });
    let backward = mean_over_nearest(reference, &src_index, |j, i, _| {
        (reference.colors()[j] - src.colors()[i]).norm()
    });
    Ok(0.5 * forward + 0.5 * backward)
}

/// `−20·log₁₀(cd)`; `cap` when `cd` is zero.
pub fn color_fidelity(cd: f64, cap: f64) -> f64 {
    if cd == 0.0 {
        cap
    } else {
        -20.0 * cd.log10()
    }
}

/// Fraction of reference points with some source point within `r_g` whose
/// color differs by at most `3·tau`.
pub fn local_color_recall(src: &ColoredPointCloud, reference: &ColoredPointCloud, tau: f64, r_g: f64) -> Result<f64> {
    non_empty(&[src, reference])?;
    if !(tau > 0.0) || !(r_g > 0.0) {
        return Err(Error::invalid("tau and r_g must be positive"));
    }
    let index = SpatialIndex::new(src.positions());
    let limit = 3.0 * tau;
    let recalled = reference
        .positions()
        .par_iter()
        .zip(reference.colors().par_iter())
        .filter(|(x, c)| {
            index
                .radius_neighbors(x, r_g)
                .iter()
                .map(|&i| (src.colors()[i] - *c).norm())
                .fold(f64::INFINITY, f64::min)
                <= limit
        })
        .count();
    Ok(recalled as f64 / reference.len() as f64)
}

/// Mean over voxels holding ≥ 2 points of the trace of their sample (n−1)
/// RGB covariance. Zero when no voxel qualifies.
pub fn color_consistency_score(cloud: &ColoredPointCloud, voxel_size: f64) -> Result<f64> {
    non_empty(&[cloud])?;
    let grid = VoxelGrid::new(cloud.positions(), voxel_size)?;
    let traces: Vec<f64> = grid
        .cells()
        .values()
        .filter(|ids| ids.len() >= 2)
        .map(|ids| {
            let n = ids.len() as f64;
            let mean = ids.iter().fold(Vec3::zeros(), |acc, &i| acc + cloud.colors()[i]) / n;
            let cov = ids.iter().fold(Mat3::zeros(), |acc, &i| {
                let d = cloud.colors()[i] - mean;
                acc + d * d.transpose()
            }) / (n - 1.0);
            cov.trace()
        })
        .collect();
    if traces.is_empty() {
        return Ok(0.0);
    }
    Ok(pairwise_sum(&traces) / traces.len() as f64)
}

/// Symmetric mean nearest-neighbor position distance, meters.
pub fn geometric_chamfer(src: &ColoredPointCloud, reference: &ColoredPointCloud) -> Result<f64> {
    non_empty(&[src, reference])?;
    let src_index = SpatialIndex::new(src.positions());
    let ref_index = SpatialIndex::new(reference.positions());
    let forward = mean_over_nearest(src, &ref_index, |_, _, d2| d2.sqrt());
    let backward = mean_over_nearest(reference, &src_index, |_, _, d2| d2.sqrt());
    Ok(0.5 * forward + 0.5 * backward)
}

/// Fraction of source points whose nearest reference point is within `gate`.
pub fn overlap_fitness(src: &ColoredPointCloud, reference: &ColoredPointCloud, gate: f64) -> Result<f64> {
    non_empty(&[src, reference])?;
    if !(gate > 0.0) {
        return Err(Error::invalid("gate must be positive"));
    }
    let index = SpatialIndex::new(reference.positions());
    let g2 = gate * gate;
    let hits = src
        .positions()
        .par_iter()
        .filter(|p| index.nearest_squared(p).expect("non-empty").1 <= g2)
        .count();
    Ok(hits as f64 / src.len() as f64)
}

/// All four color metrics with the given parameters; CCS is taken on `src`.
pub fn evaluate_colors(
    src: &ColoredPointCloud,
    reference: &ColoredPointCloud,
    cfg: &EvalConfig,
) -> Result<ColorMetricsReport> {
    let cd = color_distance(src, reference)?;
    Ok(ColorMetricsReport {
        cd,
        cf: color_fidelity(cd, cfg.cf_cap),
        lcr: local_color_recall(src, reference, cfg.tau, cfg.r_g)?,
        ccs: color_consistency_score(src, cfg.voxel_size)?,
        tau: cfg.tau,
        r_g: cfg.r_g,
        voxel_size: cfg.voxel_size,
        source_points: src.len(),
        reference_points: reference.len(),
    })
}
