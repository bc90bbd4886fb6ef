use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{closed_form_scale, compute_lambda, estimate_rt_fixed_scale, regularized_objective, Correspondence};
use crate::error::{Error, Result};
use crate::geometry::{bounding_box, ColoredPointCloud, Sim3, SpatialIndex, Vec3};

const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpConfig {
    /// Regularization strength in `[0, 1]`; 0 disables the scale prior.
    pub beta: f64,
    pub max_iterations: usize,
    /// Correspondences farther apart than this (meters) are rejected.
    pub max_correspondence_distance: f64,
    /// Relative objective change that ends iteration.
    pub convergence_tol: f64,
    /// Prior scale `s₁*` the regularizer pulls towards.
    pub anchor_scale: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            max_iterations: 50,
            max_correspondence_distance: 1.0,
            convergence_tol: 1e-6,
            anchor_scale: 1.0,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.max_correspondence_distance > 0.0) || !(self.convergence_tol > 0.0) {
            return Err(Error::invalid("distance gate and tolerance must be positive"));
        }
        if !(self.anchor_scale > 0.0) {
            return Err(Error::invalid("anchor scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    pub transform: Sim3,
    /// Residual sum plus the scale penalty at the returned transform.
    pub final_objective: f64,
    pub iterations_used: usize,
    /// Gated correspondences at the returned transform.
    pub correspondence_count: usize,
    pub converged: bool,
    pub lambda: f64,
    /// Fraction of source points with a gated correspondence at the returned transform.
    pub fitness: f64,
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum ScaleMode {
    /// Scale stays at the initial value.
    Fixed,
    Regularized {
        lambda: f64,
        anchor: f64,
    },
}

fn correspondences(src: &[Vec3], target: &SpatialIndex, transform: &Sim3, gate2: f64) -> Vec<Correspondence> {
    src.par_iter()
        .map(|p| {
            let (id, d2) = target
                .nearest_squared(&transform.apply(p))
                .expect("target index is non-empty");
            (d2 <= gate2).then(|| (*p, *target.point(id)))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Alternating ICP: correspondences, then rotation/translation at the current
/// scale, then (in regularized mode) the closed-form scale.
pub(crate) fn run_icp(
    src: &[Vec3],
    target: &SpatialIndex,
    init: Sim3,
    mode: ScaleMode,
    max_iterations: usize,
    gate: f64,
    tol: f64,
) -> Result<IcpResult> {
    if src.len() < MIN_POINTS || target.len() < MIN_POINTS {
        return Err(Error::invalid(format!(
            "ICP needs at least {MIN_POINTS} points per cloud, got {} and {}",
            src.len(),
            target.len()
        )));
    }
    let gate2 = gate * gate;
    let (lambda, anchor) = match mode {
        ScaleMode::Fixed => (0.0, init.scale()),
        ScaleMode::Regularized { lambda, anchor } => (lambda, anchor),
    };
    // objective floor: RMS residual ~1e-12 of the target extent
    let extent = bounding_box(target.points()).map_or(1.0, |(lo, hi)| (hi - lo).norm().max(1.0));
    let floor = src.len() as f64 * (1e-12 * extent).powi(2);

    let mut transform = init;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let corr = correspondences(src, target, &transform, gate2);
        if corr.len() < 3 {
            return Err(Error::NoCorrespondences { found: corr.len() });
        }
        let (rotation, translation) = estimate_rt_fixed_scale(&corr, transform.scale())?;
        let scale = match mode {
            ScaleMode::Fixed => transform.scale(),
            ScaleMode::Regularized { lambda, anchor } => {
                closed_form_scale(&corr, &rotation, &translation, lambda, anchor)?
            }
        };
        if !(scale > 0.0) {
            return Err(Error::degenerate(format!("scale update collapsed to {scale}")));
        }
        transform = Sim3::new(scale, rotation, translation)?;
        let objective = regularized_objective(&corr, &transform, lambda, anchor);
        let prev = history.last().copied();
        history.push(objective);
        if objective <= floor {
            converged = true;
            break;
        }
        if let Some(prev) = prev {
            if (prev - objective).abs() <= tol * prev {
                converged = true;
                break;
            }
        }
    }

    let corr = correspondences(src, target, &transform, gate2);
    Ok(IcpResult {
        transform,
        final_objective: regularized_objective(&corr, &transform, lambda, anchor),
        iterations_used: iterations,
        correspondence_count: corr.len(),
        converged,
        lambda,
        fitness: corr.len() as f64 / src.len() as f64,
        objective_history: history,
    })
}

/// Sim(3) ICP with the scale regularized towards `cfg.anchor_scale`.
///
/// The weight is `β·n·D²` with `n` the source size and `D` the bounding-box
/// diagonal of the source after `init`, fixed for the whole run.
pub fn regularized_sim3_icp(
    src: &ColoredPointCloud,
    tgt: &ColoredPointCloud,
    init: &Sim3,
    cfg: &IcpConfig,
) -> Result<IcpResult> {
    let index = SpatialIndex::new(tgt.positions());
    regularized_sim3_icp_indexed(src, &index, init, cfg)
}

/// [`regularized_sim3_icp`] against a prebuilt target index.
pub fn regularized_sim3_icp_indexed(
    src: &ColoredPointCloud,
    target: &SpatialIndex,
    init: &Sim3,
    cfg: &IcpConfig,
) -> Result<IcpResult> {
    cfg.validate()?;
    let moved: Vec<Vec3> = src.positions().iter().map(|p| init.apply(p)).collect();
    let diag = bounding_box(&moved).map_or(0.0, |(lo, hi)| (hi - lo).norm());
    let lambda = compute_lambda(src.len(), diag, cfg.beta);
    run_icp(
        src.positions(),
        target,
        *init,
        ScaleMode::Regularized {
            lambda,
            anchor: cfg.anchor_scale,
        },
        cfg.max_iterations,
        cfg.max_correspondence_distance,
        cfg.convergence_tol,
    )
}
