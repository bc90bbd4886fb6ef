use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix6};
use serde::{Deserialize, Serialize};

use super::se3::{self, Twist};
use super::{NodeId, PoseEdge, PoseGraph};
use crate::error::{Error, Result};
use crate::geometry::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgoConfig {
    pub initial_damping: f64,
    /// Relative chi² decrease below which an accepted step ends the solve.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for PgoConfig {
    fn default() -> Self {
        Self {
            initial_damping: 1e-4,
            tol: 1e-8,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgoResult {
    pub poses: BTreeMap<NodeId, Pose>,
    pub initial_chi2: f64,
    pub final_chi2: f64,
    /// Accepted steps.
    pub iterations: usize,
    /// False when the iteration cap ended the solve.
    pub converged: bool,
    /// chi² after every accepted step, starting with the initial value.
    pub chi2_history: Vec<f64>,
}

// Below this the graph is considered exactly consistent.
const CHI2_FLOOR: f64 = 1e-20;
const MAX_DAMPING: f64 = 1e12;

fn residual(edge: &PoseEdge, poses: &BTreeMap<NodeId, Pose>) -> (Twist, Pose, Pose) {
    let xi = poses[&edge.from];
    let xj = poses[&edge.to];
    let e = se3::log(&(edge.relative.inverse() * xi.inverse() * xj));
    (e, xi, xj)
}

fn chi2(graph: &PoseGraph, poses: &BTreeMap<NodeId, Pose>) -> f64 {
    graph
        .edges()
        .iter()
        .map(|edge| {
            let (e, _, _) = residual(edge, poses);
            (e.transpose() * edge.information * e)[(0, 0)]
        })
        .sum()
}

/// Levenberg-damped Gauss–Newton over all free node poses with right
/// perturbations `X ← X·exp(δ)`. The gauge node is never touched; steps that
/// would raise chi² are rejected and the damping raised.
pub fn optimize_pose_graph(graph: &PoseGraph, cfg: &PgoConfig) -> Result<PgoResult> {
    let gauge = graph.gauge();
    let free: Vec<NodeId> = graph.nodes().keys().copied().filter(|id| *id != gauge).collect();
    let slot: BTreeMap<NodeId, usize> = free.iter().enumerate().map(|(i, id)| (*id, 6 * i)).collect();
    let dim = 6 * free.len();

    let mut poses = graph.poses();
    let initial_chi2 = chi2(graph, &poses);
    let mut current = initial_chi2;
    let mut history = vec![current];
    let mut damping = cfg.initial_damping;
    let mut accepted = 0;
    let mut converged = true;

    if dim == 0 || current <= CHI2_FLOOR {
        return Ok(PgoResult {
            poses,
            initial_chi2,
            final_chi2: current,
            iterations: 0,
            converged,
            chi2_history: history,
        });
    }

    let mut first = true;
    let mut remaining = cfg.max_iterations;
    'outer: while remaining > 0 {
        remaining -= 1;
        let (h, g) = linearize(graph, &poses, &slot, dim);
        if first {
            if h.clone().cholesky().is_none() {
                return Err(Error::SingularSystem(
                    "information does not constrain every free pose".into(),
                ));
            }
            first = false;
        }
        loop {
            let mut damped = h.clone();
            for i in 0..dim {
                damped[(i, i)] += damping;
            }
            let Some(chol) = damped.cholesky() else {
                damping *= 10.0;
                if damping > MAX_DAMPING {
                    break 'outer;
                }
                continue;
            };
            let step = chol.solve(&(-&g));
            let candidate = retract(&poses, &slot, &step);
            let trial = chi2(graph, &candidate);
            if trial < current {
                let decrease = (current - trial) / current;
                poses = candidate;
                current = trial;
                history.push(current);
                accepted += 1;
                damping = (damping / 10.0).max(1e-15);
                if decrease < cfg.tol || current <= CHI2_FLOOR {
                    break 'outer;
                }
                break;
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                // no descent direction left at working precision
                break 'outer;
            }
        }
        if remaining == 0 {
            converged = false;
        }
    }

    Ok(PgoResult {
        poses,
        initial_chi2,
        final_chi2: current,
        iterations: accepted,
        converged,
        chi2_history: history,
    })
}

fn linearize(
    graph: &PoseGraph,
    poses: &BTreeMap<NodeId, Pose>,
    slot: &BTreeMap<NodeId, usize>,
    dim: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let mut h = DMatrix::zeros(dim, dim);
    let mut g = DVector::zeros(dim);
    for edge in graph.edges() {
        let (e, xi, xj) = residual(edge, poses);
        let jr_inv = se3::right_jacobian_inverse(&e);
        let jac_to = jr_inv;
        let jac_from: Matrix6<f64> = -jr_inv * se3::adjoint(&(xj.inverse() * xi));
        let omega = edge.information;
        let blocks = [(slot.get(&edge.from), jac_from), (slot.get(&edge.to), jac_to)];
        for (a, ja) in &blocks {
            let Some(&a) = *a else { continue };
            let jt_omega = ja.transpose() * omega;
            let mut gv = g.fixed_rows_mut::<6>(a);
            gv += jt_omega * e;
            for (b, jb) in &blocks {
                let Some(&b) = *b else { continue };
                let mut hv = h.fixed_view_mut::<6, 6>(a, b);
                hv += jt_omega * jb;
            }
        }
    }
    (h, g)
}

fn retract(
    poses: &BTreeMap<NodeId, Pose>,
    slot: &BTreeMap<NodeId, usize>,
    step: &DVector<f64>,
) -> BTreeMap<NodeId, Pose> {
    poses
        .iter()
        .map(|(id, pose)| match slot.get(id) {
            Some(&a) => {
                let delta: Twist = step.fixed_rows::<6>(a).into_owned();
                (*id, *pose * se3::exp(&delta))
            }
            None => (*id, *pose),
        })
        .collect()
}
