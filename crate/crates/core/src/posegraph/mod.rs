//! Global pose graph over all frames of all sessions: intra-session odometry
//! edges, inter-session edges from rigid ICP on overlapping frames, and a
//! damped Gauss–Newton solver on SE(3).

mod g2o;
mod graph;
mod optimize;
pub mod se3;

use std::collections::BTreeMap;

pub use g2o::write_g2o;
pub use graph::{build_pose_graph, isotropic_information, EdgeKind, NodeId, PoseEdge, PoseGraph, PoseNode};
pub use optimize::{optimize_pose_graph, PgoConfig, PgoResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ColoredPointCloud, Pose, Sim3, SpatialIndex};
use crate::postfusion::{run_icp, ScaleMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidIcpConfig {
    pub max_iterations: usize,
    pub max_correspondence_distance: f64,
    pub convergence_tol: f64,
}

impl Default for RigidIcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            max_correspondence_distance: 1.0,
            convergence_tol: 1e-6,
        }
    }
}

/// Point-to-point rigid ICP. Returns the pose mapping `src` onto `tgt` and the
/// fraction of source points with a correspondence inside the gate at that pose.
pub fn icp_se3(
    src: &ColoredPointCloud,
    tgt: &ColoredPointCloud,
    init: &Pose,
    cfg: &RigidIcpConfig,
) -> Result<(Pose, f64)> {
    let index = SpatialIndex::new(tgt.positions());
    let out = run_icp(
        src.positions(),
        &index,
        Sim3::from_pose(init),
        ScaleMode::Fixed,
        cfg.max_iterations,
        cfg.max_correspondence_distance,
        cfg.convergence_tol,
    )?;
    Ok((
        Pose::from_parts(out.transform.rotation, out.transform.translation),
        out.fitness,
    ))
}

/// Transforms each frame's local cloud (`frames[session][frame]`) by its world
/// pose and concatenates everything in session/frame order.
pub fn propagate_poses_to_clouds(
    frames: &[Vec<ColoredPointCloud>],
    poses: &BTreeMap<NodeId, Pose>,
) -> Result<ColoredPointCloud> {
    let mut out = ColoredPointCloud::default();
    for (k, session) in frames.iter().enumerate() {
        for (i, cloud) in session.iter().enumerate() {
            let pose = poses
                .get(&NodeId::new(k, i))
                .ok_or(Error::MissingPose { session: k, frame: i })?;
            out.extend(&crate::geometry::apply_sim3(&Sim3::from_pose(pose), cloud));
        }
    }
    Ok(out)
}
