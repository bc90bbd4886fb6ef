use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, TimedTrajectory};

/// LiDAR-to-camera calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrinsics {
    /// Maps points from the LiDAR frame into the camera frame.
    pub cam_from_lidar: Pose,
    /// Added to LiDAR timestamps to express them on the camera clock.
    pub time_offset: f64,
}

impl Default for Extrinsics {
    fn default() -> Self {
        Self {
            cam_from_lidar: Pose::identity(),
            time_offset: 0.0,
        }
    }
}

/// A reconstruction pose matched to the metric camera pose closest in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePair {
    pub vggt_index: usize,
    pub cam_index: usize,
    pub vggt_pose: Pose,
    pub cam_pose: Pose,
    pub time_gap: f64,
}

/// `T_world_cam = T_world_lidar · cam_from_lidar⁻¹`, timestamps shifted by the offset.
pub fn lidar_to_camera_trajectory(lidar: &TimedTrajectory, ext: &Extrinsics) -> Result<TimedTrajectory> {
    if lidar.is_empty() {
        return Err(Error::invalid("LiDAR trajectory is empty"));
    }
    let lidar_from_cam = ext.cam_from_lidar.inverse();
    Ok(lidar.map(ext.time_offset, |world_lidar| world_lidar * &lidar_from_cam))
}

/// For every reconstruction pose, the camera pose minimizing |Δt|;
/// pairs with |Δt| > `max_gap` are dropped. Equal gaps pick the earlier
/// camera pose. Output follows the reconstruction order.
pub fn pair_poses_by_timestamp(vggt: &TimedTrajectory, cam: &TimedTrajectory, max_gap: f64) -> Result<Vec<PosePair>> {
    if vggt.is_empty() || cam.is_empty() {
        return Err(Error::invalid("cannot pair an empty trajectory"));
    }
    if !(max_gap > 0.0) {
        return Err(Error::invalid("max_gap must be positive"));
    }
    let cams = cam.entries();
    let mut pairs = Vec::with_capacity(vggt.len());
    for (i, v) in vggt.entries().iter().enumerate() {
        let t = v.timestamp;
        let split = cams.partition_point(|c| c.timestamp < t);
        let mut best: Option<(usize, f64)> = None;
        for j in [split.wrapping_sub(1), split] {
            if let Some(c) = cams.get(j) {
                let gap = (t - c.timestamp).abs();
                if best.is_none_or(|(_, g)| gap < g) {
                    best = Some((j, gap));
                }
            }
        }
        let (j, gap) = best.expect("camera trajectory is non-empty");
        if gap <= max_gap {
            pairs.push(PosePair {
                vggt_index: i,
                cam_index: j,
                vggt_pose: v.pose,
                cam_pose: cams[j].pose,
                time_gap: gap,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoPairsFound { max_gap });
    }
    Ok(pairs)
}
