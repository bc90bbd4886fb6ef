//! Coarse per-session alignment of scale-free reconstructions to a metric
//! trajectory: timestamp pairing, Umeyama registration, linearity-gated
//! rotation correction and cross-session scale consensus.

mod outlier;
mod pairing;
mod ransac;
mod registration;

pub use outlier::{correct_outlier_scales, overlap_translations, OverlapPoses};
pub use pairing::{lidar_to_camera_trajectory, pair_poses_by_timestamp, Extrinsics, PosePair};
pub use ransac::{sampling_probabilities, scale_ransac, ScaleConsensus, K_SIGMA};
pub use registration::{align_session, correct_rotation, register_session_poses, SessionAlignment};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefusionConfig {
    /// Largest accepted |Δt| between paired poses, seconds.
    pub max_gap: f64,
    /// Rotation correction runs when linearity exceeds this.
    pub linearity_threshold: f64,
    pub ransac_iterations: usize,
    pub seed: u64,
}

impl Default for PrefusionConfig {
    fn default() -> Self {
        Self {
            max_gap: 0.05,
            linearity_threshold: 0.9,
            ransac_iterations: 100,
            seed: 0,
        }
    }
}
