use std::collections::{BTreeMap, BTreeSet};

use super::{pair_poses_by_timestamp, SessionAlignment};
use crate::error::{Error, Result};
use crate::geometry::{umeyama_sim3, TimedTrajectory, Vec3};

/// Fewer shared frames than this and the relative scale is not estimated.
const MIN_OVERLAP: usize = 3;

/// Translations of frames observed by two sessions, keyed by the unordered
/// session pair and stored lower-id first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverlapPoses {
    pairs: BTreeMap<(usize, usize), Vec<(Vec3, Vec3)>>,
}

impl OverlapPoses {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `pairs[i] = (translation in a, translation in b)`.
    pub fn insert(&mut self, a: usize, b: usize, pairs: Vec<(Vec3, Vec3)>) {
        if a <= b {
            self.pairs.insert((a, b), pairs);
        } else {
            self.pairs
                .insert((b, a), pairs.into_iter().map(|(x, y)| (y, x)).collect());
        }
    }

    /// Shared translations oriented as `(in a, in b)`.
    pub fn between(&self, a: usize, b: usize) -> Option<(Vec<Vec3>, Vec<Vec3>)> {
        let (key, flip) = if a <= b { ((a, b), false) } else { ((b, a), true) };
        let pairs = self.pairs.get(&key)?;
        let (x, y): (Vec<Vec3>, Vec<Vec3>) = pairs.iter().copied().unzip();
        Some(if flip { (y, x) } else { (x, y) })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Translations of the frames two session trajectories share, matched by timestamp.
pub fn overlap_translations(a: &TimedTrajectory, b: &TimedTrajectory, max_gap: f64) -> Vec<(Vec3, Vec3)> {
    match pair_poses_by_timestamp(a, b, max_gap) {
        Ok(pairs) => pairs
            .iter()
            .map(|p| (p.vggt_pose.translation, p.cam_pose.translation))
            .collect(),
        Err(_) => Vec::new(),
    }
}

/// Repairs the scale of every non-inlier session from its nearest inlier
/// (by session id, lower id on ties): the inlier's scale times the relative
/// scale fitted on the frames both sessions observed. Without enough shared
/// frames the inlier's scale is inherited as-is.
pub fn correct_outlier_scales(
    alignments: &[SessionAlignment],
    inliers: &BTreeSet<usize>,
    overlaps: &OverlapPoses,
) -> Result<Vec<SessionAlignment>> {
    let inlier_rows: Vec<&SessionAlignment> = alignments.iter().filter(|a| inliers.contains(&a.session_id)).collect();
    if inlier_rows.is_empty() {
        return Err(Error::NoInliers);
    }
    alignments
        .iter()
        .map(|a| {
            let mut out = a.clone();
            if inliers.contains(&a.session_id) {
                out.scale_inlier = true;
                out.corrected_scale = a.raw_scale;
                return Ok(out);
            }
            let anchor = inlier_rows
                .iter()
                .min_by_key(|j| (j.session_id.abs_diff(a.session_id), j.session_id))
                .expect("non-empty");
            let relative = overlaps
                .between(anchor.session_id, a.session_id)
                .filter(|(x, _)| x.len() >= MIN_OVERLAP)
                .and_then(|(in_anchor, in_outlier)| umeyama_sim3(&in_outlier, &in_anchor).ok())
                .map_or(1.0, |t| t.scale());
            out.scale_inlier = false;
            out.corrected_scale = anchor.raw_scale * relative;
            Ok(out)
        })
        .collect()
}
