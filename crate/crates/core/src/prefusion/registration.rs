use serde::{Deserialize, Serialize};

use super::{pair_poses_by_timestamp, PosePair, PrefusionConfig};
use crate::error::{Error, Result};
use crate::geometry::{centroid, pca_linearity, project_to_so3, umeyama_sim3, Mat3, Rot3, Sim3, TimedTrajectory, Vec3};

/// Pre-fusion outcome for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAlignment {
    pub session_id: usize,
    /// Reconstruction frame → world, with the raw (uncorrected) scale.
    pub transform: Sim3,
    pub linearity: f64,
    pub raw_scale: f64,
    pub corrected_scale: f64,
    /// Set by scale consensus; `false` until then.
    pub scale_inlier: bool,
    pub rotation_corrected: bool,
    pub pair_count: usize,
    /// Centroids of the paired reconstruction and camera translations.
    pub vggt_centroid: Vec3,
    pub cam_centroid: Vec3,
}

impl SessionAlignment {
    /// `transform` with the corrected scale, translation refit so the paired
    /// centroids still coincide.
    pub fn corrected_transform(&self) -> Result<Sim3> {
        let s = self.corrected_scale;
        let t = self.cam_centroid - s * (self.transform.rotation * self.vggt_centroid);
        Sim3::new(s, self.transform.rotation, t)
    }
}

/// Umeyama over the translation parts of the pairs (reconstruction → camera).
pub fn register_session_poses(pairs: &[PosePair]) -> Result<Sim3> {
    let (src, tgt) = split_translations(pairs);
    umeyama_sim3(&src, &tgt)
}

fn split_translations(pairs: &[PosePair]) -> (Vec<Vec3>, Vec<Vec3>) {
    pairs
        .iter()
        .map(|p| (p.vggt_pose.translation, p.cam_pose.translation))
        .unzip()
}

/// Refines the rotation of `initial` from the orientations of matched poses:
/// the mean of `R_tgt · (R₁·R_src)ᵀ` is projected onto SO(3) and
/// left-multiplied onto `R₁`.
pub fn correct_rotation(initial: &Sim3, src_rots: &[Rot3], tgt_rots: &[Rot3]) -> Result<Rot3> {
    if src_rots.len() != tgt_rots.len() || src_rots.is_empty() {
        return Err(Error::invalid(format!(
            "rotation correction needs equal non-empty inputs, got {} and {}",
            src_rots.len(),
            tgt_rots.len()
        )));
    }
    let r1 = initial.rotation;
    let sum = src_rots.iter().zip(tgt_rots).fold(Mat3::zeros(), |acc, (src, tgt)| {
        let aligned = r1 * src;
        acc + tgt.matrix() * aligned.matrix().transpose()
    });
    let mean = sum / src_rots.len() as f64;
    let sv = mean.singular_values();
    let floor = 1e-12 * sv.max().max(f64::MIN_POSITIVE);
    if sv.iter().filter(|&&s| s <= floor).count() > 1 {
        return Err(Error::degenerate("mean relative rotation has rank ≤ 1"));
    }
    let delta = project_to_so3(&mean)?;
    Ok(delta * r1)
}

/// Pairing, Umeyama and linearity-gated rotation correction for one session.
///
/// Linearity is measured on the paired camera translations. When the
/// rotation is replaced, the translation is refit for the new rotation.
pub fn align_session(
    session_id: usize,
    vggt: &TimedTrajectory,
    cam: &TimedTrajectory,
    cfg: &PrefusionConfig,
) -> Result<SessionAlignment> {
    let pairs = pair_poses_by_timestamp(vggt, cam, cfg.max_gap)?;
    if pairs.len() < 3 {
        return Err(Error::degenerate(format!(
            "session {session_id}: only {} pose pairs",
            pairs.len()
        )));
    }
    let mut transform = register_session_poses(&pairs)?;
    let (src, tgt) = split_translations(&pairs);
    let vggt_centroid = centroid(&src);
    let cam_centroid = centroid(&tgt);
    let linearity = pca_linearity(&tgt)?;

    let rotation_corrected = linearity > cfg.linearity_threshold;
    if rotation_corrected {
        let src_rots: Vec<Rot3> = pairs.iter().map(|p| p.vggt_pose.rotation).collect();
        let tgt_rots: Vec<Rot3> = pairs.iter().map(|p| p.cam_pose.rotation).collect();
        let rotation = correct_rotation(&transform, &src_rots, &tgt_rots)?;
        let s = transform.scale();
        transform = Sim3::new(s, rotation, cam_centroid - s * (rotation * vggt_centroid))?;
    }

    Ok(SessionAlignment {
        session_id,
        transform,
        linearity,
        raw_scale: transform.scale(),
        corrected_scale: transform.scale(),
        scale_inlier: false,
        rotation_corrected,
        pair_count: pairs.len(),
        vggt_centroid,
        cam_centroid,
    })
}
