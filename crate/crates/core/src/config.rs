//! Flat `section.key = value` configuration files.
//!
//! Sections: `prefusion`, `postfusion`, `pgo`, `eval`, `synth`. Unknown keys
//! and unparsable values are rejected. Keys not mentioned keep their defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::prefusion::K_SIGMA;
use crate::synth::SyntheticSceneSpec;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub synth: SyntheticSceneSpec,
}

fn value<T: FromStr>(key: &str, raw: &str, label: &str, line: usize) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(label, format!("line {line}: invalid value `{raw}` for `{key}`")))
}

fn optional<T: FromStr>(key: &str, raw: &str, label: &str, line: usize) -> Result<Option<T>> {
    if raw == "none" {
        Ok(None)
    } else {
        value(key, raw, label, line).map(Some)
    }
}

impl Settings {
    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, val) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(label, format!("line {line}: expected `section.key = value`")))?;
            s.set(key.trim(), val.trim(), label, line)?;
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Overrides every seed in the file.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.pipeline.prefusion.seed = seed;
        self.synth.seed = seed;
        self
    }

    fn set(&mut self, key: &str, raw: &str, label: &str, line: usize) -> Result<()> {
        let p = &mut self.pipeline;
        let g = &mut self.synth;
        macro_rules! v {
            () => {
                value(key, raw, label, line)?
            };
        }
        match key {
            "prefusion.max_gap" => p.prefusion.max_gap = v!(),
            "prefusion.linearity_threshold" => p.prefusion.linearity_threshold = v!(),
            "prefusion.ransac_iterations" => p.prefusion.ransac_iterations = v!(),
            "prefusion.seed" => p.prefusion.seed = v!(),
            "prefusion.k_sigma" => {
                let k: f64 = v!();
                if k != K_SIGMA {
                    return Err(Error::parse(
                        label,
                        format!("line {line}: k_sigma is fixed at {K_SIGMA}"),
                    ));
                }
            }
            "postfusion.beta" => p.postfusion.beta = v!(),
            "postfusion.max_correspondence_distance" => p.postfusion.max_correspondence_distance = v!(),
            "postfusion.tol" => p.postfusion.convergence_tol = v!(),
            "postfusion.max_iterations" => p.postfusion.max_iterations = v!(),
            "pgo.sigma_translation" => p.pgo.sigma_translation = v!(),
            "pgo.sigma_rotation" => p.pgo.sigma_rotation = v!(),
            "pgo.damping" => p.pgo.solver.initial_damping = v!(),
            "pgo.tol" => p.pgo.solver.tol = v!(),
            "pgo.max_iterations" => p.pgo.solver.max_iterations = v!(),
            "pgo.icp_max_correspondence_distance" => p.pgo.icp.max_correspondence_distance = v!(),
            "pgo.icp_max_iterations" => p.pgo.icp.max_iterations = v!(),
            "pgo.icp_tol" => p.pgo.icp.convergence_tol = v!(),
            "eval.tau" => p.eval.tau = v!(),
            "eval.r_g" => p.eval.r_g = v!(),
            "eval.voxel_size" => p.eval.voxel_size = v!(),
            "eval.cf_cap" => p.eval.cf_cap = v!(),
            "synth.seed" => g.seed = v!(),
            "synth.extent" => g.extent = v!(),
            "synth.scene_points" => g.scene_points = v!(),
            "synth.boxes" => g.boxes = v!(),
            "synth.points_per_frame" => g.points_per_frame = v!(),
            "synth.frames_per_session" => g.frames_per_session = v!(),
            "synth.sessions" => g.sessions = v!(),
            "synth.overlap" => g.overlap = v!(),
            "synth.scale_min" => g.scale_min = v!(),
            "synth.scale_max" => g.scale_max = v!(),
            "synth.outlier_scale" => g.outlier_scale = optional(key, raw, label, line)?,
            "synth.pose_noise_translation" => g.pose_noise_translation = v!(),
            "synth.pose_noise_rotation" => g.pose_noise_rotation = v!(),
            "synth.color_noise" => g.color_noise = v!(),
            "synth.crop" => g.crop = v!(),
            "synth.view_radius" => g.view_radius = v!(),
            "synth.lidar_fraction" => g.lidar_fraction = v!(),
            "synth.frame_interval" => g.frame_interval = v!(),
            "synth.time_offset" => g.time_offset = v!(),
            _ => return Err(Error::parse(label, format!("line {line}: unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its current value; parses back to `self`.
    pub fn to_text(&self) -> String {
        let p = &self.pipeline;
        let g = &self.synth;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("prefusion.max_gap", p.prefusion.max_gap.to_string());
        put(
            "prefusion.linearity_threshold",
            p.prefusion.linearity_threshold.to_string(),
        );
        put("prefusion.ransac_iterations", p.prefusion.ransac_iterations.to_string());
        put("prefusion.seed", p.prefusion.seed.to_string());
        put("prefusion.k_sigma", K_SIGMA.to_string());
        put("postfusion.beta", p.postfusion.beta.to_string());
        put(
            "postfusion.max_correspondence_distance",
            p.postfusion.max_correspondence_distance.to_string(),
        );
        put("postfusion.tol", p.postfusion.convergence_tol.to_string());
        put("postfusion.max_iterations", p.postfusion.max_iterations.to_string());
        put("pgo.sigma_translation", p.pgo.sigma_translation.to_string());
        put("pgo.sigma_rotation", p.pgo.sigma_rotation.to_string());
        put("pgo.damping", p.pgo.solver.initial_damping.to_string());
        put("pgo.tol", p.pgo.solver.tol.to_string());
        put("pgo.max_iterations", p.pgo.solver.max_iterations.to_string());
        put(
            "pgo.icp_max_correspondence_distance",
            p.pgo.icp.max_correspondence_distance.to_string(),
        );
        put("pgo.icp_max_iterations", p.pgo.icp.max_iterations.to_string());
        put("pgo.icp_tol", p.pgo.icp.convergence_tol.to_string());
        put("eval.tau", p.eval.tau.to_string());
        put("eval.r_g", p.eval.r_g.to_string());
        put("eval.voxel_size", p.eval.voxel_size.to_string());
        put("eval.cf_cap", p.eval.cf_cap.to_string());
        put("synth.seed", g.seed.to_string());
        put("synth.extent", g.extent.to_string());
        put("synth.scene_points", g.scene_points.to_string());
        put("synth.boxes", g.boxes.to_string());
        put("synth.points_per_frame", g.points_per_frame.to_string());
        put("synth.frames_per_session", g.frames_per_session.to_string());
        put("synth.sessions", g.sessions.to_string());
        put("synth.overlap", g.overlap.to_string());
        put("synth.scale_min", g.scale_min.to_string());
        put("synth.scale_max", g.scale_max.to_string());
        put(
            "synth.outlier_scale",
            g.outlier_scale.map_or("none".into(), |s| s.to_string()),
        );
        put("synth.pose_noise_translation", g.pose_noise_translation.to_string());
        put("synth.pose_noise_rotation", g.pose_noise_rotation.to_string());
        put("synth.color_noise", g.color_noise.to_string());
        put("synth.crop", g.crop.to_string());
        put("synth.view_radius", g.view_radius.to_string());
        put("synth.lidar_fraction", g.lidar_fraction.to_string());
        put("synth.frame_interval", g.frame_interval.to_string());
        put("synth.time_offset", g.time_offset.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let s = Settings::default();
        assert_eq!(Settings::parse(&s.to_text(), "c").unwrap(), s);
    }

    #[test]
    fn overrides_and_comments() {
        let s = Settings::parse(
            "# tuned\npostfusion.beta = 0.5  # stronger\n\nsynth.outlier_scale = none\n",
            "c",
        )
        .unwrap();
        assert_eq!(s.pipeline.postfusion.beta, 0.5);
        assert_eq!(s.synth.outlier_scale, None);
        assert_eq!(s.pipeline.eval, Default::default());
    }

    #[test]
    fn rejects_unknown_and_bad() {
        assert!(matches!(
            Settings::parse("postfusion.gamma = 1\n", "c"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Settings::parse("eval.tau = fast\n", "c"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(Settings::parse("eval.tau\n", "c"), Err(Error::Parse { .. })));
        assert!(matches!(
            Settings::parse("prefusion.k_sigma = 3\n", "c"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn seed_override() {
        let s = Settings::default().with_seed(42);
        assert_eq!(s.pipeline.prefusion.seed, 42);
        assert_eq!(s.synth.seed, 42);
    }
}
