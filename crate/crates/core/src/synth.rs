//! Synthetic multi-session scenes with known ground truth.
//!
//! The world is a textured ground plane with boxes on it. A camera follows a
//! circular arc; each frame observes the scene points within
//! `crop · view_radius` of the camera. Frames are grouped into overlapping
//! sessions, each expressed in its own similarity frame with noisy poses,
//! mimicking per-session feed-forward reconstructions. The LiDAR products are
//! the metric trajectory and a subsample of the scene.

use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{so3, ColoredPointCloud, Mat3, Pose, Rot3, Sim3, TimedTrajectory, Vec3};
use crate::io::{write_extrinsics, write_ply, write_ply_data, write_tum, SessionEntry, SessionManifest};
use crate::pipeline::{PipelineInputs, SessionInput};
use crate::prefusion::Extrinsics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSceneSpec {
    pub seed: u64,
    /// Side of the square ground plane, meters.
    pub extent: f64,
    pub scene_points: usize,
    pub boxes: usize,
    pub points_per_frame: usize,
    pub frames_per_session: usize,
    pub sessions: usize,
    /// Frames shared by consecutive sessions.
    pub overlap: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Scale given to one randomly chosen session instead of a draw from
    /// `[scale_min, scale_max]`.
    pub outlier_scale: Option<f64>,
    /// RMS magnitude of the translation perturbation, meters.
    pub pose_noise_translation: f64,
    /// RMS angle of the rotation perturbation, radians.
    pub pose_noise_rotation: f64,
    pub color_noise: f64,
    /// Fraction of `view_radius` a frame observes, in `(0, 1]`.
    pub crop: f64,
    pub view_radius: f64,
    /// Fraction of scene points kept in the LiDAR cloud.
    pub lidar_fraction: f64,
    pub frame_interval: f64,
    pub time_offset: f64,
}

impl Default for SyntheticSceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            extent: 36.0,
            scene_points: 90_000,
            boxes: 24,
            points_per_frame: 400,
            frames_per_session: 20,
            sessions: 4,
            overlap: 5,
            scale_min: 0.9,
            scale_max: 1.1,
            outlier_scale: Some(2.5),
            pose_noise_translation: 0.02,
            pose_noise_rotation: 0.5f64.to_radians(),
            color_noise: 0.02,
            crop: 0.6,
            view_radius: 4.0,
            lidar_fraction: 0.5,
            frame_interval: 0.1,
            time_offset: 0.01,
        }
    }
}

impl SyntheticSceneSpec {
    /// Noise-free variant: exact poses, no color noise, uncropped frames,
    /// unit scales and the full scene as the LiDAR cloud.
    pub fn noiseless(seed: u64) -> Self {
        Self {
            seed,
            scale_min: 1.0,
            scale_max: 1.0,
            outlier_scale: None,
            pose_noise_translation: 0.0,
            pose_noise_rotation: 0.0,
            color_noise: 0.0,
            crop: 1.0,
            lidar_fraction: 1.0,
            ..Self::default()
        }
    }

    pub fn total_frames(&self) -> usize {
        self.sessions * (self.frames_per_session - self.overlap) + self.overlap
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::invalid(format!("synthetic spec: {msg}")));
        if self.sessions == 0 || self.frames_per_session < 3 {
            return fail("need at least one session of three frames");
        }
        if self.overlap >= self.frames_per_session {
            return fail("overlap must be smaller than frames_per_session");
        }
        if !(self.crop > 0.0 && self.crop <= 1.0) {
            return fail("crop must lie in (0, 1]");
        }
        if !(self.lidar_fraction > 0.0 && self.lidar_fraction <= 1.0) {
            return fail("lidar_fraction must lie in (0, 1]");
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max.is_finite()) {
            return fail("scale range must satisfy 0 < scale_min <= scale_max");
        }
        if self.outlier_scale.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return fail("outlier_scale must be positive");
        }
        let non_negative = [self.pose_noise_translation, self.pose_noise_rotation, self.color_noise];
        if non_negative.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return fail("noise levels must be non-negative");
        }
        let positive = [self.extent, self.view_radius, self.frame_interval];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return fail("extent, view_radius and frame_interval must be positive");
        }
        if !self.time_offset.is_finite() {
            return fail("time_offset must be finite");
        }
        if self.scene_points == 0 || self.points_per_frame == 0 {
            return fail("point counts must be positive");
        }
        Ok(())
    }
}

/// One degraded session.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    /// Session frame → world.
    pub gt_transform: Sim3,
    /// Reconstruction poses in the session frame, stamped on the camera clock.
    pub trajectory: TimedTrajectory,
    /// All frames' points in the session frame.
    pub cloud: ColoredPointCloud,
    /// Session-local frame index of every point.
    pub frames: Vec<usize>,
    /// Global index of each session frame.
    pub global_frames: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: SyntheticSceneSpec,
    pub scene: ColoredPointCloud,
    /// Scene points observed by at least one frame, in world coordinates.
    pub gt_cloud: ColoredPointCloud,
    /// World-from-camera pose of every global frame.
    pub gt_poses: Vec<Pose>,
    pub timestamps: Vec<f64>,
    /// Scene point ids observed by each global frame, ascending.
    pub frame_points: Vec<Vec<usize>>,
    pub lidar_cloud: ColoredPointCloud,
    pub lidar_trajectory: TimedTrajectory,
    pub extrinsics: Extrinsics,
    pub sessions: Vec<SyntheticSession>,
    pub outlier_session: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSession {
    pub session_id: usize,
    pub scale: f64,
    /// `[qx, qy, qz, qw]`.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
    pub global_frames: Vec<usize>,
    pub outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFrame {
    pub index: usize,
    pub timestamp: f64,
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

/// Sidecar of everything the generator knows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SyntheticSceneSpec,
    pub sessions: Vec<GroundTruthSession>,
    pub frames: Vec<GroundTruthFrame>,
    pub outlier_session: Option<usize>,
}

fn quat(r: &Rot3) -> [f64; 4] {
    let q = UnitQuaternion::from_rotation_matrix(r);
    [q.i, q.j, q.k, q.w]
}

impl GroundTruth {
    pub fn session_transform(&self, k: usize) -> Result<Sim3> {
        let s = self
            .sessions
            .get(k)
            .ok_or_else(|| Error::invalid(format!("no session {k} in ground truth")))?;
        let [x, y, z, w] = s.rotation;
        let r = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)).to_rotation_matrix();
        Sim3::new(s.scale, r, Vec3::from(s.translation))
    }
}

// Isotropic Gaussian with the given RMS norm.
fn gaussian_vec(rng: &mut ChaCha8Rng, rms: f64) -> Vec3 {
    if rms == 0.0 {
        return Vec3::zeros();
    }
    let n = Normal::new(0.0, rms / 3f64.sqrt()).expect("finite sigma");
    Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng))
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rot3 {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let q = Quaternion::new(v[0], v[1], v[2], v[3]);
        if q.norm() > 1e-6 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        }
    }
}

// Camera path: an arc of `PATH_SPAN` radians around the origin.
const PATH_SPAN: f64 = 1.75 * std::f64::consts::PI;

fn path_radius(spec: &SyntheticSceneSpec) -> f64 {
    0.3 * spec.extent
}

// Surface a scene point can be sampled on.
enum Patch {
    /// Parallelogram `origin + a u + b v`, `a, b` in [0, 1].
    Quad {
        origin: Vec3,
        u: Vec3,
        v: Vec3,
        color: Vec3,
    },
    /// Ground annulus `inner <= |xy| <= outer` at z = 0.
    Ring { inner: f64, outer: f64 },
}

impl Patch {
    fn area(&self) -> f64 {
        match self {
            Patch::Quad { u, v, .. } => u.cross(v).norm(),
            Patch::Ring { inner, outer } => std::f64::consts::PI * (outer * outer - inner * inner),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (Vec3, Vec3) {
        match self {
            Patch::Quad { origin, u, v, color } => {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                (origin + a * u + b * v, *color)
            }
            Patch::Ring { inner, outer } => {
                let r = rng.random_range(inner * inner..outer * outer).sqrt();
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let p = Vec3::new(r * theta.cos(), r * theta.sin(), 0.0);
                (p, ground_color(&p))
            }
        }
    }
}

fn random_color(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(
        rng.random_range(0.1..0.9),
        rng.random_range(0.1..0.9),
        rng.random_range(0.1..0.9),
    )
}

fn build_patches(spec: &SyntheticSceneSpec, rng: &mut ChaCha8Rng) -> Vec<Patch> {
    let center_radius = path_radius(spec);
    let band = spec.view_radius.min(center_radius);
    let mut patches = vec![Patch::Ring {
        inner: center_radius - band,
        outer: center_radius + band,
    }];
    for _ in 0..spec.boxes {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let radius = center_radius + rng.random_range(-0.75..0.75) * band;
        let size = Vec3::new(
            rng.random_range(0.4..1.5),
            rng.random_range(0.4..1.5),
            rng.random_range(0.3..2.0),
        );
        let yaw = Rot3::from_axis_angle(&Vec3::z_axis(), rng.random_range(0.0..std::f64::consts::TAU));
        let center = Vec3::new(radius * angle.cos(), radius * angle.sin(), 0.0);
        let (ex, ey, ez) = (yaw * Vec3::x() * size.x, yaw * Vec3::y() * size.y, Vec3::z() * size.z);
        let corner = center - 0.5 * ex - 0.5 * ey;
        // four walls and the lid
        for (origin, u, v) in [
            (corner, ex, ez),
            (corner + ey, ex, ez),
            (corner, ey, ez),
            (corner + ex, ey, ez),
            (corner + ez, ex, ey),
        ] {
            patches.push(Patch::Quad {
                origin,
                u,
                v,
                color: random_color(rng),
            });
        }
    }
    patches
}

fn ground_color(p: &Vec3) -> Vec3 {
    let tile = (p.x.floor() as i64 + p.y.floor() as i64).rem_euclid(2);
    if tile == 0 {
        Vec3::new(0.75, 0.7, 0.6)
    } else {
        Vec3::new(0.3, 0.35, 0.4)
    }
}

fn sample_scene(spec: &SyntheticSceneSpec, rng: &mut ChaCha8Rng) -> ColoredPointCloud {
    let patches = build_patches(spec, rng);
    let areas: Vec<f64> = patches.iter().map(Patch::area).collect();
    let total: f64 = areas.iter().sum();
    let mut positions = Vec::with_capacity(spec.scene_points);
    let mut colors = Vec::with_capacity(spec.scene_points);
    let mut assigned = 0usize;
    for (i, patch) in patches.iter().enumerate() {
        let count = if i + 1 == patches.len() {
            spec.scene_points - assigned
        } else {
            ((areas[i] / total) * spec.scene_points as f64).round() as usize
        }
        .min(spec.scene_points - assigned);
        assigned += count;
        for _ in 0..count {
            let (p, base) = patch.sample(rng);
            let c = base + gaussian_vec(rng, spec.color_noise);
            positions.push(p);
            colors.push(c.map(|x| x.clamp(0.0, 1.0)));
        }
    }
    ColoredPointCloud::new(positions, colors).expect("scene samples are valid")
}

// World-from-camera: optical axis (z) along the arc tangent pitched down, y down.
fn camera_poses(spec: &SyntheticSceneSpec, n: usize) -> Vec<Pose> {
    let radius = path_radius(spec);
    let span = PATH_SPAN;
    let pitch = 25f64.to_radians();
    (0..n)
        .map(|i| {
            let u = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let a = span * u;
            let center = Vec3::new(radius * a.cos(), radius * a.sin(), 1.5 + 0.3 * (3.0 * a).sin());
            let tangent = Vec3::new(-a.sin(), a.cos(), 0.0);
            let forward = (tangent * pitch.cos() - Vec3::z() * pitch.sin()).normalize();
            let right = forward.cross(&Vec3::z()).normalize();
            let down = forward.cross(&right);
            let r = Mat3::from_columns(&[right, down, forward]);
            Pose::from_parts(Rot3::from_matrix_unchecked(r), center)
        })
        .collect()
}

fn perturb(pose: &Pose, spec: &SyntheticSceneSpec, rng: &mut ChaCha8Rng) -> Pose {
    let dr = so3::exp(&gaussian_vec(rng, spec.pose_noise_rotation));
    let dt = gaussian_vec(rng, spec.pose_noise_translation);
    Pose::from_parts(pose.rotation * dr, pose.translation + dt)
}

fn fixed_extrinsics(spec: &SyntheticSceneSpec) -> Extrinsics {
    // LiDAR mounted above the camera, axes rotated into the usual forward-left-up convention
    let lidar_axes = Mat3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);
    Extrinsics {
        cam_from_lidar: Pose::from_parts(Rot3::from_matrix_unchecked(lidar_axes), Vec3::new(0.05, -0.12, 0.08)),
        time_offset: spec.time_offset,
    }
}

/// Deterministic in `spec.seed`.
pub fn generate_synthetic_scene(spec: &SyntheticSceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scene = sample_scene(spec, &mut rng);
    let n_frames = spec.total_frames();
    let gt_poses = camera_poses(spec, n_frames);
    let timestamps: Vec<f64> = (0..n_frames).map(|i| i as f64 * spec.frame_interval).collect();

    let reach = spec.crop * spec.view_radius;
    let frame_points: Vec<Vec<usize>> = gt_poses
        .iter()
        .map(|pose| {
            let visible: Vec<usize> = scene
                .positions()
                .iter()
                .enumerate()
                .filter(|(_, p)| (*p - pose.translation).norm() <= reach)
                .map(|(i, _)| i)
                .collect();
            let mut chosen: Vec<usize> = if visible.len() > spec.points_per_frame {
                index::sample(&mut rng, visible.len(), spec.points_per_frame)
                    .into_iter()
                    .map(|k| visible[k])
                    .collect()
            } else {
                visible
            };
            chosen.sort_unstable();
            chosen
        })
        .collect();

    let mut observed: Vec<usize> = frame_points.iter().flatten().copied().collect();
    observed.sort_unstable();
    observed.dedup();
    let gt_cloud = scene.select(&observed);

    let lidar_ids: Vec<usize> = if spec.lidar_fraction >= 1.0 {
        (0..scene.len()).collect()
    } else {
        let keep = ((spec.lidar_fraction * scene.len() as f64).round() as usize).max(1);
        let mut ids = index::sample(&mut rng, scene.len(), keep).into_vec();
        ids.sort_unstable();
        ids
    };
    let lidar_cloud = scene.select(&lidar_ids);
    let extrinsics = fixed_extrinsics(spec);
    let lidar_trajectory = TimedTrajectory::from_pairs(
        gt_poses
            .iter()
            .zip(&timestamps)
            .map(|(w, t)| (t - spec.time_offset, *w * extrinsics.cam_from_lidar)),
    )?;

    let outlier_session = match spec.outlier_scale {
        Some(_) if spec.sessions > 1 => Some(rng.random_range(0..spec.sessions)),
        _ => None,
    };
    let stride = spec.frames_per_session - spec.overlap;
    let mut sessions = Vec::with_capacity(spec.sessions);
    for k in 0..spec.sessions {
        let scale = match (outlier_session, spec.outlier_scale) {
            (Some(o), Some(s)) if o == k => s,
            _ if spec.scale_max > spec.scale_min => rng.random_range(spec.scale_min..=spec.scale_max),
            _ => spec.scale_min,
        };
        let rotation = random_rotation(&mut rng);
        let translation = Vec3::new(
            rng.random_range(-spec.extent..spec.extent),
            rng.random_range(-spec.extent..spec.extent),
            rng.random_range(-spec.extent..spec.extent),
        );
        let gt_transform = Sim3::new(scale, rotation, translation)?;
        let to_session = gt_transform.inverse();
        let global_frames: Vec<usize> = (k * stride..k * stride + spec.frames_per_session).collect();
        let mut stamped = Vec::with_capacity(global_frames.len());
        let mut positions = Vec::new();
        let mut colors = Vec::new();
        let mut frames = Vec::new();
        for (local, &g) in global_frames.iter().enumerate() {
            let truth = gt_poses[g];
            let noisy = perturb(&truth, spec, &mut rng);
            stamped.push((timestamps[g], to_session.transform_pose(&noisy)));
            for &id in &frame_points[g] {
                positions.push(to_session.apply(&scene.positions()[id]));
                colors.push(scene.colors()[id]);
                frames.push(local);
            }
        }
        sessions.push(SyntheticSession {
            gt_transform,
            trajectory: TimedTrajectory::from_pairs(stamped)?,
            cloud: ColoredPointCloud::new(positions, colors)?,
            frames,
            global_frames,
        });
    }

    Ok(SyntheticScene {
        spec: spec.clone(),
        scene,
        gt_cloud,
        gt_poses,
        timestamps,
        frame_points,
        lidar_cloud,
        lidar_trajectory,
        extrinsics,
        sessions,
        outlier_session,
    })
}

impl SyntheticScene {
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            spec: self.spec.clone(),
            sessions: self
                .sessions
                .iter()
                .enumerate()
                .map(|(k, s)| GroundTruthSession {
                    session_id: k,
                    scale: s.gt_transform.scale(),
                    rotation: quat(&s.gt_transform.rotation),
                    translation: s.gt_transform.translation.into(),
                    global_frames: s.global_frames.clone(),
                    outlier: self.outlier_session == Some(k),
                })
                .collect(),
            frames: self
                .gt_poses
                .iter()
                .zip(&self.timestamps)
                .enumerate()
                .map(|(i, (p, t))| GroundTruthFrame {
                    index: i,
                    timestamp: *t,
                    rotation: quat(&p.rotation),
                    translation: p.translation.into(),
                })
                .collect(),
            outlier_session: self.outlier_session,
        }
    }

    pub fn to_inputs(&self) -> PipelineInputs {
        PipelineInputs {
            lidar_cloud: self.lidar_cloud.clone(),
            lidar_trajectory: self.lidar_trajectory.clone(),
            extrinsics: self.extrinsics,
            sessions: self
                .sessions
                .iter()
                .map(|s| SessionInput {
                    trajectory: s.trajectory.clone(),
                    cloud: s.cloud.clone(),
                    frames: Some(s.frames.clone()),
                })
                .collect(),
        }
    }

    /// Writes every input file, `gt.json`, `gt_cloud.ply` and `manifest.txt`
    /// into `dir`; returns the manifest.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<SessionManifest> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = SessionManifest {
            root: dir.to_path_buf(),
            lidar_cloud: dir.join("lidar.ply"),
            lidar_trajectory: dir.join("lidar.tum"),
            extrinsics: dir.join("extrinsics.txt"),
            sessions: (0..self.sessions.len())
                .map(|k| SessionEntry {
                    session_id: k,
                    cloud: dir.join(format!("session_{k}.ply")),
                    trajectory: dir.join(format!("session_{k}.tum")),
                })
                .collect(),
        };
        write_ply(&self.lidar_cloud, &manifest.lidar_cloud)?;
        write_tum(&self.lidar_trajectory, &manifest.lidar_trajectory)?;
        write_extrinsics(&self.extrinsics, &manifest.extrinsics)?;
        for (s, entry) in self.sessions.iter().zip(&manifest.sessions) {
            write_ply_data(&s.cloud, Some(&s.frames), &entry.cloud)?;
            write_tum(&s.trajectory, &entry.trajectory)?;
        }
        write_ply(&self.gt_cloud, dir.join("gt_cloud.ply"))?;
        let gt = serde_json::to_string_pretty(&self.ground_truth()).expect("ground truth serializes");
        let gt_path = dir.join("gt.json");
        std::fs::write(&gt_path, gt + "\n").map_err(|e| Error::io(&gt_path, e))?;
        let manifest_path = dir.join("manifest.txt");
        std::fs::write(&manifest_path, manifest.to_text()).map_err(|e| Error::io(&manifest_path, e))?;
        Ok(manifest)
    }
}
