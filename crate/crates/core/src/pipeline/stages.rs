use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::digest::Fingerprint;
use super::{PipelineConfig, PipelineError, PipelineInputs, RunReport, SessionInput};
use crate::error::{Error, Result};
use crate::geometry::{apply_sim3, ColoredPointCloud, Pose, Sim3, SpatialIndex};
use crate::io::{read_extrinsics, read_ply, read_ply_data, read_tum, SessionManifest};
use crate::posegraph::{
    build_pose_graph, icp_se3, isotropic_information, optimize_pose_graph, propagate_poses_to_clouds, EdgeKind, NodeId,
    PgoResult, PoseEdge, PoseGraph,
};
use crate::postfusion::{regularized_sim3_icp_indexed, IcpConfig, IcpResult};
use crate::prefusion::{
    align_session, correct_outlier_scales, lidar_to_camera_trajectory, overlap_translations, pair_poses_by_timestamp,
    scale_ransac, OverlapPoses, ScaleConsensus, SessionAlignment,
};

/// Reads every file named by the manifest.
pub fn load_inputs(manifest: &SessionManifest) -> Result<PipelineInputs> {
    let sessions = manifest
        .sessions
        .iter()
        .map(|s| {
            let data = read_ply_data(&s.cloud)?;
            Ok(SessionInput {
                trajectory: read_tum(&s.trajectory)?,
                cloud: data.cloud,
                frames: data.frames,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineInputs {
        lidar_cloud: read_ply(&manifest.lidar_cloud)?,
        lidar_trajectory: read_tum(&manifest.lidar_trajectory)?,
        extrinsics: read_extrinsics(&manifest.extrinsics)?,
        sessions,
    })
}

impl PipelineInputs {
    pub(crate) fn digest(&self) -> String {
        let mut f = Fingerprint::new("inputs");
        f.cloud(&self.lidar_cloud);
        for e in self.lidar_trajectory.entries() {
            f.f64(e.timestamp).pose(&e.pose);
        }
        f.pose(&self.extrinsics.cam_from_lidar).f64(self.extrinsics.time_offset);
        for s in &self.sessions {
            f.u64(s.trajectory.len() as u64);
            for e in s.trajectory.entries() {
                f.f64(e.timestamp).pose(&e.pose);
            }
            f.cloud(&s.cloud);
            match &s.frames {
                Some(ids) => ids.iter().for_each(|&i| {
                    f.u64(i as u64);
                }),
                None => {
                    f.bytes(b"untagged");
                }
            }
        }
        f.hex()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefuseOutput {
    /// Per session, with consensus flags and repaired scales filled in.
    pub alignments: Vec<SessionAlignment>,
    pub consensus: ScaleConsensus,
    /// Session frame → world with the repaired scale.
    pub transforms: Vec<Sim3>,
}

impl PrefuseOutput {
    pub fn digest(&self) -> String {
        let mut f = Fingerprint::new("prefuse");
        for (a, t) in self.alignments.iter().zip(&self.transforms) {
            f.u64(a.session_id as u64)
                .f64(a.linearity)
                .f64(a.raw_scale)
                .f64(a.corrected_scale)
                .u64(a.scale_inlier as u64)
                .u64(a.rotation_corrected as u64)
                .sim3(t);
        }
        f.f64(self.consensus.best_scale).f64(self.consensus.threshold);
        f.hex()
    }

    fn diagnostics(&self) -> Value {
        json!({
            "sessions": self.alignments.iter().map(|a| json!({
                "session": a.session_id,
                "linearity": a.linearity,
                "raw_scale": a.raw_scale,
                "corrected_scale": a.corrected_scale,
                "scale_inlier": a.scale_inlier,
                "rotation_corrected": a.rotation_corrected,
                "pairs": a.pair_count,
            })).collect::<Vec<_>>(),
            "consensus": {
                "best_scale": self.consensus.best_scale,
                "threshold": self.consensus.threshold,
                "alpha": self.consensus.alpha,
                "candidate": self.consensus.candidate,
                "inliers": self.consensus.inliers,
            },
        })
    }
}

/// Timestamp pairing, Umeyama and rotation repair per session, then scale
/// consensus and repair of the non-consensus scales.
pub fn prefuse(inputs: &PipelineInputs, cfg: &PipelineConfig) -> std::result::Result<PrefuseOutput, PipelineError> {
    const STAGE: &str = "prefuse";
    if inputs.sessions.is_empty() {
        return Err(PipelineError::at(STAGE, None)(Error::invalid("no sessions")));
    }
    let pcfg = &cfg.prefusion;
    let cam = lidar_to_camera_trajectory(&inputs.lidar_trajectory, &inputs.extrinsics)
        .map_err(PipelineError::at(STAGE, None))?;
    let alignments = inputs
        .sessions
        .par_iter()
        .enumerate()
        .map(|(k, s)| align_session(k, &s.trajectory, &cam, pcfg).map_err(PipelineError::at(STAGE, Some(k))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let consensus = scale_ransac(&alignments, pcfg).map_err(PipelineError::at(STAGE, None))?;

    let mut overlaps = OverlapPoses::new();
    let k = inputs.sessions.len();
    for a in 0..k {
        for b in a + 1..k {
            let shared = overlap_translations(
                &inputs.sessions[a].trajectory,
                &inputs.sessions[b].trajectory,
                pcfg.max_gap,
            );
            if !shared.is_empty() {
                overlaps.insert(a, b, shared);
            }
        }
    }
    let alignments =
        correct_outlier_scales(&alignments, &consensus.inliers, &overlaps).map_err(PipelineError::at(STAGE, None))?;
    let transforms = alignments
        .iter()
        .map(|a| {
            a.corrected_transform()
                .map_err(PipelineError::at(STAGE, Some(a.session_id)))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(PrefuseOutput {
        alignments,
        consensus,
        transforms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionRegistration {
    pub session_id: usize,
    /// Pre-fusion transform the ICP started from.
    pub initial: Sim3,
    /// Refined session frame → world.
    pub transform: Sim3,
    pub icp: IcpResult,
}

impl SessionRegistration {
    /// The refinement applied on top of the pre-fusion transform.
    pub fn correction(&self) -> Sim3 {
        self.transform * self.initial.inverse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegisterOutput {
    pub sessions: Vec<SessionRegistration>,
}

impl RegisterOutput {
    pub fn transforms(&self) -> Vec<Sim3> {
        self.sessions.iter().map(|s| s.transform).collect()
    }

    pub fn digest(&self) -> String {
        let mut f = Fingerprint::new("register");
        for s in &self.sessions {
            f.u64(s.session_id as u64)
                .sim3(&s.initial)
                .sim3(&s.transform)
                .f64(s.icp.final_objective);
        }
        f.hex()
    }

    fn diagnostics(&self) -> Value {
        json!({
            "sessions": self.sessions.iter().map(|s| json!({
                "session": s.session_id,
                "initial_scale": s.initial.scale(),
                "final_scale": s.transform.scale(),
                "correction_scale": s.correction().scale(),
                "lambda": s.icp.lambda,
                "iterations": s.icp.iterations_used,
                "converged": s.icp.converged,
                "initial_objective": s.icp.objective_history.first(),
                "final_objective": s.icp.final_objective,
                "correspondences": s.icp.correspondence_count,
                "fitness": s.icp.fitness,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Scale-regularized Sim(3) ICP of every session cloud against the LiDAR
/// map, anchored on the session's pre-fusion scale.
pub fn register(
    inputs: &PipelineInputs,
    pre: &PrefuseOutput,
    cfg: &PipelineConfig,
) -> std::result::Result<RegisterOutput, PipelineError> {
    const STAGE: &str = "register";
    if inputs.lidar_cloud.is_empty() {
        return Err(PipelineError::at(STAGE, None)(Error::EmptyCloud));
    }
    let target = SpatialIndex::new(inputs.lidar_cloud.positions());
    let rcfg = &cfg.postfusion;
    let sessions = inputs
        .sessions
        .par_iter()
        .zip(pre.transforms.par_iter())
        .enumerate()
        .map(|(k, (s, init))| {
            let icp_cfg = IcpConfig {
                beta: rcfg.beta,
                max_iterations: rcfg.max_iterations,
                max_correspondence_distance: rcfg.max_correspondence_distance,
                convergence_tol: rcfg.convergence_tol,
                anchor_scale: init.scale(),
            };
            let icp = regularized_sim3_icp_indexed(&s.cloud, &target, init, &icp_cfg)
                .map_err(PipelineError::at(STAGE, Some(k)))?;
            Ok(SessionRegistration {
                session_id: k,
                initial: *init,
                transform: icp.transform,
                icp,
            })
        })
        .collect::<std::result::Result<Vec<_>, PipelineError>>()?;
    Ok(RegisterOutput { sessions })
}

/// Relative pose measured between two sessions from their shared frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterSessionConstraint {
    pub from: NodeId,
    pub to: NodeId,
    /// World-frame rigid correction carrying the later session onto the earlier.
    pub correction: Pose,
    pub fitness: f64,
    pub shared_frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutput {
    pub graph: PoseGraph,
    pub result: PgoResult,
    pub constraints: Vec<InterSessionConstraint>,
    /// Metric frame clouds in camera coordinates, `[session][frame]`.
    pub frame_clouds: Vec<Vec<ColoredPointCloud>>,
}

impl OptimizeOutput {
    pub fn digest(&self) -> String {
        let mut f = Fingerprint::new("optimize");
        for (id, pose) in &self.result.poses {
            f.u64(id.session as u64).u64(id.frame as u64).pose(pose);
        }
        for session in &self.frame_clouds {
            for c in session {
                f.cloud(c);
            }
        }
        f.f64(self.result.final_chi2);
        f.hex()
    }

    fn diagnostics(&self) -> Value {
        let inter = self
            .graph
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::InterSession)
            .count();
        json!({
            "nodes": self.graph.nodes().len(),
            "intra_edges": self.graph.edges().len() - inter,
            "inter_edges": inter,
            "constraints": self.constraints.iter().map(|c| json!({
                "from": [c.from.session, c.from.frame],
                "to": [c.to.session, c.to.frame],
                "fitness": c.fitness,
                "shared_frames": c.shared_frames,
            })).collect::<Vec<_>>(),
            "initial_chi2": self.result.initial_chi2,
            "final_chi2": self.result.final_chi2,
            "iterations": self.result.iterations,
            "converged": self.result.converged,
        })
    }
}

// Metric world poses of a session's frames and their clouds in camera coordinates.
fn metric_frames(session: &SessionInput, transform: &Sim3) -> Result<(Vec<Pose>, Vec<ColoredPointCloud>)> {
    let ids = session.frame_ids()?;
    let poses: Vec<Pose> = session
        .trajectory
        .poses()
        .map(|p| transform.transform_pose(p))
        .collect();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); poses.len()];
    for (i, &f) in ids.iter().enumerate() {
        buckets[f].push(i);
    }
    let s = transform.scale();
    let clouds = session
        .trajectory
        .poses()
        .zip(&buckets)
        .map(|(vggt, members)| {
            let to_camera = Sim3::identity().with_scale(s)? * Sim3::from_pose(&vggt.inverse());
            Ok(apply_sim3(&to_camera, &session.cloud.select(members)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((poses, clouds))
}

fn world_cloud(frames: &[(usize, &Pose, &ColoredPointCloud)]) -> ColoredPointCloud {
    let mut out = ColoredPointCloud::default();
    for (_, pose, cloud) in frames {
        out.extend(&apply_sim3(&Sim3::from_pose(pose), cloud));
    }
    out
}

/// Frame-level pose graph over all sessions: odometry edges within each
/// session, and between consecutive sessions one edge from rigid ICP on the
/// clouds of their shared frames, placed at the temporally closest pair.
pub fn optimize(
    inputs: &PipelineInputs,
    reg: &RegisterOutput,
    cfg: &PipelineConfig,
) -> std::result::Result<OptimizeOutput, PipelineError> {
    const STAGE: &str = "optimize";
    let (poses, frame_clouds): (Vec<Vec<Pose>>, Vec<Vec<ColoredPointCloud>>) = inputs
        .sessions
        .par_iter()
        .zip(reg.sessions.par_iter())
        .enumerate()
        .map(|(k, (s, r))| metric_frames(s, &r.transform).map_err(PipelineError::at(STAGE, Some(k))))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();

    let gcfg = &cfg.pgo;
    let base = isotropic_information(gcfg.sigma_translation, gcfg.sigma_rotation);
    let constraints: Vec<Option<InterSessionConstraint>> = (1..inputs.sessions.len())
        .into_par_iter()
        .map(|b| {
            let a = b - 1;
            let pairs = match pair_poses_by_timestamp(
                &inputs.sessions[b].trajectory,
                &inputs.sessions[a].trajectory,
                cfg.prefusion.max_gap,
            ) {
                Ok(p) => p,
                Err(Error::NoPairsFound { .. }) => return Ok(None),
                Err(e) => return Err(PipelineError::at(STAGE, Some(b))(e)),
            };
            let src: Vec<_> = pairs
                .iter()
                .map(|p| (p.vggt_index, &poses[b][p.vggt_index], &frame_clouds[b][p.vggt_index]))
                .collect();
            let tgt: Vec<_> = pairs
                .iter()
                .map(|p| (p.cam_index, &poses[a][p.cam_index], &frame_clouds[a][p.cam_index]))
                .collect();
            let (correction, fitness) = icp_se3(&world_cloud(&src), &world_cloud(&tgt), &Pose::identity(), &gcfg.icp)
                .map_err(PipelineError::at(STAGE, Some(b)))?;
            let closest = pairs
                .iter()
                .min_by(|x, y| x.time_gap.total_cmp(&y.time_gap))
                .expect("pairing returns at least one pair");
            Ok(Some(InterSessionConstraint {
                from: NodeId::new(a, closest.cam_index),
                to: NodeId::new(b, closest.vggt_index),
                correction,
                fitness,
                shared_frames: pairs.len(),
            }))
        })
        .collect::<std::result::Result<Vec<_>, PipelineError>>()?;
    let constraints: Vec<InterSessionConstraint> = constraints.into_iter().flatten().collect();

    let edges: Vec<PoseEdge> = constraints
        .iter()
        .map(|c| {
            let xa = poses[c.from.session][c.from.frame];
            let xb = poses[c.to.session][c.to.frame];
            PoseEdge {
                from: c.from,
                to: c.to,
                relative: xa.inverse() * c.correction * xb,
                kind: EdgeKind::InterSession,
                information: base * c.fitness,
            }
        })
        .collect();
    let graph = build_pose_graph(&poses, edges, base).map_err(|e| {
        let session = match &e {
            Error::DisconnectedGraph { session } => Some(*session),
            _ => None,
        };
        PipelineError::at(STAGE, session)(e)
    })?;
    let result = optimize_pose_graph(&graph, &gcfg.solver).map_err(PipelineError::at(STAGE, None))?;
    Ok(OptimizeOutput {
        graph,
        result,
        constraints,
        frame_clouds,
    })
}

/// Every frame cloud placed by its optimized pose, in session/frame order.
pub fn propagate(opt: &OptimizeOutput) -> std::result::Result<ColoredPointCloud, PipelineError> {
    propagate_poses_to_clouds(&opt.frame_clouds, &opt.result.poses).map_err(PipelineError::at("propagate", None))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub cloud: ColoredPointCloud,
    pub report: RunReport,
    pub prefuse: PrefuseOutput,
    pub register: RegisterOutput,
    pub optimize: OptimizeOutput,
}

impl PipelineRun {
    /// Optimized world poses per session, frame order.
    pub fn session_poses(&self) -> Vec<Vec<Pose>> {
        let mut out: BTreeMap<usize, Vec<Pose>> = BTreeMap::new();
        for (id, pose) in &self.optimize.result.poses {
            out.entry(id.session).or_default().push(*pose);
        }
        out.into_values().collect()
    }
}

fn cloud_digest(c: &ColoredPointCloud) -> String {
    Fingerprint::new("cloud").cloud(c).hex()
}

/// Last stage [`run_stages`] executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Prefuse,
    Register,
    Optimize,
    Propagate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Prefuse => "prefuse",
            Stage::Register => "register",
            Stage::Optimize => "optimize",
            Stage::Propagate => "propagate",
        }
    }
}

/// Outputs of the stages that ran; later ones are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialRun {
    pub report: RunReport,
    pub prefuse: PrefuseOutput,
    pub register: Option<RegisterOutput>,
    pub optimize: Option<OptimizeOutput>,
    pub cloud: Option<ColoredPointCloud>,
}

/// Stages in order up to and including `last`, with a report whose digests
/// chain from the inputs.
pub fn run_stages(
    inputs: &PipelineInputs,
    cfg: &PipelineConfig,
    last: Stage,
) -> std::result::Result<PartialRun, PipelineError> {
    let mut report = RunReport::default();
    let input_digest = inputs.digest();
    report.push(
        "load",
        String::new(),
        input_digest.clone(),
        json!({
            "sessions": inputs.sessions.iter().map(|s| json!({
                "poses": s.trajectory.len(),
                "points": s.cloud.len(),
            })).collect::<Vec<_>>(),
            "lidar_points": inputs.lidar_cloud.len(),
            "lidar_poses": inputs.lidar_trajectory.len(),
        }),
    );

    let pre = prefuse(inputs, cfg)?;
    let pre_digest = pre.digest();
    report.push("prefuse", input_digest, pre_digest.clone(), pre.diagnostics());
    let mut run = PartialRun {
        report,
        prefuse: pre,
        register: None,
        optimize: None,
        cloud: None,
    };
    if last == Stage::Prefuse {
        return Ok(run);
    }

    let reg = register(inputs, &run.prefuse, cfg)?;
    let reg_digest = reg.digest();
    run.report
        .push("register", pre_digest, reg_digest.clone(), reg.diagnostics());
    if last == Stage::Register {
        run.register = Some(reg);
        return Ok(run);
    }

    let opt = optimize(inputs, &reg, cfg)?;
    run.register = Some(reg);
    let opt_digest = opt.digest();
    run.report
        .push("optimize", reg_digest, opt_digest.clone(), opt.diagnostics());
    if last == Stage::Optimize {
        run.optimize = Some(opt);
        return Ok(run);
    }

    let cloud = propagate(&opt)?;
    run.optimize = Some(opt);
    run.report.push(
        "propagate",
        opt_digest,
        cloud_digest(&cloud),
        json!({ "points": cloud.len() }),
    );
    run.cloud = Some(cloud);
    Ok(run)
}

/// All stages in order, with a report whose digests chain from the inputs
/// to the output cloud.
pub fn run_pipeline(inputs: &PipelineInputs, cfg: &PipelineConfig) -> std::result::Result<PipelineRun, PipelineError> {
    let run = run_stages(inputs, cfg, Stage::Propagate)?;
    let missing = "all stages ran";
    Ok(PipelineRun {
        cloud: run.cloud.expect(missing),
        report: run.report,
        prefuse: run.prefuse,
        register: run.register.expect(missing),
        optimize: run.optimize.expect(missing),
    })
}
