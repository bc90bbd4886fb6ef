//! End-to-end orchestration: pre-fusion, per-session registration, pose
//! graph optimization and propagation of the optimized poses to the clouds.
//!
//! Stages run in order; inside a stage sessions are processed in parallel
//! and collected by session id.

mod digest;
mod report;
mod stages;

pub use report::{RunReport, StageRecord};
pub use stages::{
    load_inputs, optimize, prefuse, propagate, register, run_pipeline, run_stages, InterSessionConstraint,
    OptimizeOutput, PartialRun, PipelineRun, PrefuseOutput, RegisterOutput, SessionRegistration, Stage,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::geometry::{ColoredPointCloud, TimedTrajectory};
use crate::posegraph::{PgoConfig, RigidIcpConfig};
use crate::prefusion::{Extrinsics, PrefusionConfig};

/// Settings of the per-session Sim(3) ICP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationConfig {
    pub beta: f64,
    pub max_correspondence_distance: f64,
    pub convergence_tol: f64,
    pub max_iterations: usize,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            max_correspondence_distance: 1.0,
            convergence_tol: 1e-6,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Odometry edge standard deviations; inter-session edges use the same
    /// weights scaled by their ICP fitness.
    pub sigma_translation: f64,
    pub sigma_rotation: f64,
    pub solver: PgoConfig,
    /// Rigid ICP on overlapping frames.
    pub icp: RigidIcpConfig,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            sigma_translation: 0.05,
            sigma_rotation: 0.01,
            solver: PgoConfig::default(),
            icp: RigidIcpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub prefusion: PrefusionConfig,
    pub postfusion: RegistrationConfig,
    pub pgo: GraphConfig,
    pub eval: EvalConfig,
}

/// One reconstruction session: poses in its own frame plus its points.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionInput {
    pub trajectory: TimedTrajectory,
    pub cloud: ColoredPointCloud,
    /// Index into `trajectory` of the frame each point came from. When
    /// absent, points are assigned to the frame whose position is closest.
    pub frames: Option<Vec<usize>>,
}

impl SessionInput {
    pub fn frame_ids(&self) -> Result<Vec<usize>> {
        let n = self.trajectory.len();
        match &self.frames {
            Some(f) => {
                if f.len() != self.cloud.len() {
                    return Err(Error::invalid(format!(
                        "{} frame ids for {} points",
                        f.len(),
                        self.cloud.len()
                    )));
                }
                if let Some(bad) = f.iter().find(|&&i| i >= n) {
                    return Err(Error::invalid(format!("frame id {bad} out of range for {n} poses")));
                }
                Ok(f.clone())
            }
            None => {
                if n == 0 {
                    return Err(Error::invalid("session trajectory is empty"));
                }
                let centers: Vec<_> = self.trajectory.poses().map(|p| p.translation).collect();
                let index = crate::geometry::SpatialIndex::new(&centers);
                self.cloud
                    .positions()
                    .iter()
                    .map(|p| index.nearest(p).map(|(i, _)| i))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInputs {
    pub lidar_cloud: ColoredPointCloud,
    pub lidar_trajectory: TimedTrajectory,
    pub extrinsics: Extrinsics,
    pub sessions: Vec<SessionInput>,
}

/// A stage failure tagged with where it happened.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}`{}: {source}", session.map(|k| format!(", session {k}")).unwrap_or_default())]
pub struct PipelineError {
    pub stage: &'static str,
    pub session: Option<usize>,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub(crate) fn at(stage: &'static str, session: Option<usize>) -> impl FnOnce(Error) -> Self {
        move |source| Self { stage, session, source }
    }
}
