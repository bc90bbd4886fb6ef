//! Fusion of scale-free feed-forward reconstructions with metric LiDAR
//! odometry, plus quality metrics for colored point cloud maps.
//!
//! Stages, in pipeline order:
//! - [`prefusion`]: per-session Sim(3) from paired poses, rotation repair on
//!   near-linear motion, scale consensus across sessions.
//! - [`postfusion`]: scale-regularized Sim(3) ICP against the LiDAR map.
//! - [`posegraph`]: frame-level pose graph joining all sessions.
//! - [`eval`]: color distance/fidelity, local color recall, color consistency.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod posegraph;
pub mod postfusion;
pub mod prefusion;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{ColoredPointCloud, Pose, Sim3, SpatialIndex, TimedTrajectory, Vec3};
