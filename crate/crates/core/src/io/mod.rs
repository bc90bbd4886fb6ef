//! File formats: PLY clouds, TUM trajectories, extrinsics and run manifests.

mod extrinsics;
mod manifest;
mod ply;
mod tum;

pub use extrinsics::{format_extrinsics, parse_extrinsics, read_extrinsics, write_extrinsics};
pub use manifest::{SessionEntry, SessionManifest};
pub use ply::{encode_ply, encode_ply_ascii, parse_ply, read_ply, read_ply_data, write_ply, write_ply_data, PlyData};
pub use tum::{format_tum, parse_tum, read_tum, write_tum};
