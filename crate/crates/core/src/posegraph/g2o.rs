use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::UnitQuaternion;

use super::{NodeId, PoseGraph};
use crate::geometry::Pose;

fn pose_fields(out: &mut String, pose: &Pose) {
    let q = UnitQuaternion::from_rotation_matrix(&pose.rotation);
    let t = pose.translation;
    let _ = write!(out, "{} {} {} {} {} {} {}", t.x, t.y, t.z, q.i, q.j, q.k, q.w);
}

/// Text dump: `VERTEX_SE3:QUAT` per node (ids assigned in node order), a
/// `FIX` line for the gauge, then `EDGE_SE3:QUAT` per edge with the 21
/// upper-triangular information entries.
/// Vertices take their poses from `poses` when given, else from the graph.
pub fn write_g2o(graph: &PoseGraph, poses: Option<&BTreeMap<NodeId, Pose>>) -> String {
    let ids: BTreeMap<NodeId, usize> = graph.nodes().keys().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut out = String::new();
    for (id, node) in graph.nodes() {
        let pose = poses.and_then(|p| p.get(id)).unwrap_or(&node.pose);
        let _ = write!(out, "VERTEX_SE3:QUAT {} ", ids[id]);
        pose_fields(&mut out, pose);
        out.push('\n');
    }
    let _ = writeln!(out, "FIX {}", ids[&graph.gauge()]);
    for e in graph.edges() {
        let _ = write!(out, "EDGE_SE3:QUAT {} {} ", ids[&e.from], ids[&e.to]);
        pose_fields(&mut out, &e.relative);
        for r in 0..6 {
            for c in r..6 {
                let _ = write!(out, " {}", e.information[(r, c)]);
            }
        }
        out.push('\n');
    }
    out
}
