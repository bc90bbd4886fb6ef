use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub session: usize,
    pub frame: usize,
}

impl NodeId {
    pub fn new(session: usize, frame: usize) -> Self {
        Self { session, frame }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseNode {
    pub id: NodeId,
    /// World pose of the frame.
    pub pose: Pose,
    pub fixed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    IntraSession,
    InterSession,
}

/// Relative-pose measurement `from⁻¹ · to`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub relative: Pose,
    pub kind: EdgeKind,
    /// Weight over the `[translation, rotation]` tangent residual.
    pub information: Matrix6<f64>,
}

/// Diagonal information `1/σ²` for translation and rotation.
pub fn isotropic_information(sigma_translation: f64, sigma_rotation: f64) -> Matrix6<f64> {
    let t = 1.0 / (sigma_translation * sigma_translation);
    let r = 1.0 / (sigma_rotation * sigma_rotation);
    Matrix6::from_diagonal(&nalgebra::Vector6::new(t, t, t, r, r, r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseGraph {
    nodes: BTreeMap<NodeId, PoseNode>,
    edges: Vec<PoseEdge>,
}

impl PoseGraph {
    /// Validates the gauge, the edge endpoints and weights, and connectivity.
    pub fn new(nodes: Vec<PoseNode>, edges: Vec<PoseEdge>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for n in nodes {
            if map.insert(n.id, n).is_some() {
                return Err(Error::invalid("duplicate node id"));
            }
        }
        let fixed = map.values().filter(|n| n.fixed).count();
        if fixed != 1 {
            return Err(Error::invalid(format!(
                "exactly one fixed node required, found {fixed}"
            )));
        }
        for e in &edges {
            if e.from == e.to {
                return Err(Error::invalid(format!("self-loop edge at {:?}", e.from)));
            }
            if !map.contains_key(&e.from) || !map.contains_key(&e.to) {
                return Err(Error::invalid(format!(
                    "edge {:?} → {:?} has a missing endpoint",
                    e.from, e.to
                )));
            }
            let asym = (e.information - e.information.transpose()).amax();
            if asym > 1e-9 * e.information.amax().max(1.0) || e.information.cholesky().is_none() {
                return Err(Error::invalid(format!(
                    "edge {:?} → {:?} information is not symmetric positive definite",
                    e.from, e.to
                )));
            }
        }
        let graph = Self { nodes: map, edges };
        if let Some(id) = graph.unreachable_from_gauge().first() {
            return Err(Error::DisconnectedGraph { session: id.session });
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, PoseNode> {
        &self.nodes
    }

    pub fn edges(&self) -> &[PoseEdge] {
        &self.edges
    }

    pub fn gauge(&self) -> NodeId {
        self.nodes.values().find(|n| n.fixed).expect("validated").id
    }

    pub fn poses(&self) -> BTreeMap<NodeId, Pose> {
        self.nodes.iter().map(|(id, n)| (*id, n.pose)).collect()
    }

    fn unreachable_from_gauge(&self) -> Vec<NodeId> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for e in &self.edges {
            adj.entry(e.from).or_default().push(e.to);
            adj.entry(e.to).or_default().push(e.from);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.gauge()];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(adj.get(&n).into_iter().flatten().copied());
            }
        }
        self.nodes.keys().filter(|id| !seen.contains(id)).copied().collect()
    }
}

/// One node per frame, consecutive frames of each session linked by their
/// relative pose, `inter` edges appended, node (0, 0) fixed.
pub fn build_pose_graph(
    sessions: &[Vec<Pose>],
    inter: Vec<PoseEdge>,
    intra_information: Matrix6<f64>,
) -> Result<PoseGraph> {
    if sessions.is_empty() || sessions[0].is_empty() {
        return Err(Error::invalid(
            "pose graph needs a first session with at least one frame",
        ));
    }
    // session-level reachability so the error names the offending session
    let mut reach = BTreeSet::from([0usize]);
    loop {
        let before = reach.len();
        for e in &inter {
            let (a, b) = (e.from.session, e.to.session);
            if reach.contains(&a) || reach.contains(&b) {
                reach.insert(a);
                reach.insert(b);
            }
        }
        if reach.len() == before {
            break;
        }
    }
    if let Some(k) = (0..sessions.len()).find(|k| !reach.contains(k)) {
        return Err(Error::DisconnectedGraph { session: k });
    }

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (k, frames) in sessions.iter().enumerate() {
        for (i, pose) in frames.iter().enumerate() {
            nodes.push(PoseNode {
                id: NodeId::new(k, i),
                pose: *pose,
                fixed: k == 0 && i == 0,
            });
        }
        for (i, w) in frames.windows(2).enumerate() {
            edges.push(PoseEdge {
                from: NodeId::new(k, i),
                to: NodeId::new(k, i + 1),
                relative: w[0].inverse() * w[1],
                kind: EdgeKind::IntraSession,
                information: intra_information,
            });
        }
    }
    edges.extend(inter);
    PoseGraph::new(nodes, edges)
}
