//! Test-side generators and brute-force oracles. Nothing here calls into the
//! algorithm under test except to build inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use fusekit::geometry::{so3, Mat3, Rot3};
use fusekit::posegraph::{isotropic_information, EdgeKind, NodeId, PoseEdge, PoseGraph, PoseNode};
use fusekit::{ColoredPointCloud, Pose, Sim3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rot3 {
    // uniform on SO(3) via a normalized Gaussian quaternion
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let quat = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    quat.to_rotation_matrix()
}

pub fn random_vec(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    if sigma == 0.0 {
        return Vec3::zeros();
    }
    let n = Normal::new(0.0, sigma).unwrap();
    Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng))
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<Vec3> {
    (0..n).map(|_| random_vec(rng, half)).collect()
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, half: f64) -> ColoredPointCloud {
    let positions = random_points(rng, n, half);
    let colors = (0..n)
        .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    ColoredPointCloud::new(positions, colors).unwrap()
}

pub fn random_sim3(rng: &mut ChaCha8Rng, scale_lo: f64, scale_hi: f64) -> Sim3 {
    let s = (rng.random_range(scale_lo.ln()..scale_hi.ln())).exp();
    Sim3::new(s, random_rotation(rng), random_vec(rng, 10.0)).unwrap()
}

pub fn random_pose(rng: &mut ChaCha8Rng, half: f64) -> Pose {
    Pose::from_parts(random_rotation(rng), random_vec(rng, half))
}

pub fn rotation_gap(a: &Rot3, b: &Rot3) -> f64 {
    (a.matrix() - b.matrix()).abs().max()
}

pub fn sim3_gap(a: &Sim3, b: &Sim3) -> f64 {
    (a.scale() - b.scale())
        .abs()
        .max(rotation_gap(&a.rotation, &b.rotation))
        .max((a.translation - b.translation).abs().max())
}

/// Translation distance and relative rotation angle. The angle comes from the
/// Frobenius chord, which stays accurate near zero.
pub fn pose_errors(a: &Pose, b: &Pose) -> (f64, f64) {
    let chord = (a.rotation.matrix() - b.rotation.matrix()).norm();
    let angle = 2.0 * (chord / (2.0 * std::f64::consts::SQRT_2)).min(1.0).asin();
    ((a.translation - b.translation).norm(), angle)
}

// ---------------------------------------------------------------- neighbors

/// Exhaustive nearest neighbor; the lowest id wins ties.
pub fn brute_nearest(points: &[Vec3], q: &Vec3) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d2 = (p - q).norm_squared();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    best
}

pub fn brute_radius(points: &[Vec3], q: &Vec3, r: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| (*p - q).norm_squared() <= r * r)
        .map(|(i, _)| i)
        .collect()
}

// ---------------------------------------------------------------- rotations

fn trace_score(m: &Mat3, r: &Rot3) -> f64 {
    (m.transpose() * r.matrix()).trace()
}

/// Frobenius-nearest rotation by direct search: Riemannian ascent on
/// `tr(Mᵀ R)` from several starts, keeping the best.
pub fn numeric_nearest_rotation(m: &Mat3, seed: u64) -> Rot3 {
    let mut rng = rng(seed);
    let mut starts: Vec<Rot3> = (0..24).map(|_| random_rotation(&mut rng)).collect();
    starts.push(Rot3::identity());
    let mut best = Rot3::identity();
    let mut best_score = f64::NEG_INFINITY;
    for start in starts {
        let mut r = start;
        let mut step = 0.5;
        let mut score = trace_score(m, &r);
        for _ in 0..20_000 {
            // gradient of tr(Mᵀ R exp(ω^)) at ω = 0 is vee(RᵀM − MᵀR)/2
            let a = r.matrix().transpose() * m;
            let skew = 0.5 * (a - a.transpose());
            let g = Vec3::new(skew[(2, 1)], skew[(0, 2)], skew[(1, 0)]);
            if g.norm() < 1e-15 {
                break;
            }
            let candidate = r * so3::exp(&(g * step));
            let s = trace_score(m, &candidate);
            if s > score {
                r = candidate;
                score = s;
                step *= 1.2;
            } else {
                step *= 0.5;
                if step < 1e-18 {
                    break;
                }
            }
        }
        if score > best_score {
            best_score = score;
            best = r;
        }
    }
    best
}

// ---------------------------------------------------------------- PCA

/// Eigenvalues of a symmetric 3×3 matrix from the trigonometric solution of
/// its characteristic cubic, descending.
pub fn cubic_eigenvalues(a: &Mat3) -> [f64; 3] {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = a.trace() / 3.0;
    if p1 == 0.0 {
        let mut d = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
        d.sort_by(|x, y| y.total_cmp(x));
        return d;
    }
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (a - Mat3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

pub fn oracle_linearity(points: &[Vec3]) -> f64 {
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let cov = points.iter().map(|p| (p - mean) * (p - mean).transpose()).sum::<Mat3>() / n;
    let [l1, l2, l3] = cubic_eigenvalues(&cov);
    1.0 - (l2.max(0.0) + l3.max(0.0)) / l1
}

// ---------------------------------------------------------------- scale consensus

/// Inlier set of the best candidate (count, then summed linearity, then lower
/// id) among sessions whose softmax sampling weight is at least `likely`.
/// `None` when a session with weight in `(1e-9, likely)` would beat it, i.e.
/// when the outcome depends on which rare candidates happen to be drawn.
pub fn exhaustive_consensus(scales: &[f64], linearities: &[f64], likely: f64) -> Option<Vec<usize>> {
    let n = scales.len() as f64;
    let mean = scales.iter().sum::<f64>() / n;
    let sigma = (scales.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    let threshold = 2.0 * sigma;
    let alpha = mean / sigma;
    let top = linearities.iter().fold(f64::NEG_INFINITY, |m, l| m.max(alpha * l));
    let w: Vec<f64> = linearities.iter().map(|l| (alpha * l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let prob: Vec<f64> = w.iter().map(|x| x / total).collect();
    let members = |c: usize| -> Vec<usize> {
        (0..scales.len())
            .filter(|&k| (scales[k] - scales[c]).abs() < threshold)
            .collect()
    };
    let key = |c: usize| {
        let m = members(c);
        (m.len(), m.iter().map(|&k| linearities[k]).sum::<f64>())
    };
    let beats = |a: (usize, f64), b: (usize, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 > b.1);
    let mut best: Option<usize> = None;
    for c in (0..scales.len()).filter(|&c| prob[c] >= likely) {
        if best.is_none_or(|b| beats(key(c), key(b))) {
            best = Some(c);
        }
    }
    let best = best?;
    let rare_winner = (0..scales.len()).any(|c| prob[c] > 1e-9 && prob[c] < likely && beats(key(c), key(best)));
    if rare_winner {
        None
    } else {
        Some(members(best))
    }
}

// ---------------------------------------------------------------- metrics

fn nearest_of(points: &[Vec3], q: &Vec3) -> (usize, f64) {
    brute_nearest(points, q)
}

pub fn oracle_color_distance(src: &ColoredPointCloud, reference: &ColoredPointCloud) -> f64 {
    let one_way = |a: &ColoredPointCloud, b: &ColoredPointCloud| {
        a.positions()
            .iter()
            .zip(a.colors())
            .map(|(p, c)| (c - b.colors()[nearest_of(b.positions(), p).0]).norm())
            .sum::<f64>()
            / a.len() as f64
    };
    0.5 * one_way(src, reference) + 0.5 * one_way(reference, src)
}

pub fn oracle_color_fidelity(cd: f64) -> f64 {
    if cd == 0.0 {
        120.0
    } else {
        -20.0 * cd.log10()
    }
}

pub fn oracle_lcr(src: &ColoredPointCloud, reference: &ColoredPointCloud, tau: f64, r_g: f64) -> f64 {
    let hits = reference
        .positions()
        .iter()
        .zip(reference.colors())
        .filter(|(x, c)| {
            src.positions()
                .iter()
                .zip(src.colors())
                .any(|(p, pc)| (p - *x).norm_squared() <= r_g * r_g && (pc - *c).norm() <= 3.0 * tau)
        })
        .count();
    hits as f64 / reference.len() as f64
}

pub fn oracle_ccs(cloud: &ColoredPointCloud, voxel: f64) -> f64 {
    let lo = cloud
        .positions()
        .iter()
        .fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(p));
    let mut cells: HashMap<[i64; 3], Vec<Vec3>> = HashMap::new();
    for (p, c) in cloud.positions().iter().zip(cloud.colors()) {
        let key = std::array::from_fn(|a| ((p[a] - lo[a]) / voxel).floor() as i64);
        cells.entry(key).or_default().push(*c);
    }
    let mut traces = Vec::new();
    for colors in cells.values().filter(|v| v.len() >= 2) {
        let n = colors.len() as f64;
        let mean = colors.iter().sum::<Vec3>() / n;
        let var: f64 = colors.iter().map(|c| (c - mean).norm_squared()).sum::<f64>() / (n - 1.0);
        traces.push(var);
    }
    if traces.is_empty() {
        0.0
    } else {
        traces.iter().sum::<f64>() / traces.len() as f64
    }
}

pub fn oracle_chamfer(src: &ColoredPointCloud, reference: &ColoredPointCloud) -> f64 {
    let one_way = |a: &ColoredPointCloud, b: &ColoredPointCloud| {
        a.positions()
            .iter()
            .map(|p| nearest_of(b.positions(), p).1.sqrt())
            .sum::<f64>()
            / a.len() as f64
    };
    0.5 * one_way(src, reference) + 0.5 * one_way(reference, src)
}

pub fn oracle_fitness(src: &ColoredPointCloud, reference: &ColoredPointCloud, gate: f64) -> f64 {
    let hits = src
        .positions()
        .iter()
        .filter(|p| nearest_of(reference.positions(), p).1 <= gate * gate)
        .count();
    hits as f64 / src.len() as f64
}

// ---------------------------------------------------------------- crop experiment

/// Target: a ground square with boxes on it. Source: an independent noisy
/// sample restricted to the central `crop` fraction of the extent, expressed
/// in a random Sim(3) frame. `init` is the truth with its scale off by ±5%.
pub struct CropTrial {
    pub source: ColoredPointCloud,
    pub target: ColoredPointCloud,
    pub truth: Sim3,
    pub init: Sim3,
}

fn box_scene_sample(rng: &mut ChaCha8Rng, n: usize, extent: f64, boxes: &[(Vec3, Vec3)]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if rng.random::<f64>() < 0.6 {
            out.push(Vec3::new(
                rng.random_range(0.0..extent),
                rng.random_range(0.0..extent),
                0.0,
            ));
        } else {
            let (corner, size) = boxes[rng.random_range(0..boxes.len())];
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            let local = match rng.random_range(0..5) {
                0 => Vec3::new(a * size.x, 0.0, b * size.z),
                1 => Vec3::new(a * size.x, size.y, b * size.z),
                2 => Vec3::new(0.0, a * size.y, b * size.z),
                3 => Vec3::new(size.x, a * size.y, b * size.z),
                _ => Vec3::new(a * size.x, b * size.y, size.z),
            };
            out.push(corner + local);
        }
    }
    out
}

fn gray(points: Vec<Vec3>) -> ColoredPointCloud {
    let n = points.len();
    ColoredPointCloud::new(points, vec![Vec3::repeat(0.5); n]).unwrap()
}

pub fn crop_trial(seed: u64, crop: f64) -> CropTrial {
    let extent = 10.0;
    let mut rng = rng(seed);
    let boxes: Vec<(Vec3, Vec3)> = (0..12)
        .map(|_| {
            (
                Vec3::new(
                    rng.random_range(0.0..extent - 1.5),
                    rng.random_range(0.0..extent - 1.5),
                    0.0,
                ),
                Vec3::new(
                    rng.random_range(0.4..1.5),
                    rng.random_range(0.4..1.5),
                    rng.random_range(0.3..2.0),
                ),
            )
        })
        .collect();
    let target = box_scene_sample(&mut rng, 20_000, extent, &boxes);
    let lo = 0.5 * extent * (1.0 - crop);
    let hi = lo + crop * extent;
    let observed: Vec<Vec3> = box_scene_sample(&mut rng, 30_000, extent, &boxes)
        .into_iter()
        .filter(|p| (lo..=hi).contains(&p.x) && (lo..=hi).contains(&p.y))
        .collect();
    let observed: Vec<Vec3> = observed.into_iter().map(|p| p + gaussian_vec(&mut rng, 0.02)).collect();
    let truth = Sim3::new(
        rng.random_range(0.5..2.0),
        random_rotation(&mut rng),
        random_vec(&mut rng, 5.0),
    )
    .unwrap();
    let to_source = truth.inverse();
    let source: Vec<Vec3> = observed.iter().map(|p| to_source.apply(p)).collect();
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let init = truth.with_scale(truth.scale() * (1.0 + 0.05 * sign)).unwrap();
    CropTrial {
        source: gray(source),
        target: gray(target),
        truth,
        init,
    }
}

// ---------------------------------------------------------------- pose graphs

/// A consistent multi-session graph: ground-truth frame poses along a wavy
/// path, exact odometry, and exact inter-session edges between the last
/// frame of a session and the first of the next plus one extra loop edge.
pub struct SyntheticGraph {
    pub truth: Vec<Vec<Pose>>,
    pub inter: Vec<PoseEdge>,
}

pub fn synthetic_graph(seed: u64, sessions: usize, frames: usize) -> SyntheticGraph {
    let mut rng = rng(seed);
    let truth: Vec<Vec<Pose>> = (0..sessions)
        .map(|k| {
            (0..frames)
                .map(|i| {
                    let u = (k * frames + i) as f64 * 0.3;
                    let rot = so3::exp(&Vec3::new(0.1 * u.sin(), 0.05 * u.cos(), 0.2 * u));
                    Pose::from_parts(
                        rot,
                        Vec3::new(2.0 * u.cos(), 2.0 * u.sin(), 0.1 * u) + gaussian_vec(&mut rng, 0.01),
                    )
                })
                .collect()
        })
        .collect();
    let info = isotropic_information(0.05, 0.01);
    let exact = |from: NodeId, to: NodeId| PoseEdge {
        from,
        to,
        relative: truth[from.session][from.frame].inverse() * truth[to.session][to.frame],
        kind: EdgeKind::InterSession,
        information: info,
    };
    let mut inter: Vec<PoseEdge> = (1..sessions)
        .map(|b| exact(NodeId::new(b - 1, frames - 1), NodeId::new(b, 0)))
        .collect();
    if sessions > 2 {
        inter.push(exact(NodeId::new(0, frames / 2), NodeId::new(sessions - 1, frames / 2)));
    }
    SyntheticGraph { truth, inter }
}

/// Applies a random-walk drift to every pose except the gauge frame.
pub fn drift(truth: &[Vec<Pose>], seed: u64, step_t: f64, step_r: f64) -> Vec<Vec<Pose>> {
    let mut rng = rng(seed);
    let mut acc = Pose::identity();
    truth
        .iter()
        .enumerate()
        .map(|(k, session)| {
            session
                .iter()
                .enumerate()
                .map(|(i, pose)| {
                    if k == 0 && i == 0 {
                        return *pose;
                    }
                    acc = acc
                        * Pose::from_parts(
                            so3::exp(&gaussian_vec(&mut rng, step_r)),
                            gaussian_vec(&mut rng, step_t),
                        );
                    Pose::from_parts(pose.rotation * acc.rotation, pose.translation + acc.translation)
                })
                .collect()
        })
        .collect()
}

pub fn flatten(poses: &[Vec<Pose>]) -> BTreeMap<NodeId, Pose> {
    poses
        .iter()
        .enumerate()
        .flat_map(|(k, s)| s.iter().enumerate().map(move |(i, p)| (NodeId::new(k, i), *p)))
        .collect()
}

/// Same edges and gauge as `graph`, with every free node started at `start`.
pub fn reinitialized(graph: &PoseGraph, start: &BTreeMap<NodeId, Pose>) -> PoseGraph {
    let nodes = graph
        .nodes()
        .values()
        .map(|n| PoseNode {
            pose: if n.fixed { n.pose } else { start[&n.id] },
            ..n.clone()
        })
        .collect();
    PoseGraph::new(nodes, graph.edges().to_vec()).unwrap()
}

// ---------------------------------------------------------------- straight-line sessions

/// Camera poses along a nearly straight line and the matching reconstruction
/// poses in a random Sim(3) frame, both with small independent noise. `init`
/// is the truth with its rotation perturbed by `perturb` radians.
pub struct LineTrial {
    pub truth: Sim3,
    pub init: Sim3,
    pub cam: Vec<Pose>,
    pub vggt: Vec<Pose>,
}

pub fn line_trial(seed: u64, perturb: f64) -> LineTrial {
    let mut rng = rng(seed);
    let truth = Sim3::new(
        rng.random_range(0.5..2.0),
        random_rotation(&mut rng),
        random_vec(&mut rng, 10.0),
    )
    .unwrap();
    let dir = random_vec(&mut rng, 1.0).normalize();
    let origin = random_vec(&mut rng, 5.0);
    let mut heading = random_rotation(&mut rng);
    let n = rng.random_range(10..40);
    let cam: Vec<Pose> = (0..n)
        .map(|i| {
            heading *= so3::exp(&gaussian_vec(&mut rng, 0.02));
            Pose::from_parts(heading, origin + dir * (0.5 * i as f64) + gaussian_vec(&mut rng, 0.01))
        })
        .collect();
    let to_session = truth.inverse();
    let vggt: Vec<Pose> = cam
        .iter()
        .map(|p| {
            let jitter = Pose::from_parts(so3::exp(&gaussian_vec(&mut rng, 0.5f64.to_radians())), Vec3::zeros());
            to_session.transform_pose(p) * jitter
        })
        .collect();
    let axis = random_vec(&mut rng, 1.0).normalize();
    let init = Sim3::new(
        truth.scale(),
        so3::exp(&(axis * perturb)) * truth.rotation,
        truth.translation,
    )
    .unwrap();
    LineTrial { truth, init, cam, vggt }
}
