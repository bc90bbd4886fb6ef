mod common;

use common::*;
use fusekit::geometry::{so3, Rot3};
use fusekit::posegraph::{build_pose_graph, isotropic_information, optimize_pose_graph, write_g2o, PgoConfig};
use fusekit::postfusion::{regularized_sim3_icp, IcpConfig};
use fusekit::prefusion::{align_session, correct_rotation, PrefusionConfig};
use fusekit::{Error, TimedTrajectory};

fn scale_error(trial: &CropTrial, beta: f64, max_iterations: usize) -> f64 {
    let cfg = IcpConfig {
        beta,
        anchor_scale: trial.truth.scale(),
        max_iterations,
        ..IcpConfig::default()
    };
    let out = regularized_sim3_icp(&trial.source, &trial.target, &trial.init, &cfg).unwrap();
    assert!(out.objective_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    (out.transform.scale() / trial.truth.scale() - 1.0).abs()
}

#[test]
fn anchored_scale_beats_free_scale_on_cropped_sources() {
    for crop in [0.4, 0.6] {
        for seed in 0..4 {
            let trial = crop_trial(seed, crop);
            let (free, anchored) = (scale_error(&trial, 0.0, 50), scale_error(&trial, 0.5, 50));
            assert!(anchored < free, "crop {crop} seed {seed}: {anchored} vs {free}");
            assert!(anchored < 0.02, "crop {crop} seed {seed}: {anchored}");
        }
    }
}

/// Free-scale ICP from a 5% scale error is expected to drift beyond 5%
/// on a 40% crop. On these scenes it under-corrects instead, staying
/// between the initial error and the truth.
#[test]
#[ignore = "free-scale ICP under-corrects rather than drifting past 5% on this scene family"]
fn free_scale_drifts_past_five_percent() {
    let trial = crop_trial(0, 0.4);
    assert!(scale_error(&trial, 0.0, 50) > 0.05);
}

#[test]
fn free_scale_error_stays_below_the_initial_error() {
    for seed in 0..4 {
        let trial = crop_trial(seed, 0.4);
        let e = scale_error(&trial, 0.0, 50);
        assert!(e < 0.05 + 1e-9, "seed {seed}: {e}");
    }
}

#[test]
fn straight_trajectories_get_their_rotation_repaired() {
    for seed in 0..20 {
        let trial = line_trial(seed, 5f64.to_radians());
        let stamp = |poses: &[fusekit::Pose]| {
            TimedTrajectory::from_pairs(poses.iter().enumerate().map(|(i, p)| (0.1 * i as f64, *p))).unwrap()
        };
        let out = align_session(0, &stamp(&trial.vggt), &stamp(&trial.cam), &PrefusionConfig::default()).unwrap();
        assert!(out.rotation_corrected, "seed {seed}: linearity {}", out.linearity);
        let src: Vec<Rot3> = trial.vggt.iter().map(|p| p.rotation).collect();
        let tgt: Vec<Rot3> = trial.cam.iter().map(|p| p.rotation).collect();
        let repaired = correct_rotation(&trial.init, &src, &tgt).unwrap();
        let before = so3::geodesic_angle(&trial.init.rotation, &trial.truth.rotation);
        let after = so3::geodesic_angle(&repaired, &trial.truth.rotation);
        assert!(after < before, "seed {seed}: {after} vs {before}");
        assert!(after < 0.5f64.to_radians(), "seed {seed}: {after}");
    }
}

#[test]
fn rotation_repair_rejects_mismatched_inputs() {
    let trial = line_trial(1, 0.1);
    let src: Vec<Rot3> = trial.vggt.iter().map(|p| p.rotation).collect();
    assert!(matches!(
        correct_rotation(&trial.init, &src, &src[1..]),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        correct_rotation(&trial.init, &[], &[]),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn pose_graph_recovers_chain_and_loop_from_drift() {
    for sessions in [1, 2, 4] {
        let g = synthetic_graph(sessions as u64, sessions, 15);
        let exact = build_pose_graph(&g.truth, g.inter.clone(), isotropic_information(0.05, 0.01)).unwrap();
        let graph = reinitialized(&exact, &flatten(&drift(&g.truth, 77, 0.1, 0.03)));
        let out = optimize_pose_graph(&graph, &PgoConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.final_chi2 < 1e-12 * (1.0 + out.initial_chi2));
        for (id, pose) in &out.poses {
            let (dt, dr) = pose_errors(pose, &g.truth[id.session][id.frame]);
            assert!(dt < 1e-6 && dr < 1e-6, "{id:?}: {dt} {dr}");
        }
    }
}

#[test]
fn pose_graph_rejects_disconnected_sessions() {
    let g = synthetic_graph(3, 3, 6);
    let only_first = vec![g.inter[0].clone()];
    let err = build_pose_graph(&g.truth, only_first, isotropic_information(0.05, 0.01)).unwrap_err();
    assert!(matches!(err, Error::DisconnectedGraph { session: 2 }));
}

#[test]
fn g2o_export_lists_every_vertex_and_edge() {
    let g = synthetic_graph(5, 3, 6);
    let graph = build_pose_graph(&g.truth, g.inter.clone(), isotropic_information(0.05, 0.01)).unwrap();
    let text = write_g2o(&graph, None);
    let count = |tag: &str| text.lines().filter(|l| l.starts_with(tag)).count();
    assert_eq!(count("VERTEX_SE3:QUAT"), 18);
    assert_eq!(count("EDGE_SE3:QUAT"), graph.edges().len());
    assert_eq!(count("FIX"), 1);
}
