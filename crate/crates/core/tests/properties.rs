mod common;

use common::*;
use fusekit::eval::{color_consistency_score, local_color_recall};
use fusekit::geometry::{pca_linearity, project_to_so3, so3, umeyama_sim3, Mat3};
use fusekit::posegraph::{build_pose_graph, isotropic_information, optimize_pose_graph, se3, PgoConfig};
use fusekit::postfusion::{closed_form_scale, estimate_rt_fixed_scale, regularized_objective, Correspondence};
use fusekit::prefusion::{pair_poses_by_timestamp, sampling_probabilities};
use fusekit::{ColoredPointCloud, Pose, Sim3, TimedTrajectory, Vec3};
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn rotation() -> impl Strategy<Value = fusekit::geometry::Rot3> {
    any::<u64>().prop_map(|seed| random_rotation(&mut rng(seed)))
}

fn sim3() -> impl Strategy<Value = Sim3> {
    ((-2.3f64..2.3), rotation(), vec3(10.0)).prop_map(|(ls, r, t)| Sim3::new(ls.exp(), r, t).unwrap())
}

fn cloud(max: usize) -> impl Strategy<Value = ColoredPointCloud> {
    (1..max, any::<u64>()).prop_map(|(n, seed)| random_cloud(&mut rng(seed), n, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn so3_exp_log_round_trip(phi in vec3(3.0)) {
        prop_assume!(phi.norm() < std::f64::consts::PI - 1e-3);
        let back = so3::log(&so3::exp(&phi));
        prop_assert!((back - phi).norm() < 1e-9);
    }

    #[test]
    fn projection_is_a_proper_rotation_and_idempotent(entries in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let m = Mat3::from_row_slice(&entries);
        prop_assume!(m.singular_values().min() > 1e-6);
        let r = project_to_so3(&m).unwrap();
        prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-9);
        prop_assert!((r.matrix().transpose() * r.matrix() - Mat3::identity()).norm() < 1e-9);
        let again = project_to_so3(r.matrix()).unwrap();
        prop_assert!(rotation_gap(&r, &again) < 1e-12);
    }

    #[test]
    fn umeyama_inverts_noiseless_similarity(t in sim3(), seed in any::<u64>(), n in 4usize..80) {
        let src = random_points(&mut rng(seed), n, 2.0);
        let tgt: Vec<Vec3> = src.iter().map(|p| t.apply(p)).collect();
        let est = umeyama_sim3(&src, &tgt).unwrap();
        prop_assert!(sim3_gap(&est, &t) < 1e-8 * (1.0 + t.translation.norm()));
    }

    #[test]
    fn sim3_composition_with_inverse_is_identity(a in sim3(), p in vec3(5.0)) {
        let id = a * a.inverse();
        prop_assert!((id.apply(&p) - p).norm() < 1e-9 * (1.0 + p.norm()));
        prop_assert!((a.inverse().apply(&a.apply(&p)) - p).norm() < 1e-9 * (1.0 + p.norm()));
    }

    #[test]
    fn sim3_group_action_is_associative(a in sim3(), b in sim3(), p in vec3(5.0)) {
        let lhs = (a * b).apply(&p);
        let rhs = a.apply(&b.apply(&p));
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn se3_exp_log_round_trip(w in vec3(1.8), v in vec3(5.0)) {
        prop_assume!(w.norm() < std::f64::consts::PI - 1e-3);
        let xi = nalgebra::Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z);
        let back = se3::log(&se3::exp(&xi));
        prop_assert!((back - xi).norm() < 1e-8);
    }

    #[test]
    fn closed_form_scale_lies_between_ls_and_anchor(
        seed in any::<u64>(),
        n in 1usize..50,
        lambda in 0.0f64..1e4,
        anchor in 0.1f64..10.0,
        true_scale in 0.1f64..10.0,
    ) {
        let mut g = rng(seed);
        let r = random_rotation(&mut g);
        let t = random_vec(&mut g, 3.0);
        let corr: Vec<Correspondence> = (0..n)
            .map(|_| {
                let p = random_vec(&mut g, 2.0);
                (p, true_scale * (r * p) + t + gaussian_vec(&mut g, 0.1))
            })
            .collect();
        let b: f64 = corr.iter().map(|(p, _)| (r * p).norm_squared()).sum();
        prop_assume!(b > 1e-6);
        let s_ls = closed_form_scale(&corr, &r, &t, 0.0, anchor).unwrap();
        let s = closed_form_scale(&corr, &r, &t, lambda, anchor).unwrap();
        let expect = (b * s_ls + lambda * anchor) / (b + lambda);
        prop_assert!((s - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        prop_assert!(s >= s_ls.min(anchor) - 1e-12 && s <= s_ls.max(anchor) + 1e-12);
    }

    #[test]
    fn scale_update_never_raises_the_objective(
        seed in any::<u64>(),
        lambda in 0.0f64..1e3,
        anchor in 0.5f64..2.0,
        current in 0.5f64..2.0,
    ) {
        let mut g = rng(seed);
        let truth = Sim3::new(1.3, random_rotation(&mut g), random_vec(&mut g, 2.0)).unwrap();
        let corr: Vec<Correspondence> = (0..40)
            .map(|_| {
                let p = random_vec(&mut g, 2.0);
                (p, truth.apply(&p) + gaussian_vec(&mut g, 0.05))
            })
            .collect();
        let (r, t) = estimate_rt_fixed_scale(&corr, current).unwrap();
        let before = regularized_objective(&corr, &Sim3::new(current, r, t).unwrap(), lambda, anchor);
        let s = closed_form_scale(&corr, &r, &t, lambda, anchor).unwrap();
        prop_assume!(s > 0.0);
        let after = regularized_objective(&corr, &Sim3::new(s, r, t).unwrap(), lambda, anchor);
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn linearity_is_bounded(seed in any::<u64>(), n in 3usize..100) {
        let pts = random_points(&mut rng(seed), n, 4.0);
        let l = pca_linearity(&pts).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&l));
    }

    #[test]
    fn linearity_is_rigidly_invariant(seed in any::<u64>(), n in 3usize..60, r in rotation(), t in vec3(50.0)) {
        let pts = random_points(&mut rng(seed), n, 4.0);
        let moved: Vec<Vec3> = pts.iter().map(|p| r * p + t).collect();
        prop_assert!((pca_linearity(&pts).unwrap() - pca_linearity(&moved).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn softmax_weights_form_a_distribution(lin in proptest::collection::vec(0.0f64..1.0, 1..12), alpha in 0.0f64..500.0) {
        let p = sampling_probabilities(&lin, alpha);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        // more linear sessions are never less likely
        for i in 0..lin.len() {
            for j in 0..lin.len() {
                if lin[i] > lin[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn pairing_respects_the_gap(seed in any::<u64>(), gap in 0.001f64..0.2) {
        let mut g = rng(seed);
        use rand::Rng;
        let mut t = 0.0;
        let a = TimedTrajectory::from_pairs((0..20).map(|_| { t += g.random_range(0.01..0.2); (t, Pose::identity()) })).unwrap();
        let mut t = 0.0;
        let b = TimedTrajectory::from_pairs((0..25).map(|_| { t += g.random_range(0.01..0.2); (t, Pose::identity()) })).unwrap();
        if let Ok(pairs) = pair_poses_by_timestamp(&a, &b, gap) {
            let ta: Vec<f64> = a.timestamps().collect();
            let tb: Vec<f64> = b.timestamps().collect();
            for w in pairs.windows(2) {
                prop_assert!(w[0].vggt_index < w[1].vggt_index);
            }
            for p in &pairs {
                prop_assert!(p.time_gap <= gap);
                let best = tb.iter().map(|x| (x - ta[p.vggt_index]).abs()).fold(f64::INFINITY, f64::min);
                prop_assert_eq!(p.time_gap, best);
            }
        }
    }

    #[test]
    fn recall_is_monotone_in_both_radii(a in cloud(200), b in cloud(200), tau in 0.01f64..0.2, r in 0.01f64..0.3) {
        let base = local_color_recall(&a, &b, tau, r).unwrap();
        prop_assert!(local_color_recall(&a, &b, tau * 1.5, r).unwrap() >= base);
        prop_assert!(local_color_recall(&a, &b, tau, r * 1.5).unwrap() >= base);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn consistency_is_invariant_under_voxel_multiple_shifts(c in cloud(300), k in vec3(20.0)) {
        let voxel = 0.125; // exactly representable, so shifted coordinates stay exact
        let shift = k.map(|x| x.round() * voxel);
        let (positions, colors) = c.clone().into_parts();
        let moved = ColoredPointCloud::new(positions.iter().map(|p| p + shift).collect(), colors).unwrap();
        let a = color_consistency_score(&c, voxel).unwrap();
        let b = color_consistency_score(&moved, voxel).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pgo_never_moves_the_gauge_and_never_raises_chi2(seed in any::<u64>(), sessions in 1usize..4) {
        let graph = synthetic_graph(seed, sessions, 8);
        let mut g = rng(seed ^ 0x5eed);
        // noisy edges so the optimum is not exact
        let inter: Vec<_> = graph.inter.iter().cloned().map(|mut e| {
            e.relative = e.relative * Pose::from_parts(so3::exp(&gaussian_vec(&mut g, 0.01)), gaussian_vec(&mut g, 0.02));
            e
        }).collect();
        let start = drift(&graph.truth, seed, 0.05, 0.01);
        let pg = build_pose_graph(&start, inter, isotropic_information(0.05, 0.01)).unwrap();
        let out = optimize_pose_graph(&pg, &PgoConfig::default()).unwrap();
        let gauge = pg.gauge();
        prop_assert_eq!(out.poses[&gauge], pg.nodes()[&gauge].pose);
        prop_assert!(out.final_chi2 <= out.initial_chi2);
        for w in out.chi2_history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}
