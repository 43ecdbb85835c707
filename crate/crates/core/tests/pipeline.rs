use landmark_core::geometry::{compose, distance};
use landmark_core::search::{centroid_distance, transfer_pose};
use landmark_core::synth::catalog::{self, pose};
use landmark_core::synth::{generate_scene, SceneSpec};
use landmark_core::{find_landmark, CaptureMetadata, Landmark, PointCloud, RigidTransform, SearchParams};

const D: f64 = 20_000.0;

fn spec(objects: Vec<landmark_core::synth::ObjectPlacement>) -> SceneSpec {
    SceneSpec {
        noise_sigma: 0.0005,
        objects,
        ..SceneSpec::new("s")
    }
}

fn bottle_landmark() -> Landmark {
    let at = pose(0.7, 0.0, 0.7, 0.0);
    let (cloud, _) = generate_scene(&spec(vec![catalog::bottle(at, D)]), 4).unwrap();
    let bbox = landmark_core::io::BoxSpec {
        center: [0.7, 0.0, 0.8275],
        size: [0.12, 0.12, 0.245],
        orientation: [1.0, 0.0, 0.0, 0.0],
    }
    .to_box()
    .unwrap();
    let meta = CaptureMetadata {
        scene_id: "bottle".into(),
        created_at: "2024-01-01T00:00:00Z".into(),
    };
    Landmark::capture("bottle", &cloud, bbox, meta).unwrap()
}

/// Two bottles and a globe.
fn two_bottles() -> (PointCloud, [RigidTransform; 2]) {
    let a = pose(0.5, -0.3, 0.4, 0.1);
    let b = pose(0.9, 0.35, 0.6, -0.15);
    let objects = vec![
        catalog::bottle(a, D),
        catalog::bottle(b, D),
        catalog::distractor(1, pose(0.6, 0.3, 1.0, 0.0), D),
    ];
    let capture = pose(0.7, 0.0, 0.7, 0.0).inverse();
    (generate_scene(&spec(objects), 9).unwrap().0, [compose(&a, &capture), compose(&b, &capture)])
}

#[test]
fn finds_every_instance_with_ordered_separated_matches() {
    let landmark = bottle_landmark();
    let (scene, truths) = two_bottles();
    let params = SearchParams::default();
    let matches = find_landmark(&scene, &landmark, &params).unwrap();
    assert_eq!(matches.len(), 2, "{matches:?}");
    for (rank, m) in matches.iter().enumerate() {
        assert_eq!(m.rank, rank);
        assert!(m.error < params.error_threshold);
    }
    assert!(matches.windows(2).all(|w| w[0].error <= w[1].error));
    assert!(centroid_distance(&matches[0], &matches[1]) > params.nms_radius);

    let template = landmark.cloud().centroid().unwrap();
    for truth in truths {
        let expected = truth.apply(&template);
        assert!(
            matches.iter().any(|m| distance(&m.centroid_point(), &expected) < 0.01),
            "no match near {expected:?}"
        );
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let landmark = bottle_landmark();
    let (scene, _) = two_bottles();
    let params = SearchParams {
        seed: 11,
        ..Default::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| find_landmark(&scene, &landmark, &params).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, find_landmark(&scene, &landmark, &params).unwrap());
}

#[test]
fn transferred_pose_follows_the_match() {
    let landmark = bottle_landmark();
    let (scene, truths) = two_bottles();
    let matches = find_landmark(&scene, &landmark, &SearchParams::default()).unwrap();
    // a grasp demonstrated 5 cm above the cap, on the bottle axis
    let demo = pose(0.7, 0.0, 0.97, 0.0);
    for m in &matches {
        let truth = truths
            .iter()
            .min_by(|a, b| {
                let da = (a.translation() - m.transform.translation()).norm();
                let db = (b.translation() - m.transform.translation()).norm();
                da.total_cmp(&db)
            })
            .unwrap();
        let moved = transfer_pose(&demo, m);
        let want = compose(truth, &demo);
        assert!((moved.translation() - want.translation()).norm() < 0.01);
        // the bottle is round, so only its axis is observable
        let up = landmark_core::Vec3::z();
        let tilt = moved.apply_vector(&up).angle(&want.apply_vector(&up));
        assert!(tilt < 5f64.to_radians(), "tilt {tilt}");
    }
}

#[test]
fn scene_outside_workspace_is_an_error_not_a_match() {
    let landmark = bottle_landmark();
    let far = generate_scene(&spec(vec![catalog::bottle(pose(5.0, 0.0, 0.0, 0.0), D)]), 1).unwrap().0;
    assert_eq!(
        find_landmark(&far, &landmark, &SearchParams::default()).unwrap_err(),
        landmark_core::Error::SceneEmptyAfterCrop
    );
}
