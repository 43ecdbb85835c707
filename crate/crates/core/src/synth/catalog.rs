//! Ready-made objects and suites for demos and tests.

use nalgebra::UnitQuaternion;

use crate::geometry::{RigidTransform, Vec3};
use crate::io::BoxSpec;

use super::benchmark::{Suite, SuiteLandmark, SuiteScene};
use super::scene::{ObjectPlacement, Part, Primitive, SceneSpec};

/// Default surface density for catalog objects, points per square meter.
pub const DENSITY: f64 = 40_000.0;

fn part(shape: Primitive, x: f64, y: f64, z: f64, density: f64) -> Part {
    Part {
        shape,
        pose: RigidTransform::from_translation(Vec3::new(x, y, z)),
        density,
    }
}

fn object(name: &str, pose: RigidTransform, parts: Vec<Part>) -> ObjectPlacement {
    ObjectPlacement {
        name: name.to_string(),
        pose,
        label: None,
        parts,
    }
}

pub fn pose(x: f64, y: f64, z: f64, yaw: f64) -> RigidTransform {
    RigidTransform::from_parts(Vec3::new(x, y, z), UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw))
}

/// Mug with a side handle standing on a square tray. Frame origin is the
/// tray center; the mug's top rim is at z = 0.10.
pub fn mug_on_tray(pose: RigidTransform, density: f64) -> ObjectPlacement {
    object(
        "mug",
        pose,
        vec![
            part(Primitive::PlanePatch { size: [0.2, 0.2] }, 0.0, 0.0, 0.0, density),
            part(
                Primitive::OpenCylinder {
                    radius: 0.04,
                    height: 0.1,
                },
                0.0,
                0.0,
                0.05,
                density,
            ),
            part(
                Primitive::BowlRim {
                    inner_radius: 0.0,
                    outer_radius: 0.04,
                },
                0.0,
                0.0,
                0.005,
                density,
            ),
            part(Primitive::Box { size: [0.03, 0.012, 0.06] }, 0.052, 0.0, 0.05, density),
        ],
    )
}

/// Capture box around [`mug_on_tray`] in its own frame, with empty space
/// above the rim.
pub fn mug_box(pose: &RigidTransform) -> BoxSpec {
    let c = pose.apply(&crate::geometry::Point3::new(0.01, 0.0, 0.06));
    BoxSpec {
        center: [c.x, c.y, c.z],
        size: [0.16, 0.14, 0.14],
        orientation: pose.quaternion_wxyz(),
    }
}

pub fn ball(pose: RigidTransform, radius: f64, density: f64) -> ObjectPlacement {
    object("ball", pose, vec![part(Primitive::Sphere { radius }, 0.0, 0.0, radius, density)])
}

/// Bottle standing on z = 0: body, a narrower neck, and a round cap whose
/// radius matches a 0.02 m ball.
pub fn bottle(pose: RigidTransform, density: f64) -> ObjectPlacement {
    object(
        "bottle",
        pose,
        vec![
            part(
                Primitive::OpenCylinder {
                    radius: 0.035,
                    height: 0.16,
                },
                0.0,
                0.0,
                0.08,
                density,
            ),
            part(
                Primitive::BowlRim {
                    inner_radius: 0.012,
                    outer_radius: 0.035,
                },
                0.0,
                0.0,
                0.16,
                density,
            ),
            part(
                Primitive::OpenCylinder {
                    radius: 0.012,
                    height: 0.02,
                },
                0.0,
                0.0,
                0.17,
                density,
            ),
            part(Primitive::Sphere { radius: 0.02 }, 0.0, 0.0, 0.2, density),
        ],
    )
}

pub fn table(center: [f64; 3], size: [f64; 2], density: f64) -> ObjectPlacement {
    object(
        "table",
        RigidTransform::from_translation(Vec3::from(center)),
        vec![part(Primitive::PlanePatch { size }, 0.0, 0.0, 0.0, density)],
    )
}

/// Clutter with no resemblance to the catalog landmarks, in the object frame.
pub fn distractors(density: f64) -> Vec<(&'static str, Vec<Part>)> {
    vec![
        ("carton", vec![part(Primitive::Box { size: [0.12, 0.07, 0.16] }, 0.0, 0.0, 0.08, density)]),
        ("globe", vec![part(Primitive::Sphere { radius: 0.06 }, 0.0, 0.0, 0.06, density)]),
        (
            "can",
            vec![part(
                Primitive::OpenCylinder {
                    radius: 0.03,
                    height: 0.2,
                },
                0.0,
                0.0,
                0.1,
                density,
            )],
        ),
        (
            "board",
            vec![Part {
                shape: Primitive::PlanePatch { size: [0.25, 0.18] },
                pose: RigidTransform::from_parts(
                    Vec3::new(0.0, 0.0, 0.09),
                    UnitQuaternion::from_axis_angle(&Vec3::x_axis(), 1.2),
                ),
                density,
            }],
        ),
    ]
}

pub fn distractor(index: usize, pose: RigidTransform, density: f64) -> ObjectPlacement {
    let all = distractors(density);
    let (name, parts) = all[index % all.len()].clone();
    object(name, pose, parts)
}

fn capture_scene(name: &str, objects: Vec<ObjectPlacement>) -> SceneSpec {
    SceneSpec {
        name: name.to_string(),
        objects,
        noise_sigma: 0.0005,
        viewpoint: [0.0, 0.0, 1.4],
        cull: true,
    }
}

/// A small benchmark: a ball, a bottle and a mug, each searched in a scene
/// of its own. The ball is easily mistaken for the bottle cap.
pub fn demo_suite() -> Suite {
    let d = DENSITY;
    let ball_pose = pose(0.65, 0.05, 0.7, 0.0);
    let bottle_pose = pose(0.6, -0.1, 0.7, 0.0);
    let mug_pose = pose(0.7, 0.0, 0.7, 0.3);

    let landmarks = vec![
        SuiteLandmark {
            name: "ball".into(),
            capture: capture_scene(
                "ball_capture",
                vec![
                    table([0.7, 0.0, 0.7], [0.6, 0.6], d),
                    ball(pose(0.7, 0.0, 0.9, 0.0), 0.02, d).labeled("ball", 0),
                ],
            ),
            seed: 1,
            // upper part of a ball held above the table
            bbox: BoxSpec {
                center: [0.7, 0.0, 0.93],
                size: [0.08, 0.08, 0.05],
                orientation: [1.0, 0.0, 0.0, 0.0],
            },
        },
        SuiteLandmark {
            name: "bottle".into(),
            capture: capture_scene(
                "bottle_capture",
                vec![
                    table([0.7, 0.0, 0.7], [0.6, 0.6], d),
                    bottle(pose(0.7, 0.0, 0.7, 0.0), d).labeled("bottle", 0),
                ],
            ),
            seed: 2,
            bbox: BoxSpec {
                center: [0.7, 0.0, 0.8275],
                size: [0.12, 0.12, 0.245],
                orientation: [1.0, 0.0, 0.0, 0.0],
            },
        },
        SuiteLandmark {
            name: "mug".into(),
            capture: capture_scene("mug_capture", vec![mug_on_tray(pose(0.7, 0.0, 0.7, 0.0), d).labeled("mug", 0)]),
            seed: 3,
            bbox: mug_box(&pose(0.7, 0.0, 0.7, 0.0)),
        },
    ];

    let mut ball_stand = ball(pose(ball_pose.translation().x, ball_pose.translation().y, 0.9, 0.0), 0.02, d);
    ball_stand.label = Some(super::scene::InstanceLabel {
        landmark: "ball".into(),
        instance_id: 0,
    });
    let scenes = vec![
        SuiteScene {
            spec: capture_scene("ball_scene", vec![table([0.7, 0.0, 0.7], [0.6, 0.6], d), ball_stand]),
            seed: 11,
            context: vec!["ball".into()],
        },
        SuiteScene {
            spec: capture_scene(
                "bottle_scene",
                vec![
                    table([0.7, 0.0, 0.7], [0.6, 0.6], d),
                    bottle(bottle_pose, d).labeled("bottle", 0),
                ],
            ),
            seed: 12,
            context: vec!["bottle".into()],
        },
        SuiteScene {
            spec: capture_scene(
                "mug_scene",
                vec![
                    table([0.75, 0.0, 0.68], [0.6, 0.6], d),
                    mug_on_tray(mug_pose, d).labeled("mug", 0),
                ],
            ),
            seed: 13,
            context: vec!["mug".into()],
        },
    ];
    Suite {
        match_radius: 0.03,
        landmarks,
        scenes,
    }
}
