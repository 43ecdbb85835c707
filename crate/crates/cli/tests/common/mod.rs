#![allow(dead_code)]

use std::path::{Path, PathBuf};

use landmark_core::geometry::{distance, Point3};
use landmark_core::io::{self, CloudEncoding};
use landmark_core::synth::catalog::{self, pose};
use landmark_core::synth::{generate_scene, ObjectPlacement, SceneSpec};
use landmark_core::{CaptureMetadata, Landmark, PointCloud, RigidTransform, SearchParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Surface density used for fixture scenes, points per square meter.
pub const DENSITY: f64 = 20_000.0;
pub const NOISE: f64 = 0.0005;

/// Where the mug sits while it is captured.
pub fn capture_pose() -> RigidTransform {
    pose(0.7, 0.0, 0.7, 0.0)
}

/// The mug without its tray.
pub fn bare_mug(at: RigidTransform, density: f64) -> ObjectPlacement {
    let mut mug = catalog::mug_on_tray(at, density);
    mug.parts.remove(0);
    mug
}

fn spec(name: &str, objects: Vec<ObjectPlacement>) -> SceneSpec {
    SceneSpec {
        noise_sigma: NOISE,
        objects,
        ..SceneSpec::new(name)
    }
}

pub fn capture_scene() -> PointCloud {
    generate_scene(&spec("mug_capture", vec![bare_mug(capture_pose(), DENSITY)]), 1).unwrap().0
}

pub fn mug_landmark() -> Landmark {
    let bbox = catalog::mug_box(&capture_pose()).to_box().unwrap();
    let metadata = CaptureMetadata {
        scene_id: "mug_capture".into(),
        created_at: "2024-01-01T00:00:00Z".into(),
    };
    Landmark::capture("mug", &capture_scene(), bbox, metadata).unwrap()
}

/// Random positions inside the workspace, pulled in from its faces so whole
/// objects fit, at least `spacing` apart from each other and from `taken`.
fn scatter(rng: &mut ChaCha8Rng, count: usize, taken: &[Point3], spacing: f64) -> Vec<Point3> {
    let ws = SearchParams::default().workspace;
    let (lo, hi) = (ws.min(), ws.max());
    let mut placed: Vec<Point3> = taken.to_vec();
    let mut out = Vec::new();
    while out.len() < count {
        let p = Point3::new(
            rng.random_range(lo.x + 0.12..hi.x - 0.12),
            rng.random_range(lo.y + 0.12..hi.y - 0.12),
            rng.random_range(lo.z + 0.12..hi.z - 0.24),
        );
        if placed.iter().all(|q| distance(&p, q) >= spacing) {
            placed.push(p);
            out.push(p);
        }
    }
    out
}

fn clutter(rng: &mut ChaCha8Rng, at: &[Point3]) -> Vec<ObjectPlacement> {
    at.iter()
        .enumerate()
        .map(|(i, p)| {
            let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            catalog::distractor(i, pose(p.x, p.y, p.z, yaw), DENSITY)
        })
        .collect()
}

pub struct Planted {
    pub cloud: PointCloud,
    /// Capture frame to scene frame.
    pub truth: RigidTransform,
}

/// A scene holding one mug at a random pose (yaw within 10 degrees) among
/// four distractor objects.
pub fn planted_scene(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let at = scatter(&mut rng, 1, &[], 0.0)[0];
    let yaw = rng.random_range(-10f64..10.0).to_radians();
    let object_pose = pose(at.x, at.y, at.z, yaw);
    let others = scatter(&mut rng, 4, &[at], 0.35);
    let mut objects = clutter(&mut rng, &others);
    objects.push(bare_mug(object_pose, DENSITY));
    let cloud = generate_scene(&spec("planted", objects), seed).unwrap().0;
    Planted {
        cloud,
        truth: landmark_core::geometry::compose(&object_pose, &capture_pose().inverse()),
    }
}

/// Four distractor objects and no mug.
pub fn distractor_scene(seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(100));
    let at = scatter(&mut rng, 4, &[], 0.35);
    let objects = clutter(&mut rng, &at);
    generate_scene(&spec("distractors", objects), seed).unwrap().0
}

/// Writes `cloud` as binary PCD.
pub fn write_pcd(dir: &Path, name: &str, cloud: &PointCloud) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, io::write_point_cloud(cloud, CloudEncoding::PcdBinary)).unwrap();
    path
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}
