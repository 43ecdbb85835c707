//! Point-to-point ICP with nearest-neighbor correspondences and distance
//! gating.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compose, Point3, PointCloud, RigidTransform, Vec3};
use crate::spatial::SpatialIndex;

/// Stopping and gating controls for [`icp_align`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Correspondences farther apart than this are ignored, meters.
    pub correspondence_max_distance: f64,
    pub translation_epsilon: f64,
    /// Radians.
    pub rotation_epsilon: f64,
    pub mse_relative_epsilon: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            correspondence_max_distance: 0.05,
            translation_epsilon: 1e-4,
            rotation_epsilon: 1e-3,
            mse_relative_epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps the source cloud onto the scene.
    pub transform: RigidTransform,
    pub iterations_used: usize,
    /// Mean squared distance over gated correspondences at `transform`;
    /// infinite when no correspondence survives the gate.
    pub final_mse: f64,
    pub converged: bool,
    /// Truncated objective `mean(min(d², gate²))` over all source points,
    /// evaluated at the start of every iteration and once at the end. This
    /// is the quantity each gated ICP step cannot increase.
    pub objective_history: Vec<f64>,
}

/// Least-squares rigid motion taking `src[i]` onto `dst[i]` (Kabsch/Umeyama
/// without scale). Reflections are excluded by flipping the weakest singular
/// direction.
pub fn estimate_rigid_transform(src: &[Point3], dst: &[Point3]) -> Result<RigidTransform> {
    if src.len() != dst.len() || src.len() < 3 {
        return Err(Error::DegenerateCorrespondences);
    }
    let n = src.len() as f64;
    let src_mean = src.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / n;
    let dst_mean = dst.iter().fold(Vec3::zeros(), |a, p| a + p.coords) / n;

    let mut cross = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        cross += (s.coords - src_mean) * (d.coords - dst_mean).transpose();
    }

    let svd = cross.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateCorrespondences),
    };
    let sv = svd.singular_values;
    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    // rank < 2 means all correspondences lie on a line (or coincide)
    if !(sorted[0] > 0.0) || sorted[1] <= sorted[0] * 1e-12 {
        return Err(Error::DegenerateCorrespondences);
    }

    let v = v_t.transpose();
    let mut correction = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        let weakest = sv.imin();
        correction[(weakest, weakest)] = -1.0;
    }
    let rotation = v * correction * u.transpose();
    let translation = dst_mean - rotation * src_mean;
    Ok(RigidTransform::from_rotation_matrix(&rotation, translation))
}

struct Correspondences {
    src: Vec<Point3>,
    dst: Vec<Point3>,
    sum_sq: f64,
    truncated_sum_sq: f64,
}

/// `hints` carries each source point's previous neighbor between iterations.
fn correspond(
    source: &PointCloud,
    scene: &SpatialIndex,
    transform: &RigidTransform,
    gate: f64,
    hints: &mut [Option<usize>],
) -> Correspondences {
    let gate2 = gate * gate;
    let mut c = Correspondences {
        src: Vec::with_capacity(source.len()),
        dst: Vec::with_capacity(source.len()),
        sum_sq: 0.0,
        truncated_sum_sq: 0.0,
    };
    for (p, hint) in source.iter().zip(hints.iter_mut()) {
        let moved = transform.apply(p);
        let found = scene.nearest_within_hinted(&moved, gate, *hint);
        *hint = found.map(|n| n.id);
        match found {
            Some(n) => {
                let d2 = n.distance * n.distance;
                c.sum_sq += d2;
                c.truncated_sum_sq += d2.min(gate2);
                c.src.push(moved);
                c.dst.push(n.point);
            }
            None => c.truncated_sum_sq += gate2,
        }
    }
    c
}

/// Refines `init` so that `source` transformed by the result lies on the
/// indexed scene.
pub fn icp_align(
    source: &PointCloud,
    scene: &SpatialIndex,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult> {
    if source.is_empty() || scene.is_empty() {
        return Err(Error::EmptyRegistrationInput);
    }
    let n = source.len() as f64;
    let mut transform = *init;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut settled = false;
    let mut hints = vec![None; source.len()];

    loop {
        let corr = correspond(source, scene, &transform, params.correspondence_max_distance, &mut hints);
        let objective = corr.truncated_sum_sq / n;
        let mse = if corr.src.is_empty() {
            f64::INFINITY
        } else {
            corr.sum_sq / corr.src.len() as f64
        };
        let previous = history.last().copied();
        history.push(objective);

        let finish = |transform, converged, history| IcpResult {
            transform,
            iterations_used: iterations,
            final_mse: mse,
            converged,
            objective_history: history,
        };

        if corr.src.len() < 3 {
            return Ok(finish(transform, false, history));
        }
        if settled {
            return Ok(finish(transform, true, history));
        }
        if let Some(prev) = previous {
            if objective == 0.0 || (prev - objective).abs() <= params.mse_relative_epsilon * prev {
                converged = true;
            }
        }
        if converged || iterations >= params.max_iterations {
            return Ok(finish(transform, converged, history));
        }

        let step = match estimate_rigid_transform(&corr.src, &corr.dst) {
            Ok(step) => step,
            Err(_) => return Ok(finish(transform, false, history)),
        };
        transform = compose(&step, &transform);
        iterations += 1;
        settled = step.translation().norm() < params.translation_epsilon
            && step.rotation_angle() < params.rotation_epsilon;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tetra() -> Vec<Point3> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn identity_and_translation() {
        let src = tetra();
        let t = estimate_rigid_transform(&src, &src).unwrap();
        assert!(t.translation().norm() < 1e-9);
        assert!(t.rotation_angle() < 1e-9);

        let dst: Vec<Point3> = src.iter().map(|p| p + Vec3::new(0.0, 0.0, 0.1)).collect();
        let t = estimate_rigid_transform(&src, &dst).unwrap();
        assert!((t.translation() - Vec3::new(0.0, 0.0, 0.1)).norm() < 1e-12);
        assert!(t.rotation_angle() < 1e-9);
    }

    #[test]
    fn recovers_rotation_about_z() {
        let src = tetra();
        let truth = RigidTransform::from_axis_angle(&Vec3::z(), 30f64.to_radians());
        let dst: Vec<Point3> = src.iter().map(|p| truth.apply(p)).collect();
        let t = estimate_rigid_transform(&src, &dst).unwrap();
        assert!(t.rotation().angle_to(&truth.rotation()) < 1e-6);
        assert!(t.translation().norm() < 1e-6);
    }

    #[test]
    fn coplanar_points_do_not_reflect() {
        let src = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        let truth = RigidTransform::from_parts(
            Vec3::new(0.2, 0.1, -0.3),
            UnitQuaternion::from_euler_angles(0.3, 1.0, -0.2),
        );
        let dst: Vec<Point3> = src.iter().map(|p| truth.apply(p)).collect();
        let t = estimate_rigid_transform(&src, &dst).unwrap();
        assert!(t.rotation_matrix().determinant() > 0.0);
        assert!(t.rotation().angle_to(&truth.rotation()) < 1e-9);
    }

    #[test]
    fn degenerate_sets_rejected() {
        let two = &tetra()[..2];
        assert_eq!(
            estimate_rigid_transform(two, two).unwrap_err().to_string(),
            "degenerate correspondence set"
        );
        let line: Vec<Point3> = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(estimate_rigid_transform(&line, &line).is_err());
        let same = vec![Point3::new(1.0, 1.0, 1.0); 4];
        assert!(estimate_rigid_transform(&same, &same).is_err());
    }

    fn blob(seed: u64, n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // an asymmetric box surface
        let size = [0.12, 0.07, 0.04];
        let pts = (0..n)
            .map(|_| {
                let face = rng.random_range(0..6);
                let axis = face / 2;
                let mut p = [0.0; 3];
                for (a, c) in p.iter_mut().enumerate() {
                    *c = rng.random_range(-0.5..0.5) * size[a];
                }
                p[axis] = if face % 2 == 0 { -0.5 } else { 0.5 } * size[axis];
                Point3::from(p)
            })
            .collect();
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn aligned_copy_stays_put() {
        let src = blob(1, 400);
        let idx = SpatialIndex::build(&src);
        let r = icp_align(&src, &idx, &RigidTransform::identity(), &IcpParams::default()).unwrap();
        assert!(r.final_mse < 1e-12);
        assert!(r.transform.translation().norm() < 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn recovers_small_translation() {
        let src = blob(2, 500);
        let offset = Vec3::new(0.01, 0.005, 0.0);
        let scene = src.transformed(&RigidTransform::from_translation(offset));
        let idx = SpatialIndex::build(&scene);
        let r = icp_align(&src, &idx, &RigidTransform::identity(), &IcpParams::default()).unwrap();
        assert!((r.transform.translation() - offset).norm() < 1e-4, "{:?}", r.transform);
        assert!(r.iterations_used <= IcpParams::default().max_iterations);
    }

    #[test]
    fn starved_gate_returns_init() {
        let src = blob(3, 100);
        let idx = SpatialIndex::build(&src);
        let init = RigidTransform::from_translation(Vec3::new(5.0, 0.0, 0.0));
        let r = icp_align(&src, &idx, &init, &IcpParams::default()).unwrap();
        assert!(!r.converged);
        assert_eq!(r.transform, init);
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn empty_inputs_rejected() {
        let src = blob(4, 10);
        let idx = SpatialIndex::build(&src);
        let empty = SpatialIndex::build(&PointCloud::empty());
        let p = IcpParams::default();
        assert!(icp_align(&PointCloud::empty(), &idx, &RigidTransform::identity(), &p).is_err());
        assert!(icp_align(&src, &empty, &RigidTransform::identity(), &p).is_err());
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..20 {
            let src = blob(100 + seed, 300);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = RigidTransform::from_parts(
                Vec3::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)),
                UnitQuaternion::from_euler_angles(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.15..0.15)),
            );
            let idx = SpatialIndex::build(&src.transformed(&truth));
            let r = icp_align(&src, &idx, &RigidTransform::identity(), &IcpParams::default()).unwrap();
            for w in r.objective_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", r.objective_history);
            }
            let rot = r.transform.rotation_matrix();
            assert!((rot.transpose() * rot - Matrix3::identity()).abs().max() < 1e-9);
            assert!(rot.determinant() > 0.0);
        }
    }
}
