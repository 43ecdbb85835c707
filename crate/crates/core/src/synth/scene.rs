//! Synthetic range scenes built from simple surface primitives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{compose, Point3, PointCloud, RigidTransform, Vec3};

use super::eval::{SceneTruth, TruthInstance};

/// Surface primitive, centered on its local origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    /// Rectangle in the local xy plane.
    PlanePatch { size: [f64; 2] },
    /// Closed box surface.
    Box { size: [f64; 3] },
    Sphere { radius: f64 },
    /// Lateral surface only, axis along local z, spanning `±height/2`.
    OpenCylinder { radius: f64, height: f64 },
    /// Flat ring in the local xy plane.
    BowlRim { inner_radius: f64, outer_radius: f64 },
}

impl Primitive {
    pub fn area(&self) -> f64 {
        match *self {
            Primitive::PlanePatch { size } => size[0] * size[1],
            Primitive::Box { size } => 2.0 * (size[0] * size[1] + size[1] * size[2] + size[0] * size[2]),
            Primitive::Sphere { radius } => 4.0 * PI * radius * radius,
            Primitive::OpenCylinder { radius, height } => 2.0 * PI * radius * height,
            Primitive::BowlRim {
                inner_radius,
                outer_radius,
            } => PI * (outer_radius * outer_radius - inner_radius * inner_radius),
        }
    }

    /// Open surfaces are visible from both sides.
    fn two_sided(&self) -> bool {
        !matches!(self, Primitive::Box { .. } | Primitive::Sphere { .. })
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            Primitive::PlanePatch { size } => size.iter().all(|s| ok(*s)),
            Primitive::Box { size } => size.iter().all(|s| ok(*s)),
            Primitive::Sphere { radius } => ok(radius),
            Primitive::OpenCylinder { radius, height } => ok(radius) && ok(height),
            Primitive::BowlRim {
                inner_radius,
                outer_radius,
            } => inner_radius >= 0.0 && ok(outer_radius) && inner_radius < outer_radius,
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidScene(format!("invalid dimensions for {self:?}")))
        }
    }

    /// Uniform random surface point with its outward normal, local frame.
    fn sample(&self, rng: &mut ChaCha8Rng) -> (Point3, Vec3) {
        match *self {
            Primitive::PlanePatch { size } => (
                Point3::new((rng.random::<f64>() - 0.5) * size[0], (rng.random::<f64>() - 0.5) * size[1], 0.0),
                Vec3::z(),
            ),
            Primitive::Box { size } => {
                let faces = [size[1] * size[2], size[0] * size[2], size[0] * size[1]];
                let pick = rng.random::<f64>() * (faces[0] + faces[1] + faces[2]);
                let axis = if pick < faces[0] {
                    0
                } else if pick < faces[0] + faces[1] {
                    1
                } else {
                    2
                };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mut p = Vec3::zeros();
                for a in 0..3 {
                    p[a] = (rng.random::<f64>() - 0.5) * size[a];
                }
                p[axis] = 0.5 * sign * size[axis];
                let mut n = Vec3::zeros();
                n[axis] = sign;
                (Point3::from(p), n)
            }
            Primitive::Sphere { radius } => {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let phi = rng.random_range(0.0..2.0 * PI);
                let r = (1.0 - z * z).max(0.0).sqrt();
                let n = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                (Point3::from(n * radius), n)
            }
            Primitive::OpenCylinder { radius, height } => {
                let phi = rng.random_range(0.0..2.0 * PI);
                let z = (rng.random::<f64>() - 0.5) * height;
                let n = Vec3::new(phi.cos(), phi.sin(), 0.0);
                (Point3::new(radius * n.x, radius * n.y, z), n)
            }
            Primitive::BowlRim {
                inner_radius,
                outer_radius,
            } => {
                let r2 = rng.random_range(inner_radius * inner_radius..=outer_radius * outer_radius);
                let r = r2.sqrt();
                let phi = rng.random_range(0.0..2.0 * PI);
                (Point3::new(r * phi.cos(), r * phi.sin(), 0.0), Vec3::z())
            }
        }
    }

    /// Unsigned distance from a local-frame point to the surface.
    pub fn surface_distance(&self, p: &Point3) -> f64 {
        match *self {
            Primitive::PlanePatch { size } => {
                let dx = (p.x.abs() - size[0] / 2.0).max(0.0);
                let dy = (p.y.abs() - size[1] / 2.0).max(0.0);
                (dx * dx + dy * dy + p.z * p.z).sqrt()
            }
            Primitive::Box { size } => {
                let q = Vec3::new(p.x.abs() - size[0] / 2.0, p.y.abs() - size[1] / 2.0, p.z.abs() - size[2] / 2.0);
                let outside = q.map(|c| c.max(0.0)).norm();
                let inside = q.max().min(0.0);
                outside + inside.abs()
            }
            Primitive::Sphere { radius } => (p.coords.norm() - radius).abs(),
            Primitive::OpenCylinder { radius, height } => {
                let radial = (p.x * p.x + p.y * p.y).sqrt() - radius;
                let axial = (p.z.abs() - height / 2.0).max(0.0);
                (radial * radial + axial * axial).sqrt()
            }
            Primitive::BowlRim {
                inner_radius,
                outer_radius,
            } => {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                let dr = if r < inner_radius {
                    inner_radius - r
                } else {
                    (r - outer_radius).max(0.0)
                };
                (dr * dr + p.z * p.z).sqrt()
            }
        }
    }
}

fn identity() -> RigidTransform {
    RigidTransform::identity()
}

/// One primitive of an object, posed relative to the object frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Part {
    pub shape: Primitive,
    #[serde(default = "identity")]
    pub pose: RigidTransform,
    /// Surface sampling density, points per square meter.
    pub density: f64,
}

/// Marks an object as an instance of a landmark for ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceLabel {
    pub landmark: String,
    #[serde(default)]
    pub instance_id: u32,
}

/// A rigid group of primitives placed in the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectPlacement {
    #[serde(default)]
    pub name: String,
    #[serde(default = "identity")]
    pub pose: RigidTransform,
    #[serde(default)]
    pub label: Option<InstanceLabel>,
    pub parts: Vec<Part>,
}

impl ObjectPlacement {
    pub fn single(shape: Primitive, pose: RigidTransform, density: f64) -> Self {
        Self {
            name: String::new(),
            pose,
            label: None,
            parts: vec![Part {
                shape,
                pose: RigidTransform::identity(),
                density,
            }],
        }
    }

    pub fn labeled(mut self, landmark: &str, instance_id: u32) -> Self {
        self.label = Some(InstanceLabel {
            landmark: landmark.to_string(),
            instance_id,
        });
        self
    }
}

fn default_viewpoint() -> [f64; 3] {
    [0.0, 0.0, 1.4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub name: String,
    pub objects: Vec<ObjectPlacement>,
    /// Gaussian range noise along the view ray, meters.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Sensor position; the origin of view rays.
    #[serde(default = "default_viewpoint")]
    pub viewpoint: [f64; 3],
    /// Drop closed-surface points facing away from the viewpoint.
    #[serde(default)]
    pub cull: bool,
}

impl SceneSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            objects: Vec::new(),
            noise_sigma: 0.0,
            viewpoint: default_viewpoint(),
            cull: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidScene(format!("{}: noise_sigma must be >= 0", self.name)));
        }
        if self.viewpoint.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidScene(format!("{}: viewpoint must be finite", self.name)));
        }
        for object in &self.objects {
            for part in &object.parts {
                part.shape.validate()?;
                if !(part.density > 0.0 && part.density.is_finite()) {
                    return Err(Error::InvalidScene(format!("{}: density must be positive", self.name)));
                }
            }
        }
        Ok(())
    }
}

/// Samples every primitive surface, applies optional culling and noise, and
/// returns the cloud with the poses of all labeled objects.
///
/// Each part contributes `round(density · area)` samples before culling.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<(PointCloud, SceneTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidScene(e.to_string()))?;
    let viewpoint = Point3::from(spec.viewpoint);
    let mut points = Vec::new();
    let mut instances = Vec::new();

    for object in &spec.objects {
        if let Some(label) = &object.label {
            instances.push(TruthInstance {
                landmark: label.landmark.clone(),
                instance_id: label.instance_id,
                pose: object.pose,
            });
        }
        for part in &object.parts {
            let to_world = compose(&object.pose, &part.pose);
            let count = (part.density * part.shape.area()).round() as usize;
            for _ in 0..count {
                let (local, normal) = part.shape.sample(&mut rng);
                let p = to_world.apply(&local);
                let n = to_world.apply_vector(&normal);
                if spec.cull && !part.shape.two_sided() && n.dot(&(viewpoint - p)) <= 0.0 {
                    continue;
                }
                let p = if spec.noise_sigma > 0.0 {
                    let ray = (p - viewpoint).try_normalize(1e-12).unwrap_or_else(Vec3::z);
                    p + ray * noise.sample(&mut rng)
                } else {
                    p
                };
                points.push(p);
            }
        }
    }
    Ok((
        PointCloud::new(points)?,
        SceneTruth {
            scene: spec.name.clone(),
            context: Vec::new(),
            instances,
        },
    ))
}
