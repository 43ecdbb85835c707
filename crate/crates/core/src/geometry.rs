//! Points, rigid transforms and oriented boxes.
//!
//! Every cloud and box lives in a single z-up world frame (the robot base
//! frame). Rotations are stored as unit quaternions and converted to
//! matrices on demand.

use nalgebra::{Isometry3, Matrix3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = Vector3<f64>;

/// Squared Euclidean distance, accumulated as `dx² + dy² + dz²` in that order.
///
/// All nearest-neighbor code goes through this so that distances computed by
/// different routes agree bit-for-bit.
#[inline]
pub fn distance_squared(a: &Point3, b: &Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    distance_squared(a, b).sqrt()
}

fn is_finite(p: &Point3) -> bool {
    p.x.is_finite() && p.y.is_finite() && p.z.is_finite()
}

/// An unordered set of finite 3D points, in meters. Storage order carries no
/// meaning but is preserved by every operation so results are reproducible.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(index) = points.iter().position(|p| !is_finite(p)) {
            return Err(Error::NonFinitePoint { index });
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    /// Caller guarantees every point is finite.
    pub(crate) fn from_finite(points: Vec<Point3>) -> Self {
        debug_assert!(points.iter().all(is_finite));
        Self { points }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    pub fn transformed(&self, transform: &RigidTransform) -> PointCloud {
        PointCloud::from_finite(self.points.iter().map(|p| transform.apply(p)).collect())
    }

    /// Concatenates two clouds, `self` first.
    pub fn merged(&self, other: &PointCloud) -> PointCloud {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        PointCloud::from_finite(points)
    }

    pub fn centroid(&self) -> Result<Point3> {
        centroid(self)
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point3;
    type IntoIter = std::slice::Iter<'a, Point3>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// A proper rigid motion: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    iso: Isometry3<f64>,
}

const ORTHONORMAL_DRIFT: f64 = 1e-9;

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            iso: Isometry3::identity(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            iso: Isometry3::from_parts(Translation3::from(t), UnitQuaternion::identity()),
        }
    }

    pub fn from_parts(translation: Vec3, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            iso: Isometry3::from_parts(Translation3::from(translation), renormalized(rotation)),
        }
    }

    /// Rotation about a unit axis by `angle` radians, no translation.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let axis = nalgebra::Unit::new_normalize(*axis);
        Self::from_parts(Vec3::zeros(), UnitQuaternion::from_axis_angle(&axis, angle))
    }

    /// Builds a transform from a rotation matrix that is orthonormal up to
    /// rounding (as produced by an SVD).
    pub fn from_rotation_matrix(rotation: &Matrix3<f64>, translation: Vec3) -> Self {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(*rotation);
        Self::from_parts(translation, UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn translation(&self) -> Vec3 {
        self.iso.translation.vector
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.iso.rotation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.iso.rotation.to_rotation_matrix().into_inner()
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        self.iso.rotation.angle()
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        self.iso.transform_point(p)
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.iso.rotation.transform_vector(v)
    }

    pub fn inverse_apply(&self, p: &Point3) -> Point3 {
        self.iso.inverse_transform_point(p)
    }

    pub fn inverse(&self) -> Self {
        Self {
            iso: self.iso.inverse(),
        }
    }

    pub fn as_isometry(&self) -> &Isometry3<f64> {
        &self.iso
    }

    /// Quaternion as `[w, x, y, z]`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.iso.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

fn renormalized(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let norm = q.quaternion().norm();
    if (norm - 1.0).abs() > ORTHONORMAL_DRIFT {
        UnitQuaternion::new_normalize(*q.quaternion())
    } else {
        q
    }
}

/// Builds a unit quaternion from `[w, x, y, z]` components whose norm is
/// within `tolerance` of one. Components already normalized to rounding are
/// kept bit-for-bit so serialized transforms round-trip exactly.
pub fn unit_quaternion_from_wxyz(wxyz: [f64; 4], tolerance: f64) -> Option<UnitQuaternion<f64>> {
    if wxyz.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    let norm = q.norm();
    if (norm - 1.0).abs() > tolerance {
        return None;
    }
    if (norm - 1.0).abs() > ORTHONORMAL_DRIFT {
        Some(UnitQuaternion::new_normalize(q))
    } else {
        Some(UnitQuaternion::new_unchecked(q))
    }
}

pub fn transform_point(p: &Point3, transform: &RigidTransform) -> Point3 {
    transform.apply(p)
}

/// Applies `second` first, then `first`.
pub fn compose(first: &RigidTransform, second: &RigidTransform) -> RigidTransform {
    let iso = first.iso * second.iso;
    RigidTransform {
        iso: Isometry3::from_parts(iso.translation, renormalized(iso.rotation)),
    }
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    translation: [f64; 3],
    rotation: [f64; 4],
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let t = self.translation();
        TransformRepr {
            translation: [t.x, t.y, t.z],
            rotation: self.quaternion_wxyz(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = TransformRepr::deserialize(deserializer)?;
        if repr.translation.iter().any(|c| !c.is_finite()) {
            return Err(serde::de::Error::custom("translation must be finite"));
        }
        let rotation = unit_quaternion_from_wxyz(repr.rotation, 1e-6)
            .ok_or_else(|| serde::de::Error::custom("rotation must be a unit quaternion [w,x,y,z]"))?;
        Ok(RigidTransform {
            iso: Isometry3::from_parts(Translation3::from(Vec3::from(repr.translation)), rotation),
        })
    }
}

/// A box with a 6-DOF pose (box frame to world) and positive extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pose: RigidTransform,
    size: Vec3,
}

impl OrientedBox {
    pub fn new(pose: RigidTransform, size: Vec3) -> Result<Self> {
        if !size.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::NonPositiveExtent);
        }
        Ok(Self { pose, size })
    }

    /// Base-aligned box centered at `center`.
    pub fn axis_aligned(center: Point3, size: Vec3) -> Result<Self> {
        Self::new(RigidTransform::from_translation(center.coords), size)
    }

    pub fn pose(&self) -> &RigidTransform {
        &self.pose
    }

    pub fn size(&self) -> Vec3 {
        self.size
    }

    pub fn center(&self) -> Point3 {
        Point3::from(self.pose.translation())
    }

    /// Radius of the sphere through the box corners.
    pub fn circumradius(&self) -> f64 {
        (self.size * 0.5).norm()
    }

    /// Closed containment test in the box frame.
    pub fn contains(&self, p: &Point3) -> bool {
        let local = self.pose.inverse_apply(p);
        let half = self.size * 0.5;
        local.x.abs() <= half.x && local.y.abs() <= half.y && local.z.abs() <= half.z
    }

    /// The same box after moving its pose by `transform`.
    pub fn transformed(&self, transform: &RigidTransform) -> OrientedBox {
        OrientedBox {
            pose: compose(transform, &self.pose),
            size: self.size,
        }
    }
}

pub fn box_contains(bbox: &OrientedBox, p: &Point3) -> bool {
    bbox.contains(p)
}

pub fn crop_to_box(cloud: &PointCloud, bbox: &OrientedBox) -> PointCloud {
    PointCloud::from_finite(cloud.iter().filter(|p| bbox.contains(p)).copied().collect())
}

pub fn centroid(cloud: &PointCloud) -> Result<Point3> {
    if cloud.is_empty() {
        return Err(Error::EmptyCentroid);
    }
    let sum = cloud.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
    Ok(Point3::from(sum / cloud.len() as f64))
}
