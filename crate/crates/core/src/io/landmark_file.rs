use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_quaternion_from_wxyz, OrientedBox, Point3, PointCloud, RigidTransform, Vec3};
use crate::search::{CaptureMetadata, Landmark};

pub const LANDMARK_SCHEMA_VERSION: u32 = 1;

const QUATERNION_TOLERANCE: f64 = 1e-6;

/// Box as exchanged in files and over HTTP. `orientation` is `[w, x, y, z]`
/// and defaults to identity (a base-aligned box).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub center: [f64; 3],
    pub size: [f64; 3],
    #[serde(default = "identity_wxyz")]
    pub orientation: [f64; 4],
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl BoxSpec {
    pub fn to_box(&self) -> Result<OrientedBox> {
        self.to_box_at("box")
    }

    fn to_box_at(&self, field: &str) -> Result<OrientedBox> {
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation(format!("{field}.center"), "coordinates must be finite"));
        }
        if !self.size.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::validation(format!("{field}.size"), "box extent must be positive"));
        }
        let rotation = unit_quaternion_from_wxyz(self.orientation, QUATERNION_TOLERANCE).ok_or_else(|| {
            Error::validation(format!("{field}.orientation"), "must be a unit quaternion [w, x, y, z]")
        })?;
        let pose = RigidTransform::from_parts(Vec3::from(self.center), rotation);
        OrientedBox::new(pose, Vec3::from(self.size))
    }
}

impl From<&OrientedBox> for BoxSpec {
    fn from(b: &OrientedBox) -> Self {
        let c = b.center();
        let s = b.size();
        BoxSpec {
            center: [c.x, c.y, c.z],
            size: [s.x, s.y, s.z],
            orientation: b.pose().quaternion_wxyz(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrictBox {
    center: [f64; 3],
    size: [f64; 3],
    orientation: [f64; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandmarkDoc {
    schema_version: u32,
    name: String,
    #[serde(rename = "box")]
    bbox: StrictBox,
    points: Vec<[f64; 3]>,
    capture_metadata: CaptureMetadata,
}

/// Serializes a landmark as a self-contained JSON document.
pub fn save_landmark(landmark: &Landmark) -> Vec<u8> {
    let spec = BoxSpec::from(landmark.bbox());
    let doc = LandmarkDoc {
        schema_version: LANDMARK_SCHEMA_VERSION,
        name: landmark.name().to_string(),
        bbox: StrictBox {
            center: spec.center,
            size: spec.size,
            orientation: spec.orientation,
        },
        points: landmark.cloud().iter().map(|p| [p.x, p.y, p.z]).collect(),
        capture_metadata: landmark.metadata().clone(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("landmark document serializes");
    out.push(b'\n');
    out
}

pub fn load_landmark(bytes: &[u8]) -> Result<Landmark> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: LandmarkDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "document".to_string() } else { path };
        Error::validation(field, e.into_inner().to_string())
    })?;

    if doc.schema_version != LANDMARK_SCHEMA_VERSION {
        return Err(Error::validation(
            "schema_version",
            format!("unsupported version {} (expected {LANDMARK_SCHEMA_VERSION})", doc.schema_version),
        ));
    }
    if doc.name.trim().is_empty() {
        return Err(Error::validation("name", "must not be empty"));
    }
    if chrono::DateTime::parse_from_rfc3339(&doc.capture_metadata.created_at).is_err() {
        return Err(Error::validation("capture_metadata.created_at", "must be an ISO-8601 timestamp"));
    }
    let bbox = BoxSpec {
        center: doc.bbox.center,
        size: doc.bbox.size,
        orientation: doc.bbox.orientation,
    }
    .to_box()?;
    if doc.points.is_empty() {
        return Err(Error::validation("points", "landmark cloud must not be empty"));
    }
    let mut points = Vec::with_capacity(doc.points.len());
    for (i, p) in doc.points.iter().enumerate() {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation(format!("points[{i}]"), "coordinates must be finite"));
        }
        let p = Point3::from(*p);
        if !bbox.contains(&p) {
            return Err(Error::validation(format!("points[{i}]"), "point lies outside the box"));
        }
        points.push(p);
    }
    Landmark::new(doc.name, PointCloud::new(points)?, bbox, doc.capture_metadata)
}
