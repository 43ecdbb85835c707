//! Custom point-cloud landmarks: capture a patch of a scene together with a
//! box whose empty margins must stay empty, then find that patch again in new
//! scenes.
//!
//! The pipeline, leaf to root:
//!
//! - [`geometry`]: points, rigid transforms, oriented boxes.
//! - [`spatial`]: k-d tree queries, voxel-grid downsampling, seeded sampling.
//! - [`registration`]: point-to-point ICP.
//! - [`search`]: candidate scoring, non-max suppression, [`search::find_landmark`].
//! - [`io`]: PCD/PLY clouds, landmark and parameter files.
//! - [`synth`]: synthetic scenes with ground truth and precision/recall evaluation.

pub mod error;
pub mod geometry;
pub mod io;
pub mod registration;
pub mod search;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{OrientedBox, Point3, PointCloud, RigidTransform, Vec3};
pub use registration::{IcpParams, IcpResult};
pub use search::{find_landmark, CaptureMetadata, Candidate, Landmark, Match, SearchParams};
pub use spatial::{SeededRng, SpatialIndex, WorkspaceRegion};
