//! Persistence: point clouds (PCD v0.7, ASCII PLY), landmark files and
//! search-parameter files.
//!
//! Writers are canonical (fixed header order, LF line endings) so output
//! files can be compared byte-for-byte.

mod landmark_file;
mod params_file;
pub mod pcd;
pub mod ply;

use std::path::Path;

use crate::error::Result;
use crate::geometry::PointCloud;

pub use landmark_file::{load_landmark, save_landmark, BoxSpec, LANDMARK_SCHEMA_VERSION};
pub use params_file::{load_params, params_from_value, save_params};

/// Cloud container format for reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Pcd,
    Ply,
}

impl CloudFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pcd" => Some(CloudFormat::Pcd),
            "ply" => Some(CloudFormat::Ply),
            _ => None,
        }
    }
}

/// Output encoding for [`write_point_cloud`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudEncoding {
    PcdAscii,
    PcdBinary,
    PlyAscii,
}

/// A parsed cloud and how many non-finite (sensor no-return) points were
/// dropped while reading it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCloud {
    pub cloud: PointCloud,
    pub dropped_non_finite: usize,
}

pub fn read_point_cloud(bytes: &[u8], format: CloudFormat) -> Result<LoadedCloud> {
    match format {
        CloudFormat::Pcd => pcd::read_pcd(bytes),
        CloudFormat::Ply => ply::read_ply(bytes),
    }
}

pub fn write_point_cloud(cloud: &PointCloud, encoding: CloudEncoding) -> Vec<u8> {
    match encoding {
        CloudEncoding::PcdAscii => pcd::write_pcd(cloud, false),
        CloudEncoding::PcdBinary => pcd::write_pcd(cloud, true),
        CloudEncoding::PlyAscii => ply::write_ply(cloud),
    }
}
