use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::registration::IcpParams;
use crate::search::SearchParams;
use crate::spatial::WorkspaceRegion;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct IcpDoc {
    max_iterations: Option<usize>,
    correspondence_max_distance: Option<f64>,
    translation_epsilon: Option<f64>,
    rotation_epsilon: Option<f64>,
    mse_relative_epsilon: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    workspace: Option<RegionDoc>,
    voxel_leaf: Option<f64>,
    sample_fraction: Option<f64>,
    sample_max: Option<usize>,
    nms_radius: Option<f64>,
    error_threshold: Option<f64>,
    icp: Option<IcpDoc>,
    seed: Option<u64>,
}

fn type_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let key = if path == "." { "document".to_string() } else { path };
    Error::param(key, e.into_inner().to_string())
}

/// Parses a parameter document; absent keys take the defaults of
/// [`SearchParams::default`].
pub fn load_params(bytes: &[u8]) -> Result<SearchParams> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: ParamsDoc = serde_path_to_error::deserialize(de).map_err(type_error)?;
    build(doc)
}

/// Same as [`load_params`] for an already-parsed JSON value.
pub fn params_from_value(value: &serde_json::Value) -> Result<SearchParams> {
    let doc: ParamsDoc = serde_path_to_error::deserialize(value).map_err(type_error)?;
    build(doc)
}

fn build(doc: ParamsDoc) -> Result<SearchParams> {
    let defaults = SearchParams::default();
    let icp_defaults = IcpParams::default();
    let icp = doc.icp.unwrap_or_default();
    let workspace = match doc.workspace {
        Some(r) => WorkspaceRegion::new(Point3::from(r.min), Point3::from(r.max))
            .map_err(|_| Error::param("workspace", "min must not exceed max on any axis"))?,
        None => defaults.workspace,
    };
    let params = SearchParams {
        workspace,
        voxel_leaf: doc.voxel_leaf.unwrap_or(defaults.voxel_leaf),
        sample_fraction: doc.sample_fraction.unwrap_or(defaults.sample_fraction),
        sample_max: doc.sample_max.unwrap_or(defaults.sample_max),
        nms_radius: doc.nms_radius.unwrap_or(defaults.nms_radius),
        error_threshold: doc.error_threshold.unwrap_or(defaults.error_threshold),
        icp: IcpParams {
            max_iterations: icp.max_iterations.unwrap_or(icp_defaults.max_iterations),
            correspondence_max_distance: icp
                .correspondence_max_distance
                .unwrap_or(icp_defaults.correspondence_max_distance),
            translation_epsilon: icp.translation_epsilon.unwrap_or(icp_defaults.translation_epsilon),
            rotation_epsilon: icp.rotation_epsilon.unwrap_or(icp_defaults.rotation_epsilon),
            mse_relative_epsilon: icp.mse_relative_epsilon.unwrap_or(icp_defaults.mse_relative_epsilon),
        },
        seed: doc.seed.unwrap_or(defaults.seed),
    };
    params.validate()?;
    Ok(params)
}

/// Writes every key explicitly.
pub fn save_params(params: &SearchParams) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(params).expect("params serialize");
    out.push(b'\n');
    out
}
