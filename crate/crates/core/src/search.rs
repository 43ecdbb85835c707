//! Landmark localization: seeded ICP candidates scored by a bidirectional
//! mean-distance metric with empty-space margins, then non-max suppression
//! and thresholding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, compose, distance, OrientedBox, Point3, PointCloud, RigidTransform};
use crate::registration::{icp_align, IcpParams};
use crate::spatial::{crop_to_workspace, sample_points, voxel_downsample, SeededRng, SpatialIndex, WorkspaceRegion};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureMetadata {
    pub scene_id: String,
    /// ISO-8601 timestamp.
    pub created_at: String,
}

/// A captured patch of a scene plus the box it was cropped with.
///
/// Points are kept in the capture scene's world frame, so a match transform
/// maps capture coordinates directly into the new scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    name: String,
    cloud: PointCloud,
    bbox: OrientedBox,
    metadata: CaptureMetadata,
}

impl Landmark {
    pub fn new(name: impl Into<String>, cloud: PointCloud, bbox: OrientedBox, metadata: CaptureMetadata) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::InvalidLandmark("name must not be empty".into()));
        }
        if cloud.is_empty() {
            return Err(Error::InvalidLandmark("cloud must not be empty".into()));
        }
        if let Some(i) = cloud.iter().position(|p| !bbox.contains(p)) {
            return Err(Error::InvalidLandmark(format!("point {i} lies outside the box")));
        }
        Ok(Self {
            name,
            cloud,
            bbox,
            metadata,
        })
    }

    /// Crops `scene` to `bbox`.
    pub fn capture(name: impl Into<String>, scene: &PointCloud, bbox: OrientedBox, metadata: CaptureMetadata) -> Result<Self> {
        let cloud = crate::geometry::crop_to_box(scene, &bbox);
        if cloud.is_empty() {
            return Err(Error::EmptyCrop);
        }
        Self::new(name, cloud, bbox, metadata)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn bbox(&self) -> &OrientedBox {
        &self.bbox
    }

    pub fn metadata(&self) -> &CaptureMetadata {
        &self.metadata
    }
}

/// A landmark copy moved into the scene and scored.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Position of the seed in the sample list.
    pub ordinal: usize,
    pub seed_point: Point3,
    /// Capture frame to scene frame; applied to both cloud and box.
    pub transform: RigidTransform,
    pub cloud: PointCloud,
    pub bbox: OrientedBox,
    pub centroid: Point3,
    /// Mean-distance score in meters.
    pub error: f64,
    pub icp_converged: bool,
}

/// A candidate that survived suppression and thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    /// 0 is the lowest error.
    pub rank: usize,
    pub landmark: String,
    pub transform: RigidTransform,
    pub error: f64,
    pub seed_point: [f64; 3],
    pub centroid: [f64; 3],
}

impl Match {
    pub fn centroid_point(&self) -> Point3 {
        Point3::from(self.centroid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub workspace: WorkspaceRegion,
    pub voxel_leaf: f64,
    pub sample_fraction: f64,
    pub sample_max: usize,
    pub nms_radius: f64,
    pub error_threshold: f64,
    pub icp: IcpParams,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            workspace: WorkspaceRegion::default(),
            voxel_leaf: 0.005,
            sample_fraction: 0.05,
            sample_max: 1000,
            nms_radius: 0.03,
            error_threshold: 0.0055,
            icp: IcpParams::default(),
            seed: 0,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(key, "must be a positive finite number"))
            }
        };
        positive("voxel_leaf", self.voxel_leaf)?;
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::param("sample_fraction", "must lie in (0, 1]"));
        }
        if self.sample_max == 0 {
            return Err(Error::param("sample_max", "must be a positive integer"));
        }
        positive("nms_radius", self.nms_radius)?;
        positive("error_threshold", self.error_threshold)?;
        if self.icp.max_iterations == 0 {
            return Err(Error::param("icp.max_iterations", "must be a positive integer"));
        }
        positive("icp.correspondence_max_distance", self.icp.correspondence_max_distance)?;
        positive("icp.translation_epsilon", self.icp.translation_epsilon)?;
        positive("icp.rotation_epsilon", self.icp.rotation_epsilon)?;
        positive("icp.mse_relative_epsilon", self.icp.mse_relative_epsilon)?;
        Ok(())
    }
}

/// Mean distance between the scene points inside `bbox` and their nearest
/// candidate points, plus every candidate point no scene point claimed and
/// its nearest point in the full scene.
///
/// Scene points sitting in the box's empty margins are far from every
/// candidate point and so raise the score.
pub fn candidate_error(bbox: &OrientedBox, candidate: &SpatialIndex, scene: &SpatialIndex) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::EmptyCandidate);
    }
    if scene.is_empty() {
        return Err(Error::EmptyIndex);
    }
    // pad the sphere so rounding never drops a box corner point
    let reach = bbox.circumradius() * (1.0 + 1e-9) + 1e-12;
    let cropped: Vec<usize> = scene
        .within_radius(&bbox.center(), reach)
        .into_iter()
        .filter(|&id| bbox.contains(&scene.point(id)))
        .collect();

    let mut sum = 0.0;
    let mut denominator = 0usize;
    let mut visited = vec![false; candidate.len()];
    for id in cropped {
        let hit = candidate.nearest(&scene.point(id))?;
        sum += hit.distance;
        denominator += 1;
        visited[hit.id] = true;
    }
    for (id, seen) in visited.iter().enumerate() {
        if !seen {
            let hit = scene.nearest(&candidate.point(id))?;
            sum += hit.distance;
            denominator += 1;
        }
    }
    Ok(sum / denominator as f64)
}

/// Keeps each candidate that has no neighbor within `radius` (between cloud
/// centroids) with lower error; equal errors go to the lower input position.
/// Output is sorted by ascending error.
pub fn non_max_suppression(candidates: Vec<Candidate>, radius: f64) -> Vec<Candidate> {
    let centroids = PointCloud::from_finite(candidates.iter().map(|c| c.centroid).collect());
    let index = SpatialIndex::build(&centroids);
    let dominated = |i: usize| {
        let ci = &candidates[i];
        index
            .within_radius(&ci.centroid, radius)
            .into_iter()
            .any(|j| j != i && (candidates[j].error, j) < (ci.error, i))
    };
    let keep: Vec<bool> = (0..candidates.len()).map(|i| !dominated(i)).collect();
    let mut survivors: Vec<(usize, Candidate)> = candidates
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .collect();
    survivors.sort_by(|a, b| a.1.error.total_cmp(&b.1.error).then(a.0.cmp(&b.0)));
    survivors.into_iter().map(|(_, c)| c).collect()
}

/// Scene prepared once per search: workspace-cropped and downsampled.
pub struct PreparedScene {
    pub cloud: PointCloud,
    pub index: SpatialIndex,
}

impl PreparedScene {
    pub fn new(scene: &PointCloud, params: &SearchParams) -> Result<Self> {
        let cropped = crop_to_workspace(scene, &params.workspace);
        if cropped.is_empty() {
            return Err(Error::SceneEmptyAfterCrop);
        }
        let cloud = voxel_downsample(&cropped, params.voxel_leaf)?;
        let index = SpatialIndex::build(&cloud);
        Ok(Self { cloud, index })
    }
}

/// Runs the full search and returns every candidate before suppression, in
/// seed order.
pub fn score_candidates(prepared: &PreparedScene, landmark: &Landmark, params: &SearchParams) -> Result<Vec<Candidate>> {
    params.validate()?;
    let template = voxel_downsample(landmark.cloud(), params.voxel_leaf)?;
    let template_centroid = centroid(&template)?;
    let mut rng = SeededRng::new(params.seed);
    let seeds = sample_points(&prepared.cloud, params.sample_fraction, params.sample_max, &mut rng)?;

    seeds
        .par_iter()
        .enumerate()
        .map(|(ordinal, seed)| {
            let init = RigidTransform::from_translation(seed - template_centroid);
            let icp = icp_align(&template, &prepared.index, &init, &params.icp)?;
            let cloud = template.transformed(&icp.transform);
            let bbox = landmark.bbox().transformed(&icp.transform);
            let candidate_index = SpatialIndex::build(&cloud);
            let error = candidate_error(&bbox, &candidate_index, &prepared.index)?;
            Ok(Candidate {
                ordinal,
                seed_point: *seed,
                transform: icp.transform,
                centroid: centroid(&cloud)?,
                cloud,
                bbox,
                error,
                icp_converged: icp.converged,
            })
        })
        .collect()
}

/// Localizes `landmark` in `scene`. An empty result means "not found".
pub fn find_landmark(scene: &PointCloud, landmark: &Landmark, params: &SearchParams) -> Result<Vec<Match>> {
    params.validate()?;
    let prepared = PreparedScene::new(scene, params)?;
    find_in_prepared(&prepared, landmark, params)
}

pub fn find_in_prepared(prepared: &PreparedScene, landmark: &Landmark, params: &SearchParams) -> Result<Vec<Match>> {
    let candidates = score_candidates(prepared, landmark, params)?;
    let survivors = non_max_suppression(candidates, params.nms_radius);
    Ok(survivors
        .into_iter()
        .filter(|c| c.error < params.error_threshold)
        .enumerate()
        .map(|(rank, c)| Match {
            rank,
            landmark: landmark.name().to_string(),
            transform: c.transform,
            error: c.error,
            seed_point: [c.seed_point.x, c.seed_point.y, c.seed_point.z],
            centroid: [c.centroid.x, c.centroid.y, c.centroid.z],
        })
        .collect())
}

/// Re-expresses a pose recorded relative to the landmark's capture frame in
/// the scene frame of `found`.
pub fn transfer_pose(demo_pose: &RigidTransform, found: &Match) -> RigidTransform {
    compose(&found.transform, demo_pose)
}

/// Distance between two match centroids.
pub fn centroid_distance(a: &Match, b: &Match) -> f64 {
    distance(&a.centroid_point(), &b.centroid_point())
}
