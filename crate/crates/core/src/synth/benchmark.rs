use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::compose;
use crate::io::BoxSpec;
use crate::search::{find_in_prepared, CaptureMetadata, Landmark, PreparedScene, SearchParams};

use super::eval::{evaluate_all, Detection, EvalReport, GroundTruth, SceneTruth};
use super::scene::{generate_scene, SceneSpec};

/// A landmark captured from its own synthetic scene. The capture scene must
/// hold exactly one object labeled with `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteLandmark {
    pub name: String,
    pub capture: SceneSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "box")]
    pub bbox: BoxSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteScene {
    pub spec: SceneSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub context: Vec<String>,
}

fn default_match_radius() -> f64 {
    0.03
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default = "default_match_radius")]
    pub match_radius: f64,
    #[serde(default)]
    pub landmarks: Vec<SuiteLandmark>,
    #[serde(default)]
    pub scenes: Vec<SuiteScene>,
}

impl Default for Suite {
    fn default() -> Self {
        Suite {
            match_radius: default_match_radius(),
            landmarks: Vec::new(),
            scenes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub report: EvalReport,
    pub truth: GroundTruth,
    pub detections: Vec<Detection>,
}

/// A captured landmark and the pose of its labeled object in the capture scene.
pub struct CapturedLandmark {
    pub landmark: Landmark,
    pub object_pose: crate::geometry::RigidTransform,
}

pub fn capture_landmark(def: &SuiteLandmark) -> Result<CapturedLandmark> {
    let (cloud, truth) = generate_scene(&def.capture, def.seed)?;
    let mut labeled = truth.instances.iter().filter(|i| i.landmark == def.name);
    let (Some(object), None) = (labeled.next(), labeled.next()) else {
        return Err(Error::InvalidScene(format!(
            "capture scene `{}` must label exactly one `{}` object",
            def.capture.name, def.name
        )));
    };
    let metadata = CaptureMetadata {
        scene_id: def.capture.name.clone(),
        created_at: "1970-01-01T00:00:00Z".into(),
    };
    let landmark = Landmark::capture(def.name.clone(), &cloud, def.bbox.to_box()?, metadata)?;
    Ok(CapturedLandmark {
        landmark,
        object_pose: object.pose,
    })
}

/// Captures every landmark, generates every scene, searches each landmark in
/// each scene and scores the result in all evaluation modes.
pub fn run_benchmark(suite: &Suite, params: &SearchParams) -> Result<BenchmarkRun> {
    params.validate()?;
    let captured = suite.landmarks.iter().map(capture_landmark).collect::<Result<Vec<_>>>()?;
    let mut truth = GroundTruth {
        landmarks: suite.landmarks.iter().map(|l| l.name.clone()).collect(),
        scenes: Vec::with_capacity(suite.scenes.len()),
    };
    let mut detections = Vec::new();

    for entry in &suite.scenes {
        let (cloud, scene_truth) = generate_scene(&entry.spec, entry.seed)?;
        let mut instances = Vec::with_capacity(scene_truth.instances.len());
        for mut inst in scene_truth.instances {
            let Some(c) = captured.iter().find(|c| c.landmark.name() == inst.landmark) else {
                return Err(Error::UnknownReference(format!(
                    "landmark `{}` in scene `{}`",
                    inst.landmark, entry.spec.name
                )));
            };
            // capture frame -> object frame -> scene
            inst.pose = compose(&inst.pose, &c.object_pose.inverse());
            instances.push(inst);
        }
        truth.scenes.push(SceneTruth {
            scene: entry.spec.name.clone(),
            context: entry.context.clone(),
            instances,
        });

        // a scene with nothing inside the workspace has no matches
        let prepared = match PreparedScene::new(&cloud, params) {
            Ok(p) => Some(p),
            Err(Error::SceneEmptyAfterCrop) => None,
            Err(e) => return Err(e),
        };
        for c in &captured {
            let matches = match &prepared {
                Some(p) => find_in_prepared(p, &c.landmark, params)?,
                None => Vec::new(),
            };
            detections.push(Detection {
                scene: entry.spec.name.clone(),
                landmark: c.landmark.name().to_string(),
                matches,
            });
        }
    }

    let report = evaluate_all(&detections, &truth, suite.match_radius)?;
    Ok(BenchmarkRun {
        report,
        truth,
        detections,
    })
}
