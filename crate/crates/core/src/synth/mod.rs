//! Synthetic scenes with known object poses, and precision/recall scoring of
//! search results against them.

mod benchmark;
pub mod catalog;
mod eval;
mod scene;

pub use benchmark::{capture_landmark, run_benchmark, BenchmarkRun, CapturedLandmark, Suite, SuiteLandmark, SuiteScene};
pub use eval::{
    evaluate, evaluate_all, Detection, EvalMode, EvalReport, GroundTruth, ModeReport, SceneTally, SceneTruth, Tally,
    TruthInstance,
};
pub use scene::{generate_scene, InstanceLabel, ObjectPlacement, Part, Primitive, SceneSpec};
