//! Precision and recall of detections against synthetic ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, RigidTransform};
use crate::search::Match;

/// One labeled object instance. `pose` maps the object's frame into the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthInstance {
    pub landmark: String,
    pub instance_id: u32,
    pub pose: RigidTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub scene: String,
    /// Landmarks a user would plausibly search for in this scene. Landmarks
    /// with instances present are always in context.
    #[serde(default)]
    pub context: Vec<String>,
    pub instances: Vec<TruthInstance>,
}

impl SceneTruth {
    fn in_context(&self, landmark: &str) -> bool {
        self.context.iter().any(|c| c == landmark) || self.instances.iter().any(|i| i.landmark == landmark)
    }
}

/// `truth_pose` of each instance here is the transform from the landmark's
/// capture frame into the scene, the same quantity a match estimates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub landmarks: Vec<String>,
    pub scenes: Vec<SceneTruth>,
}

/// The matches one search produced for a (scene, landmark) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub scene: String,
    pub landmark: String,
    pub matches: Vec<Match>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Every landmark searched in every scene.
    AllPairs,
    /// Only pairs where the landmark belongs to the scene's context.
    InContext,
    /// In-context pairs; a pair recalls all its instances once any is found.
    OneInstance,
}

impl EvalMode {
    pub const ALL: [EvalMode; 3] = [EvalMode::AllPairs, EvalMode::InContext, EvalMode::OneInstance];

    pub fn label(self) -> &'static str {
        match self {
            EvalMode::AllPairs => "all_pairs",
            EvalMode::InContext => "in_context",
            EvalMode::OneInstance => "one_instance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub truth_total: usize,
    pub truth_recalled: usize,
}

impl Tally {
    fn add(&mut self, other: &Tally) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.truth_total += other.truth_total;
        self.truth_recalled += other.truth_recalled;
    }

    /// 1.0 when nothing was detected.
    pub fn precision(&self) -> f64 {
        let n = self.tp + self.fp;
        if n == 0 {
            1.0
        } else {
            self.tp as f64 / n as f64
        }
    }

    /// 1.0 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        if self.truth_total == 0 {
            1.0
        } else {
            self.truth_recalled as f64 / self.truth_total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTally {
    pub scene: String,
    #[serde(flatten)]
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: EvalMode,
    pub precision: f64,
    pub recall: f64,
    #[serde(flatten)]
    pub totals: Tally,
    pub per_scene: Vec<SceneTally>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub match_radius: f64,
    pub modes: Vec<ModeReport>,
}

impl EvalReport {
    pub fn mode(&self, mode: EvalMode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14} {:>9} {:>9} {:>6} {:>6} {:>6}", "mode", "precision", "recall", "tp", "fp", "fn")?;
        for m in &self.modes {
            writeln!(
                f,
                "{:<14} {:>9.3} {:>9.3} {:>6} {:>6} {:>6}",
                m.mode.label(),
                m.precision,
                m.recall,
                m.totals.tp,
                m.totals.fp,
                m.totals.fn_
            )?;
        }
        Ok(())
    }
}

/// Where the matched landmark's centroid would sit if the detection had found
/// the instance with this pose.
fn expected_centroid(m: &Match, instance_pose: &RigidTransform) -> crate::geometry::Point3 {
    instance_pose.apply(&m.transform.inverse_apply(&m.centroid_point()))
}

/// Greedy one-to-one assignment: matches in ascending (error, rank, input
/// order), each taking the nearest unclaimed instance within `radius`.
/// Returns (tp, fp) for the pair.
fn assign(matches: &[&Match], instances: &[&TruthInstance], radius: f64) -> (usize, usize) {
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| {
        matches[a]
            .error
            .total_cmp(&matches[b].error)
            .then(matches[a].rank.cmp(&matches[b].rank))
            .then(a.cmp(&b))
    });
    let mut claimed = vec![false; instances.len()];
    let (mut tp, mut fp) = (0, 0);
    for i in order {
        let m = matches[i];
        let c = m.centroid_point();
        let mut best: Option<(f64, usize)> = None;
        for (j, inst) in instances.iter().enumerate() {
            if claimed[j] {
                continue;
            }
            let d = distance(&c, &expected_centroid(m, &inst.pose));
            if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        match best {
            Some((_, j)) => {
                claimed[j] = true;
                tp += 1;
            }
            None => fp += 1,
        }
    }
    (tp, fp)
}

fn validate(detections: &[Detection], truth: &GroundTruth, match_radius: f64) -> Result<()> {
    if !(match_radius > 0.0 && match_radius.is_finite()) {
        return Err(Error::param("match_radius", "must be > 0"));
    }
    let landmarks: BTreeSet<&str> = truth.landmarks.iter().map(String::as_str).collect();
    let mut scenes = BTreeSet::new();
    for s in &truth.scenes {
        if !scenes.insert(s.scene.as_str()) {
            return Err(Error::InvalidScene(format!("duplicate scene `{}`", s.scene)));
        }
        for name in s.context.iter().chain(s.instances.iter().map(|i| &i.landmark)) {
            if !landmarks.contains(name.as_str()) {
                return Err(Error::UnknownReference(format!("landmark `{name}` in scene `{}`", s.scene)));
            }
        }
    }
    for d in detections {
        if !scenes.contains(d.scene.as_str()) {
            return Err(Error::UnknownReference(format!("scene `{}`", d.scene)));
        }
        if !landmarks.contains(d.landmark.as_str()) {
            return Err(Error::UnknownReference(format!("landmark `{}`", d.landmark)));
        }
    }
    Ok(())
}

/// Scores detections under one evaluation mode.
///
/// A match is a true positive when its centroid lies within `match_radius`
/// of where an unclaimed instance of the same landmark would put it.
pub fn evaluate(detections: &[Detection], truth: &GroundTruth, mode: EvalMode, match_radius: f64) -> Result<ModeReport> {
    validate(detections, truth, match_radius)?;

    let mut by_pair: BTreeMap<(&str, &str), Vec<&Match>> = BTreeMap::new();
    for d in detections {
        by_pair
            .entry((d.scene.as_str(), d.landmark.as_str()))
            .or_default()
            .extend(d.matches.iter());
    }

    let mut per_scene = Vec::with_capacity(truth.scenes.len());
    let mut totals = Tally::default();
    for scene in &truth.scenes {
        let mut tally = Tally::default();
        for landmark in &truth.landmarks {
            if mode != EvalMode::AllPairs && !scene.in_context(landmark) {
                continue;
            }
            let instances: Vec<&TruthInstance> = scene.instances.iter().filter(|i| &i.landmark == landmark).collect();
            let matches = by_pair
                .get(&(scene.scene.as_str(), landmark.as_str()))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            let (tp, fp) = assign(matches, &instances, match_radius);
            tally.tp += tp;
            tally.fp += fp;
            tally.fn_ += instances.len() - tp;
            tally.truth_total += instances.len();
            tally.truth_recalled += match mode {
                EvalMode::OneInstance if tp > 0 => instances.len(),
                EvalMode::OneInstance => 0,
                _ => tp,
            };
        }
        totals.add(&tally);
        per_scene.push(SceneTally {
            scene: scene.scene.clone(),
            tally,
        });
    }
    Ok(ModeReport {
        mode,
        precision: totals.precision(),
        recall: totals.recall(),
        totals,
        per_scene,
    })
}

/// All three modes.
pub fn evaluate_all(detections: &[Detection], truth: &GroundTruth, match_radius: f64) -> Result<EvalReport> {
    let modes = EvalMode::ALL
        .iter()
        .map(|&m| evaluate(detections, truth, m, match_radius))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { match_radius, modes })
}
