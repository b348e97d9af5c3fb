//! Posture correction against per-pose reference profiles.
//!
//! A [`PoseProfile`] lists target joint angles, line slopes and normalized
//! point distances, each with a tolerance. [`evaluate_pose`] measures a frame
//! and reports every constraint that is out of tolerance together with the
//! direction to move and a short instruction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::geometry::{angle_at, euclidean_distance, slope_deg, EPSILON};
use crate::skeleton::{validate_frame, FrameError, Kind, LandmarkFrame, Topology};

pub const PROFILE_VERSION: u32 = 1;
pub const DEFAULT_K_SIGMA: f64 = 2.0;
pub const DEFAULT_FLOOR_DEG: f64 = 5.0;
pub const MIN_PROFILE_SAMPLES: usize = 5;

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("profile `{pose_id}` is for {profile} frames, got a {frame} frame")]
    KindMismatch { pose_id: String, profile: Kind, frame: Kind },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("profile `{pose_id}`: {message}")]
    InvalidProfile { pose_id: String, message: String },
    #[error("profile version {found} is not supported (expected {PROFILE_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("need at least {MIN_PROFILE_SAMPLES} samples, got {found}")]
    TooFewSamples { found: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleConstraint {
    pub joint: String,
    pub target: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConstraint {
    pub pair: String,
    pub target: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseProfile {
    pub profile_version: u32,
    pub pose_id: String,
    pub kind: Kind,
    #[serde(default)]
    pub angle_constraints: Vec<AngleConstraint>,
    /// Targets are inclinations in degrees, (−90, 90].
    #[serde(default)]
    pub slope_constraints: Vec<PairConstraint>,
    /// Targets are lengths divided by the kind's reference bone length.
    #[serde(default)]
    pub distance_constraints: Vec<PairConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Angle,
    Slope,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub constraint_name: String,
    pub constraint_kind: ConstraintKind,
    pub observed: f64,
    pub target: f64,
    /// Distance beyond the tolerance band; always positive.
    pub excess: f64,
    pub direction: Direction,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub pose_id: String,
    pub deviations: Vec<Deviation>,
    pub correct: bool,
    pub missing_joints: BTreeSet<usize>,
}

impl PoseProfile {
    pub fn new(pose_id: impl Into<String>, kind: Kind) -> Self {
        PoseProfile {
            profile_version: PROFILE_VERSION,
            pose_id: pose_id.into(),
            kind,
            angle_constraints: Vec::new(),
            slope_constraints: Vec::new(),
            distance_constraints: Vec::new(),
        }
    }

    pub fn angle(mut self, joint: &str, target: f64, tolerance: f64) -> Self {
        self.angle_constraints.push(AngleConstraint {
            joint: joint.to_string(),
            target,
            tolerance,
        });
        self
    }

    pub fn slope(mut self, pair: &str, target: f64, tolerance: f64) -> Self {
        self.slope_constraints.push(PairConstraint {
            pair: pair.to_string(),
            target,
            tolerance,
        });
        self
    }

    pub fn distance(mut self, pair: &str, target: f64, tolerance: f64) -> Self {
        self.distance_constraints.push(PairConstraint {
            pair: pair.to_string(),
            target,
            tolerance,
        });
        self
    }

    pub fn constraint_count(&self) -> usize {
        self.angle_constraints.len() + self.slope_constraints.len() + self.distance_constraints.len()
    }

    /// Checks names against the kind's topology and every target/tolerance
    /// against its range. Slope bands may not reach ±90°, where the
    /// inclination wraps around.
    pub fn validate(&self) -> Result<(), CorrectionError> {
        let bad = |message: String| CorrectionError::InvalidProfile {
            pose_id: self.pose_id.clone(),
            message,
        };
        if self.profile_version != PROFILE_VERSION {
            return Err(CorrectionError::VersionMismatch {
                found: self.profile_version,
            });
        }
        if self.pose_id.trim().is_empty() {
            return Err(bad("empty pose_id".into()));
        }
        let topo = self.kind.topology();
        let tol_ok = |t: f64| t.is_finite() && t > 0.0;
        let mut names = BTreeSet::new();
        for c in &self.angle_constraints {
            if topo.joint(&c.joint).is_none() {
                return Err(bad(format!("unknown joint `{}`", c.joint)));
            }
            if !(0.0..=180.0).contains(&c.target) || !tol_ok(c.tolerance) {
                return Err(bad(format!("angle `{}` out of range", c.joint)));
            }
            if !names.insert(("angle", c.joint.as_str())) {
                return Err(bad(format!("duplicate angle `{}`", c.joint)));
            }
        }
        for c in &self.slope_constraints {
            if topo.pair(&c.pair).is_none() {
                return Err(bad(format!("unknown pair `{}`", c.pair)));
            }
            if !tol_ok(c.tolerance) || !(c.target - c.tolerance > -90.0 && c.target + c.tolerance < 90.0) {
                return Err(bad(format!(
                    "slope `{}`: target ± tolerance must stay inside (−90, 90)",
                    c.pair
                )));
            }
            if !names.insert(("slope", c.pair.as_str())) {
                return Err(bad(format!("duplicate slope `{}`", c.pair)));
            }
        }
        for c in &self.distance_constraints {
            if topo.pair(&c.pair).is_none() {
                return Err(bad(format!("unknown pair `{}`", c.pair)));
            }
            if !(c.target.is_finite() && c.target >= 0.0) || !tol_ok(c.tolerance) {
                return Err(bad(format!("distance `{}` out of range", c.pair)));
            }
            if !names.insert(("distance", c.pair.as_str())) {
                return Err(bad(format!("duplicate distance `{}`", c.pair)));
            }
        }
        Ok(())
    }

    pub fn from_yaml(text: &str) -> Result<Self, CorrectionError> {
        Self::parse_yaml(text, Path::new("<memory>"))
    }

    fn parse_yaml(text: &str, path: &Path) -> Result<Self, CorrectionError> {
        // read the version first so newer files fail with VersionMismatch
        // rather than a field error
        #[derive(Deserialize)]
        struct Version {
            profile_version: Option<u32>,
        }
        let parse = |e: serde_yaml::Error| CorrectionError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let v: Version = serde_yaml::from_str(text).map_err(parse)?;
        match v.profile_version {
            Some(PROFILE_VERSION) => {}
            Some(found) => return Err(CorrectionError::VersionMismatch { found }),
            None => {
                return Err(CorrectionError::Parse {
                    path: path.to_path_buf(),
                    message: "missing profile_version".into(),
                })
            }
        }
        let p: PoseProfile = serde_yaml::from_str(text).map_err(parse)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("profiles always serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorrectionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorrectionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_yaml(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorrectionError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_yaml()).map_err(|source| CorrectionError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Profiles keyed by pose id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSet {
    pub profiles: BTreeMap<String, PoseProfile>,
}

impl ProfileSet {
    pub fn insert(&mut self, profile: PoseProfile) {
        self.profiles.insert(profile.pose_id.clone(), profile);
    }

    pub fn get(&self, pose_id: &str) -> Option<&PoseProfile> {
        self.profiles.get(pose_id)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Loads every `*.yaml` / `*.yml` file of a directory, in name order.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, CorrectionError> {
        let dir = dir.as_ref();
        let io = |source| CorrectionError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")))
            .collect();
        paths.sort();
        let mut set = ProfileSet::default();
        for p in paths {
            set.insert(PoseProfile::load(&p)?);
        }
        Ok(set)
    }
}

/// Message templates per constraint name. Placeholders: `{name}`,
/// `{excess}`, `{target}`, `{observed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageTable {
    pub templates: BTreeMap<String, DirectionTemplates>,
    pub generic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionTemplates {
    pub increase: String,
    pub decrease: String,
}

fn templates(increase: &str, decrease: &str) -> DirectionTemplates {
    DirectionTemplates {
        increase: increase.to_string(),
        decrease: decrease.to_string(),
    }
}

impl Default for MessageTable {
    /// English messages for every joint and pair of both topologies.
    fn default() -> Self {
        let mut t = BTreeMap::new();
        for kind in [Kind::Hand, Kind::Body] {
            let topo = kind.topology();
            for j in &topo.angle_joints {
                let entry = if j.name.ends_with("_spread") {
                    templates("Spread your {name} wider ({excess}° to go)", "Close your {name} ({excess}° to go)")
                } else {
                    templates("Straighten your {name} ({excess}° to go)", "Bend your {name} more ({excess}° to go)")
                };
                t.insert(j.name.to_string(), entry);
            }
            for p in &topo.slope_pairs {
                t.insert(
                    format!("slope:{}", p.name),
                    templates(
                        "Tilt your {name} toward {target}° ({excess}° to go)",
                        "Tilt your {name} toward {target}° ({excess}° to go)",
                    ),
                );
                t.insert(
                    format!("distance:{}", p.name),
                    templates("Move your {name} further apart", "Bring your {name} closer together"),
                );
            }
        }
        MessageTable {
            templates: t,
            generic: "Adjust {name} toward {target}".to_string(),
        }
    }
}

fn template_key(d: &Deviation) -> String {
    match d.constraint_kind {
        ConstraintKind::Angle => d.constraint_name.clone(),
        ConstraintKind::Slope => format!("slope:{}", d.constraint_name),
        ConstraintKind::Distance => format!("distance:{}", d.constraint_name),
    }
}

/// Rounds half to even at `decimals` places and prints without a trailing `.0`.
fn round_text(v: f64, decimals: i32) -> String {
    let scale = 10f64.powi(decimals);
    let r = (v * scale).round_ties_even() / scale;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.prec$}", prec = decimals.max(0) as usize)
}

fn humanize(name: &str) -> String {
    name.replace('_', " ")
}

/// Fills the deviation's template. Unknown constraints fall back to the
/// table's generic template.
pub fn feedback_text(deviation: &Deviation, table: &MessageTable) -> String {
    let decimals = match deviation.constraint_kind {
        ConstraintKind::Distance => 2,
        _ => 0,
    };
    let template = match table.templates.get(&template_key(deviation)) {
        Some(t) => match deviation.direction {
            Direction::Increase => &t.increase,
            Direction::Decrease => &t.decrease,
        },
        None => &table.generic,
    };
    let mut out = template
        .replace("{name}", &humanize(&deviation.constraint_name))
        .replace("{excess}", &round_text(deviation.excess, decimals))
        .replace("{target}", &round_text(deviation.target, decimals))
        .replace("{observed}", &round_text(deviation.observed, decimals));
    if let Some(first) = out.get(..1) {
        let upper = first.to_uppercase();
        out.replace_range(..1, &upper);
    }
    out
}

/// Deviation of `observed` from a `target ± tolerance` band, if any.
fn check(
    name: &str,
    kind: ConstraintKind,
    observed: f64,
    target: f64,
    tolerance: f64,
) -> Option<Deviation> {
    let gap = (observed - target).abs();
    if gap <= tolerance {
        return None;
    }
    Some(Deviation {
        constraint_name: name.to_string(),
        constraint_kind: kind,
        observed,
        target,
        excess: gap - tolerance,
        direction: if observed < target {
            Direction::Increase
        } else {
            Direction::Decrease
        },
        message: String::new(),
    })
}

pub fn evaluate_pose(
    frame: &LandmarkFrame,
    profile: &PoseProfile,
    min_confidence: f64,
) -> Result<CorrectionResult, CorrectionError> {
    evaluate_pose_with(frame, profile, min_confidence, default_messages())
}

fn default_messages() -> &'static MessageTable {
    static TABLE: std::sync::OnceLock<MessageTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(MessageTable::default)
}

pub fn evaluate_pose_with(
    frame: &LandmarkFrame,
    profile: &PoseProfile,
    min_confidence: f64,
    messages: &MessageTable,
) -> Result<CorrectionResult, CorrectionError> {
    if frame.kind != profile.kind {
        return Err(CorrectionError::KindMismatch {
            pose_id: profile.pose_id.clone(),
            profile: profile.kind,
            frame: frame.kind,
        });
    }
    let topo: &Topology = profile.kind.topology();
    let missing = validate_frame(frame, min_confidence)?.missing;
    let lm = &frame.landmarks;
    let mut missing_joints = BTreeSet::new();
    let mut deviations = Vec::new();

    // Constraints needing an absent (or degenerate) landmark are skipped and
    // their landmarks reported instead.
    let usable = |indices: &[usize], missing_joints: &mut BTreeSet<usize>| {
        let absent: Vec<usize> = indices.iter().copied().filter(|i| missing.contains(i)).collect();
        missing_joints.extend(&absent);
        absent.is_empty()
    };

    for c in &profile.angle_constraints {
        let Some(j) = topo.joint(&c.joint) else { continue };
        let (a, b, cc) = j.triple;
        if !usable(&[a, b, cc], &mut missing_joints) {
            continue;
        }
        match angle_at(&lm[a], &lm[b], &lm[cc]) {
            Ok(obs) => deviations.extend(check(&c.joint, ConstraintKind::Angle, obs, c.target, c.tolerance)),
            Err(_) => missing_joints.extend([a, b, cc]),
        }
    }
    for c in &profile.slope_constraints {
        let Some(p) = topo.pair(&c.pair) else { continue };
        let (a, b) = p.pair;
        if !usable(&[a, b], &mut missing_joints) {
            continue;
        }
        match slope_deg(&lm[a], &lm[b]) {
            Ok(obs) => deviations.extend(check(&c.pair, ConstraintKind::Slope, obs, c.target, c.tolerance)),
            Err(_) => missing_joints.extend([a, b]),
        }
    }
    if !profile.distance_constraints.is_empty() {
        let (r0, r1) = topo.reference_bone;
        let reference = euclidean_distance(&lm[r0], &lm[r1]);
        let reference_ok = usable(&[r0, r1], &mut missing_joints);
        if reference_ok && reference <= EPSILON {
            missing_joints.extend([r0, r1]);
        }
        for c in &profile.distance_constraints {
            let Some(p) = topo.pair(&c.pair) else { continue };
            let (a, b) = p.pair;
            if !usable(&[a, b], &mut missing_joints) || !reference_ok || reference <= EPSILON {
                continue;
            }
            let obs = euclidean_distance(&lm[a], &lm[b]) / reference;
            deviations.extend(check(&c.pair, ConstraintKind::Distance, obs, c.target, c.tolerance));
        }
    }

    for d in &mut deviations {
        d.message = feedback_text(d, messages);
    }
    Ok(CorrectionResult {
        pose_id: profile.pose_id.clone(),
        correct: deviations.is_empty() && missing_joints.is_empty(),
        deviations,
        missing_joints,
    })
}

/// Angle profile from exemplar feature vectors of a single pose: target =
/// mean, tolerance = max(k_sigma · sample standard deviation, floor_deg).
pub fn profile_from_samples(
    dataset: &Dataset,
    k_sigma: f64,
    floor_deg: f64,
) -> Result<PoseProfile, CorrectionError> {
    if !(k_sigma.is_finite() && k_sigma >= 0.0) || !(floor_deg.is_finite() && floor_deg > 0.0) {
        return Err(CorrectionError::InvalidArgument(
            "k_sigma must be >= 0 and floor_deg > 0".into(),
        ));
    }
    let n = dataset.len();
    if n < MIN_PROFILE_SAMPLES {
        return Err(CorrectionError::TooFewSamples { found: n });
    }
    let label = dataset.samples[0].label;
    if dataset.samples.iter().any(|s| s.label != label) {
        return Err(CorrectionError::InvalidArgument(
            "samples must all belong to one pose".into(),
        ));
    }
    let topo = dataset.kind.topology();
    let mut profile = PoseProfile::new(dataset.class_names[label].clone(), dataset.kind);
    for (j, joint) in topo.angle_joints.iter().enumerate() {
        let values: Vec<f64> = dataset.samples.iter().map(|s| s.features.values[j].clamp(0.0, 180.0)).collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let tolerance = (k_sigma * var.sqrt()).max(floor_deg);
        profile = profile.angle(joint.name, mean, tolerance);
    }
    Ok(profile)
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Increase => "increase",
            Direction::Decrease => "decrease",
        })
    }
}
