//! Landmark topologies and frame validation.
//!
//! Two layouts are supported: the 21-point hand skeleton (wrist, then four
//! points per finger from thumb to pinky) and the 18-point COCO body layout.
//! The order of [`Topology::angle_joints`] is the feature-vector layout used
//! everywhere else in the crate, so it must never be reordered.
//!
//! | index | hand            | body            |
//! |-------|-----------------|-----------------|
//! | 0     | wrist           | nose            |
//! | 1     | thumb_cmc       | neck            |
//! | 2     | thumb_mcp       | right_shoulder  |
//! | 3     | thumb_ip        | right_elbow     |
//! | 4     | thumb_tip       | right_wrist     |
//! | 5     | index_mcp       | left_shoulder   |
//! | 6     | index_pip       | left_elbow      |
//! | 7     | index_dip       | left_wrist      |
//! | 8     | index_tip       | right_hip       |
//! | 9     | middle_mcp      | right_knee      |
//! | 10    | middle_pip      | right_ankle     |
//! | 11    | middle_dip      | left_hip        |
//! | 12    | middle_tip      | left_knee       |
//! | 13    | ring_mcp        | left_ankle      |
//! | 14    | ring_pip        | right_eye       |
//! | 15    | ring_dip        | left_eye        |
//! | 16    | ring_tip        | right_ear       |
//! | 17    | pinky_mcp       | left_ear        |
//! | 18    | pinky_pip       |                 |
//! | 19    | pinky_dip       |                 |
//! | 20    | pinky_tip       |                 |

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default visibility cutoff below which a landmark counts as missing.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.3;

pub const HAND_LANDMARKS: usize = 21;
pub const BODY_LANDMARKS: usize = 18;

pub const HAND_LANDMARK_NAMES: [&str; HAND_LANDMARKS] = [
    "wrist",
    "thumb_cmc",
    "thumb_mcp",
    "thumb_ip",
    "thumb_tip",
    "index_mcp",
    "index_pip",
    "index_dip",
    "index_tip",
    "middle_mcp",
    "middle_pip",
    "middle_dip",
    "middle_tip",
    "ring_mcp",
    "ring_pip",
    "ring_dip",
    "ring_tip",
    "pinky_mcp",
    "pinky_pip",
    "pinky_dip",
    "pinky_tip",
];

pub const BODY_LANDMARK_NAMES: [&str; BODY_LANDMARKS] = [
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_eye",
    "left_eye",
    "right_ear",
    "left_ear",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("{kind} frame needs {expected} landmarks, got {found}")]
    WrongCount {
        kind: Kind,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Hand,
    Body,
}

impl Kind {
    pub fn landmark_count(self) -> usize {
        match self {
            Kind::Hand => HAND_LANDMARKS,
            Kind::Body => BODY_LANDMARKS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Hand => "hand",
            Kind::Body => "body",
        }
    }

    /// The shared, lazily-built topology for this kind.
    pub fn topology(self) -> &'static Topology {
        static HAND: OnceLock<Topology> = OnceLock::new();
        static BODY: OnceLock<Topology> = OnceLock::new();
        match self {
            Kind::Hand => HAND.get_or_init(build_hand_topology),
            Kind::Body => BODY.get_or_init(build_body_topology),
        }
    }

    pub fn feature_length(self) -> usize {
        self.topology().angle_joints.len()
    }

    pub fn from_feature_length(len: usize) -> Option<Kind> {
        [Kind::Hand, Kind::Body]
            .into_iter()
            .find(|k| k.feature_length() == len)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hand" => Ok(Kind::Hand),
            "body" => Ok(Kind::Body),
            other => Err(format!("unknown kind `{other}` (expected hand or body)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Handedness {
    Left,
    Right,
    #[default]
    #[serde(rename = "NA")]
    Na,
}

impl FromStr for Handedness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Handedness::Left),
            "right" | "r" => Ok(Handedness::Right),
            "na" | "" | "none" => Ok(Handedness::Na),
            other => Err(format!("unknown handedness `{other}`")),
        }
    }
}

/// One 2-D keypoint in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Landmark {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Landmark { x, y, confidence }
    }

    /// A fully confident point.
    pub fn at(x: f64, y: f64) -> Self {
        Landmark::new(x, y, 1.0)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && (0.0..=1.0).contains(&self.confidence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    pub kind: Kind,
    pub handedness: Handedness,
    pub landmarks: Vec<Landmark>,
    pub timestamp_ms: i64,
}

impl LandmarkFrame {
    pub fn new(kind: Kind, landmarks: Vec<Landmark>) -> Self {
        LandmarkFrame {
            kind,
            handedness: Handedness::Na,
            landmarks,
            timestamp_ms: 0,
        }
    }

    /// Builds a frame from a flat `x, y, confidence` triple list, the layout
    /// used on the wire and across the C ABI.
    pub fn from_flat(kind: Kind, flat: &[f64]) -> Result<Self, FrameError> {
        if !flat.len().is_multiple_of(3) || flat.len() / 3 != kind.landmark_count() {
            return Err(FrameError::WrongCount {
                kind,
                expected: kind.landmark_count(),
                found: flat.len() / 3,
            });
        }
        let landmarks = flat
            .chunks_exact(3)
            .map(|c| Landmark::new(c[0], c[1], c[2]))
            .collect();
        Ok(LandmarkFrame::new(kind, landmarks))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.landmarks
            .iter()
            .flat_map(|l| [l.x, l.y, l.confidence])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AngleJoint {
    pub name: &'static str,
    /// Indices `(a, b, c)`; the angle is measured at `b`.
    pub triple: (usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedPair {
    pub name: &'static str,
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Topology {
    pub kind: Kind,
    pub edges: Vec<(usize, usize)>,
    pub angle_joints: Vec<AngleJoint>,
    pub slope_pairs: Vec<NamedPair>,
    /// Bone whose length normalizes distance constraints.
    pub reference_bone: (usize, usize),
}

impl Topology {
    pub fn landmark_count(&self) -> usize {
        self.kind.landmark_count()
    }

    pub fn layout_id(&self) -> &'static str {
        match self.kind {
            Kind::Hand => "hand-v1",
            Kind::Body => "body-v1",
        }
    }

    pub fn landmark_name(&self, index: usize) -> Option<&'static str> {
        match self.kind {
            Kind::Hand => HAND_LANDMARK_NAMES.get(index).copied(),
            Kind::Body => BODY_LANDMARK_NAMES.get(index).copied(),
        }
    }

    pub fn joint(&self, name: &str) -> Option<&AngleJoint> {
        self.angle_joints.iter().find(|j| j.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.angle_joints.iter().position(|j| j.name == name)
    }

    pub fn pair(&self, name: &str) -> Option<&NamedPair> {
        self.slope_pairs.iter().find(|p| p.name == name)
    }
}

/// The 21-point hand skeleton: 15 flexion angles (three per finger, thumb
/// first) followed by 4 spread angles at the wrist between neighbouring
/// finger bases.
pub fn build_hand_topology() -> Topology {
    const FLEXION: [[&str; 3]; 5] = [
        ["thumb_cmc", "thumb_mcp", "thumb_ip"],
        ["index_mcp", "index_pip", "index_dip"],
        ["middle_mcp", "middle_pip", "middle_dip"],
        ["ring_mcp", "ring_pip", "ring_dip"],
        ["pinky_mcp", "pinky_pip", "pinky_dip"],
    ];
    const SPREAD: [&str; 4] = [
        "thumb_index_spread",
        "index_middle_spread",
        "middle_ring_spread",
        "ring_pinky_spread",
    ];

    let mut edges = Vec::with_capacity(20);
    let mut angle_joints = Vec::with_capacity(19);
    for (f, names) in FLEXION.iter().enumerate() {
        let base = 1 + 4 * f;
        edges.push((0, base));
        for j in 0..3 {
            edges.push((base + j, base + j + 1));
        }
        let chain = [0, base, base + 1, base + 2, base + 3];
        for (j, name) in names.iter().enumerate() {
            angle_joints.push(AngleJoint {
                name,
                triple: (chain[j], chain[j + 1], chain[j + 2]),
            });
        }
    }
    for (f, name) in SPREAD.iter().enumerate() {
        angle_joints.push(AngleJoint {
            name,
            triple: (1 + 4 * f, 0, 1 + 4 * (f + 1)),
        });
    }

    let slope_pairs = vec![
        NamedPair { name: "palm_axis", pair: (0, 9) },
        NamedPair { name: "thumb_index_tips", pair: (4, 8) },
        NamedPair { name: "thumb_middle_tips", pair: (4, 12) },
        NamedPair { name: "thumb_ring_tips", pair: (4, 16) },
        NamedPair { name: "thumb_pinky_tips", pair: (4, 20) },
    ];

    Topology {
        kind: Kind::Hand,
        edges,
        angle_joints,
        slope_pairs,
        reference_bone: (0, 9),
    }
}

/// The 18-point COCO body skeleton with elbow, shoulder, hip and knee angles.
pub fn build_body_topology() -> Topology {
    let edges = vec![
        (1, 2),
        (1, 5),
        (2, 3),
        (3, 4),
        (5, 6),
        (6, 7),
        (1, 8),
        (8, 9),
        (9, 10),
        (1, 11),
        (11, 12),
        (12, 13),
        (1, 0),
        (0, 14),
        (14, 16),
        (0, 15),
        (15, 17),
    ];
    let angle_joints = vec![
        AngleJoint { name: "left_elbow", triple: (5, 6, 7) },
        AngleJoint { name: "right_elbow", triple: (2, 3, 4) },
        AngleJoint { name: "left_shoulder", triple: (11, 5, 6) },
        AngleJoint { name: "right_shoulder", triple: (8, 2, 3) },
        AngleJoint { name: "left_hip", triple: (5, 11, 12) },
        AngleJoint { name: "right_hip", triple: (2, 8, 9) },
        AngleJoint { name: "left_knee", triple: (11, 12, 13) },
        AngleJoint { name: "right_knee", triple: (8, 9, 10) },
    ];
    let slope_pairs = vec![
        NamedPair { name: "shoulder_line", pair: (5, 2) },
        NamedPair { name: "hip_line", pair: (11, 8) },
        NamedPair { name: "left_arm_line", pair: (5, 7) },
        NamedPair { name: "right_arm_line", pair: (2, 4) },
    ];
    Topology {
        kind: Kind::Body,
        edges,
        angle_joints,
        slope_pairs,
        reference_bone: (5, 2),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationResult {
    pub ok: bool,
    pub missing: BTreeSet<usize>,
}

/// Checks the landmark count and reports every landmark whose confidence is
/// below `min_confidence` (non-finite points are treated as missing too).
pub fn validate_frame(
    frame: &LandmarkFrame,
    min_confidence: f64,
) -> Result<ValidationResult, FrameError> {
    let expected = frame.kind.landmark_count();
    if frame.landmarks.len() != expected {
        return Err(FrameError::WrongCount {
            kind: frame.kind,
            expected,
            found: frame.landmarks.len(),
        });
    }
    let missing: BTreeSet<usize> = frame
        .landmarks
        .iter()
        .enumerate()
        .filter(|(_, l)| {
            !(l.x.is_finite() && l.y.is_finite()) || l.confidence.is_nan() || l.confidence < min_confidence
        })
        .map(|(i, _)| i)
        .collect();
    Ok(ValidationResult {
        ok: missing.is_empty(),
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_frame(conf: f64) -> LandmarkFrame {
        let lms = (0..21)
            .map(|i| Landmark::new(i as f64 * 0.01, 0.5, conf))
            .collect();
        LandmarkFrame::new(Kind::Hand, lms)
    }

    #[test]
    fn hand_topology_layout() {
        let t = build_hand_topology();
        assert_eq!(t.angle_joints.len(), 19);
        assert_eq!(t.edges.len(), 20);
        assert_eq!(t.angle_joints[0].triple, (0, 1, 2));
        assert_eq!(t.angle_joints[0].name, "thumb_cmc");
        assert_eq!(t.angle_joints[15].triple, (1, 0, 5));
        assert_eq!(t.angle_joints[18].triple, (13, 0, 17));
        // edges form a tree: every non-wrist node has exactly one parent edge
        let mut children: Vec<usize> = t.edges.iter().map(|e| e.1).collect();
        children.sort_unstable();
        assert_eq!(children, (1..21).collect::<Vec<_>>());
    }

    #[test]
    fn body_topology_layout() {
        let t = build_body_topology();
        assert_eq!(t.angle_joints.len(), 8);
        assert_eq!(t.joint("left_elbow").unwrap().triple, (5, 6, 7));
        assert_eq!(t.joint("right_elbow").unwrap().triple, (2, 3, 4));
        assert_eq!(t.slope_pairs.len(), 4);
        assert!(t.slope_pairs.iter().any(|p| p.pair == (5, 2)));
    }

    #[test]
    fn topologies_are_well_formed_and_deterministic() {
        for build in [build_hand_topology as fn() -> Topology, build_body_topology] {
            let t = build();
            assert_eq!(t, build());
            let n = t.landmark_count();
            let mut names = BTreeSet::new();
            for j in &t.angle_joints {
                let (a, b, c) = j.triple;
                assert!(a < n && b < n && c < n);
                assert!(a != b && b != c && a != c, "{}", j.name);
                assert!(names.insert(j.name), "duplicate {}", j.name);
            }
            for e in &t.edges {
                assert!(e.0 < n && e.1 < n);
            }
            for p in &t.slope_pairs {
                assert!(p.pair.0 < n && p.pair.1 < n && p.pair.0 != p.pair.1);
            }
        }
    }

    #[test]
    fn validate_all_confident() {
        let r = validate_frame(&hand_frame(0.9), 0.3).unwrap();
        assert!(r.ok);
        assert!(r.missing.is_empty());
    }

    #[test]
    fn validate_wrong_count() {
        let mut f = hand_frame(0.9);
        f.landmarks.pop();
        assert_eq!(
            validate_frame(&f, 0.3),
            Err(FrameError::WrongCount {
                kind: Kind::Hand,
                expected: 21,
                found: 20
            })
        );
    }

    #[test]
    fn validate_low_confidence_point() {
        let mut f = hand_frame(0.9);
        f.landmarks[8].confidence = 0.0;
        let r = validate_frame(&f, 0.3).unwrap();
        assert!(!r.ok);
        assert_eq!(r.missing, BTreeSet::from([8]));
        // zero threshold never reports a missing point
        assert!(validate_frame(&f, 0.0).unwrap().missing.is_empty());
    }

    #[test]
    fn flat_roundtrip() {
        let f = hand_frame(0.7);
        let g = LandmarkFrame::from_flat(Kind::Hand, &f.to_flat()).unwrap();
        assert_eq!(f.landmarks, g.landmarks);
        assert!(LandmarkFrame::from_flat(Kind::Body, &f.to_flat()).is_err());
    }
}
