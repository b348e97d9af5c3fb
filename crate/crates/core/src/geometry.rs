//! Distance, joint-angle and slope measurements, and the frame → feature
//! vector mapping consumed by the classifiers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skeleton::{validate_frame, FrameError, Kind, Landmark, LandmarkFrame, Topology};

/// Arms or pairs shorter than this (normalized units) are degenerate.
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate triple{}: an arm is shorter than {EPSILON}", name_suffix(.0))]
    DegenerateTriple(Option<String>),
    #[error("degenerate pair: points coincide")]
    DegeneratePair,
    #[error("landmarks below confidence threshold: {0:?}")]
    MissingLandmarks(BTreeSet<usize>),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

fn name_suffix(name: &Option<String>) -> String {
    name.as_ref().map(|n| format!(" `{n}`")).unwrap_or_default()
}

pub fn euclidean_distance(p: &Landmark, q: &Landmark) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// Interior angle at `b` in degrees.
///
/// The law-of-cosines numerator `|ba|² + |bc|² − |ac|²` (= 2·|ba|·|bc|·cos θ)
/// is paired with four times the triangle area (= 2·|ba|·|bc|·sin θ) through
/// `atan2`, which stays accurate for nearly straight or nearly folded joints
/// where `acos` of the clamped cosine loses about half the significant digits.
pub fn angle_at(a: &Landmark, b: &Landmark, c: &Landmark) -> Result<f64, GeometryError> {
    let ba = euclidean_distance(b, a);
    let bc = euclidean_distance(b, c);
    if ba <= EPSILON || bc <= EPSILON {
        return Err(GeometryError::DegenerateTriple(None));
    }
    let sq = |p: &Landmark, q: &Landmark| {
        let (dx, dy) = (p.x - q.x, p.y - q.y);
        dx * dx + dy * dy
    };
    // both terms are symmetric in a and c, so the result is too
    let cos_term = sq(b, a) + sq(b, c) - sq(a, c);
    let cross = (a.x - b.x) * (c.y - b.y) - (a.y - b.y) * (c.x - b.x);
    let sin_term = 2.0 * cross.abs();
    Ok(sin_term.atan2(cos_term).to_degrees())
}

/// Inclination of the line through `p` and `q` against the horizontal axis,
/// folded into (−90, 90].
pub fn slope_deg(p: &Landmark, q: &Landmark) -> Result<f64, GeometryError> {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    if dx.hypot(dy) <= EPSILON {
        return Err(GeometryError::DegeneratePair);
    }
    if dx == 0.0 {
        return Ok(90.0);
    }
    let mut deg = dy.atan2(dx).to_degrees();
    if deg > 90.0 {
        deg -= 180.0;
    } else if deg <= -90.0 {
        deg += 180.0;
    }
    // -90 is only reachable through rounding; it names the same line as 90.
    if deg <= -90.0 {
        deg = 90.0;
    }
    Ok(deg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub kind: Kind,
    pub values: Vec<f64>,
    pub layout_id: String,
}

impl FeatureVector {
    pub fn new(kind: Kind, values: Vec<f64>) -> Self {
        FeatureVector {
            kind,
            values,
            layout_id: kind.topology().layout_id().to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Measures every angle joint of `topology` on `frame`, in topology order.
pub fn extract_features(
    frame: &LandmarkFrame,
    topology: &Topology,
    min_confidence: f64,
) -> Result<FeatureVector, GeometryError> {
    let validation = validate_frame(frame, min_confidence)?;
    if !validation.ok {
        return Err(GeometryError::MissingLandmarks(validation.missing));
    }
    let lm = &frame.landmarks;
    let values = topology
        .angle_joints
        .iter()
        .map(|joint| {
            let (a, b, c) = joint.triple;
            angle_at(&lm[a], &lm[b], &lm[c])
                .map_err(|_| GeometryError::DegenerateTriple(Some(joint.name.to_string())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureVector {
        kind: topology.kind,
        values,
        layout_id: topology.layout_id().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{build_body_topology, build_hand_topology};
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> Landmark {
        Landmark::at(x, y)
    }

    #[test]
    fn distances() {
        assert_eq!(euclidean_distance(&p(0.0, 0.0), &p(3.0, 4.0)), 5.0);
        assert_eq!(euclidean_distance(&p(0.3, 0.3), &p(0.3, 0.3)), 0.0);
        assert_eq!(euclidean_distance(&p(1.0, 2.0), &p(4.0, 6.0)), 5.0);
    }

    #[test]
    fn angles() {
        assert_abs_diff_eq!(
            angle_at(&p(0.0, 0.0), &p(1.0, 0.0), &p(1.0, 1.0)).unwrap(),
            90.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            angle_at(&p(0.0, 0.0), &p(1.0, 0.0), &p(2.0, 0.0)).unwrap(),
            180.0,
            epsilon = 1e-12
        );
        let h = 3f64.sqrt() / 2.0;
        assert_abs_diff_eq!(
            angle_at(&p(0.0, 0.0), &p(1.0, 0.0), &p(0.5, h)).unwrap(),
            60.0,
            epsilon = 1e-9
        );
        assert_eq!(
            angle_at(&p(0.0, 0.0), &p(0.0, 0.0), &p(1.0, 1.0)),
            Err(GeometryError::DegenerateTriple(None))
        );
    }

    #[test]
    fn slopes() {
        assert_abs_diff_eq!(slope_deg(&p(0.0, 0.0), &p(1.0, 1.0)).unwrap(), 45.0, epsilon = 1e-12);
        assert_eq!(slope_deg(&p(0.0, 0.0), &p(0.0, 1.0)).unwrap(), 90.0);
        assert_eq!(slope_deg(&p(0.0, 0.0), &p(0.0, -1.0)).unwrap(), 90.0);
        assert_eq!(slope_deg(&p(0.0, 0.0), &p(1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(slope_deg(&p(0.0, 0.0), &p(-1.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(slope_deg(&p(1.0, 1.0), &p(0.0, 0.0)).unwrap(), 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(slope_deg(&p(0.0, 0.0), &p(1.0, -1.0)).unwrap(), -45.0, epsilon = 1e-12);
        assert_eq!(slope_deg(&p(0.2, 0.2), &p(0.2, 0.2)), Err(GeometryError::DegeneratePair));
    }

    /// Open hand with every finger drawn as a straight ray from the wrist.
    fn flat_hand() -> LandmarkFrame {
        let mut lms = vec![p(0.5, 0.9)];
        for f in 0..5 {
            let theta = (150.0 - 30.0 * f as f64).to_radians();
            for j in 1..=4 {
                let r = 0.1 * j as f64;
                lms.push(p(0.5 + r * theta.cos(), 0.9 - r * theta.sin()));
            }
        }
        LandmarkFrame::new(Kind::Hand, lms)
    }

    #[test]
    fn flat_hand_is_fully_extended() {
        let fv = extract_features(&flat_hand(), &build_hand_topology(), 0.3).unwrap();
        assert_eq!(fv.len(), 19);
        for v in &fv.values[..15] {
            assert_abs_diff_eq!(*v, 180.0, epsilon = 1e-6);
        }
        for v in &fv.values[15..] {
            assert_abs_diff_eq!(*v, 30.0, epsilon = 1e-6);
        }
        assert_eq!(fv.layout_id, "hand-v1");
    }

    #[test]
    fn right_angle_elbow() {
        let mut lms: Vec<Landmark> = (0..18).map(|i| p(0.1 * i as f64, 0.05 * (i * i) as f64)).collect();
        lms[5] = p(0.0, 0.0);
        lms[6] = p(0.0, -1.0);
        lms[7] = p(1.0, -1.0);
        let frame = LandmarkFrame::new(Kind::Body, lms);
        let fv = extract_features(&frame, &build_body_topology(), 0.3).unwrap();
        assert_abs_diff_eq!(fv.values[0], 90.0, epsilon = 1e-9);
    }

    #[test]
    fn low_confidence_is_reported() {
        let mut f = flat_hand();
        f.landmarks[8].confidence = 0.1;
        assert_eq!(
            extract_features(&f, &build_hand_topology(), 0.3),
            Err(GeometryError::MissingLandmarks(BTreeSet::from([8])))
        );
    }

    #[test]
    fn degenerate_joint_carries_name() {
        let mut f = flat_hand();
        f.landmarks[2] = f.landmarks[1];
        match extract_features(&f, &build_hand_topology(), 0.3) {
            Err(GeometryError::DegenerateTriple(Some(name))) => assert_eq!(name, "thumb_cmc"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
