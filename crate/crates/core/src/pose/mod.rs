//! Pose-landmark retargeting: human upper-body landmarks to robot joint
//! angles.
//!
//! Input is a JSON-lines file, one frame per line:
//!
//! ```text
//! {"t": 0.033, "points": {"nose": {"x": 0.0, "y": 1.6, "z": 0.1, "v": 0.98}, ...}}
//! ```
//!
//! Nine landmarks are read (nose, shoulders, elbows, wrists, hips, each
//! side); any other points are ignored. All angles are computed in the
//! subject's torso frame, so the mapping is invariant to camera rotation
//! and to uniform scale.

mod geometry;
mod retarget;

pub use geometry::{
    compute_joint_angles, torso_frame, TorsoBasis, ANGLE_NAMES, VISIBILITY_THRESHOLD,
};
pub use retarget::{project_angles, retarget_pose, DEFAULT_SPEED_SCALE};

use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: missing landmark `{name}`")]
    MissingLandmark { line: usize, name: &'static str },
    #[error("line {line}: landmark `{name}` visibility {value} outside [0, 1]")]
    InvalidVisibility {
        line: usize,
        name: String,
        value: f64,
    },
    #[error("frame {index} timestamp {timestamp} does not increase")]
    NonIncreasingTimestamps { index: usize, timestamp: f64 },
    #[error("landmark `{name}` visibility {visibility} below threshold {threshold}")]
    LowVisibility {
        name: &'static str,
        visibility: f64,
        threshold: f64,
    },
    #[error("degenerate pose geometry: {0}")]
    DegenerateGeometry(String),
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("first frame unusable, no reference pose to hold: {source}")]
    FirstFrameUnusable { source: Box<PoseError> },
    #[error("profile joint `{0}` is not produced by pose retargeting")]
    UnsupportedJoint(String),
    #[error("speed scale must be a positive finite number, got {0}")]
    InvalidSpeedScale(f64),
    #[error(transparent)]
    Motion(#[from] crate::motion::MotionError),
}

/// Minimal 3-vector for landmark geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self.scale(1.0 / n))
        }
    }

    pub fn midpoint(self, o: Self) -> Self {
        self.add(o).scale(0.5)
    }
}

/// One body keypoint with an estimator confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub pos: Vec3,
    pub visibility: f64,
}

/// The nine landmarks one retargeting step reads, at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub timestamp: f64,
    pub nose: Landmark,
    pub left_shoulder: Landmark,
    pub right_shoulder: Landmark,
    pub left_elbow: Landmark,
    pub right_elbow: Landmark,
    pub left_wrist: Landmark,
    pub right_wrist: Landmark,
    pub left_hip: Landmark,
    pub right_hip: Landmark,
}

/// Required landmark names, in the upstream estimator's naming scheme.
pub const REQUIRED_LANDMARKS: [&str; 9] = [
    "nose",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
];

impl LandmarkFrame {
    fn required(&self, name: &'static str) -> &Landmark {
        match name {
            "nose" => &self.nose,
            "left_shoulder" => &self.left_shoulder,
            "right_shoulder" => &self.right_shoulder,
            "left_elbow" => &self.left_elbow,
            "right_elbow" => &self.right_elbow,
            "left_wrist" => &self.left_wrist,
            "right_wrist" => &self.right_wrist,
            "left_hip" => &self.left_hip,
            "right_hip" => &self.right_hip,
            _ => unreachable!("not a required landmark: {name}"),
        }
    }
}

/// Ordered landmark frames with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    frames: Vec<LandmarkFrame>,
}

impl PoseSequence {
    pub fn new(frames: Vec<LandmarkFrame>) -> Result<Self, PoseError> {
        for i in 1..frames.len() {
            if frames[i].timestamp <= frames[i - 1].timestamp {
                return Err(PoseError::NonIncreasingTimestamps {
                    index: i,
                    timestamp: frames[i].timestamp,
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Parse a JSON-lines landmark file. Blank lines are skipped; errors
    /// carry 1-based line numbers.
    pub fn parse_jsonl(text: &str) -> Result<Self, PoseError> {
        #[derive(Deserialize)]
        struct RawPoint {
            x: f64,
            y: f64,
            z: f64,
            v: f64,
        }
        #[derive(Deserialize)]
        struct RawFrame {
            t: f64,
            points: BTreeMap<String, RawPoint>,
        }

        let mut frames = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            if raw_line.trim().is_empty() {
                continue;
            }
            let raw: RawFrame =
                serde_json::from_str(raw_line).map_err(|source| PoseError::Json { line, source })?;
            let get = |name: &'static str| -> Result<Landmark, PoseError> {
                let p = raw
                    .points
                    .get(name)
                    .ok_or(PoseError::MissingLandmark { line, name })?;
                if !(0.0..=1.0).contains(&p.v) {
                    return Err(PoseError::InvalidVisibility {
                        line,
                        name: name.to_string(),
                        value: p.v,
                    });
                }
                Ok(Landmark {
                    pos: Vec3::new(p.x, p.y, p.z),
                    visibility: p.v,
                })
            };
            frames.push(LandmarkFrame {
                timestamp: raw.t,
                nose: get("nose")?,
                left_shoulder: get("left_shoulder")?,
                right_shoulder: get("right_shoulder")?,
                left_elbow: get("left_elbow")?,
                right_elbow: get("right_elbow")?,
                left_wrist: get("left_wrist")?,
                right_wrist: get("right_wrist")?,
                left_hip: get("left_hip")?,
                right_hip: get("right_hip")?,
            });
        }
        Self::new(frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_json(t: f64) -> String {
        let mut points = String::new();
        for (i, name) in REQUIRED_LANDMARKS.iter().enumerate() {
            if i > 0 {
                points.push(',');
            }
            points.push_str(&format!(
                r#""{name}": {{"x": {}, "y": 1.0, "z": 0.0, "v": 0.9}}"#,
                i as f64 * 0.1
            ));
        }
        format!(r#"{{"t": {t}, "points": {{{points}}}}}"#)
    }

    #[test]
    fn parses_jsonl_with_extra_points_ignored() {
        let mut line = frame_json(0.5);
        line = line.replace(
            r#""nose""#,
            r#""left_ear": {"x": 0, "y": 0, "z": 0, "v": 1.0}, "nose""#,
        );
        let seq = PoseSequence::parse_jsonl(&format!("{line}\n{}\n", frame_json(1.0))).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames()[0].timestamp, 0.5);
        assert_eq!(seq.frames()[0].nose.visibility, 0.9);
    }

    #[test]
    fn missing_landmark_reports_line_and_name() {
        let bad = frame_json(0.5).replace("left_wrist", "left_pinky");
        match PoseSequence::parse_jsonl(&bad) {
            Err(PoseError::MissingLandmark { line: 1, name }) => assert_eq!(name, "left_wrist"),
            other => panic!("expected missing landmark, got {other:?}"),
        }
    }

    #[test]
    fn visibility_out_of_range_rejected() {
        let bad = frame_json(0.5).replace(r#""v": 0.9}}}"#, r#""v": 1.5}}}"#);
        assert!(matches!(
            PoseSequence::parse_jsonl(&bad),
            Err(PoseError::InvalidVisibility { .. })
        ));
    }

    #[test]
    fn timestamps_must_increase() {
        let text = format!("{}\n{}\n", frame_json(1.0), frame_json(1.0));
        assert!(matches!(
            PoseSequence::parse_jsonl(&text),
            Err(PoseError::NonIncreasingTimestamps { index: 1, .. })
        ));
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = format!("{}\nnot json\n", frame_json(0.0));
        match PoseSequence::parse_jsonl(&text) {
            Err(PoseError::Json { line: 2, .. }) => {}
            other => panic!("expected json error at line 2, got {other:?}"),
        }
    }

    #[test]
    fn vec3_cross_follows_right_hand_rule() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(x.dot(y), 0.0);
        assert!(Vec3::new(0.0, 0.0, 0.0).normalized().is_none());
    }
}
