//! Robot kinematic profile, joint trajectories, and safety conditioning.
//!
//! A trajectory is a timestamped sequence of 12-joint angle vectors; the
//! column order is fixed by the [`RobotProfile`]. Both retargeting paths
//! (BVH mocap and pose landmarks) produce trajectories that must pass
//! through [`clamp_trajectory`], [`downsample`], and [`check_velocity`]
//! before export. Conditioning never rescales motion silently: if velocity
//! violations survive, the pipeline errors.

mod command;
mod profile;

pub use command::{export_commands, import_commands, CommandDocument, JointCommand};

use serde::Serialize;
use thiserror::Error;

/// Number of robot joints; every trajectory column vector has this length.
pub const JOINT_COUNT: usize = 12;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("trajectory has {actual} columns but profile `{profile}` has {expected} joints")]
    DimensionMismatch {
        profile: String,
        expected: usize,
        actual: usize,
    },
    #[error("operation requires a non-empty trajectory")]
    EmptyTrajectory,
    #[error("downsample factor must be >= 1")]
    InvalidFactor,
    #[error("timestamps are not strictly increasing at frame {index}")]
    NonIncreasingTimestamps { index: usize },
    #[error("frame {index} timestamp {timestamp} is negative")]
    NegativeTimestamp { index: usize, timestamp: f64 },
    #[error("frame {index} has {actual} angles, expected {expected}")]
    RaggedFrame {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("joint `{joint}`: {reason}")]
    InvalidJointSpec { joint: String, reason: String },
    #[error("invalid profile: {reason}")]
    InvalidProfile { reason: String },
    #[error("profile config line {line}: {reason}")]
    ProfileParse { line: usize, reason: String },
    #[error("{} joint velocity violation(s); first: {}", .0.len(), .0[0])]
    SafetyViolations(Vec<VelocityViolation>),
    #[error("command document invalid: {reason}")]
    CommandImport { reason: String },
}

/// One joint's mechanical envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    /// Lower angle bound, radians.
    pub min_angle: f64,
    /// Upper angle bound, radians.
    pub max_angle: f64,
    /// Maximum commanded speed, radians per second.
    pub max_velocity: f64,
}

impl JointSpec {
    pub fn new(
        name: impl Into<String>,
        min_angle: f64,
        max_angle: f64,
        max_velocity: f64,
    ) -> Result<Self, MotionError> {
        let name = name.into();
        let bad = |reason: &str| MotionError::InvalidJointSpec {
            joint: name.clone(),
            reason: reason.to_string(),
        };
        if name.is_empty() {
            return Err(bad("empty joint name"));
        }
        if min_angle.is_nan() || max_angle.is_nan() || max_velocity.is_nan() {
            return Err(bad("NaN in joint spec"));
        }
        if !(min_angle < max_angle) {
            return Err(bad("min_angle must be < max_angle"));
        }
        if !(max_velocity > 0.0) {
            return Err(bad("max_velocity must be > 0"));
        }
        Ok(Self {
            name,
            min_angle,
            max_angle,
            max_velocity,
        })
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.min(self.max_angle).max(self.min_angle)
    }
}

/// The robot's kinematic envelope: exactly 12 uniquely named joints whose
/// order is the canonical column order of every trajectory.
#[derive(Debug, Clone)]
pub struct RobotProfile {
    name: String,
    joints: Vec<JointSpec>,
}

impl RobotProfile {
    pub fn new(name: impl Into<String>, joints: Vec<JointSpec>) -> Result<Self, MotionError> {
        if joints.len() != JOINT_COUNT {
            return Err(MotionError::InvalidProfile {
                reason: format!("expected {JOINT_COUNT} joints, got {}", joints.len()),
            });
        }
        for (i, a) in joints.iter().enumerate() {
            if joints[..i].iter().any(|b| b.name == a.name) {
                return Err(MotionError::InvalidProfile {
                    reason: format!("duplicate joint name `{}`", a.name),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            joints,
        })
    }

    /// Parse a profile from its plain-text config format.
    pub fn from_config_str(text: &str) -> Result<Self, MotionError> {
        profile::parse(text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn joint_index(&self, joint: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == joint)
    }
}

/// One trajectory row: a timestamp plus one angle per profile joint.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFrame {
    /// Seconds from an arbitrary epoch (non-negative).
    pub timestamp: f64,
    /// Radians, column i addressing profile joint i.
    pub angles: Vec<f64>,
}

impl JointFrame {
    pub fn new(timestamp: f64, angles: Vec<f64>) -> Self {
        Self { timestamp, angles }
    }
}

/// Timestamped n×12 joint-angle matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    profile_name: String,
    frames: Vec<JointFrame>,
}

impl JointTrajectory {
    /// Build a trajectory, validating frame shape and timestamp order.
    pub fn new(
        profile_name: impl Into<String>,
        frames: Vec<JointFrame>,
    ) -> Result<Self, MotionError> {
        let width = frames.first().map(|f| f.angles.len()).unwrap_or(0);
        for (i, frame) in frames.iter().enumerate() {
            if frame.angles.len() != width {
                return Err(MotionError::RaggedFrame {
                    index: i,
                    expected: width,
                    actual: frame.angles.len(),
                });
            }
            if frame.timestamp < 0.0 || frame.timestamp.is_nan() {
                return Err(MotionError::NegativeTimestamp {
                    index: i,
                    timestamp: frame.timestamp,
                });
            }
            if i > 0 && frame.timestamp <= frames[i - 1].timestamp {
                return Err(MotionError::NonIncreasingTimestamps { index: i });
            }
        }
        Ok(Self {
            profile_name: profile_name.into(),
            frames,
        })
    }

    pub fn profile_name(&self) -> &str {
        &self.profile_name
    }

    pub fn frames(&self) -> &[JointFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Angle columns per frame (0 for an empty trajectory).
    pub fn width(&self) -> usize {
        self.frames.first().map(|f| f.angles.len()).unwrap_or(0)
    }

    /// Last-minus-first timestamp; 0 for trajectories shorter than 2 frames.
    pub fn duration(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => 0.0,
        }
    }
}

/// One commanded inter-frame speed above a joint's limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityViolation {
    pub joint: String,
    pub joint_index: usize,
    /// Index of the earlier frame of the offending pair.
    pub frame_index: usize,
    /// Commanded speed |Δθ|/Δt, radians per second.
    pub velocity: f64,
    /// The joint's max_velocity.
    pub limit: f64,
}

impl std::fmt::Display for VelocityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} at frame {}: {:.4} rad/s > {:.4} rad/s",
            self.joint, self.frame_index, self.velocity, self.limit
        )
    }
}

fn require_width(traj: &JointTrajectory, profile: &RobotProfile) -> Result<(), MotionError> {
    if traj.is_empty() {
        return Ok(());
    }
    if traj.width() != profile.joints().len() {
        return Err(MotionError::DimensionMismatch {
            profile: profile.name().to_string(),
            expected: profile.joints().len(),
            actual: traj.width(),
        });
    }
    Ok(())
}

/// Clamp every angle into its joint's safe range. Timestamps and frame
/// count are untouched; the operation is idempotent.
pub fn clamp_trajectory(
    traj: &JointTrajectory,
    profile: &RobotProfile,
) -> Result<JointTrajectory, MotionError> {
    require_width(traj, profile)?;
    let mut clamped_samples = 0usize;
    let frames = traj
        .frames()
        .iter()
        .map(|frame| {
            let angles = frame
                .angles
                .iter()
                .zip(profile.joints())
                .map(|(&a, spec)| {
                    let c = spec.clamp(a);
                    if c != a {
                        clamped_samples += 1;
                    }
                    c
                })
                .collect();
            JointFrame::new(frame.timestamp, angles)
        })
        .collect();
    if clamped_samples > 0 {
        log::warn!(
            "clamped {clamped_samples} angle sample(s) outside the limits of profile `{}`",
            profile.name()
        );
    }
    JointTrajectory::new(traj.profile_name(), frames)
}

/// Keep frames at indices 0, factor, 2·factor, … with their original
/// timestamps, always force-including the final frame. Total duration is
/// preserved exactly; stretched inter-keyframe intervals are what lowers
/// the commanded velocity.
pub fn downsample(traj: &JointTrajectory, factor: usize) -> Result<JointTrajectory, MotionError> {
    if factor == 0 {
        return Err(MotionError::InvalidFactor);
    }
    if traj.is_empty() {
        return Err(MotionError::EmptyTrajectory);
    }
    let last = traj.len() - 1;
    let mut frames: Vec<JointFrame> = traj
        .frames()
        .iter()
        .step_by(factor)
        .cloned()
        .collect();
    if last % factor != 0 {
        frames.push(traj.frames()[last].clone());
    }
    JointTrajectory::new(traj.profile_name(), frames)
}

/// Report every consecutive-frame joint speed above its limit. An empty
/// list means the trajectory is safe to command.
pub fn check_velocity(
    traj: &JointTrajectory,
    profile: &RobotProfile,
) -> Result<Vec<VelocityViolation>, MotionError> {
    require_width(traj, profile)?;
    let mut violations = Vec::new();
    for (i, pair) in traj.frames().windows(2).enumerate() {
        let dt = pair[1].timestamp - pair[0].timestamp;
        if dt <= 0.0 {
            return Err(MotionError::NonIncreasingTimestamps { index: i + 1 });
        }
        for (j, spec) in profile.joints().iter().enumerate() {
            let velocity = (pair[1].angles[j] - pair[0].angles[j]).abs() / dt;
            if velocity > spec.max_velocity {
                violations.push(VelocityViolation {
                    joint: spec.name.clone(),
                    joint_index: j,
                    frame_index: i,
                    velocity,
                    limit: spec.max_velocity,
                });
            }
        }
    }
    Ok(violations)
}

/// Full conditioning pass: downsample, clamp, then verify velocities.
/// Surviving violations are an error, never silently rescaled.
pub fn condition(
    traj: &JointTrajectory,
    profile: &RobotProfile,
    factor: usize,
) -> Result<JointTrajectory, MotionError> {
    let traj = downsample(traj, factor)?;
    let traj = clamp_trajectory(&traj, profile)?;
    let violations = check_velocity(&traj, profile)?;
    if violations.is_empty() {
        Ok(traj)
    } else {
        Err(MotionError::SafetyViolations(violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn test_profile() -> RobotProfile {
        let joints = (0..JOINT_COUNT)
            .map(|i| JointSpec::new(format!("J{i}"), -2.0857, 2.0857, 7.0).unwrap())
            .collect();
        RobotProfile::new("test", joints).unwrap()
    }

    fn flat(traj_angles: &[(f64, f64)]) -> JointTrajectory {
        // All 12 columns carry the same angle; timestamp per row.
        let frames = traj_angles
            .iter()
            .map(|&(t, a)| JointFrame::new(t, vec![a; JOINT_COUNT]))
            .collect();
        JointTrajectory::new("test", frames).unwrap()
    }

    #[test]
    fn joint_spec_rejects_inverted_bounds() {
        assert!(matches!(
            JointSpec::new("A", 1.0, -1.0, 1.0),
            Err(MotionError::InvalidJointSpec { .. })
        ));
        assert!(JointSpec::new("A", -1.0, 1.0, 0.0).is_err());
        assert!(JointSpec::new("A", -1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn profile_requires_twelve_unique_joints() {
        let mut joints: Vec<JointSpec> = (0..11)
            .map(|i| JointSpec::new(format!("J{i}"), -1.0, 1.0, 1.0).unwrap())
            .collect();
        assert!(RobotProfile::new("p", joints.clone()).is_err());
        joints.push(JointSpec::new("J0", -1.0, 1.0, 1.0).unwrap());
        let err = RobotProfile::new("p", joints).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn trajectory_rejects_unordered_timestamps() {
        let frames = vec![
            JointFrame::new(0.0, vec![0.0; JOINT_COUNT]),
            JointFrame::new(0.0, vec![0.0; JOINT_COUNT]),
        ];
        assert!(matches!(
            JointTrajectory::new("test", frames),
            Err(MotionError::NonIncreasingTimestamps { index: 1 })
        ));
    }

    #[test]
    fn clamp_pulls_to_upper_bound() {
        let traj = flat(&[(0.0, 3.0)]);
        let out = clamp_trajectory(&traj, &test_profile()).unwrap();
        assert_eq!(out.frames()[0].angles[0], 2.0857);
    }

    #[test]
    fn clamp_leaves_in_range_angles() {
        let traj = flat(&[(0.0, 0.5)]);
        let out = clamp_trajectory(&traj, &test_profile()).unwrap();
        assert_eq!(out.frames()[0].angles, vec![0.5; JOINT_COUNT]);
        assert_eq!(out.frames()[0].timestamp, 0.0);
    }

    #[test]
    fn clamp_rejects_width_mismatch() {
        let frames = vec![JointFrame::new(0.0, vec![0.0; 7])];
        let traj = JointTrajectory::new("test", frames).unwrap();
        assert!(matches!(
            clamp_trajectory(&traj, &test_profile()),
            Err(MotionError::DimensionMismatch { expected: 12, actual: 7, .. })
        ));
    }

    #[test]
    fn downsample_keeps_original_timestamps_and_last_frame() {
        let rows: Vec<(f64, f64)> = (0..24).map(|i| (i as f64 / 60.0, i as f64)).collect();
        let out = downsample(&flat(&rows), 12).unwrap();
        let ts: Vec<f64> = out.frames().iter().map(|f| f.timestamp).collect();
        assert_eq!(ts, vec![0.0, 12.0 / 60.0, 23.0 / 60.0]);
        assert_eq!(out.duration(), 23.0 / 60.0);
    }

    #[test]
    fn downsample_factor_one_is_identity() {
        let traj = flat(&[(0.0, 1.0), (0.5, 2.0), (1.0, 0.5)]);
        assert_eq!(downsample(&traj, 1).unwrap(), traj);
    }

    #[test]
    fn downsample_rejects_empty_and_zero_factor() {
        let empty = JointTrajectory::new("test", vec![]).unwrap();
        assert!(matches!(
            downsample(&empty, 2),
            Err(MotionError::EmptyTrajectory)
        ));
        let traj = flat(&[(0.0, 0.0)]);
        assert!(matches!(downsample(&traj, 0), Err(MotionError::InvalidFactor)));
    }

    #[test]
    fn downsample_never_raises_peak_velocity_on_sine() {
        // 60 Hz sine sweep across all joints.
        let rows: Vec<(f64, f64)> = (0..120)
            .map(|i| {
                let t = i as f64 / 60.0;
                (t, (2.0 * std::f64::consts::PI * 1.5 * t).sin())
            })
            .collect();
        let traj = flat(&rows);
        let out = downsample(&traj, 12).unwrap();
        assert!(peak_velocity(&out) <= peak_velocity(&traj) + 1e-12);
    }

    pub(crate) fn peak_velocity(traj: &JointTrajectory) -> f64 {
        traj.frames()
            .windows(2)
            .flat_map(|pair| {
                let dt = pair[1].timestamp - pair[0].timestamp;
                pair[0]
                    .angles
                    .iter()
                    .zip(&pair[1].angles)
                    .map(move |(a, b)| (b - a).abs() / dt)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_trajectory_has_no_violations() {
        let traj = flat(&[(0.0, 0.4), (0.1, 0.4), (0.2, 0.4)]);
        assert!(check_velocity(&traj, &test_profile()).unwrap().is_empty());
    }

    #[test]
    fn velocity_violation_reports_commanded_speed() {
        let traj = flat(&[(0.0, 0.0), (0.1, 2.0)]);
        let violations = check_velocity(&traj, &test_profile()).unwrap();
        // Every one of the 12 columns moves 2 rad in 0.1 s.
        assert_eq!(violations.len(), JOINT_COUNT);
        let v = &violations[0];
        assert_eq!(v.frame_index, 0);
        assert!((v.velocity - 20.0).abs() < 1e-12);
        assert_eq!(v.limit, 7.0);
    }

    #[test]
    fn condition_orders_downsample_clamp_check_and_fails_loud() {
        // 3 rad exceeds the ±2.0857 bound; clamping happens after downsample.
        let traj = flat(&[(0.0, 0.0), (0.1, 3.0)]);
        match condition(&traj, &test_profile(), 1) {
            Err(MotionError::SafetyViolations(v)) => {
                // Post-clamp speed: 2.0857 rad over 0.1 s.
                assert!((v[0].velocity - 20.857).abs() < 1e-9);
            }
            other => panic!("expected safety violations, got {other:?}"),
        }
        // Slow enough version passes and is clamped.
        let traj = flat(&[(0.0, 0.0), (1.0, 3.0)]);
        let out = condition(&traj, &test_profile(), 1).unwrap();
        assert_eq!(out.frames()[1].angles[0], 2.0857);
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(angles in proptest::collection::vec(-10.0f64..10.0, JOINT_COUNT)) {
            let profile = test_profile();
            let traj = JointTrajectory::new(
                "test",
                vec![JointFrame::new(0.0, angles)],
            ).unwrap();
            let once = clamp_trajectory(&traj, &profile).unwrap();
            let twice = clamp_trajectory(&once, &profile).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn downsample_frame_count_formula(n in 1usize..200, factor in 1usize..20) {
            let rows: Vec<(f64, f64)> = (0..n).map(|i| (i as f64 * 0.05, 0.0)).collect();
            let out = downsample(&flat(&rows), factor).unwrap();
            let expected = (n - 1).div_ceil(factor) + 1;
            prop_assert_eq!(out.len(), expected);
            // First and last source frames always survive with duration intact.
            prop_assert_eq!(out.frames()[0].timestamp, 0.0);
            prop_assert_eq!(out.frames().last().unwrap().timestamp, (n - 1) as f64 * 0.05);
        }
    }
}
