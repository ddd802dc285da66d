//! Sequence-level pose retargeting with timing dilation.

use super::geometry::{compute_joint_angles, ANGLE_NAMES};
use super::{PoseError, PoseSequence};
use crate::motion::{self, JointFrame, JointTrajectory, RobotProfile};

/// Default timing dilation: source motion is played back 12x slower,
/// dividing every commanded velocity by 12.
pub const DEFAULT_SPEED_SCALE: f64 = 12.0;

/// Compute raw joint angles for every frame, without clamping or
/// velocity checks.
///
/// Timestamps dilate around the first frame: `t_i' = t_0 + speed_scale *
/// (t_i - t_0)`. Frames whose angles cannot be computed (low-visibility
/// landmarks, degenerate geometry) hold the previous frame's angles and
/// log a warning; an unusable first frame is a hard error since there is
/// nothing to hold.
pub fn project_angles(
    seq: &PoseSequence,
    profile: &RobotProfile,
    speed_scale: f64,
) -> Result<JointTrajectory, PoseError> {
    if !(speed_scale > 0.0) || !speed_scale.is_finite() {
        return Err(PoseError::InvalidSpeedScale(speed_scale));
    }
    if seq.is_empty() {
        return Err(PoseError::EmptySequence);
    }
    // Profile joint -> canonical angle slot, fixed once per call.
    let slots: Vec<usize> = profile
        .joints()
        .iter()
        .map(|j| {
            ANGLE_NAMES
                .iter()
                .position(|&n| n == j.name)
                .ok_or_else(|| PoseError::UnsupportedJoint(j.name.clone()))
        })
        .collect::<Result<_, _>>()?;

    let t0 = seq.frames()[0].timestamp;
    let mut held: Option<[f64; 12]> = None;
    let mut frames = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames().iter().enumerate() {
        let angles = match compute_joint_angles(frame) {
            Ok(a) => a,
            Err(err @ (PoseError::LowVisibility { .. } | PoseError::DegenerateGeometry(_))) => {
                match held {
                    Some(prev) => {
                        log::warn!(
                            "frame {i} (t={}): holding previous angles: {err}",
                            frame.timestamp
                        );
                        prev
                    }
                    None => {
                        return Err(PoseError::FirstFrameUnusable {
                            source: Box::new(err),
                        })
                    }
                }
            }
            Err(err) => return Err(err),
        };
        held = Some(angles);
        let timestamp = t0 + speed_scale * (frame.timestamp - t0);
        frames.push(JointFrame::new(
            timestamp,
            slots.iter().map(|&s| angles[s]).collect(),
        ));
    }
    Ok(JointTrajectory::new(profile.name(), frames)?)
}

/// Full mimic path: project angles, clamp into joint ranges, and verify
/// velocities. Violations that survive the dilation are an error.
pub fn retarget_pose(
    seq: &PoseSequence,
    profile: &RobotProfile,
    speed_scale: f64,
) -> Result<JointTrajectory, PoseError> {
    let raw = project_angles(seq, profile, speed_scale)?;
    let clamped = motion::clamp_trajectory(&raw, profile)?;
    let violations = motion::check_velocity(&clamped, profile)?;
    if violations.is_empty() {
        Ok(clamped)
    } else {
        Err(PoseError::Motion(motion::MotionError::SafetyViolations(
            violations,
        )))
    }
}
