//! Robot command documents.
//!
//! The executable form of a trajectory: joint names plus `(time, angles)`
//! rows with times measured from motion start. This is the JSON handed to
//! the robot-side runner, so export refuses any trajectory that still has
//! velocity violations.

use super::{
    check_velocity, JointFrame, JointTrajectory, MotionError, RobotProfile,
};
use serde::{Deserialize, Serialize};

/// One timed setpoint for all joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCommand {
    /// Seconds from motion start (first command is 0).
    pub time: f64,
    /// Radians, aligned with the document's `joints` list.
    pub angles: Vec<f64>,
}

/// A complete motion ready for execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandDocument {
    pub profile: String,
    pub joints: Vec<String>,
    pub commands: Vec<JointCommand>,
}

/// Convert a conditioned trajectory to a command document. Times are
/// shifted so the motion starts at 0. Trajectories with remaining
/// velocity violations are refused.
pub fn export_commands(
    traj: &JointTrajectory,
    profile: &RobotProfile,
) -> Result<CommandDocument, MotionError> {
    if traj.is_empty() {
        return Err(MotionError::EmptyTrajectory);
    }
    let violations = check_velocity(traj, profile)?;
    if !violations.is_empty() {
        return Err(MotionError::SafetyViolations(violations));
    }
    let t0 = traj.frames()[0].timestamp;
    let commands = traj
        .frames()
        .iter()
        .map(|f| JointCommand {
            time: f.timestamp - t0,
            angles: f.angles.clone(),
        })
        .collect();
    Ok(CommandDocument {
        profile: profile.name().to_string(),
        joints: profile.joints().iter().map(|j| j.name.clone()).collect(),
        commands,
    })
}

/// Rebuild a trajectory from a command document, verifying the joint
/// list matches the profile exactly (same names, same order).
pub fn import_commands(
    doc: &CommandDocument,
    profile: &RobotProfile,
) -> Result<JointTrajectory, MotionError> {
    let expected: Vec<&str> = profile.joints().iter().map(|j| j.name.as_str()).collect();
    let actual: Vec<&str> = doc.joints.iter().map(|s| s.as_str()).collect();
    if expected != actual {
        return Err(MotionError::CommandImport {
            reason: format!(
                "joint list mismatch: document has {:?}, profile `{}` expects {:?}",
                actual,
                profile.name(),
                expected
            ),
        });
    }
    if doc.commands.is_empty() {
        return Err(MotionError::CommandImport {
            reason: "document has no commands".into(),
        });
    }
    if doc.commands[0].time != 0.0 {
        return Err(MotionError::CommandImport {
            reason: format!("first command time must be 0, got {}", doc.commands[0].time),
        });
    }
    let frames = doc
        .commands
        .iter()
        .map(|c| JointFrame::new(c.time, c.angles.clone()))
        .collect();
    JointTrajectory::new(profile.name(), frames)
}
