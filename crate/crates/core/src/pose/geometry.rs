//! Joint-angle extraction from one landmark frame.
//!
//! All angles are measured in the subject's torso frame, built from
//! shoulders and hips, so they are unchanged by camera rotation, by
//! translation, and by uniform scaling of the landmark cloud.
//!
//! Conventions (matching the robot's joint signs):
//!
//! - ShoulderPitch: 0 = upper arm pointing forward, +pi/2 = hanging down.
//! - ShoulderRoll: lateral elevation; positive raises the left arm
//!   sideways, negative the right arm.
//! - ElbowRoll: bend magnitude (0 = straight, pi/2 = right angle),
//!   negative on the left side, positive on the right.
//! - ElbowYaw: forearm rotation about the upper arm; 0 when the forearm
//!   lies in the plane of the upper arm and torso-up, on the up side.
//! - HeadYaw: positive turning toward the subject's left.
//! - HeadPitch: 0 = nose directly above the shoulder midpoint, +pi/2 =
//!   nose level with it pointing forward. Upright posture reads a small
//!   positive value; the profile clamp maps it into the robot's range.
//! - WristYaw: always 0, landmarks cannot resolve forearm pronation.

use super::{Landmark, LandmarkFrame, PoseError, Vec3, REQUIRED_LANDMARKS};

/// Landmarks below this visibility are considered unusable.
pub const VISIBILITY_THRESHOLD: f64 = 0.5;

/// Canonical output order of [`compute_joint_angles`].
pub const ANGLE_NAMES: [&str; 12] = [
    "HeadYaw",
    "HeadPitch",
    "LShoulderPitch",
    "LShoulderRoll",
    "LElbowYaw",
    "LElbowRoll",
    "LWristYaw",
    "RShoulderPitch",
    "RShoulderRoll",
    "RElbowYaw",
    "RElbowRoll",
    "RWristYaw",
];

/// Right-handed orthonormal torso basis. `right` points from the
/// subject's right shoulder to the left one (camera-right for a subject
/// facing the camera), `up` along the spine, `forward` out of the chest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsoBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl TorsoBasis {
    /// World vector to torso coordinates (x = right, y = up, z = forward).
    pub fn to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.right), v.dot(self.up), v.dot(self.forward))
    }
}

fn check_visible(name: &'static str, lm: &Landmark) -> Result<(), PoseError> {
    if lm.visibility < VISIBILITY_THRESHOLD {
        Err(PoseError::LowVisibility {
            name,
            visibility: lm.visibility,
            threshold: VISIBILITY_THRESHOLD,
        })
    } else {
        Ok(())
    }
}

/// Build the torso basis from shoulders and hips.
pub fn torso_frame(frame: &LandmarkFrame) -> Result<TorsoBasis, PoseError> {
    check_visible("left_shoulder", &frame.left_shoulder)?;
    check_visible("right_shoulder", &frame.right_shoulder)?;
    check_visible("left_hip", &frame.left_hip)?;
    check_visible("right_hip", &frame.right_hip)?;

    let right = frame
        .left_shoulder
        .pos
        .sub(frame.right_shoulder.pos)
        .normalized()
        .ok_or_else(|| PoseError::DegenerateGeometry("shoulders coincident".into()))?;
    let shoulder_mid = frame.left_shoulder.pos.midpoint(frame.right_shoulder.pos);
    let hip_mid = frame.left_hip.pos.midpoint(frame.right_hip.pos);
    let up_raw = shoulder_mid.sub(hip_mid).normalized().ok_or_else(|| {
        PoseError::DegenerateGeometry("shoulder and hip midpoints coincident".into())
    })?;
    let forward = right.cross(up_raw).normalized().ok_or_else(|| {
        PoseError::DegenerateGeometry("spine parallel to shoulder line".into())
    })?;
    let up = forward.cross(right);
    Ok(TorsoBasis { right, up, forward })
}

/// Angles for one arm, in torso coordinates.
/// `elbow_sign` matches the robot's elbow roll sign convention: -1 for
/// the left arm, +1 for the right. Shoulder roll needs no per-side sign,
/// lateral elevation is naturally positive left and negative right.
fn arm_angles(
    basis: &TorsoBasis,
    shoulder: Vec3,
    elbow: Vec3,
    wrist: Vec3,
    elbow_sign: f64,
    side: &str,
) -> Result<[f64; 4], PoseError> {
    let u = basis.to_local(elbow.sub(shoulder));
    let f = basis.to_local(wrist.sub(elbow));
    let u_hat = u.normalized().ok_or_else(|| {
        PoseError::DegenerateGeometry(format!("{side} shoulder and elbow coincident"))
    })?;

    let pitch = (-u.y).atan2(u.z);
    let roll = (u.x / u.norm()).clamp(-1.0, 1.0).asin();
    let bend = u.cross(f).norm().atan2(u.dot(f));
    let elbow_roll = elbow_sign * bend;

    // Forearm rotation about the upper arm. Reference direction: the
    // torso-up axis projected off the upper arm. Degenerate when the arm
    // hangs along the spine or the elbow is fully extended.
    let up_local = Vec3::new(0.0, 1.0, 0.0);
    let e1 = up_local.sub(u_hat.scale(up_local.dot(u_hat)));
    let f_perp = f.sub(u_hat.scale(f.dot(u_hat)));
    let elbow_yaw = match (e1.normalized(), f_perp.normalized()) {
        (Some(e1), Some(fp)) => {
            let e2 = u_hat.cross(e1);
            fp.dot(e2).atan2(fp.dot(e1))
        }
        _ => 0.0,
    };

    Ok([pitch, roll, elbow_yaw, elbow_roll])
}

/// Extract the 12 joint angles ([`ANGLE_NAMES`] order) from one frame.
/// Errors on any low-visibility required landmark and on degenerate
/// geometry; callers doing sequence retargeting hold the previous
/// frame's angles in those cases.
pub fn compute_joint_angles(frame: &LandmarkFrame) -> Result<[f64; 12], PoseError> {
    for name in REQUIRED_LANDMARKS {
        check_visible(name, frame.required(name))?;
    }
    let basis = torso_frame(frame)?;

    let left = arm_angles(
        &basis,
        frame.left_shoulder.pos,
        frame.left_elbow.pos,
        frame.left_wrist.pos,
        -1.0,
        "left",
    )?;
    let right = arm_angles(
        &basis,
        frame.right_shoulder.pos,
        frame.right_elbow.pos,
        frame.right_wrist.pos,
        1.0,
        "right",
    )?;

    let shoulder_mid = frame.left_shoulder.pos.midpoint(frame.right_shoulder.pos);
    let n = basis.to_local(frame.nose.pos.sub(shoulder_mid));
    if n.norm() < 1e-12 {
        return Err(PoseError::DegenerateGeometry(
            "nose coincides with shoulder midpoint".into(),
        ));
    }
    let head_yaw = n.x.atan2(n.z);
    let head_pitch = n.z.atan2(n.y);

    Ok([
        head_yaw, head_pitch, left[0], left[1], left[2], left[3], 0.0, right[0], right[1],
        right[2], right[3], 0.0,
    ])
}
