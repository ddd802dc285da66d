//! Plain-text robot profile format.
//!
//! ```text
//! profile pepper_upper_body
//! joint HeadYaw min=-2.0857 max=2.0857 vmax=7.33998
//! ...exactly 12 joint lines...
//! ```

use super::{JointSpec, MotionError, RobotProfile, JOINT_COUNT};
use crate::textcfg;

pub(super) fn parse(text: &str) -> Result<RobotProfile, MotionError> {
    let mut name: Option<String> = None;
    let mut joints: Vec<JointSpec> = Vec::new();

    for line in textcfg::scan(text) {
        let fail = |reason: String| MotionError::ProfileParse {
            line: line.line_no,
            reason,
        };
        match line.keyword.as_str() {
            "profile" => {
                if name.is_some() {
                    return Err(fail("duplicate `profile` line".into()));
                }
                let id = line
                    .positional
                    .first()
                    .ok_or_else(|| fail("`profile` needs a name".into()))?;
                name = Some(id.clone());
            }
            "joint" => {
                let joint = line
                    .positional
                    .first()
                    .ok_or_else(|| fail("`joint` needs a name".into()))?
                    .clone();
                let num = |key: &str| {
                    line.f64_value(key)
                        .map_err(|e| fail(format!("joint `{joint}`: {e}")))
                };
                let spec = JointSpec::new(&joint, num("min")?, num("max")?, num("vmax")?)
                    .map_err(|e| fail(e.to_string()))?;
                joints.push(spec);
            }
            other => {
                return Err(fail(format!("unknown keyword `{other}`")));
            }
        }
    }

    let name = name.ok_or(MotionError::InvalidProfile {
        reason: "missing `profile` line".into(),
    })?;
    if joints.len() != JOINT_COUNT {
        return Err(MotionError::InvalidProfile {
            reason: format!("expected {JOINT_COUNT} `joint` lines, got {}", joints.len()),
        });
    }
    RobotProfile::new(name, joints)
}
