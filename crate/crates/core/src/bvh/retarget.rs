//! Mapping BVH rotation channels onto robot joints.
//!
//! A mapping file pairs robot joints with source channels:
//!
//! ```text
//! map LShoulderPitch bvh=LeftArm channel=Xrotation scale=-1.0 offset=1.5708
//! neutral HeadPitch -0.2
//! ```
//!
//! Unmapped robot joints hold their `neutral` angle (default 0). Source
//! values are degrees; `scale` and `offset` produce radians:
//! `angle = scale * degrees * PI / 180 + offset`.

use super::{BvhDocument, BvhError, Channel};
use crate::motion::{self, JointFrame, JointTrajectory, RobotProfile};
use crate::textcfg;

#[derive(Debug, Clone, PartialEq)]
pub struct MappingEntry {
    pub robot_joint: String,
    pub bvh_joint: String,
    pub channel: Channel,
    pub scale: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelMapping {
    pub entries: Vec<MappingEntry>,
    pub neutral: Vec<(String, f64)>,
}

impl ChannelMapping {
    pub fn entry_for(&self, robot_joint: &str) -> Option<&MappingEntry> {
        self.entries.iter().find(|e| e.robot_joint == robot_joint)
    }

    pub fn neutral_for(&self, robot_joint: &str) -> f64 {
        self.neutral
            .iter()
            .find(|(name, _)| name == robot_joint)
            .map(|&(_, angle)| angle)
            .unwrap_or(0.0)
    }
}

pub fn parse_mapping(text: &str) -> Result<ChannelMapping, BvhError> {
    let mut mapping = ChannelMapping::default();
    for line in textcfg::scan(text) {
        let fail = |reason: String| BvhError::MappingParse {
            line: line.line_no,
            reason,
        };
        match line.keyword.as_str() {
            "map" => {
                let robot_joint = line
                    .positional
                    .first()
                    .ok_or_else(|| fail("`map` needs a robot joint name".into()))?
                    .clone();
                if mapping.entry_for(&robot_joint).is_some() {
                    return Err(fail(format!("joint `{robot_joint}` mapped twice")));
                }
                let bvh_joint = line
                    .value("bvh")
                    .ok_or_else(|| fail("missing `bvh=` source joint".into()))?
                    .to_string();
                let channel_token = line
                    .value("channel")
                    .ok_or_else(|| fail("missing `channel=`".into()))?;
                let channel = Channel::parse(channel_token)
                    .ok_or_else(|| fail(format!("unknown channel `{channel_token}`")))?;
                if !channel.is_rotation() {
                    return Err(fail(format!(
                        "channel `{channel_token}` is a position channel"
                    )));
                }
                let scale = match line.value("scale") {
                    Some(_) => line.f64_value("scale").map_err(fail)?,
                    None => 1.0,
                };
                let offset = match line.value("offset") {
                    Some(_) => line.f64_value("offset").map_err(fail)?,
                    None => 0.0,
                };
                mapping.entries.push(MappingEntry {
                    robot_joint,
                    bvh_joint,
                    channel,
                    scale,
                    offset,
                });
            }
            "neutral" => {
                let joint = line
                    .positional
                    .first()
                    .ok_or_else(|| fail("`neutral` needs a joint name".into()))?
                    .clone();
                let angle = line
                    .positional
                    .get(1)
                    .ok_or_else(|| fail("`neutral` needs an angle".into()))?
                    .parse::<f64>()
                    .map_err(|_| fail("`neutral` angle is not a number".into()))?;
                mapping.neutral.push((joint, angle));
            }
            other => return Err(fail(format!("unknown keyword `{other}`"))),
        }
    }
    Ok(mapping)
}

/// Project mapped channels into a raw robot trajectory: one frame per BVH
/// frame, timestamps at `i * frame_time`, no conditioning applied.
pub fn project_channels(
    doc: &BvhDocument,
    mapping: &ChannelMapping,
    profile: &RobotProfile,
) -> Result<JointTrajectory, BvhError> {
    for entry in &mapping.entries {
        if profile.joint_index(&entry.robot_joint).is_none() {
            return Err(BvhError::MappingParse {
                line: 0,
                reason: format!(
                    "mapping drives `{}`, which profile `{}` does not have",
                    entry.robot_joint,
                    profile.name()
                ),
            });
        }
    }
    let driven = profile
        .joints()
        .iter()
        .filter(|j| mapping.entry_for(&j.name).is_some())
        .count();
    if driven == 0 {
        return Err(BvhError::EmptyMapping(profile.name().to_string()));
    }

    // Column plan per robot joint: either a source channel series or a
    // constant neutral angle.
    enum Column {
        Series(Vec<f64>, f64, f64),
        Constant(f64),
    }
    let mut columns = Vec::with_capacity(profile.joints().len());
    for joint in profile.joints() {
        match mapping.entry_for(&joint.name) {
            Some(entry) => {
                let series = doc.extract_channel(&entry.bvh_joint, entry.channel)?;
                columns.push(Column::Series(series, entry.scale, entry.offset));
            }
            None => columns.push(Column::Constant(mapping.neutral_for(&joint.name))),
        }
    }

    let deg = std::f64::consts::PI / 180.0;
    let frames = (0..doc.frame_count())
        .map(|i| {
            let angles = columns
                .iter()
                .map(|col| match col {
                    Column::Series(series, scale, offset) => scale * series[i] * deg + offset,
                    Column::Constant(angle) => *angle,
                })
                .collect();
            JointFrame::new(i as f64 * doc.frame_time, angles)
        })
        .collect();
    Ok(JointTrajectory::new(profile.name(), frames)?)
}

/// Full mocap-to-robot pipeline: project, then downsample, clamp, and
/// velocity-check. Violations surviving conditioning are an error.
pub fn retarget_bvh(
    doc: &BvhDocument,
    mapping: &ChannelMapping,
    profile: &RobotProfile,
    factor: usize,
) -> Result<JointTrajectory, BvhError> {
    let raw = project_channels(doc, mapping, profile)?;
    Ok(motion::condition(&raw, profile, factor)?)
}
