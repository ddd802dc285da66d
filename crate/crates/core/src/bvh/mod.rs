//! BVH motion-capture files: parsing, serialization, channel extraction,
//! and retargeting onto a robot profile.
//!
//! The parser keeps the full HIERARCHY tree and the raw MOTION matrix so a
//! parse-serialize round trip preserves the skeleton exactly. Retargeting
//! maps selected rotation channels onto robot joints via a per-joint
//! scale and offset, then runs the standard safety conditioning pass.

mod parser;
mod retarget;

pub use retarget::{parse_mapping, project_channels, retarget_bvh, ChannelMapping, MappingEntry};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BvhError {
    #[error("line {line}: expected {expected}, found `{found}`")]
    UnexpectedToken {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("missing {0} section")]
    MissingSection(&'static str),
    #[error("line {line}: joint `{joint}` has unsupported channel `{channel}`")]
    UnknownChannel {
        line: usize,
        joint: String,
        channel: String,
    },
    #[error("line {line}: frame {frame} has {actual} values, skeleton declares {expected} channels")]
    ChannelCountMismatch {
        line: usize,
        frame: usize,
        expected: usize,
        actual: usize,
    },
    #[error("line {line}: `{token}` is not a number")]
    NonNumericValue { line: usize, token: String },
    #[error("header declares {declared} frames but motion data has {actual}")]
    FrameCountMismatch { declared: usize, actual: usize },
    #[error("frame time must be > 0, got {0}")]
    InvalidFrameTime(f64),
    #[error("skeleton has no joint named `{0}`")]
    NoSuchJoint(String),
    #[error("joint `{joint}` has no `{channel}` channel")]
    NoSuchChannel { joint: String, channel: String },
    #[error("`{joint}.{channel}` is a position channel; only rotations can drive robot joints")]
    PositionChannel { joint: String, channel: String },
    #[error("mapping line {line}: {reason}")]
    MappingParse { line: usize, reason: String },
    #[error("mapping drives no robot joint known to profile `{0}`")]
    EmptyMapping(String),
    #[error(transparent)]
    Motion(#[from] crate::motion::MotionError),
}

/// The six BVH channel kinds, in canonical spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "Xposition" => Some(Self::Xposition),
            "Yposition" => Some(Self::Yposition),
            "Zposition" => Some(Self::Zposition),
            "Xrotation" => Some(Self::Xrotation),
            "Yrotation" => Some(Self::Yrotation),
            "Zrotation" => Some(Self::Zrotation),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Xposition => "Xposition",
            Self::Yposition => "Yposition",
            Self::Zposition => "Zposition",
            Self::Xrotation => "Xrotation",
            Self::Yrotation => "Yrotation",
            Self::Zrotation => "Zrotation",
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Self::Xrotation | Self::Yrotation | Self::Zrotation)
    }
}

/// One skeleton node. `End Site` nodes keep an empty channel list and the
/// reserved name `End Site`.
#[derive(Debug, Clone, PartialEq)]
pub struct BvhJoint {
    pub name: String,
    pub offset: [f64; 3],
    pub channels: Vec<Channel>,
    pub children: Vec<BvhJoint>,
}

/// A parsed BVH document: skeleton, timing, and the motion matrix in
/// file order (one row per frame, one column per declared channel).
#[derive(Debug, Clone, PartialEq)]
pub struct BvhDocument {
    pub root: BvhJoint,
    pub frame_time: f64,
    pub frames: Vec<Vec<f64>>,
}

impl BvhDocument {
    pub fn parse(text: &str) -> Result<Self, BvhError> {
        parser::parse(text)
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Total channel count across the skeleton, which is the width of
    /// every motion row.
    pub fn channel_count(&self) -> usize {
        fn walk(j: &BvhJoint) -> usize {
            j.channels.len() + j.children.iter().map(walk).sum::<usize>()
        }
        walk(&self.root)
    }

    /// Render back to BVH text. Numbers use the shortest exact decimal
    /// form, so serialize(parse(x)) is stable: a second round trip
    /// reproduces the text byte for byte.
    pub fn serialize(&self) -> String {
        parser::serialize(self)
    }

    /// Flat (depth-first) column index of `joint`'s `channel`, matching
    /// motion-row layout.
    pub fn channel_index(&self, joint: &str, channel: Channel) -> Result<usize, BvhError> {
        fn walk(
            node: &BvhJoint,
            joint: &str,
            channel: Channel,
            base: &mut usize,
            seen: &mut bool,
        ) -> Option<usize> {
            if node.name == joint {
                *seen = true;
                if let Some(pos) = node.channels.iter().position(|&c| c == channel) {
                    return Some(*base + pos);
                }
            }
            *base += node.channels.len();
            for child in &node.children {
                if let Some(idx) = walk(child, joint, channel, base, seen) {
                    return Some(idx);
                }
            }
            None
        }
        let mut base = 0;
        let mut seen = false;
        match walk(&self.root, joint, channel, &mut base, &mut seen) {
            Some(idx) => Ok(idx),
            None if seen => Err(BvhError::NoSuchChannel {
                joint: joint.to_string(),
                channel: channel.name().to_string(),
            }),
            None => Err(BvhError::NoSuchJoint(joint.to_string())),
        }
    }

    /// Extract one rotation channel as a per-frame series, degrees.
    /// Position channels are refused: they cannot drive an angular joint.
    pub fn extract_channel(&self, joint: &str, channel: Channel) -> Result<Vec<f64>, BvhError> {
        let idx = self.channel_index(joint, channel)?;
        if !channel.is_rotation() {
            return Err(BvhError::PositionChannel {
                joint: joint.to_string(),
                channel: channel.name().to_string(),
            });
        }
        Ok(self.frames.iter().map(|row| row[idx]).collect())
    }

    /// All joint names, depth-first, excluding end sites.
    pub fn joint_names(&self) -> Vec<&str> {
        fn walk<'a>(j: &'a BvhJoint, out: &mut Vec<&'a str>) {
            if j.name != "End Site" {
                out.push(j.name.as_str());
            }
            for c in &j.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}
