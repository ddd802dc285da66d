//! Toolkit for gesture-aware medical interpreter robots.
//!
//! Three concerns live here:
//!
//! - **Motion**: a 12-joint humanoid trajectory model with safety
//!   conditioning (clamping, keyframe downsampling, velocity checks) and two
//!   retargeting front ends, BVH mocap files ([`bvh`]) and pose-landmark
//!   sequences ([`pose`]).
//! - **Language**: a client for a locally hosted LLM generate endpoint
//!   ([`llm`]) and a few-shot speech-act classifier that decides whether an
//!   utterance should trigger a gesture ([`gsd`]).
//! - **Data**: corpus construction from ASR segments with multi-annotator
//!   consensus ([`corpus`]) and classification evaluation ([`metrics`]).
//!
//! The `gesturebot` CLI in this workspace wires the pieces into a pipeline.

pub mod bvh;
pub mod corpus;
pub mod gsd;
pub mod llm;
pub mod metrics;
pub mod motion;
pub mod pose;
pub mod viz;

pub mod textcfg;

pub use gsd::Label;
pub use motion::{JointTrajectory, RobotProfile, JOINT_COUNT};
