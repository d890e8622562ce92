//! Multiple-choice spatial-reasoning questions from 3D hand joints.
//!
//! The pipeline normalizes a 21-joint pose ([`geometry`]), computes joint
//! angles, pairwise distances and per-axis offsets over a fixed catalog
//! ([`skeleton`]), bins them into linguistic categories ([`discretize`]),
//! renders option sentences ([`textgen`]) and assembles sampled questions
//! ([`dataset`]). [`oracle`] re-answers questions from the joints for
//! auditing and [`evaluate`] scores model predictions.

pub mod cli;
pub mod dataset;
pub mod discretize;
pub mod evaluate;
pub mod geometry;
pub mod oracle;
pub mod skeleton;
pub mod synthetic;
pub mod textgen;

pub use dataset::{GenerationConfig, Mcq, PoseRecord};
pub use discretize::{Category, ThresholdConfig};
pub use geometry::{NormalizedPose, RawPose};
pub use skeleton::{DescriptorKind, DescriptorTarget, JointId};
