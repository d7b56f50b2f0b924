//! Versioned Q-table checkpoints.
//!
//! A checkpoint is a JSON document holding the learner kind, the schedule it
//! was trained under, and its full table state, with keys sorted so the same
//! learner always serializes to the same bytes. Values round-trip exactly:
//! floats are emitted in shortest round-trip form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spatial::{Action, GridPoint};

use super::enhanced::JointActionSpace;
use super::{JointAction, JointState, LearningSchedule};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Table payload of one learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CheckpointTable {
    /// Sorted `(own state, own action, value)` triples.
    Single {
        entries: Vec<(GridPoint, Action, f64)>,
    },
    /// Sorted `(joint state, joint action, value)` triples plus the opponent
    /// profile counts.
    Joint {
        entries: Vec<(JointState, JointAction, f64)>,
        model: Vec<(JointState, Vec<Action>, u64)>,
    },
    /// Dense per-state blocks: the joint reduced action space and one value
    /// per joint action in the space's canonical order.
    EnhancedDense {
        states: Vec<(JointState, JointActionSpace, Vec<f64>)>,
        model: Vec<(JointState, Vec<Action>, u64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// UAV index the table belongs to.
    pub agent: usize,
    pub schedule: LearningSchedule,
    pub table: CheckpointTable,
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let json = serde_json::to_string(ckpt)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(crate::Error::config(format!(
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            ckpt.version
        )));
    }
    Ok(ckpt)
}
