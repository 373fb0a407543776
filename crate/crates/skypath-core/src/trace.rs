//! Per-step trajectory records, one line-delimited JSON record per step.

use crate::mdp::RewardBreakdown;
use crate::sim::StepOutcome;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub action: [f64; 2],
    pub reward: RewardBreakdown,
    pub lidar: [f64; 7],
    pub status: StepOutcome,
}

impl TraceStep {
    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("trace step serializes")
    }
}
