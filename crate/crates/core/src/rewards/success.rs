//! Task success and engagement predicates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose6D;
use crate::rewards::keypoints::KeypointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Pick,
    Place,
    Insert,
    Gear,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Pick => "pick",
            Task::Place => "place",
            Task::Insert => "insert",
            Task::Gear => "gear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriteria {
    /// Keypoint distance threshold (m).
    pub eps_k: f64,
    /// Height threshold (m).
    pub eps_h: f64,
    pub task: Task,
}

impl SuccessCriteria {
    pub fn new(task: Task) -> Self {
        Self { eps_k: 0.10, eps_h: 0.003, task }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_k > 0.0 && self.eps_h > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument("success thresholds must be positive".into()))
        }
    }
}

/// Measurements the predicates read; which ones are required depends on
/// the task.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskState {
    /// RMS distance between corresponding current and goal keypoints (m).
    pub keypoint_distance: Option<f64>,
    /// Height of the plug base above the hole base (m).
    pub delta_h: Option<f64>,
    /// How far the plug tip is below the socket opening plane (m, positive
    /// when below).
    pub tip_below_opening: Option<f64>,
    /// Horizontal distance between plug and hole axes (m).
    pub lateral_distance: Option<f64>,
    /// Object height above the floor and its own height (m), for lifting.
    pub object_z: Option<f64>,
    pub object_height: Option<f64>,
    pub table_z: Option<f64>,
}

impl TaskState {
    /// Peg-style insertion measured in the socket frame: the opening plane
    /// is the socket's z = 0, the plug frame origin is its tip, and `goal`
    /// is the fully seated plug pose.
    pub fn peg_in_hole(plug: &Pose6D, goal: &Pose6D, socket: &Pose6D, keypoints: &KeypointSet) -> Self {
        let p = socket.inverse_transform_point(&plug.position);
        let g = socket.inverse_transform_point(&goal.position);
        Self {
            keypoint_distance: Some(keypoints.distance(plug, goal)),
            delta_h: Some((p.z - g.z).max(0.0)),
            tip_below_opening: Some(-p.z),
            lateral_distance: Some((p.xy() - g.xy()).norm()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuccessOutcome {
    pub success: bool,
    /// Partial insertion (includes success); always false for pick/place.
    pub engaged: bool,
}

fn need(v: Option<f64>, task: Task, field: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingField { task: task.name(), field })
}

pub fn check_success(state: &TaskState, criteria: &SuccessCriteria) -> Result<SuccessOutcome> {
    criteria.validate()?;
    let task = criteria.task;
    match task {
        Task::Pick => {
            // Lifted clear of the table by twice the object's height.
            let z = need(state.object_z, task, "object_z")?;
            let h = need(state.object_height, task, "object_height")?;
            let table = need(state.table_z, task, "table_z")?;
            Ok(SuccessOutcome { success: z > 2.0 * h + table, engaged: false })
        }
        Task::Place => {
            let k = need(state.keypoint_distance, task, "keypoint_distance")?;
            Ok(SuccessOutcome { success: k < criteria.eps_k, engaged: false })
        }
        Task::Insert | Task::Gear => {
            let k = need(state.keypoint_distance, task, "keypoint_distance")?;
            let dh = need(state.delta_h, task, "delta_h")?;
            let tip = need(state.tip_below_opening, task, "tip_below_opening")?;
            let lateral = need(state.lateral_distance, task, "lateral_distance")?;
            let success = dh < criteria.eps_h && k < criteria.eps_k;
            let engaged = success || (tip > 0.0 && lateral < criteria.eps_k);
            Ok(SuccessOutcome { success, engaged })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn insert(dh: f64, k: f64, tip: f64) -> TaskState {
        TaskState {
            keypoint_distance: Some(k),
            delta_h: Some(dh),
            tip_below_opening: Some(tip),
            lateral_distance: Some(0.0),
            ..TaskState::default()
        }
    }

    #[test]
    fn insert_thresholds() {
        let c = SuccessCriteria::new(Task::Insert);
        assert!(check_success(&insert(0.002, 0.05, 0.01), &c).unwrap().success);
        assert!(!check_success(&insert(0.004, 0.05, 0.01), &c).unwrap().success);
        let partial = check_success(&insert(0.010, 0.05, 0.005), &c).unwrap();
        assert!(partial.engaged && !partial.success);
        let above = check_success(&insert(0.020, 0.05, -0.005), &c).unwrap();
        assert!(!above.engaged);
    }

    #[test]
    fn missing_field() {
        let c = SuccessCriteria::new(Task::Pick);
        assert!(matches!(
            check_success(&TaskState::default(), &c),
            Err(Error::MissingField { task: "pick", field: "object_z" })
        ));
    }

    #[test]
    fn pick_lift() {
        let c = SuccessCriteria::new(Task::Pick);
        let s = |z| TaskState { object_z: Some(z), object_height: Some(0.05), table_z: Some(0.4), ..TaskState::default() };
        assert!(check_success(&s(0.51), &c).unwrap().success);
        assert!(!check_success(&s(0.49), &c).unwrap().success);
    }
}
