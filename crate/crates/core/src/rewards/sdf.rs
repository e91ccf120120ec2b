//! Dense alignment reward from the target shape's signed distance field.

use serde::{Deserialize, Serialize};

use crate::geometry::sdf::SdfGrid;
use crate::pose::{Pose6D, Vec3};

pub const DEFAULT_SDF_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfRewardBreakdown {
    pub reward: f64,
    pub mean_abs_distance: f64,
    /// |φ| per plug point, in input order.
    pub per_point: Vec<f64>,
}

/// Mean of |φ| over the plug points, each mapped through `plug_pose` into
/// the frame of `target_pose`, where `grid` holds the plug's own SDF.
pub fn mean_abs_sdf(points: &[Vec3], plug_pose: &Pose6D, grid: &SdfGrid, target_pose: &Pose6D) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let rel = plug_pose.relative_to(target_pose);
    points.iter().map(|p| grid.distance(&rel.transform_point(p)).abs()).sum::<f64>() / points.len() as f64
}

/// `-ln(max(mean |φ|, floor))`.
pub fn sdf_reward(points: &[Vec3], plug_pose: &Pose6D, grid: &SdfGrid, target_pose: &Pose6D, floor: f64) -> f64 {
    assert!(floor > 0.0, "sdf reward floor must be positive");
    -mean_abs_sdf(points, plug_pose, grid, target_pose).max(floor).ln()
}

pub fn sdf_reward_breakdown(
    points: &[Vec3],
    plug_pose: &Pose6D,
    grid: &SdfGrid,
    target_pose: &Pose6D,
    floor: f64,
) -> SdfRewardBreakdown {
    let rel = plug_pose.relative_to(target_pose);
    let per_point: Vec<f64> = points.iter().map(|p| grid.distance(&rel.transform_point(p)).abs()).collect();
    let mean = if per_point.is_empty() {
        0.0
    } else {
        per_point.iter().sum::<f64>() / per_point.len() as f64
    };
    SdfRewardBreakdown {
        reward: -mean.max(floor).ln(),
        mean_abs_distance: mean,
        per_point,
    }
}
