//! Object-frame keypoint layouts and the squared-distance keypoint reward.

use serde::{Deserialize, Serialize};

use crate::geometry::mesh::Aabb;
use crate::pose::{Pose6D, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeypointLayout {
    /// Four equally spaced points on the local Z axis.
    Collinear4,
    /// The origin plus four points on each local axis.
    Sixdof13,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointSet {
    pub layout: KeypointLayout,
    pub offsets: Vec<Vec3>,
}

impl KeypointSet {
    /// Builds the layout scaled to an object's local bounding box.
    ///
    /// `Collinear4` spans the box's Z range along the Z axis. `Sixdof13`
    /// places arms at ±e/2 and ±e on each axis, where e is the box's half
    /// extent on that axis.
    pub fn new(layout: KeypointLayout, bbox: &Aabb) -> Self {
        let offsets = match layout {
            KeypointLayout::Collinear4 => {
                let (z0, z1) = (bbox.min.z, bbox.max.z);
                (0..4)
                    .map(|i| Vec3::new(0.0, 0.0, z0 + (z1 - z0) * i as f64 / 3.0))
                    .collect()
            }
            KeypointLayout::Sixdof13 => {
                let half = bbox.extent() * 0.5;
                let mut pts = vec![Vec3::zeros()];
                for axis in 0..3 {
                    for s in [-1.0, -0.5, 0.5, 1.0] {
                        let mut p = Vec3::zeros();
                        p[axis] = s * half[axis];
                        pts.push(p);
                    }
                }
                pts
            }
        };
        Self { layout, offsets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn world(&self, pose: &Pose6D) -> Vec<Vec3> {
        self.offsets.iter().map(|k| pose.transform_point(k)).collect()
    }

    /// Mean squared distance between corresponding keypoints.
    pub fn mean_squared_distance(&self, current: &Pose6D, goal: &Pose6D) -> f64 {
        if self.offsets.is_empty() {
            return 0.0;
        }
        let sum: f64 = self
            .offsets
            .iter()
            .map(|k| (current.transform_point(k) - goal.transform_point(k)).norm_squared())
            .sum();
        sum / self.offsets.len() as f64
    }

    /// Root-mean-square keypoint distance (meters).
    pub fn distance(&self, current: &Pose6D, goal: &Pose6D) -> f64 {
        self.mean_squared_distance(current, goal).sqrt()
    }
}

/// `-mean_k ||k_curr - k_goal||²`.
pub fn keypoint_reward(keypoints: &KeypointSet, current: &Pose6D, goal: &Pose6D) -> f64 {
    -keypoints.mean_squared_distance(current, goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    fn unit_box() -> Aabb {
        Aabb { min: Vec3::repeat(-0.5), max: Vec3::repeat(0.5) }
    }

    #[test]
    fn layouts() {
        let c = KeypointSet::new(KeypointLayout::Collinear4, &unit_box());
        assert_eq!(c.len(), 4);
        assert!(c.offsets.iter().all(|p| p.x == 0.0 && p.y == 0.0));
        let gaps: Vec<f64> = c.offsets.windows(2).map(|w| w[1].z - w[0].z).collect();
        assert!(gaps.iter().all(|g| (g - gaps[0]).abs() < 1e-15));
        let s = KeypointSet::new(KeypointLayout::Sixdof13, &unit_box());
        assert_eq!(s.len(), 13);
        assert!(s.offsets.iter().all(|p| p.iter().filter(|v| **v != 0.0).count() <= 1));
    }

    #[test]
    fn translation_reward() {
        let c = KeypointSet::new(KeypointLayout::Collinear4, &unit_box());
        let goal = Pose6D::identity();
        assert_eq!(keypoint_reward(&c, &goal, &goal), 0.0);
        let moved = Pose6D::from_translation(Vec3::new(0.01, 0.0, 0.0));
        assert!((keypoint_reward(&c, &moved, &goal) + 1e-4).abs() < 1e-15);
    }

    #[test]
    fn yaw_aliasing() {
        let yaw = Pose6D::from_parts(Vec3::zeros(), UnitQuaternion::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let goal = Pose6D::identity();
        let c = KeypointSet::new(KeypointLayout::Collinear4, &unit_box());
        let s = KeypointSet::new(KeypointLayout::Sixdof13, &unit_box());
        assert!(keypoint_reward(&c, &yaw, &goal).abs() < 1e-15);
        assert!(keypoint_reward(&s, &yaw, &goal) < 0.0);
    }
}
