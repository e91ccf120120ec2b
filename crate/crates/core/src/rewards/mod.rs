//! Dense rewards, return composition and task success predicates.

pub mod chamfer;
pub mod composition;
pub mod keypoints;
pub mod sdf;
pub mod success;

pub use chamfer::{chamfer_distance, chamfer_reward, KdTree};
pub use composition::{bonus_scale, compose_return, HorizonFactor, RewardSpec};
pub use keypoints::{keypoint_reward, KeypointLayout, KeypointSet};
pub use sdf::{sdf_reward, sdf_reward_breakdown, DEFAULT_SDF_FLOOR};
pub use success::{check_success, SuccessCriteria, SuccessOutcome, Task, TaskState};
