//! Kinematic peg-in-hole environment with penetration-rejecting contact.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::interpenetration::{grid_exceeds, grid_max_depth};
use crate::harness::assets::ToyAssets;
use crate::harness::randomization::EpisodeStart;
use crate::pose::{compose, Pose6D, PoseDelta, Vec3};
use crate::rewards::{
    check_success, keypoint_reward, KdTree, sdf_reward, SuccessCriteria, SuccessOutcome, Task, TaskState,
    DEFAULT_SDF_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Sdf,
    Sixdof,
    Collinear,
    Chamfer,
}

impl RewardKind {
    pub const ALL: [RewardKind; 4] = [RewardKind::Sdf, RewardKind::Sixdof, RewardKind::Collinear, RewardKind::Chamfer];

    pub fn name(self) -> &'static str {
        match self {
            RewardKind::Sdf => "sdf",
            RewardKind::Sixdof => "sixdof",
            RewardKind::Collinear => "collinear",
            RewardKind::Chamfer => "chamfer",
        }
    }

    /// Dense-term weight: 10 for the SDF term, 1 for the distance terms.
    pub fn default_weight(self) -> f64 {
        match self {
            RewardKind::Sdf => crate::rewards::composition::SDF_DENSE_WEIGHT,
            _ => 1.0,
        }
    }
}

impl std::str::FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RewardKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown reward '{s}' (sdf|sixdof|collinear|chamfer)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub horizon: usize,
    /// Largest translation per step on each socket-frame axis (m).
    pub action_scale: f64,
    /// Largest grid penetration a resting plug may show (m).
    pub contact_tolerance: f64,
    /// Bisection stops once the bracket is this short in displacement (m).
    pub bisection_resolution: f64,
    pub reward: RewardKind,
    pub sdf_floor: f64,
    pub eps_h: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            horizon: 80,
            action_scale: 0.0005,
            contact_tolerance: 1e-4,
            bisection_resolution: 1e-5,
            reward: RewardKind::Sdf,
            sdf_floor: DEFAULT_SDF_FLOOR,
            eps_h: 0.003,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0
            || !(self.action_scale > 0.0)
            || !(self.contact_tolerance > 0.0)
            || !(self.bisection_resolution > 0.0)
            || !(self.sdf_floor > 0.0)
            || !(self.eps_h > 0.0)
        {
            return Err(Error::InvalidArgument("env: horizon, scales and tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ToyEnv {
    pub assets: Arc<ToyAssets>,
    pub config: EnvConfig,
    pub socket: Pose6D,
    pub plug: Pose6D,
    pub goal: Pose6D,
    pub step: usize,
    pub done: bool,
    socket_tree: Arc<KdTree>,
    socket_cloud: Arc<Vec<Vec3>>,
    /// Plug vertices in the plug frame.
    plug_tree: Arc<KdTree>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub dense_reward: f64,
    /// Deepest grid penetration of the unprojected target pose (m).
    pub d_ip: f64,
    /// Fraction of the action applied before sliding.
    pub applied: f64,
    pub outcome: SuccessOutcome,
    pub done: bool,
}

impl ToyEnv {
    pub fn new(assets: Arc<ToyAssets>, config: EnvConfig, start: &EpisodeStart) -> Result<Self> {
        config.validate()?;
        let goal = assets.goal_pose(&start.socket);
        let cloud: Vec<Vec3> = assets.socket_vertices.iter().map(|p| start.socket.transform_point(p)).collect();
        let env = ToyEnv {
            socket: start.socket,
            plug: start.plug_pose(),
            goal,
            step: 0,
            done: false,
            socket_tree: Arc::new(KdTree::new(&cloud)),
            socket_cloud: Arc::new(cloud),
            plug_tree: Arc::new(KdTree::new(&assets.plug_vertices)),
            assets,
            config,
        };
        if !env.feasible(&env.plug) {
            return Err(Error::InvalidArgument("initial plug pose penetrates the socket".into()));
        }
        Ok(env)
    }

    pub fn criteria(&self) -> SuccessCriteria {
        SuccessCriteria { eps_k: self.assets.eps_k, eps_h: self.config.eps_h, task: Task::Insert }
    }

    pub fn task_state(&self) -> TaskState {
        TaskState::peg_in_hole(&self.plug, &self.goal, &self.socket, &self.assets.sixdof)
    }

    pub fn outcome(&self) -> SuccessOutcome {
        check_success(&self.task_state(), &self.criteria()).expect("peg state carries every insert field")
    }

    /// Plug pose in the socket frame.
    pub fn relative(&self, plug: &Pose6D) -> Pose6D {
        plug.relative_to(&self.socket)
    }

    pub fn feasible(&self, plug: &Pose6D) -> bool {
        let a = &self.assets;
        let rel = self.relative(plug);
        // Points outside the socket's box are outside the socket.
        if !a.contact_bbox.transformed(&rel).intersects(a.socket.bbox()) {
            return true;
        }
        !grid_exceeds(&a.contact_points, &a.socket_grid, &rel, self.config.contact_tolerance)
    }

    /// Socket-grid values of the contact points with the plug at `plug`.
    fn contact_values(&self, plug: &Pose6D) -> Vec<f64> {
        let rel = self.relative(plug);
        self.assets.contact_points.iter().map(|p| self.assets.socket_grid.distance(&rel.transform_point(p))).collect()
    }

    /// Same answer as [`feasible`](Self::feasible), skipping points that
    /// cannot reach the tolerance. Grid values change by at most
    /// `LIPSCHITZ` per unit of point displacement (trilinear interpolation
    /// of distance samples, plus the extrapolation term).
    fn feasible_from(&self, base: &Pose6D, values: &[f64], plug: &Pose6D) -> bool {
        const LIPSCHITZ: f64 = 3.0;
        let a = &self.assets;
        let rel = self.relative(plug);
        if !a.contact_bbox.transformed(&rel).intersects(a.socket.bbox()) {
            return true;
        }
        let shift = (plug.position - base.position).norm();
        let turn = plug.angle_to(base);
        let tol = self.config.contact_tolerance;
        a.contact_points.iter().zip(values).all(|(p, &v)| {
            let reach = shift + turn * p.norm();
            v - LIPSCHITZ * reach - 1e-12 > -tol || a.socket_grid.distance(&rel.transform_point(p)) >= -tol
        })
    }

    pub fn penetration(&self, plug: &Pose6D) -> f64 {
        let a = &self.assets;
        let rel = self.relative(plug);
        if !a.contact_bbox.transformed(&rel).intersects(a.socket.bbox()) {
            return 0.0;
        }
        grid_max_depth(&a.contact_points, &a.socket_grid, &rel)
    }

    pub fn dense_reward(&self) -> f64 {
        let a = &self.assets;
        match self.config.reward {
            RewardKind::Sdf => sdf_reward(&a.reward_points, &self.plug, &a.target_grid, &self.goal, self.config.sdf_floor),
            RewardKind::Sixdof => keypoint_reward(&a.sixdof, &self.plug, &self.goal),
            RewardKind::Collinear => keypoint_reward(&a.collinear, &self.plug, &self.goal),
            RewardKind::Chamfer => {
                // Same value as `chamfer_reward`. Distances are rigid-invariant,
                // so socket points are matched in the plug frame.
                let verts = &a.plug_vertices;
                let ab = verts.iter().map(|p| self.socket_tree.nearest_squared(&self.plug.transform_point(p))).sum::<f64>()
                    / verts.len() as f64;
                let cloud = &self.socket_cloud;
                let ba = cloud.iter().map(|p| self.plug_tree.nearest_squared(&self.plug.inverse_transform_point(p))).sum::<f64>()
                    / cloud.len() as f64;
                -(ab + ba)
            }
        }
    }

    /// Largest `t` in [0, 1] with `from ⊕ t·delta` feasible, assuming `from`
    /// is feasible. `values` are the contact values at `base`.
    fn bisect(&self, base: &Pose6D, values: &[f64], from: &Pose6D, delta: &PoseDelta) -> f64 {
        let scaled = |t: f64| PoseDelta::new(t * delta.translation, t * delta.rotation_vector());
        if self.feasible_from(base, values, &compose(from, delta)) {
            return 1.0;
        }
        // Rotation is measured at the plug's extent.
        let reach = delta.translation.norm() + delta.angle() * self.assets.plug.bbox().diagonal();
        let (mut lo, mut hi) = (0.0, 1.0);
        while (hi - lo) * reach > self.config.bisection_resolution {
            let mid = 0.5 * (lo + hi);
            if self.feasible_from(base, values, &compose(from, &scaled(mid))) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Applies `action` (world frame). Motion that would penetrate beyond the
    /// tolerance is cut back along the action direction by bisection; the
    /// unapplied translation then slides one world axis at a time.
    pub fn env_step(&self, action: &PoseDelta) -> (ToyEnv, StepResult) {
        let full = compose(&self.plug, action);
        let d_ip = self.penetration(&full);
        // A target within tolerance is feasible; skip the contact search.
        let values = if d_ip > self.config.contact_tolerance { self.contact_values(&self.plug) } else { Vec::new() };
        let t = if values.is_empty() { 1.0 } else { self.bisect(&self.plug, &values, &self.plug, action) };
        let mut next = if t == 1.0 {
            full
        } else if t > 0.0 {
            compose(&self.plug, &PoseDelta::new(t * action.translation, t * action.rotation_vector()))
        } else {
            self.plug
        };
        if t < 1.0 {
            let rest = (1.0 - t) * action.translation;
            for axis in 0..3 {
                if rest[axis] != 0.0 {
                    let mut d = Vec3::zeros();
                    d[axis] = rest[axis];
                    let delta = PoseDelta::from_translation(d);
                    let s = self.bisect(&self.plug, &values, &next, &delta);
                    if s > 0.0 {
                        next = compose(&next, &PoseDelta::from_translation(s * d));
                    }
                }
            }
        }
        let step = self.step + 1;
        let env = ToyEnv { plug: next, step, done: self.done || step >= self.config.horizon, ..self.clone() };
        let result = StepResult {
            dense_reward: env.dense_reward(),
            d_ip,
            applied: t,
            outcome: env.outcome(),
            done: env.done,
        };
        (env, result)
    }

    /// Translation action expressed in the socket frame, converted to world.
    pub fn socket_action(&self, translation: &Vec3) -> PoseDelta {
        PoseDelta::from_translation(self.socket.orientation.transform_vector(translation))
    }
}
