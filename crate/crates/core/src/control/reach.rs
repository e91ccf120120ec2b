//! Closed-loop reach episodes: scripted policy → action scheme → impedance
//! law → disturbed plant, plus the disturbance-rejection ablation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::plant::{step_plant, DisturbanceKind, Disturbances, PlantState, Wrench};
use crate::control::{ControllerConfig, ControllerState, Scheme};
use crate::error::{Error, Result};
use crate::pose::{difference, Pose6D, PoseDelta, Vec3};

/// Saturating proportional policy `clamp(gain · (goal ⊖ observation))`
/// with per-axis scales. Observations carry uniform position noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptedPolicy {
    pub gain: f64,
    pub pos_scale: Vec3,
    /// Per-component bound on the rotation vector (rad).
    pub rot_scale: Vec3,
    /// Half-range of the uniform position observation noise (m).
    pub obs_noise: f64,
}

impl Default for ScriptedPolicy {
    fn default() -> Self {
        Self::for_scheme(Scheme::Plai)
    }
}

impl ScriptedPolicy {
    /// Action scales: 0.5 mm / 1 mrad per step for the integrating schemes,
    /// 1 cm / 10 mrad when actions are applied to the current state.
    pub fn for_scheme(scheme: Scheme) -> Self {
        let (p, r) = match scheme {
            Scheme::Plai | Scheme::LeakyPlai => (0.0005, 0.001),
            Scheme::Nominal | Scheme::Pid => (0.01, 0.01),
        };
        Self { gain: 0.05, pos_scale: Vec3::repeat(p), rot_scale: Vec3::repeat(r), obs_noise: 0.001 }
    }

    pub fn act(&self, observed: &Pose6D, goal: &Pose6D) -> PoseDelta {
        let e = difference(goal, observed);
        let t = Vec3::from_fn(|i, _| (self.gain * e.translation[i]).clamp(-self.pos_scale[i], self.pos_scale[i]));
        let rv = e.rotation_vector();
        let r = Vec3::from_fn(|i, _| (self.gain * rv[i]).clamp(-self.rot_scale[i], self.rot_scale[i]));
        PoseDelta::new(t, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReachConfig {
    pub controller: ControllerConfig,
    pub policy: ScriptedPolicy,
    pub disturbances: Disturbances,
    pub control_steps: usize,
    /// Physics steps per control step.
    pub substeps: usize,
    /// Physics step (s).
    pub dt: f64,
    pub mass: f64,
    pub inertia: f64,
    /// Block all plant motion (contact against a rigid obstacle).
    pub frozen: bool,
}

impl Default for ReachConfig {
    fn default() -> Self {
        Self::new(Scheme::Plai, Disturbances::default())
    }
}

impl ReachConfig {
    /// 600 control steps at 60 Hz over 120 Hz physics.
    pub fn new(scheme: Scheme, disturbances: Disturbances) -> Self {
        Self {
            controller: ControllerConfig::new(scheme),
            policy: ScriptedPolicy::for_scheme(scheme),
            disturbances,
            control_steps: 600,
            substeps: 2,
            dt: 1.0 / 120.0,
            mass: 1.0,
            inertia: 0.05,
            frozen: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachRecord {
    pub step: usize,
    /// `goal - position` at the moment the action is chosen (m).
    pub error: Vec3,
    /// Geodesic angle to the goal orientation (rad).
    pub error_angle: f64,
    pub action: PoseDelta,
    pub setpoint: Pose6D,
    /// Plant position when the wrench was computed.
    pub position: Vec3,
    pub wrench: Wrench,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachResult {
    pub records: Vec<ReachRecord>,
    /// Mean position error norm over the last 10% of steps (m).
    pub steady_state_error: f64,
    pub steady_state_angle: f64,
    pub final_pose: Pose6D,
}

pub fn run_reach_episode(cfg: &ReachConfig, start: &Pose6D, goal: &Pose6D, seed: u64) -> Result<ReachResult> {
    if cfg.substeps == 0 || !(cfg.dt > 0.0) {
        return Err(Error::InvalidArgument("substeps and dt must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plant = PlantState::at_rest(*start, cfg.disturbances);
    plant.mass = cfg.mass;
    plant.inertia = cfg.inertia;
    plant.frozen = cfg.frozen;
    let mut ctrl = ControllerState::new(cfg.controller);
    let mut records = Vec::with_capacity(cfg.control_steps);
    for step in 0..cfg.control_steps {
        let noise = cfg.policy.obs_noise;
        let observed = if noise > 0.0 {
            let n = Vec3::from_fn(|_, _| rng.gen_range(-noise..=noise));
            Pose6D::from_parts(plant.pose.position + n, plant.pose.orientation)
        } else {
            plant.pose
        };
        let action = cfg.policy.act(&observed, goal);
        let (next, setpoint) = ctrl.apply_action(&plant.pose, &action);
        ctrl = next;
        let wrench = ctrl.wrench(&setpoint, &plant);
        records.push(ReachRecord {
            step,
            error: goal.position - plant.pose.position,
            error_angle: plant.pose.angle_to(goal),
            action,
            setpoint,
            position: plant.pose.position,
            wrench,
        });
        for _ in 0..cfg.substeps {
            plant = step_plant(&plant, &wrench, cfg.dt).map_err(|e| match e {
                Error::Diverged { norm, .. } => Error::Diverged { step, norm },
                other => other,
            })?;
        }
    }
    let tail = (cfg.control_steps / 10).max(1).min(records.len());
    let last = &records[records.len() - tail..];
    let steady_state_error = last.iter().map(|r| r.error.norm()).sum::<f64>() / tail as f64;
    let steady_state_angle = last.iter().map(|r| r.error_angle).sum::<f64>() / tail as f64;
    Ok(ReachResult { records, steady_state_error, steady_state_angle, final_pose: plant.pose })
}

/// Evaluation goals and randomized starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSet {
    pub goals: Vec<Pose6D>,
    pub trials_per_goal: usize,
    /// Start offset half-range per axis (m).
    pub start_range: f64,
    /// Start rotation half-range per axis (rad).
    pub start_rotation: f64,
    pub seed: u64,
}

impl Default for TrialSet {
    fn default() -> Self {
        let goal = |x, y, z, yaw: f64| {
            Pose6D::from_parts(Vec3::new(x, y, z), nalgebra::UnitQuaternion::from_euler_angles(std::f64::consts::PI, 0.0, yaw))
        };
        Self {
            goals: vec![goal(0.5, 0.0, 0.3, 0.0), goal(0.45, 0.1, 0.25, 0.3), goal(0.55, -0.1, 0.35, -0.3)],
            trials_per_goal: 20,
            start_range: 0.05,
            start_rotation: 0.2,
            seed: 0,
        }
    }
}

impl TrialSet {
    /// `(goal index, trial index, start, episode seed)` for every trial.
    pub fn trials(&self) -> Vec<(usize, usize, Pose6D, u64)> {
        let mut out = Vec::new();
        for (g, goal) in self.goals.iter().enumerate() {
            for t in 0..self.trials_per_goal {
                let seed = self.seed.wrapping_mul(1_000_003).wrapping_add((g * 10_007 + t) as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_57a7);
                let (r, a) = (self.start_range, self.start_rotation);
                let dp = Vec3::from_fn(|_, _| rng.gen_range(-r..=r));
                let dr = Vec3::from_fn(|_, _| rng.gen_range(-a..=a));
                let start = crate::pose::compose(goal, &PoseDelta::new(dp, dr));
                out.push((g, t, start, seed));
            }
        }
        out
    }
}

/// Steady-state errors of every trial, in trial order.
pub fn trial_errors(cfg: &ReachConfig, set: &TrialSet) -> Result<Vec<f64>> {
    set.trials()
        .par_iter()
        .map(|(g, _, start, seed)| run_reach_episode(cfg, start, &set.goals[*g], *seed).map(|r| r.steady_state_error))
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Grid over PID integral gain and anti-windup clamp (translation axes;
/// rotation axes scale both by 0.05 and 10 respectively).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGrid {
    pub ki: Vec<f64>,
    pub clamp: Vec<f64>,
}

impl Default for PidGrid {
    fn default() -> Self {
        Self {
            ki: vec![0.0, 100.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0],
            clamp: vec![0.0002, 0.0005, 0.001, 0.002, 0.01, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PidTuning {
    pub ki: f64,
    pub clamp: f64,
    pub error: f64,
    /// `(ki, clamp, mean error)` for every grid point, in grid order.
    pub table: Vec<(f64, f64, f64)>,
}

pub fn pid_config(base: &ReachConfig, ki: f64, clamp: f64) -> ReachConfig {
    let mut cfg = *base;
    cfg.controller.scheme = Scheme::Pid;
    cfg.controller.ki = [ki, ki, ki, 0.05 * ki, 0.05 * ki, 0.05 * ki];
    cfg.controller.integral_clamp = [clamp, clamp, clamp, 10.0 * clamp, 10.0 * clamp, 10.0 * clamp];
    cfg
}

/// Picks the grid point with the lowest mean steady-state error on the
/// tuning set (ties go to the earlier grid point). Diverging settings are
/// recorded with infinite error.
pub fn tune_pid(base: &ReachConfig, grid: &PidGrid, tuning: &TrialSet) -> Result<PidTuning> {
    let mut table = Vec::new();
    for &ki in &grid.ki {
        for &clamp in &grid.clamp {
            let err = match trial_errors(&pid_config(base, ki, clamp), tuning) {
                Ok(v) => mean(&v),
                Err(Error::Diverged { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            table.push((ki, clamp, err));
        }
    }
    let best = table
        .iter()
        .copied()
        .reduce(|a, b| if b.2 < a.2 { b } else { a })
        .ok_or_else(|| Error::InvalidArgument("empty PID grid".into()))?;
    Ok(PidTuning { ki: best.0, clamp: best.1, error: best.2, table })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub schemes: Vec<Scheme>,
    pub disturbances: Vec<DisturbanceKind>,
    pub evaluation: TrialSet,
    pub tuning: TrialSet,
    pub pid_grid: PidGrid,
    pub policy_gain: f64,
    pub obs_noise: f64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        let policy = ScriptedPolicy::default();
        Self {
            schemes: Scheme::ALL.to_vec(),
            disturbances: DisturbanceKind::ALL.to_vec(),
            evaluation: TrialSet::default(),
            tuning: TrialSet { trials_per_goal: 4, seed: 99, ..TrialSet::default() },
            pid_grid: PidGrid::default(),
            policy_gain: policy.gain,
            obs_noise: policy.obs_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub scheme: Scheme,
    pub disturbance: DisturbanceKind,
    pub mean_error: f64,
    pub trial_errors: Vec<f64>,
    /// Selected `(ki, clamp)` for PID rows.
    pub pid: Option<(f64, f64)>,
}

/// Reach configuration for one ablation cell. PID is tuned on the tuning
/// set under the same disturbance before evaluation.
pub fn ablation_cell_config(cfg: &AblationConfig, scheme: Scheme, kind: DisturbanceKind) -> Result<(ReachConfig, Option<PidTuning>)> {
    let mut rc = ReachConfig::new(scheme, kind.preset());
    rc.policy.gain = cfg.policy_gain;
    rc.policy.obs_noise = cfg.obs_noise;
    if scheme == Scheme::Pid {
        let t = tune_pid(&rc, &cfg.pid_grid, &cfg.tuning)?;
        Ok((pid_config(&rc, t.ki, t.clamp), Some(t)))
    } else {
        Ok((rc, None))
    }
}

pub fn run_control_ablation(cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for &kind in &cfg.disturbances {
        for &scheme in &cfg.schemes {
            let (rc, tuning) = ablation_cell_config(cfg, scheme, kind)?;
            let errs = trial_errors(&rc, &cfg.evaluation)?;
            rows.push(AblationRow {
                scheme,
                disturbance: kind,
                mean_error: mean(&errs),
                trial_errors: errs,
                pid: tuning.map(|t| (t.ki, t.clamp)),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_saturates() {
        let p = ScriptedPolicy { gain: 1.0, ..ScriptedPolicy::for_scheme(Scheme::Plai) };
        let a = p.act(&Pose6D::identity(), &Pose6D::from_translation(Vec3::new(0.1, -0.0001, 0.0)));
        assert_eq!(a.translation, Vec3::new(0.0005, -0.0001, 0.0));
    }

    #[test]
    fn nominal_gravity_fixed_point() {
        // Unit policy gain, no noise: pure P control with stiffness kp.
        let mut cfg = ReachConfig::new(Scheme::Nominal, DisturbanceKind::Gravity.preset());
        cfg.policy.gain = 1.0;
        cfg.policy.obs_noise = 0.0;
        let goal = Pose6D::from_translation(Vec3::new(0.0, 0.0, 0.3));
        let r = run_reach_episode(&cfg, &Pose6D::from_translation(Vec3::new(0.02, 0.0, 0.28)), &goal, 0).unwrap();
        let expected = 1.0 * 0.12 / 1000.0;
        assert!((r.steady_state_error - expected).abs() < 0.02 * expected, "{}", r.steady_state_error);
    }

    #[test]
    fn ideal_conditions_converge() {
        for scheme in Scheme::ALL {
            let mut cfg = ReachConfig::new(scheme, Disturbances::default());
            cfg.policy.obs_noise = 0.0;
            let goal = Pose6D::from_translation(Vec3::new(0.0, 0.0, 0.3));
            let start = Pose6D::from_translation(Vec3::new(0.03, -0.02, 0.32));
            let r = run_reach_episode(&cfg, &start, &goal, 0).unwrap();
            assert!(r.steady_state_error <= 0.0005, "{scheme:?}: {}", r.steady_state_error);
        }
    }
}
