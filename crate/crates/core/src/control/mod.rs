//! Action application schemes (nominal, PID, PLAI, leaky PLAI), the
//! task-space impedance law and the simulated reach evaluation.

pub mod plant;
pub mod reach;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{compose, difference, Pose6D, PoseDelta, Vec3};

pub use plant::{step_plant, DisturbanceKind, Disturbances, PlantState, Wrench};
pub use reach::{
    run_control_ablation, run_reach_episode, tune_pid, AblationConfig, AblationRow, PidGrid, ReachConfig, ReachResult,
    ScriptedPolicy, TrialSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Action applied to the current state.
    Nominal,
    /// Action applied to the current state, plus a clamped integral force.
    Pid,
    /// Action applied to the last desired state.
    Plai,
    /// PLAI with the desired-to-current offset clamped.
    LeakyPlai,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Nominal, Scheme::Pid, Scheme::Plai, Scheme::LeakyPlai];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Nominal => "nominal",
            Scheme::Pid => "pid",
            Scheme::Plai => "plai",
            Scheme::LeakyPlai => "leaky_plai",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" => Ok(Scheme::Nominal),
            "pid" => Ok(Scheme::Pid),
            "plai" => Ok(Scheme::Plai),
            "leaky_plai" | "leaky-plai" => Ok(Scheme::LeakyPlai),
            _ => Err(Error::InvalidArgument(format!("unknown scheme `{s}`"))),
        }
    }
}

pub const DEFAULT_KP: Wrench = [1000.0, 1000.0, 1000.0, 50.0, 50.0, 50.0];

/// Critical damping `2·sqrt(kp·m)` for the default plant (1 kg, 0.05 kg·m²).
pub fn critical_kd(kp: &Wrench, mass: f64, inertia: f64) -> Wrench {
    std::array::from_fn(|i| {
        let m = if i < 3 { mass } else { inertia };
        2.0 * (kp[i] * m).sqrt()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub scheme: Scheme,
    pub kp: Wrench,
    pub kd: Wrench,
    /// PID integral gains.
    pub ki: Wrench,
    /// PID anti-windup clamp on each accumulated component.
    pub integral_clamp: Wrench,
    /// Leaky-PLAI per-axis translation bound (m).
    pub leak_translation: Vec3,
    /// Leaky-PLAI rotation bound (rad).
    pub leak_angle: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Plai,
            kp: DEFAULT_KP,
            kd: critical_kd(&DEFAULT_KP, 1.0, 0.05),
            ki: [0.0; 6],
            integral_clamp: [0.0; 6],
            leak_translation: Vec3::new(0.05, 0.05, 0.03),
            leak_angle: 0.1,
        }
    }
}

impl ControllerConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub config: ControllerConfig,
    /// PLAI accumulator; `None` until the first action.
    pub desired: Option<Pose6D>,
    /// PID accumulator: summed translations and world-frame rotation vectors.
    pub integral: Wrench,
}

impl ControllerState {
    pub fn new(config: ControllerConfig) -> Self {
        Self { config, desired: None, integral: [0.0; 6] }
    }

    /// Applies one policy action and returns the updated state and the
    /// setpoint for the tracking loop.
    pub fn apply_action(&self, current: &Pose6D, action: &PoseDelta) -> (ControllerState, Pose6D) {
        let mut next = *self;
        let cfg = &self.config;
        let setpoint = match cfg.scheme {
            Scheme::Nominal => compose(current, action),
            Scheme::Pid => {
                let rot = current.orientation.transform_vector(&action.rotation_vector());
                for i in 0..6 {
                    let inc = if i < 3 { action.translation[i] } else { rot[i - 3] };
                    let c = cfg.integral_clamp[i].abs();
                    next.integral[i] = (self.integral[i] + inc).clamp(-c, c);
                }
                compose(current, action)
            }
            Scheme::Plai | Scheme::LeakyPlai => {
                let base = self.desired.unwrap_or(*current);
                let mut desired = compose(&base, action);
                if cfg.scheme == Scheme::LeakyPlai {
                    let offset = difference(&desired, current).clamped(&cfg.leak_translation, cfg.leak_angle);
                    desired = compose(current, &offset);
                    // `current + t - current` can round one ulp past `t`.
                    for i in 0..3 {
                        let m = cfg.leak_translation[i].abs();
                        while desired.position[i] - current.position[i] > m {
                            desired.position[i] = desired.position[i].next_down();
                        }
                        while desired.position[i] - current.position[i] < -m {
                            desired.position[i] = desired.position[i].next_up();
                        }
                    }
                }
                next.desired = Some(desired);
                desired
            }
        };
        (next, setpoint)
    }

    /// Tracking wrench: the impedance law plus, for PID, the integral force.
    pub fn wrench(&self, setpoint: &Pose6D, plant: &PlantState) -> Wrench {
        let mut w = tsi_force(setpoint, plant, &self.config.kp, &self.config.kd);
        if self.config.scheme == Scheme::Pid {
            for (wi, (ki, acc)) in w.iter_mut().zip(self.config.ki.iter().zip(&self.integral)) {
                *wi += ki * acc;
            }
        }
        w
    }
}

/// `kp ∘ (setpoint ⊖ state) − kd ∘ velocity`, with the rotation error
/// expressed as a world-frame rotation vector.
pub fn tsi_force(setpoint: &Pose6D, plant: &PlantState, kp: &Wrench, kd: &Wrench) -> Wrench {
    let e = difference(setpoint, &plant.pose);
    let rot = plant.pose.orientation.transform_vector(&e.rotation_vector());
    std::array::from_fn(|i| {
        if i < 3 {
            kp[i] * e.translation[i] - kd[i] * plant.linear_velocity[i]
        } else {
            kp[i] * rot[i - 3] - kd[i] * plant.angular_velocity[i - 3]
        }
    })
}
