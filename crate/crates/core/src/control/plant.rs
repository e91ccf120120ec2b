//! Task-space point-mass/rotor proxy for the robot with Coulomb friction,
//! a gravity-bias force and viscous damping.

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{Pose6D, Vec3};

/// Position norm beyond which the simulation is declared diverged (m).
pub const DIVERGENCE_LIMIT: f64 = 10.0;

/// Six-component wrench or gain vector: force x, y, z then torque x, y, z.
pub type Wrench = [f64; 6];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Disturbances {
    /// Per-axis Coulomb friction force (N).
    pub coulomb_force: f64,
    /// Per-axis Coulomb friction torque (N·m).
    pub coulomb_torque: f64,
    /// Downward acceleration bias along world -z (m/s²).
    pub gravity_bias: f64,
    /// Linear viscous damping (N·s/m).
    pub viscous_linear: f64,
    /// Angular viscous damping (N·m·s/rad).
    pub viscous_angular: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    Ideal,
    Friction,
    Gravity,
}

impl DisturbanceKind {
    pub const ALL: [DisturbanceKind; 3] = [DisturbanceKind::Ideal, DisturbanceKind::Friction, DisturbanceKind::Gravity];

    /// Friction of 0.15 N per axis (0.015 N·m on rotation, a 0.1 m lever)
    /// or a 0.12 m/s² gravity bias.
    pub fn preset(self) -> Disturbances {
        match self {
            DisturbanceKind::Ideal => Disturbances::default(),
            DisturbanceKind::Friction => Disturbances {
                coulomb_force: 0.15,
                coulomb_torque: 0.015,
                ..Disturbances::default()
            },
            DisturbanceKind::Gravity => Disturbances { gravity_bias: 0.12, ..Disturbances::default() },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DisturbanceKind::Ideal => "ideal",
            DisturbanceKind::Friction => "friction",
            DisturbanceKind::Gravity => "gravity",
        }
    }
}

impl std::str::FromStr for DisturbanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(DisturbanceKind::Ideal),
            "friction" => Ok(DisturbanceKind::Friction),
            "gravity" => Ok(DisturbanceKind::Gravity),
            _ => Err(Error::InvalidArgument(format!("unknown disturbance `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub pose: Pose6D,
    pub linear_velocity: Vec3,
    /// World frame (rad/s).
    pub angular_velocity: Vec3,
    pub mass: f64,
    /// Isotropic rotational inertia (kg·m²).
    pub inertia: f64,
    pub disturbances: Disturbances,
    /// Motion blocked: the plant ignores every wrench.
    pub frozen: bool,
}

impl PlantState {
    pub fn at_rest(pose: Pose6D, disturbances: Disturbances) -> Self {
        Self {
            pose,
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            mass: 1.0,
            inertia: 0.05,
            disturbances,
            frozen: false,
        }
    }

    /// Kinetic energy (J).
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.linear_velocity.norm_squared() + 0.5 * self.inertia * self.angular_velocity.norm_squared()
    }
}

/// Semi-implicit Euler for one axis with Coulomb friction `fc`. A body at
/// rest stays at rest while the other forces are within the friction
/// bound; a velocity that friction alone would reverse is stopped at zero.
fn axis_velocity(v: f64, force: f64, fc: f64, inv_m: f64, dt: f64) -> f64 {
    if fc <= 0.0 {
        return v + force * inv_m * dt;
    }
    if v == 0.0 {
        if force.abs() <= fc {
            return 0.0;
        }
        return (force - fc * force.signum()) * inv_m * dt;
    }
    let next = v + (force - fc * v.signum()) * inv_m * dt;
    if next * v < 0.0 && (force - fc * next.signum()).signum() != next.signum() {
        0.0
    } else {
        next
    }
}

pub fn step_plant(plant: &PlantState, wrench: &Wrench, dt: f64) -> Result<PlantState> {
    assert!(dt > 0.0, "time step must be positive");
    if plant.frozen {
        return Ok(*plant);
    }
    let d = &plant.disturbances;
    let mut next = *plant;
    let inv_m = 1.0 / plant.mass;
    let inv_i = 1.0 / plant.inertia;
    for k in 0..3 {
        let mut f = wrench[k] - d.viscous_linear * plant.linear_velocity[k];
        if k == 2 {
            f -= plant.mass * d.gravity_bias;
        }
        next.linear_velocity[k] = axis_velocity(plant.linear_velocity[k], f, d.coulomb_force, inv_m, dt);
        let tau = wrench[3 + k] - d.viscous_angular * plant.angular_velocity[k];
        next.angular_velocity[k] = axis_velocity(plant.angular_velocity[k], tau, d.coulomb_torque, inv_i, dt);
    }
    let position = plant.pose.position + next.linear_velocity * dt;
    let spin = UnitQuaternion::from_scaled_axis(next.angular_velocity * dt);
    let orientation = UnitQuaternion::new_normalize(*(spin * plant.pose.orientation).quaternion());
    next.pose = Pose6D::from_parts(position, orientation);
    let norm = position.norm();
    if !(norm <= DIVERGENCE_LIMIT) {
        return Err(Error::Diverged { step: 0, norm });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_wrench_at_rest_stays() {
        let p = PlantState::at_rest(Pose6D::identity(), Disturbances::default());
        assert_eq!(step_plant(&p, &[0.0; 6], 1.0 / 120.0).unwrap(), p);
    }

    #[test]
    fn semi_implicit_euler() {
        let p = PlantState::at_rest(Pose6D::identity(), Disturbances::default());
        let dt = 0.01;
        let n = step_plant(&p, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0], dt).unwrap();
        assert_eq!(n.linear_velocity.x, 2.0 * dt);
        assert_eq!(n.pose.position.x, 2.0 * dt * dt);
    }

    #[test]
    fn stiction_holds() {
        let d = DisturbanceKind::Friction.preset();
        let p = PlantState::at_rest(Pose6D::identity(), d);
        let n = step_plant(&p, &[0.1, -0.14, 0.0, 0.01, 0.0, 0.0], 1.0 / 120.0).unwrap();
        assert_eq!(n, p);
        let moved = step_plant(&p, &[0.2, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0 / 120.0).unwrap();
        assert!(moved.linear_velocity.x > 0.0);
    }

    #[test]
    fn friction_stops_without_reversing() {
        let d = DisturbanceKind::Friction.preset();
        let mut p = PlantState::at_rest(Pose6D::identity(), d);
        p.linear_velocity.x = 0.001;
        let n = step_plant(&p, &[0.0; 6], 1.0 / 120.0).unwrap();
        assert_eq!(n.linear_velocity.x, 0.0);
    }

    #[test]
    fn damped_energy_decreases() {
        let d = Disturbances { viscous_linear: 2.0, viscous_angular: 0.5, ..Disturbances::default() };
        let mut p = PlantState::at_rest(Pose6D::identity(), d);
        p.linear_velocity = Vec3::new(0.3, -0.1, 0.2);
        p.angular_velocity = Vec3::new(0.5, 0.0, -1.0);
        let mut e = p.kinetic_energy();
        for _ in 0..500 {
            p = step_plant(&p, &[0.0; 6], 1.0 / 120.0).unwrap();
            assert!(p.kinetic_energy() <= e);
            e = p.kinetic_energy();
        }
    }

    #[test]
    fn divergence_is_reported() {
        let mut p = PlantState::at_rest(Pose6D::from_translation(Vec3::new(9.99, 0.0, 0.0)), Disturbances::default());
        p.linear_velocity.x = 10.0;
        assert!(matches!(step_plant(&p, &[0.0; 6], 0.01), Err(Error::Diverged { .. })));
    }
}
