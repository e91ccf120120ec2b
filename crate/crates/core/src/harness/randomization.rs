//! Per-episode initial-state randomization and observation noise.

use nalgebra::UnitQuaternion;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curriculum::{sample_initial_height, sample_lateral_offset, CurriculumState};
use crate::error::{Error, Result};
use crate::pose::{Pose6D, Vec3};

/// Closed uniform ranges `[lo, hi]`; lengths in meters, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationSpec {
    /// Plug-to-socket XY offset half-range.
    pub plug_xy: f64,
    /// Plug tip height above the opening when no curriculum drives it.
    pub plug_dz: [f64; 2],
    pub socket_x: [f64; 2],
    pub socket_y: [f64; 2],
    pub socket_z: [f64; 2],
    pub socket_yaw_deg: [f64; 2],
    /// Half-range of the per-step plug position observation noise.
    pub obs_noise: f64,
}

impl Default for RandomizationSpec {
    fn default() -> Self {
        Self {
            plug_xy: 0.010,
            plug_dz: [0.0, 0.020],
            socket_x: [0.4, 0.6],
            socket_y: [-0.1, 0.1],
            socket_z: [0.0, 0.05],
            socket_yaw_deg: [-5.0, 5.0],
            obs_noise: 0.001,
        }
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] < r[1] {
        rng.gen_range(r[0]..=r[1])
    } else {
        r[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStart {
    pub socket: Pose6D,
    /// Plug tip position in the socket frame.
    pub plug_offset: Vec3,
}

impl EpisodeStart {
    /// World plug pose; the plug keeps the world-aligned orientation.
    pub fn plug_pose(&self) -> Pose6D {
        Pose6D::from_translation(self.socket.transform_point(&self.plug_offset))
    }
}

impl RandomizationSpec {
    pub fn validate(&self) -> Result<()> {
        let ranges = [self.plug_dz, self.socket_x, self.socket_y, self.socket_z, self.socket_yaw_deg];
        if ranges.iter().any(|r| !(r[0] <= r[1])) || !(self.plug_xy >= 0.0) || !(self.obs_noise >= 0.0) {
            return Err(Error::InvalidArgument("randomization ranges must satisfy lo <= hi and be non-negative".into()));
        }
        Ok(())
    }

    pub fn sample_socket<R: Rng + ?Sized>(&self, rng: &mut R) -> Pose6D {
        let p = Vec3::new(draw(rng, self.socket_x), draw(rng, self.socket_y), draw(rng, self.socket_z));
        let yaw = draw(rng, self.socket_yaw_deg).to_radians();
        Pose6D::from_parts(p, UnitQuaternion::from_euler_angles(0.0, 0.0, yaw))
    }

    /// Start without a curriculum: height from `plug_dz`, lateral offset
    /// from `plug_xy`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EpisodeStart {
        let socket = self.sample_socket(rng);
        let r = self.plug_xy;
        let (x, y) = if r > 0.0 { (rng.gen_range(-r..=r), rng.gen_range(-r..=r)) } else { (0.0, 0.0) };
        let z = draw(rng, self.plug_dz);
        EpisodeStart { socket, plug_offset: Vec3::new(x, y, z) }
    }

    /// Start whose height comes from the curriculum; the lateral offset is
    /// applied only above the opening.
    pub fn sample_with_curriculum<R: Rng + ?Sized>(&self, state: &CurriculumState, rng: &mut R) -> EpisodeStart {
        let socket = self.sample_socket(rng);
        let z = sample_initial_height(state, rng);
        let lateral = CurriculumState { lateral_range: self.plug_xy, ..*state };
        let (x, y) = sample_lateral_offset(&lateral, z, rng);
        EpisodeStart { socket, plug_offset: Vec3::new(x, y, z) }
    }

    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let n = self.obs_noise;
        if n > 0.0 {
            Vec3::from_fn(|_, _| rng.gen_range(-n..=n))
        } else {
            Vec3::zeros()
        }
    }
}
