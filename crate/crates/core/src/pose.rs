//! Rigid poses and the incremental pose algebra used for action application.
//!
//! A [`PoseDelta`] is an incremental target: its translation is expressed in
//! the base (world) frame and its rotation is an increment in the body frame.
//! `compose` (⊕) right-multiplies the rotation, `difference` (⊖) is its exact
//! algebraic inverse.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Quaternions whose squared norm drifts further than this from 1 are
/// renormalized after composition.
const UNIT_DRIFT: f64 = 1e-15;

fn renormalized(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    if (q.norm_squared() - 1.0).abs() > UNIT_DRIFT {
        UnitQuaternion::new_normalize(q)
    } else {
        UnitQuaternion::new_unchecked(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose6D {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose6D {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose6D {
    pub fn identity() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    /// Builds a pose from a position and a (w, x, y, z) quaternion, which is
    /// normalized here.
    pub fn new(position: Vec3, wxyz: [f64; 4]) -> Result<Self> {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "quaternion {wxyz:?} cannot be normalized"
            )));
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite position".into()));
        }
        Ok(Self {
            position,
            orientation: UnitQuaternion::new_normalize(q),
        })
    }

    pub fn from_translation(position: Vec3) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_parts(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    /// Parses `[x, y, z, qw, qx, qy, qz]`.
    pub fn from_array7(v: [f64; 7]) -> Result<Self> {
        Self::new(Vec3::new(v[0], v[1], v[2]), [v[3], v[4], v[5], v[6]])
    }

    pub fn to_array7(&self) -> [f64; 7] {
        let q = self.orientation.quaternion();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }

    /// Maps a point from this pose's local frame into the parent frame.
    #[inline]
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation.transform_vector(p) + self.position
    }

    /// Maps a point from the parent frame into this pose's local frame.
    #[inline]
    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(&(p - self.position))
    }

    /// Rigid-body product `self * other` (frame chaining, not ⊕).
    pub fn then(&self, other: &Pose6D) -> Pose6D {
        Pose6D {
            position: self.transform_point(&other.position),
            orientation: renormalized(*(self.orientation * other.orientation).quaternion()),
        }
    }

    pub fn inverse(&self) -> Pose6D {
        let inv = self.orientation.inverse();
        Pose6D {
            position: -(inv.transform_vector(&self.position)),
            orientation: inv,
        }
    }

    /// The pose of `self` expressed in the frame of `frame`.
    pub fn relative_to(&self, frame: &Pose6D) -> Pose6D {
        frame.inverse().then(self)
    }

    /// Geodesic angle between two orientations, in radians.
    pub fn angle_to(&self, other: &Pose6D) -> f64 {
        self.orientation.angle_to(&other.orientation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseDelta {
    pub translation: Vec3,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for PoseDelta {
    fn default() -> Self {
        Self::identity()
    }
}

impl PoseDelta {
    pub fn identity() -> Self {
        Self {
            translation: Vec3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            translation,
            rotation: UnitQuaternion::identity(),
        }
    }

    /// Translation plus a rotation vector (axis × angle, body frame).
    pub fn new(translation: Vec3, rotation_vector: Vec3) -> Self {
        Self {
            translation,
            rotation: UnitQuaternion::from_scaled_axis(rotation_vector),
        }
    }

    pub fn rotation_vector(&self) -> Vec3 {
        self.rotation.scaled_axis()
    }

    pub fn angle(&self) -> f64 {
        self.rotation.angle()
    }

    pub fn is_identity(&self) -> bool {
        self.translation == Vec3::zeros() && self.rotation == UnitQuaternion::identity()
    }

    /// Per-axis symmetric clamp on translation, geodesic-angle clamp on
    /// rotation.
    pub fn clamped(&self, max_translation: &Vec3, max_angle: f64) -> PoseDelta {
        let translation = Vec3::from_fn(|i, _| {
            let m = max_translation[i].abs();
            self.translation[i].clamp(-m, m)
        });
        let angle = self.rotation.angle();
        let rotation = if angle > max_angle {
            let axis = self.rotation.scaled_axis() / angle;
            UnitQuaternion::from_scaled_axis(axis * max_angle)
        } else {
            self.rotation
        };
        PoseDelta {
            translation,
            rotation,
        }
    }
}

/// `base ⊕ delta`.
#[inline]
pub fn compose(base: &Pose6D, delta: &PoseDelta) -> Pose6D {
    Pose6D {
        position: base.position + delta.translation,
        orientation: renormalized(*(base.orientation * delta.rotation).quaternion()),
    }
}

/// `a ⊖ b`: the delta `d` with `compose(b, d) == a`.
#[inline]
pub fn difference(a: &Pose6D, b: &Pose6D) -> PoseDelta {
    PoseDelta {
        translation: a.position - b.position,
        rotation: renormalized(*(b.orientation.inverse() * a.orientation).quaternion()),
    }
}

/// Distance between two unit quaternions that treats q and -q as equal.
pub fn quaternion_distance(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let (qa, qb) = (a.quaternion(), b.quaternion());
    (qa - qb).norm().min((qa + qb).norm())
}
