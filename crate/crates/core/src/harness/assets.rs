//! Procedural peg-in-hole assets: plug and socket meshes, their SDF grids,
//! and the point sets the environment and rewards read.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::primitives::{self, Profile};
use crate::geometry::{bake_sdf, sample_points, Aabb, SampleMode, SdfGrid, TriangleMesh};
use crate::pose::{Pose6D, Vec3};
use crate::rewards::{KeypointLayout, KeypointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    Round,
    Rect,
}

/// Rectangular pegs are `size × RECT_ASPECT·size`.
pub const RECT_ASPECT: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssetSpec {
    pub kind: AssetKind,
    /// Peg diameter, or the longer side of a rectangular peg (m).
    pub size: f64,
    /// Hole dimension minus peg dimension (m).
    pub clearance: f64,
    pub plug_length: f64,
    pub socket_height: f64,
    pub hole_depth: f64,
    /// Socket wall thickness around the hole (m).
    pub wall: f64,
    pub segments: usize,
    pub plug_voxel: f64,
    pub socket_voxel: f64,
    /// Plug surface samples used for contact checks.
    pub contact_points: usize,
    /// Plug surface samples the SDF reward is evaluated at.
    pub reward_points: usize,
    pub seed: u64,
}

impl Default for AssetSpec {
    fn default() -> Self {
        Self {
            kind: AssetKind::Round,
            size: 0.016,
            clearance: 0.0005,
            plug_length: 0.025,
            socket_height: 0.020,
            hole_depth: 0.015,
            wall: 0.016,
            segments: 32,
            plug_voxel: 0.0005,
            socket_voxel: 0.00025,
            contact_points: 200,
            reward_points: 256,
            seed: 0,
        }
    }
}

impl AssetSpec {
    pub fn new(kind: AssetKind, size: f64, clearance: f64) -> Self {
        Self { kind, size, clearance, ..Self::default() }
    }

    pub fn plug_profile(&self) -> Profile {
        match self.kind {
            AssetKind::Round => Profile::Circle { radius: 0.5 * self.size },
            AssetKind::Rect => Profile::Rect { half_x: 0.5 * self.size, half_y: 0.5 * RECT_ASPECT * self.size },
        }
    }

    pub fn hole_profile(&self) -> Profile {
        self.plug_profile().grown(0.5 * self.clearance)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("assets: {m}")));
        if !(self.clearance > 0.0) {
            return bad("clearance must be positive");
        }
        if !(self.size > 0.0 && self.wall > 0.0 && self.plug_length > 0.0) {
            return bad("dimensions must be positive");
        }
        if !(0.0 < self.hole_depth && self.hole_depth < self.socket_height) {
            return bad("hole depth must lie strictly inside the socket height");
        }
        if self.plug_length <= self.hole_depth {
            return bad("plug must protrude from the seated hole");
        }
        if self.segments < 8 || !(self.plug_voxel > 0.0 && self.socket_voxel > 0.0) || self.contact_points == 0 || self.reward_points == 0 {
            return bad("segments >= 8, positive voxels and contact points required");
        }
        Ok(())
    }
}

/// Plug frame: axis along +z, tip (bottom face) at z = 0. Socket frame:
/// opening at z = 0, hole floor at `-hole_depth`.
#[derive(Debug, Clone)]
pub struct ToyAssets {
    pub spec: AssetSpec,
    pub plug: TriangleMesh,
    pub socket: TriangleMesh,
    /// The plug's own SDF, queried around its target pose.
    pub target_grid: SdfGrid,
    pub socket_grid: SdfGrid,
    /// Plug-frame points checked against the socket grid.
    pub contact_points: Vec<Vec3>,
    pub contact_bbox: Aabb,
    /// Plug-frame surface points for the SDF reward. Vertices alone would
    /// not do: a prism's vertices stay on its side faces under axial shifts.
    pub reward_points: Vec<Vec3>,
    pub plug_vertices: Vec<Vec3>,
    pub socket_vertices: Vec<Vec3>,
    pub sixdof: KeypointSet,
    pub collinear: KeypointSet,
    /// Seated plug pose in the socket frame.
    pub seated: Pose6D,
    /// Keypoint threshold scaled to the object: the plug bbox diagonal.
    pub eps_k: f64,
}

impl ToyAssets {
    pub fn goal_pose(&self, socket_pose: &Pose6D) -> Pose6D {
        socket_pose.then(&self.seated)
    }
}

pub fn make_toy_assets(kind: AssetKind, size: f64, clearance: f64) -> Result<ToyAssets> {
    build_assets(&AssetSpec::new(kind, size, clearance))
}

pub fn build_assets(spec: &AssetSpec) -> Result<ToyAssets> {
    spec.validate()?;
    let peg = spec.plug_profile();
    let hole = spec.hole_profile();
    let half_outer = 0.5 * hole.max_dimension() + spec.wall;
    let outer = Profile::Rect { half_x: half_outer, half_y: half_outer };
    let angles = primitives::ring_angles(&[peg, hole, outer], spec.segments);
    let plug = primitives::prism(&peg, &angles, 0.0, spec.plug_length);
    let socket = primitives::block_with_hole(&outer, &hole, &angles, spec.socket_height, spec.hole_depth);
    let target_grid = bake_sdf(&plug, spec.plug_voxel)?;
    let socket_grid = bake_sdf(&socket, spec.socket_voxel)?;
    let mut contact_points = sample_points(&plug, spec.contact_points, SampleMode::Surface, spec.seed)?.points;
    contact_points.extend_from_slice(plug.vertices());
    let reward_points = sample_points(&plug, spec.reward_points, SampleMode::Surface, spec.seed.wrapping_add(1))?.points;
    let eps_k = plug.bbox().diagonal();
    Ok(ToyAssets {
        spec: *spec,
        sixdof: KeypointSet::new(KeypointLayout::Sixdof13, plug.bbox()),
        collinear: KeypointSet::new(KeypointLayout::Collinear4, plug.bbox()),
        plug_vertices: plug.vertices().to_vec(),
        socket_vertices: socket.vertices().to_vec(),
        seated: Pose6D::from_translation(Vec3::new(0.0, 0.0, -spec.hole_depth)),
        target_grid,
        socket_grid,
        contact_bbox: Aabb::from_points(&contact_points),
        contact_points,
        reward_points,
        plug,
        socket,
        eps_k,
    })
}
