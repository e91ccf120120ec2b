//! Maximum interpenetration depth of a plug mesh into a socket mesh.
//!
//! Points are sampled in the plug frame, mapped into the socket frame, and
//! every point strictly inside the socket contributes its distance to the
//! socket surface. The plug-to-socket transform is snapped to a 1e-9 lattice
//! before use, so moving both poses by the same rigid transform gives the
//! same depth bit for bit.

use nalgebra::{Quaternion, UnitQuaternion};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::{Aabb, TriangleMesh};
use crate::geometry::query::contains_unchecked;
use crate::geometry::sampling::{sample_points, SampleMode};
use crate::geometry::sdf::SdfGrid;
use crate::pose::{Pose6D, Vec3};

pub const DEFAULT_SAMPLES: usize = 1000;

/// Lattice for the relative transform (meters, and unitless for the
/// quaternion components).
const POSE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IpReport {
    /// Deepest contained point, 0 when none is contained.
    pub max_depth: f64,
    /// Mean depth over the contained points, 0 when none is contained.
    pub mean_depth: f64,
    pub contained: usize,
    pub checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpOptions {
    pub n: usize,
    pub seed: u64,
    pub mode: SampleMode,
}

impl Default for IpOptions {
    fn default() -> Self {
        Self {
            n: DEFAULT_SAMPLES,
            seed: 0,
            mode: SampleMode::DEFAULT_MIXED,
        }
    }
}

/// Plug pose expressed in the socket frame, snapped to a fixed lattice.
pub fn relative_pose(plug_pose: &Pose6D, socket_pose: &Pose6D) -> Pose6D {
    let rel = plug_pose.relative_to(socket_pose);
    let snap = |v: f64| (v / POSE_SNAP).round() * POSE_SNAP;
    let q = rel.orientation.quaternion();
    let sign = if q.w < 0.0 { -1.0 } else { 1.0 };
    let qs = Quaternion::new(snap(sign * q.w), snap(sign * q.i), snap(sign * q.j), snap(sign * q.k));
    Pose6D::from_parts(rel.position.map(snap), UnitQuaternion::new_normalize(qs))
}

/// Deepest penetration of `n` plug points (default mixed surface/volume
/// sampling) into the socket.
pub fn max_interpenetration(
    plug: &TriangleMesh,
    socket: &TriangleMesh,
    plug_pose: &Pose6D,
    socket_pose: &Pose6D,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let opts = IpOptions {
        n,
        seed,
        ..IpOptions::default()
    };
    interpenetration(plug, socket, plug_pose, socket_pose, &opts).map(|r| r.max_depth)
}

pub fn interpenetration(
    plug: &TriangleMesh,
    socket: &TriangleMesh,
    plug_pose: &Pose6D,
    socket_pose: &Pose6D,
    opts: &IpOptions,
) -> Result<IpReport> {
    if !plug.is_watertight() || !socket.is_watertight() {
        return Err(Error::NotWatertight);
    }
    let rel = relative_pose(plug_pose, socket_pose);
    if !plug.bbox().transformed(&rel).intersects(socket.bbox()) {
        return Ok(IpReport::default());
    }
    let sample = sample_points(plug, opts.n, opts.mode, opts.seed)?;
    Ok(depths_exact(&sample.points, socket, &rel))
}

/// Same as [`interpenetration`] for caller-provided plug-frame points.
pub fn interpenetration_of_points(
    points: &[Vec3],
    socket: &TriangleMesh,
    plug_pose: &Pose6D,
    socket_pose: &Pose6D,
) -> Result<IpReport> {
    if !socket.is_watertight() {
        return Err(Error::NotWatertight);
    }
    if points.is_empty() {
        return Ok(IpReport::default());
    }
    let rel = relative_pose(plug_pose, socket_pose);
    if !Aabb::from_points(points.iter()).transformed(&rel).intersects(socket.bbox()) {
        return Ok(IpReport::default());
    }
    Ok(depths_exact(points, socket, &rel))
}

fn depths_exact(points: &[Vec3], socket: &TriangleMesh, rel: &Pose6D) -> IpReport {
    let bvh = socket.bvh();
    let depths: Vec<f64> = points
        .par_iter()
        .filter_map(|p| {
            let q = rel.transform_point(p);
            if !contains_unchecked(socket, &q) {
                return None;
            }
            bvh.closest_point(socket, &q).map(|c| c.distance)
        })
        .collect();
    summarize(&depths, points.len())
}

fn summarize(depths: &[f64], checked: usize) -> IpReport {
    if depths.is_empty() {
        return IpReport {
            checked,
            ..IpReport::default()
        };
    }
    IpReport {
        max_depth: depths.iter().copied().fold(0.0, f64::max),
        mean_depth: depths.iter().sum::<f64>() / depths.len() as f64,
        contained: depths.len(),
        checked,
    }
}

/// Grid-accelerated variant: depth is `-φ` from the socket's SDF (baked in
/// the socket frame), contained means `φ < 0`.
pub fn interpenetration_grid(
    points: &[Vec3],
    socket_grid: &SdfGrid,
    plug_pose: &Pose6D,
    socket_pose: &Pose6D,
) -> IpReport {
    let rel = relative_pose(plug_pose, socket_pose);
    let depths: Vec<f64> = points
        .iter()
        .filter_map(|p| {
            let phi = socket_grid.distance(&rel.transform_point(p));
            (phi < 0.0).then_some(-phi)
        })
        .collect();
    summarize(&depths, points.len())
}

/// True as soon as one point penetrates deeper than `tolerance` according to
/// the grid. `rel` is the plug pose in the socket frame.
pub fn grid_exceeds(points: &[Vec3], socket_grid: &SdfGrid, rel: &Pose6D, tolerance: f64) -> bool {
    points
        .iter()
        .any(|p| socket_grid.distance(&rel.transform_point(p)) < -tolerance)
}

/// Deepest grid penetration with the plug at `rel` in the socket frame.
pub fn grid_max_depth(points: &[Vec3], socket_grid: &SdfGrid, rel: &Pose6D) -> f64 {
    points
        .iter()
        .map(|p| -socket_grid.distance(&rel.transform_point(p)))
        .fold(0.0, f64::max)
}
