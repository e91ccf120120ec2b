//! Voxel signed-distance grids: baking, trilinear queries and a small binary
//! file format.
//!
//! File layout, all little-endian: `b"SDFG"`, version `u32`, origin `3×f64`,
//! voxel size `f64`, dims `3×u32`, then `f32` values with x varying fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::TriangleMesh;
use crate::geometry::query::contains_unchecked;
use crate::pose::Vec3;

const MAGIC: &[u8; 4] = b"SDFG";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 24 + 8 + 12;

/// Default voxel budget: 256³.
pub const DEFAULT_VOXEL_BUDGET: u64 = 256 * 256 * 256;
/// Lattice layers added outside the mesh bbox on every face.
pub const PADDING_VOXELS: usize = 2;
/// Fractional lattice coordinates this close to an integer snap onto it.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfGrid {
    pub origin: Vec3,
    pub voxel_size: f64,
    pub dims: [usize; 3],
    /// x varies fastest: index = x + dims[0]·(y + dims[1]·z).
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub value: f64,
    /// The point was outside the lattice; `value` is a lower bound built from
    /// the nearest boundary value plus the distance to it.
    pub extrapolated: bool,
}

/// `1/128` of the bbox diagonal.
pub fn default_voxel_size(mesh: &TriangleMesh) -> f64 {
    mesh.bbox().diagonal() / 128.0
}

pub fn bake_sdf(mesh: &TriangleMesh, voxel_size: f64) -> Result<SdfGrid> {
    bake_sdf_with_budget(mesh, voxel_size, DEFAULT_VOXEL_BUDGET)
}

/// Samples the signed distance at every lattice point: magnitude from the
/// closest surface point, sign from the containment test.
pub fn bake_sdf_with_budget(mesh: &TriangleMesh, voxel_size: f64, budget: u64) -> Result<SdfGrid> {
    if !(voxel_size.is_finite() && voxel_size > 0.0) {
        return Err(Error::InvalidArgument(format!("voxel size must be positive, got {voxel_size}")));
    }
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !mesh.is_watertight() {
        return Err(Error::NotWatertight);
    }
    let bbox = mesh.bbox();
    let pad = PADDING_VOXELS as f64 * voxel_size;
    let origin = bbox.min - Vec3::repeat(pad);
    let ext = bbox.extent();
    let mut dims = [0usize; 3];
    let mut requested: u64 = 1;
    for k in 0..3 {
        let cells = (ext[k] / voxel_size).ceil();
        if !cells.is_finite() || cells > u32::MAX as f64 {
            return Err(Error::VoxelBudget { requested: u64::MAX, budget });
        }
        dims[k] = cells as usize + 2 * PADDING_VOXELS + 1;
        requested = requested.saturating_mul(dims[k] as u64);
    }
    if requested > budget {
        return Err(Error::VoxelBudget { requested, budget });
    }
    let bvh = mesh.bvh();
    let [nx, ny, _] = dims;
    let values: Vec<f32> = (0..requested as usize)
        .into_par_iter()
        .map(|ix| {
            let (x, y, z) = (ix % nx, (ix / nx) % ny, ix / (nx * ny));
            let p = origin + Vec3::new(x as f64, y as f64, z as f64) * voxel_size;
            let d = bvh.closest_point(mesh, &p).map_or(f64::INFINITY, |c| c.distance);
            let s = if contains_unchecked(mesh, &p) { -d } else { d };
            s as f32
        })
        .collect();
    Ok(SdfGrid {
        origin,
        voxel_size,
        dims,
        values,
    })
}

impl SdfGrid {
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn lattice_point(&self, x: usize, y: usize, z: usize) -> Vec3 {
        self.origin + Vec3::new(x as f64, y as f64, z as f64) * self.voxel_size
    }

    pub fn value_at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.index(x, y, z)] as f64
    }

    /// Far corner of the lattice.
    pub fn max_corner(&self) -> Vec3 {
        self.lattice_point(self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1)
    }

    pub fn query(&self, p: &Vec3) -> SdfSample {
        let mut f = [0.0f64; 3];
        let mut clamped = Vec3::zeros();
        let mut extrapolated = false;
        for k in 0..3 {
            let mut c = (p[k] - self.origin[k]) / self.voxel_size;
            let r = c.round();
            if (c - r).abs() < SNAP {
                c = r;
            }
            let hi = (self.dims[k] - 1) as f64;
            if !(0.0..=hi).contains(&c) {
                extrapolated = true;
                c = c.clamp(0.0, hi);
            }
            f[k] = c;
            clamped[k] = self.origin[k] + c * self.voxel_size;
        }
        let inside = self.interpolate(f);
        if extrapolated {
            SdfSample {
                value: inside + (p - clamped).norm(),
                extrapolated: true,
            }
        } else {
            SdfSample {
                value: inside,
                extrapolated: false,
            }
        }
    }

    /// Shorthand for `query(p).value`.
    #[inline]
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.query(p).value
    }

    fn interpolate(&self, f: [f64; 3]) -> f64 {
        let mut i = [0usize; 3];
        let mut t = [0.0f64; 3];
        for k in 0..3 {
            if self.dims[k] < 2 {
                continue;
            }
            let fl = (f[k].floor() as usize).min(self.dims[k] - 2);
            i[k] = fl;
            t[k] = f[k] - fl as f64;
        }
        let step = |k: usize| usize::from(self.dims[k] >= 2);
        let (sx, sy, sz) = (step(0), step(1), step(2));
        let v = |dx: usize, dy: usize, dz: usize| self.value_at(i[0] + dx, i[1] + dy, i[2] + dz);
        // `a·(1−t) + b·t` returns `a` exactly at t = 0 and `b` exactly at t = 1.
        let lerp = |a: f64, b: f64, t: f64| a * (1.0 - t) + b * t;
        let c00 = lerp(v(0, 0, 0), v(sx, 0, 0), t[0]);
        let c10 = lerp(v(0, sy, 0), v(sx, sy, 0), t[0]);
        let c01 = lerp(v(0, 0, sz), v(sx, 0, sz), t[0]);
        let c11 = lerp(v(0, sy, sz), v(sx, sy, sz), t[0]);
        let c0 = lerp(c00, c10, t[1]);
        let c1 = lerp(c01, c11, t[1]);
        lerp(c0, c1, t[2])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        for k in 0..3 {
            buf.extend_from_slice(&self.origin[k].to_le_bytes());
        }
        buf.extend_from_slice(&self.voxel_size.to_le_bytes());
        for d in self.dims {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SdfGrid> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::SdfFormat(format!("file too short ({} bytes)", bytes.len())));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::SdfFormat("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::SdfFormat(format!("unsupported version {version}")));
        }
        let origin = Vec3::new(f64_at(8), f64_at(16), f64_at(24));
        let voxel_size = f64_at(32);
        let dims = [u32_at(40) as usize, u32_at(44) as usize, u32_at(48) as usize];
        if !(voxel_size.is_finite() && voxel_size > 0.0) || !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::SdfFormat("non-finite origin or voxel size".into()));
        }
        if dims.contains(&0) {
            return Err(Error::SdfFormat(format!("empty dims {dims:?}")));
        }
        let count = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let expected = count.and_then(|c| c.checked_mul(4)).and_then(|b| b.checked_add(HEADER_LEN));
        if expected != Some(bytes.len()) {
            return Err(Error::SdfFormat(format!(
                "dims {dims:?} do not match payload of {} bytes",
                bytes.len() - HEADER_LEN
            )));
        }
        let values = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(SdfGrid {
            origin,
            voxel_size,
            dims,
            values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SdfGrid> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;

    fn tiny() -> SdfGrid {
        SdfGrid {
            origin: Vec3::new(-1.0, -1.0, -1.0),
            voxel_size: 1.0,
            dims: [3, 3, 3],
            values: (0..27).map(|i| i as f32 * 0.1 - 1.0).collect(),
        }
    }

    #[test]
    fn lattice_points_are_exact() {
        let g = tiny();
        for z in 0..3 {
            for y in 0..3 {
                for x in 0..3 {
                    let s = g.query(&g.lattice_point(x, y, z));
                    assert!(!s.extrapolated);
                    assert_eq!(s.value, g.value_at(x, y, z));
                }
            }
        }
    }

    #[test]
    fn midpoint_of_neighbors() {
        let mut g = tiny();
        g.values.iter_mut().for_each(|v| *v = 0.5);
        let a = g.index(0, 0, 0);
        let b = g.index(1, 0, 0);
        g.values[a] = 1.0;
        g.values[b] = 2.0;
        // Along the edge between two lattice neighbors only those two weigh in.
        let s = g.query(&(g.lattice_point(0, 0, 0) + Vec3::new(0.5, 0.0, 0.0)));
        assert_eq!(s.value, 1.5);
    }

    #[test]
    fn outside_is_flagged_lower_bound() {
        let g = tiny();
        let s = g.query(&Vec3::new(3.0, 0.0, 0.0));
        assert!(s.extrapolated);
        let edge = g.query(&Vec3::new(1.0, 0.0, 0.0)).value;
        assert!((s.value - (edge + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sphere_bake_signs_and_padding() {
        let m = primitives::icosphere(0.5, 3);
        let g = bake_sdf(&m, 0.05).unwrap();
        let b = m.bbox();
        for k in 0..3 {
            assert!(g.origin[k] <= b.min[k] - 2.0 * g.voxel_size + 1e-12);
            assert!(g.max_corner()[k] >= b.max[k] + 2.0 * g.voxel_size - 1e-12);
        }
        assert!(g.distance(&Vec3::zeros()) < -0.45);
        assert!(g.distance(&Vec3::new(0.75, 0.0, 0.0)) > 0.2);
    }

    #[test]
    fn budget_is_enforced() {
        let m = primitives::cube(1.0);
        let err = bake_sdf(&m, 1e-3).unwrap_err();
        assert!(matches!(err, Error::VoxelBudget { .. }));
        let err = bake_sdf_with_budget(&m, 0.1, 100).unwrap_err();
        assert!(matches!(err, Error::VoxelBudget { requested: 3375, budget: 100 }));
    }

    #[test]
    fn file_round_trip() {
        let m = primitives::cube(1.0);
        let g = bake_sdf(&m, 0.1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.sdf");
        g.save(&p).unwrap();
        let back = SdfGrid::load(&p).unwrap();
        assert_eq!(g, back);
        let mut bytes = g.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(SdfGrid::from_bytes(&bytes), Err(Error::SdfFormat(_))));
        let bytes = g.to_bytes();
        assert!(SdfGrid::from_bytes(&bytes[..bytes.len() - 4]).is_err());
    }
}
