//! Procedural watertight meshes: boxes, icospheres, prismatic pegs and
//! blocks with a blind hole.
//!
//! Prismatic shapes are described by a star-shaped cross-section sampled
//! along a shared list of polar angles, so a peg and the hole made for it
//! line up vertex-for-vertex and the clearance is uniform.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::mesh::TriangleMesh;
use crate::pose::Vec3;

fn build(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> TriangleMesh {
    let (mesh, warnings) =
        TriangleMesh::new(vertices, triangles).expect("procedural mesh indices are valid");
    debug_assert!(warnings.is_empty(), "procedural mesh has degenerate faces");
    mesh
}

/// Axis-aligned box centered at the origin.
pub fn cuboid(half: Vec3) -> TriangleMesh {
    let (x, y, z) = (half.x, half.y, half.z);
    let v = vec![
        Vec3::new(-x, -y, -z),
        Vec3::new(x, -y, -z),
        Vec3::new(x, y, -z),
        Vec3::new(-x, y, -z),
        Vec3::new(-x, -y, z),
        Vec3::new(x, -y, z),
        Vec3::new(x, y, z),
        Vec3::new(-x, y, z),
    ];
    let t = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    build(v, t)
}

/// Cube with edge length `size`, centered at the origin.
pub fn cube(size: f64) -> TriangleMesh {
    cuboid(Vec3::repeat(size * 0.5))
}

/// Subdivided icosahedron projected onto a sphere centered at the origin.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut t: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, v: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                v.push(((v[a as usize] + v[b as usize]) * 0.5).normalize());
                (v.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(t.len() * 4);
        for &[a, b, c] in &t {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        t = next;
    }
    for p in &mut v {
        *p *= radius;
    }
    build(v, t)
}

/// Star-shaped cross-section around the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Profile {
    Circle { radius: f64 },
    Rect { half_x: f64, half_y: f64 },
}

impl Profile {
    /// Distance from the axis to the boundary along polar angle `theta`.
    /// Circles are represented by their inscribed polygon, so the radius is
    /// constant at the sample angles.
    pub fn radius_at(&self, theta: f64) -> f64 {
        match *self {
            Profile::Circle { radius } => radius,
            Profile::Rect { half_x, half_y } => {
                let (s, c) = theta.sin_cos();
                let tx = if c.abs() > 1e-15 { half_x / c.abs() } else { f64::INFINITY };
                let ty = if s.abs() > 1e-15 { half_y / s.abs() } else { f64::INFINITY };
                tx.min(ty)
            }
        }
    }

    fn corner_angles(&self) -> Vec<f64> {
        match *self {
            Profile::Circle { .. } => vec![],
            Profile::Rect { half_x, half_y } => {
                let a = half_y.atan2(half_x);
                vec![a, PI - a, PI + a, TAU - a]
            }
        }
    }

    /// Diameter, or the longer side of a rectangle.
    pub fn max_dimension(&self) -> f64 {
        match *self {
            Profile::Circle { radius } => 2.0 * radius,
            Profile::Rect { half_x, half_y } => 2.0 * half_x.max(half_y),
        }
    }

    /// The same profile grown by `amount` on every side (radius for circles).
    pub fn grown(&self, amount: f64) -> Profile {
        match *self {
            Profile::Circle { radius } => Profile::Circle { radius: radius + amount },
            Profile::Rect { half_x, half_y } => Profile::Rect {
                half_x: half_x + amount,
                half_y: half_y + amount,
            },
        }
    }
}

/// Polar sample angles covering every corner of the given profiles plus
/// `segments` uniform angles.
pub fn ring_angles(profiles: &[Profile], segments: usize) -> Vec<f64> {
    let mut angles: Vec<f64> = (0..segments).map(|i| TAU * i as f64 / segments as f64).collect();
    for p in profiles {
        angles.extend(p.corner_angles());
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    angles
}

fn ring(profile: &Profile, angles: &[f64], z: f64) -> Vec<Vec3> {
    angles
        .iter()
        .map(|&th| {
            let r = profile.radius_at(th);
            Vec3::new(r * th.cos(), r * th.sin(), z)
        })
        .collect()
}

/// Solid prism with the given cross-section spanning `z0..z1`.
pub fn prism(profile: &Profile, angles: &[f64], z0: f64, z1: f64) -> TriangleMesh {
    let k = angles.len() as u32;
    let mut v = ring(profile, angles, z0);
    v.extend(ring(profile, angles, z1));
    let cb = v.len() as u32;
    v.push(Vec3::new(0.0, 0.0, z0));
    let ct = cb + 1;
    v.push(Vec3::new(0.0, 0.0, z1));
    let mut t = Vec::with_capacity(4 * k as usize);
    for i in 0..k {
        let j = (i + 1) % k;
        let (b0, b1, t0, t1) = (i, j, k + i, k + j);
        t.push([b0, b1, t1]);
        t.push([b0, t1, t0]);
        t.push([cb, b1, b0]);
        t.push([ct, t0, t1]);
    }
    build(v, t)
}

/// Block whose top face lies at z = 0 and bottom at `-height`, with a blind
/// hole of the `hole` cross-section reaching down to `-hole_depth`.
pub fn block_with_hole(
    outer: &Profile,
    hole: &Profile,
    angles: &[f64],
    height: f64,
    hole_depth: f64,
) -> TriangleMesh {
    assert!(hole_depth < height, "hole must not pierce the block");
    let k = angles.len() as u32;
    let mut v = ring(outer, angles, 0.0); // 0..k outer top
    v.extend(ring(hole, angles, 0.0)); // k..2k inner top
    v.extend(ring(outer, angles, -height)); // 2k..3k outer bottom
    v.extend(ring(hole, angles, -hole_depth)); // 3k..4k hole bottom
    let c_bottom = v.len() as u32;
    v.push(Vec3::new(0.0, 0.0, -height));
    let c_hole = c_bottom + 1;
    v.push(Vec3::new(0.0, 0.0, -hole_depth));
    let mut t = Vec::with_capacity(8 * k as usize);
    for i in 0..k {
        let j = (i + 1) % k;
        let (ot0, ot1) = (i, j);
        let (it0, it1) = (k + i, k + j);
        let (ob0, ob1) = (2 * k + i, 2 * k + j);
        let (ib0, ib1) = (3 * k + i, 3 * k + j);
        // top annulus, facing +z
        t.push([it0, ot0, ot1]);
        t.push([it0, ot1, it1]);
        // outer wall, facing outward
        t.push([ob0, ob1, ot1]);
        t.push([ob0, ot1, ot0]);
        // bottom, facing -z
        t.push([c_bottom, ob1, ob0]);
        // hole wall, facing the hole axis
        t.push([ib0, it1, ib1]);
        t.push([ib0, it0, it1]);
        // hole floor, facing +z
        t.push([c_hole, ib0, ib1]);
    }
    build(v, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_is_closed_and_outward() {
        let s = icosphere(0.5, 2);
        assert!(s.is_watertight());
        assert_eq!(s.triangles().len(), 320);
        let exact = 4.0 / 3.0 * PI * 0.125;
        let vol = s.signed_volume();
        assert!(vol > 0.0 && vol < exact && vol > 0.9 * exact);
    }

    #[test]
    fn prism_and_block_are_closed() {
        let peg = Profile::Circle { radius: 0.008 };
        let hole = peg.grown(0.00025);
        let outer = Profile::Rect { half_x: 0.014, half_y: 0.014 };
        let angles = ring_angles(&[outer, hole], 32);
        let p = prism(&peg, &angles, 0.0, 0.025);
        assert!(p.is_watertight());
        assert!(p.signed_volume() > 0.0);
        let b = block_with_hole(&outer, &hole, &angles, 0.02, 0.015);
        assert!(b.is_watertight());
        // Block volume = box - hole polygon prism.
        let hole_prism = prism(&hole, &angles, -0.015, 0.0);
        let expected = 0.028 * 0.028 * 0.02 - hole_prism.signed_volume();
        assert!((b.signed_volume() - expected).abs() < 1e-12);
    }

    #[test]
    fn rect_profiles_keep_corners() {
        let peg = Profile::Rect { half_x: 0.008, half_y: 0.005 };
        let outer = Profile::Rect { half_x: 0.014, half_y: 0.014 };
        let hole = peg.grown(0.00025);
        let angles = ring_angles(&[peg, hole, outer], 16);
        let p = prism(&peg, &angles, 0.0, 0.02);
        assert!(p.is_watertight());
        assert!((p.signed_volume() - 0.016 * 0.010 * 0.02).abs() < 1e-15);
        let b = block_with_hole(&outer, &hole, &angles, 0.02, 0.015);
        assert!(b.is_watertight());
        let expected = 0.028 * 0.028 * 0.02 - 0.0165 * 0.0105 * 0.015;
        assert!((b.signed_volume() - expected).abs() < 1e-12 * expected);
    }
}
