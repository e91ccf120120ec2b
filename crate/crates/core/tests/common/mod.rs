//! Independent brute-force oracles shared by the integration and acceptance
//! tests. Nothing here uses the library's acceleration structures.
#![allow(dead_code)]

use assemblykit::geometry::mesh::{closest_point_on_triangle, TriangleMesh};
use assemblykit::{Pose6D, Vec3};

/// Minimum point-triangle distance over every triangle.
pub fn exhaustive_distance(mesh: &TriangleMesh, p: &Vec3) -> f64 {
    (0..mesh.triangles().len())
        .map(|i| {
            let [a, b, c] = mesh.triangle(i);
            (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Generalized winding number: sum of signed solid angles / 4π.
pub fn winding_number(mesh: &TriangleMesh, p: &Vec3) -> f64 {
    let mut total = 0.0;
    for i in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle(i);
        let (a, b, c) = (a - p, b - p, c - p);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

pub fn winding_inside(mesh: &TriangleMesh, p: &Vec3) -> bool {
    winding_number(mesh, p) > 0.5
}

pub fn box_sdf(half: &Vec3, p: &Vec3) -> f64 {
    let q = p.abs() - half;
    let outside = q.map(|v| v.max(0.0)).norm();
    let inside = q.x.max(q.y).max(q.z).min(0.0);
    outside + inside
}

pub fn sphere_sdf(radius: f64, p: &Vec3) -> f64 {
    p.norm() - radius
}

/// Points on or inside `mesh`: a regular lattice with spacing `h` through
/// the bbox kept by winding number, plus a barycentric lattice with
/// `k` subdivisions on every triangle.
pub fn closed_lattice(mesh: &TriangleMesh, h: f64, k: usize) -> Vec<Vec3> {
    let b = mesh.bbox();
    let n = ((b.extent() / h).map(|v| v.round() as usize)).add_scalar(1);
    let mut pts = Vec::new();
    for z in 0..n.z {
        for y in 0..n.y {
            for x in 0..n.x {
                let p = b.min + Vec3::new(x as f64, y as f64, z as f64) * h;
                if winding_inside(mesh, &p) {
                    pts.push(p);
                }
            }
        }
    }
    for i in 0..mesh.triangles().len() {
        let [a, bb, c] = mesh.triangle(i);
        for u in 0..=k {
            for v in 0..=(k - u) {
                let (fu, fv) = (u as f64 / k as f64, v as f64 / k as f64);
                pts.push(a + (bb - a) * fu + (c - a) * fv);
            }
        }
    }
    pts
}

/// Dense-lattice interpenetration oracle: deepest lattice point of the plug
/// (by winding number, strictly inside the socket) measured by exhaustive
/// distance to the socket triangles.
pub fn dense_ip_oracle(
    plug: &TriangleMesh,
    socket: &TriangleMesh,
    plug_pose: &Pose6D,
    socket_pose: &Pose6D,
    h: f64,
    k: usize,
) -> f64 {
    closed_lattice(plug, h, k)
        .iter()
        .map(|p| socket_pose.inverse_transform_point(&plug_pose.transform_point(p)))
        .filter(|q| winding_inside(socket, q))
        .map(|q| exhaustive_distance(socket, &q))
        .fold(0.0, f64::max)
}
