//! Closest-point and containment queries against a [`TriangleMesh`].

use crate::error::{Error, Result};
use crate::geometry::bvh::ClosestPoint;
use crate::geometry::mesh::TriangleMesh;
use crate::pose::Vec3;

/// Ray directions tried in order when a ray grazes an edge, a vertex or lies
/// in a triangle plane. Fixed so containment is reproducible.
const RAY_DIRECTIONS: [[f64; 3]; 8] = [
    [0.5773502691896258, 0.3771236166328254, 0.7243179071880463],
    [-0.2672612419124244, 0.8017837257372732, 0.5345224838248488],
    [0.8164965809277261, -0.4082482904638631, 0.4082482904638631],
    [0.1230914909793327, 0.2461829819586655, -0.9613949056412366],
    [-0.6651901052377393, -0.4435267368251597, 0.6006155012551548],
    [0.3015113445777636, -0.9045340337332909, -0.3015113445777636],
    [-0.7071067811865476, 0.1005037815259212, -0.6999512891643196],
    [0.9128709291752769, 0.1825741858350554, -0.3651483716701107],
];

/// Barycentric margin under which a crossing counts as an edge/vertex hit.
const EDGE_EPS: f64 = 1e-9;

/// Closest point on the mesh surface to `p`.
pub fn closest_point(mesh: &TriangleMesh, p: &Vec3) -> Result<ClosestPoint> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    mesh.bvh().closest_point(mesh, p).ok_or(Error::EmptyMesh)
}

/// Unsigned distance from `p` to the mesh surface.
pub fn surface_distance(mesh: &TriangleMesh, p: &Vec3) -> Result<f64> {
    closest_point(mesh, p).map(|c| c.distance)
}

/// True iff `p` lies strictly inside the closed surface.
///
/// Counts ray crossings; a ray that grazes an edge or vertex is discarded and
/// the next direction of a fixed sequence is tried. Points on the surface
/// (within `1e-12` of the bbox diagonal) are reported as outside.
pub fn contains_point(mesh: &TriangleMesh, p: &Vec3) -> Result<bool> {
    if !mesh.is_watertight() {
        return Err(Error::NotWatertight);
    }
    Ok(contains_unchecked(mesh, p))
}

pub(crate) fn contains_unchecked(mesh: &TriangleMesh, p: &Vec3) -> bool {
    let bbox = mesh.bbox();
    if !bbox.contains(p) {
        return false;
    }
    let surface_eps = 1e-12 * bbox.diagonal().max(f64::MIN_POSITIVE);
    let mut last = false;
    for dir in RAY_DIRECTIONS.iter().map(|d| Vec3::new(d[0], d[1], d[2])) {
        match cast_parity(mesh, p, &dir, surface_eps) {
            Cast::Parity(odd) => return odd,
            Cast::OnSurface => return false,
            Cast::Degenerate(odd) => last = odd,
        }
    }
    last
}

enum Cast {
    Parity(bool),
    OnSurface,
    /// The ray grazed a feature; carries the (unreliable) parity seen.
    Degenerate(bool),
}

fn cast_parity(mesh: &TriangleMesh, p: &Vec3, dir: &Vec3, surface_eps: f64) -> Cast {
    let mut crossings = 0u32;
    let mut on_surface = false;
    let mut degenerate = false;
    mesh.bvh().ray_visit(mesh, p, dir, |tri, hit| {
        let Some(h) = hit else {
            // Parallel: only a problem if the ray runs inside the plane.
            let [a, b, c] = mesh.triangle(tri);
            let n = (b - a).cross(&(c - a));
            let dist = n.dot(&(p - a)).abs() / n.norm();
            if dist <= surface_eps {
                let q = crate::geometry::mesh::closest_point_on_triangle(p, &a, &b, &c);
                if (q - p).norm() <= surface_eps {
                    on_surface = true;
                    return false;
                }
                degenerate = true;
                return false;
            }
            return true;
        };
        let inside_tri = h.u >= -EDGE_EPS && h.v >= -EDGE_EPS && h.u + h.v <= 1.0 + EDGE_EPS;
        if !inside_tri {
            return true;
        }
        if h.t.abs() <= surface_eps {
            on_surface = true;
            return false;
        }
        if h.t < 0.0 {
            return true;
        }
        if h.u <= EDGE_EPS || h.v <= EDGE_EPS || h.u + h.v >= 1.0 - EDGE_EPS {
            degenerate = true;
            return false;
        }
        crossings += 1;
        true
    });
    if on_surface {
        Cast::OnSurface
    } else if degenerate {
        Cast::Degenerate(crossings % 2 == 1)
    } else {
        Cast::Parity(crossings % 2 == 1)
    }
}
