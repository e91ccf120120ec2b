//! Bounding-volume hierarchy over mesh triangles.
//!
//! Nodes live in a flat vector; an interior node stores the index of its
//! second child, the first child immediately follows it. Leaves reference a
//! contiguous range of the reordered triangle list.

use crate::geometry::mesh::{closest_point_on_triangle, ray_triangle, Aabb, RayHit, TriangleMesh};
use crate::pose::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    /// Leaf: first triangle slot. Interior: index of the right child.
    start_or_right: u32,
    /// Number of triangles for a leaf, 0 for an interior node.
    count: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle indices in leaf order.
    order: Vec<u32>,
}

/// Closest surface point query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub distance: f64,
    pub triangle: usize,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let n = mesh.triangles().len();
        let boxes: Vec<Aabb> = (0..n).map(|i| Aabb::from_points(mesh.triangle(i).iter())).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| b.center()).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        if n > 0 {
            build_node(&mut nodes, &mut order, 0, n, &boxes, &centroids);
        }
        Self { nodes, order }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn closest_point(&self, mesh: &TriangleMesh, p: &Vec3) -> Option<ClosestPoint> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best_d2 = f64::INFINITY;
        let mut best = (Vec3::zeros(), usize::MAX);
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bbox.distance_squared(p)));
        while let Some((ix, d2)) = stack.pop() {
            if d2 > best_d2 {
                continue;
            }
            let node = &self.nodes[ix as usize];
            if node.count > 0 {
                let s = node.start_or_right as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    let [a, b, c] = mesh.triangle(t as usize);
                    let q = closest_point_on_triangle(p, &a, &b, &c);
                    let dq = (q - p).norm_squared();
                    // Ties resolve to the lowest triangle index so the result
                    // does not depend on traversal order.
                    if dq < best_d2 || (dq == best_d2 && (t as usize) < best.1) {
                        best_d2 = dq;
                        best = (q, t as usize);
                    }
                }
            } else {
                let l = ix + 1;
                let r = node.start_or_right;
                let dl = self.nodes[l as usize].bbox.distance_squared(p);
                let dr = self.nodes[r as usize].bbox.distance_squared(p);
                // Push the farther child first so the nearer one is popped next.
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        Some(ClosestPoint {
            point: best.0,
            distance: best_d2.sqrt(),
            triangle: best.1,
        })
    }

    /// Calls `visit` for every triangle whose plane the ray (t >= 0) might
    /// cross, with the raw hit record (or `None` for a parallel triangle).
    /// Returning `false` from the visitor stops the traversal.
    pub(crate) fn ray_visit(
        &self,
        mesh: &TriangleMesh,
        origin: &Vec3,
        dir: &Vec3,
        mut visit: impl FnMut(usize, Option<RayHit>) -> bool,
    ) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ix) = stack.pop() {
            let node = &self.nodes[ix as usize];
            if node.bbox.ray_entry(origin, &inv, f64::INFINITY).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.start_or_right as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    let [a, b, c] = mesh.triangle(t as usize);
                    if !visit(t as usize, ray_triangle(origin, dir, &a, &b, &c)) {
                        return;
                    }
                }
            } else {
                stack.push(node.start_or_right);
                stack.push(ix + 1);
            }
        }
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    start: usize,
    end: usize,
    boxes: &[Aabb],
    centroids: &[Vec3],
) -> u32 {
    let slice = &mut order[start..end];
    let bbox = slice
        .iter()
        .fold(Aabb::empty(), |acc, &t| acc.union(&boxes[t as usize]));
    let ix = nodes.len() as u32;
    let count = end - start;
    if count <= LEAF_SIZE {
        nodes.push(Node {
            bbox,
            start_or_right: start as u32,
            count: count as u32,
        });
        return ix;
    }
    let cbox = Aabb::from_points(slice.iter().map(|&t| &centroids[t as usize]));
    let ext = cbox.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = count / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    nodes.push(Node {
        bbox,
        start_or_right: 0,
        count: 0,
    });
    build_node(nodes, order, start, start + mid, boxes, centroids);
    let right = build_node(nodes, order, start + mid, end, boxes, centroids);
    nodes[ix as usize].start_or_right = right;
    ix
}
