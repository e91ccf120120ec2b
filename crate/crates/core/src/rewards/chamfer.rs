//! Symmetric chamfer distance with a static kd-tree for nearest neighbors.

use crate::error::{Error, Result};
use crate::pose::Vec3;

/// Balanced 3-d tree stored implicitly: the median of each range is its
/// root, split axes cycle x, y, z.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut points = points.to_vec();
        build(&mut points, 0);
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance to the nearest stored point (infinite when empty).
    pub fn nearest_squared(&self, q: &Vec3) -> f64 {
        let mut best = f64::INFINITY;
        search(&self.points, 0, q, &mut best);
        best
    }
}

fn build(pts: &mut [Vec3], depth: usize) {
    if pts.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = pts.len() / 2;
    pts.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let (left, right) = pts.split_at_mut(mid);
    build(left, depth + 1);
    build(&mut right[1..], depth + 1);
}

fn search(pts: &[Vec3], depth: usize, q: &Vec3, best: &mut f64) {
    if pts.is_empty() {
        return;
    }
    let mid = pts.len() / 2;
    let p = &pts[mid];
    let d2 = (p - q).norm_squared();
    if d2 < *best {
        *best = d2;
    }
    let axis = depth % 3;
    let diff = q[axis] - p[axis];
    let (near, far) = if diff < 0.0 {
        (&pts[..mid], &pts[mid + 1..])
    } else {
        (&pts[mid + 1..], &pts[..mid])
    };
    search(near, depth + 1, q, best);
    if diff * diff < *best {
        search(far, depth + 1, q, best);
    }
}

/// Mean over `a` of the squared distance to the nearest point of `b`, plus
/// the same from `b` to `a`.
pub fn chamfer_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("chamfer distance needs non-empty clouds".into()));
    }
    let (ta, tb) = (KdTree::new(a), KdTree::new(b));
    let ab: f64 = a.iter().map(|p| tb.nearest_squared(p)).sum::<f64>() / a.len() as f64;
    let ba: f64 = b.iter().map(|p| ta.nearest_squared(p)).sum::<f64>() / b.len() as f64;
    Ok(ab + ba)
}

/// Negative symmetric chamfer distance.
pub fn chamfer_reward(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    chamfer_distance(a, b).map(|d| -d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_points() {
        let a = [Vec3::zeros()];
        let b = [Vec3::x()];
        assert_eq!(chamfer_reward(&a, &b).unwrap(), -2.0);
        assert_eq!(chamfer_reward(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(chamfer_reward(&[], &[Vec3::x()]).is_err());
    }

    #[test]
    fn kdtree_finds_duplicates_and_ties() {
        let pts = vec![Vec3::x(); 7];
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest_squared(&Vec3::zeros()), 1.0);
        let grid: Vec<Vec3> = (0..27)
            .map(|i| Vec3::new((i % 3) as f64, ((i / 3) % 3) as f64, (i / 9) as f64))
            .collect();
        let t = KdTree::new(&grid);
        for p in &grid {
            assert_eq!(t.nearest_squared(p), 0.0);
        }
        assert_eq!(t.nearest_squared(&Vec3::new(0.5, 0.5, 0.5)), 0.75);
    }
}
