//! Deterministic point sampling on and inside meshes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::TriangleMesh;
use crate::geometry::query::contains_unchecked;
use crate::pose::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Surface,
    Volume,
    /// Surface and volume points mixed; `surface_percent` of the points lie
    /// on the surface.
    Mixed { surface_percent: u8 },
    /// The mesh vertices themselves (`n` and the seed are ignored).
    Vertices,
}

impl SampleMode {
    pub const DEFAULT_MIXED: SampleMode = SampleMode::Mixed { surface_percent: 50 };
}

/// Points in the mesh-local frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub points: Vec<Vec3>,
    pub mode: SampleMode,
    pub seed: u64,
}

impl PointSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Samples `n` points. Surface sampling picks triangles by area and then a
/// uniform barycentric point; volume sampling rejection-samples the bounding
/// box against the mesh.
pub fn sample_points(mesh: &TriangleMesh, n: usize, mode: SampleMode, seed: u64) -> Result<PointSample> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if n == 0 && mode != SampleMode::Vertices {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = match mode {
        SampleMode::Surface => surface(mesh, n, &mut rng),
        SampleMode::Volume => {
            if !mesh.is_watertight() {
                return Err(Error::NotWatertight);
            }
            volume(mesh, n, &mut rng)?
        }
        SampleMode::Mixed { surface_percent } => {
            if surface_percent > 100 {
                return Err(Error::InvalidArgument("surface_percent must be <= 100".into()));
            }
            let n_surface = n * surface_percent as usize / 100;
            if n_surface < n && !mesh.is_watertight() {
                return Err(Error::NotWatertight);
            }
            let mut pts = surface(mesh, n_surface, &mut rng);
            pts.extend(volume(mesh, n - n_surface, &mut rng)?);
            pts
        }
        SampleMode::Vertices => mesh.vertices().to_vec(),
    };
    Ok(PointSample { points, mode, seed })
}

fn surface(mesh: &TriangleMesh, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut cdf = Vec::with_capacity(mesh.triangles().len());
    let mut acc = 0.0;
    for i in 0..mesh.triangles().len() {
        acc += mesh.triangle_area(i);
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let r = rng.gen::<f64>() * acc;
            let tri = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
            let [a, b, c] = mesh.triangle(tri);
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            let su = u.sqrt();
            a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v)
        })
        .collect()
}

const VOLUME_BATCH: usize = 4096;
const MAX_VOLUME_ATTEMPTS: usize = 1 << 28;

fn volume(mesh: &TriangleMesh, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec3>> {
    let bbox = *mesh.bbox();
    let ext = bbox.extent();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        // Candidates are drawn sequentially and tested in parallel; accepted
        // points keep their draw order.
        let batch: Vec<Vec3> = (0..VOLUME_BATCH)
            .map(|_| bbox.min + Vec3::new(rng.gen::<f64>() * ext.x, rng.gen::<f64>() * ext.y, rng.gen::<f64>() * ext.z))
            .collect();
        let inside: Vec<bool> = batch.par_iter().map(|p| contains_unchecked(mesh, p)).collect();
        out.extend(
            batch
                .into_iter()
                .zip(inside)
                .filter_map(|(p, ok)| ok.then_some(p))
                .take(n - out.len()),
        );
        attempts += VOLUME_BATCH;
        if attempts > MAX_VOLUME_ATTEMPTS {
            return Err(Error::InvalidArgument(
                "volume sampling found too few interior points; is the mesh inside-out?".into(),
            ));
        }
    }
    Ok(out)
}
