mod common;

use assemblykit::geometry::interpenetration::{interpenetration, IpOptions};
use assemblykit::geometry::primitives::{self, Profile};
use assemblykit::geometry::{
    bake_sdf, closest_point, contains_point, max_interpenetration, sample_points, SampleMode,
};
use assemblykit::{Pose6D, Vec3};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_in(rng: &mut ChaCha8Rng, min: &Vec3, max: &Vec3) -> Vec3 {
    Vec3::from_fn(|i, _| rng.gen_range(min[i]..max[i]))
}

fn peg_block() -> (assemblykit::geometry::TriangleMesh, assemblykit::geometry::TriangleMesh) {
    let peg = Profile::Circle { radius: 0.008 };
    let hole = peg.grown(0.00025);
    let outer = Profile::Rect { half_x: 0.014, half_y: 0.014 };
    let angles = primitives::ring_angles(&[peg, hole, outer], 32);
    (
        primitives::prism(&peg, &angles, 0.0, 0.025),
        primitives::block_with_hole(&outer, &hole, &angles, 0.02, 0.015),
    )
}

#[test]
fn closest_point_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (_, block) = peg_block();
    for mesh in [primitives::cube(1.0), primitives::icosphere(0.5, 3), block] {
        let b = mesh.bbox().padded(0.5 * mesh.bbox().diagonal());
        for _ in 0..1000 {
            let p = random_in(&mut rng, &b.min, &b.max);
            let fast = closest_point(&mesh, &p).unwrap().distance;
            let slow = exhaustive_distance(&mesh, &p);
            assert!((fast - slow).abs() <= 1e-9, "{p:?}: {fast} vs {slow}");
        }
    }
}

#[test]
fn containment_matches_winding_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (peg, block) = peg_block();
    for mesh in [primitives::cube(1.0), primitives::icosphere(0.5, 2), peg, block] {
        let b = mesh.bbox().padded(0.1 * mesh.bbox().diagonal());
        for _ in 0..10_000 {
            let p = random_in(&mut rng, &b.min, &b.max);
            assert_eq!(contains_point(&mesh, &p).unwrap(), winding_inside(&mesh, &p), "{p:?}");
        }
    }
}

#[test]
fn containment_on_lattice_aligned_points() {
    // Points sharing coordinates with cube edges and vertices stress the
    // degenerate-ray fallback.
    let cube = primitives::cube(1.0);
    for &x in &[-0.25, 0.0, 0.25] {
        for &y in &[-0.25, 0.0, 0.25] {
            for &z in &[-0.25, 0.0, 0.25] {
                assert!(contains_point(&cube, &Vec3::new(x, y, z)).unwrap());
                assert!(!contains_point(&cube, &Vec3::new(x + 1.0, y, z)).unwrap());
            }
        }
    }
}

#[test]
fn sdf_sphere_matches_analytic() {
    let sphere = primitives::icosphere(0.5, 3);
    let g = bake_sdf(&sphere, 0.01).unwrap();
    let tol = 2.0 * g.voxel_size;
    assert!((g.distance(&Vec3::zeros()) + 0.5).abs() <= tol);
    // Beyond the two padding layers the value is extrapolated radially,
    // which is exact for a sphere.
    let s = g.query(&Vec3::new(0.75, 0.0, 0.0));
    assert!(s.extrapolated);
    assert!((s.value - 0.25).abs() <= tol, "{}", s.value);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let p = random_in(&mut rng, &g.origin, &g.max_corner());
        let e = (g.distance(&p) - sphere_sdf(0.5, &p)).abs();
        assert!(e <= tol, "{p:?}: error {e}");
    }
}

#[test]
fn sdf_cube_matches_analytic() {
    let cube = primitives::cube(1.0);
    let g = bake_sdf(&cube, 0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let p = random_in(&mut rng, &g.origin, &g.max_corner());
        let e = (g.distance(&p) - box_sdf(&Vec3::repeat(0.5), &p)).abs();
        assert!(e <= 2.0 * g.voxel_size, "{p:?}: error {e}");
    }
    // Stored lattice values have the sign of the containment test.
    for (ix, v) in g.values.iter().enumerate() {
        let (nx, ny) = (g.dims[0], g.dims[1]);
        let p = g.lattice_point(ix % nx, (ix / nx) % ny, ix / (nx * ny));
        assert_eq!(*v < 0.0, contains_point(&cube, &p).unwrap(), "{p:?}");
    }
}

#[test]
fn sampling_is_seed_deterministic_across_modes() {
    let (peg, _) = peg_block();
    for mode in [SampleMode::Surface, SampleMode::Volume, SampleMode::DEFAULT_MIXED] {
        let a = sample_points(&peg, 777, mode, 5).unwrap();
        let b = sample_points(&peg, 777, mode, 5).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn interpenetration_disjoint_and_contained_peg() {
    let (peg, block) = peg_block();
    let socket = Pose6D::identity();
    // Fully inserted with uniform clearance: no contact.
    let seated = Pose6D::from_translation(Vec3::new(0.0, 0.0, -0.015));
    let d = max_interpenetration(&peg, &block, &seated, &socket, 5000, 0).unwrap();
    assert_eq!(d, 0.0);
    // Shifted sideways by two clearances at depth: the wall is violated.
    let shifted = Pose6D::from_translation(Vec3::new(0.0005, 0.0, -0.010));
    let d = max_interpenetration(&peg, &block, &shifted, &socket, 5000, 0).unwrap();
    let oracle = dense_ip_oracle(&peg, &block, &shifted, &socket, 0.0005, 4);
    assert!(d > 0.0);
    assert!(d <= oracle + 1e-9, "{d} vs {oracle}");
    assert!(d >= 0.8 * oracle, "{d} vs {oracle}");
}

#[test]
fn interpenetration_monotone_on_cube_family() {
    let cube = primitives::cube(1.0);
    let box_socket = primitives::cuboid(Vec3::new(1.0, 1.0, 1.0));
    let opts = IpOptions { n: 4000, seed: 2, mode: SampleMode::DEFAULT_MIXED };
    // Every plug point stays on the +x side of the socket center, so each
    // point's depth can only grow as the plug moves in.
    let mut last = 0.0;
    for i in 0..=20 {
        let x = 1.6 - 0.055 * i as f64;
        let plug = Pose6D::from_translation(Vec3::new(x, 0.0, 0.0));
        let d = interpenetration(&cube, &box_socket, &plug, &Pose6D::identity(), &opts).unwrap().max_depth;
        assert!(d >= last, "x={x}: {d} < {last}");
        last = d;
    }
}
