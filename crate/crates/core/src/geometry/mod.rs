//! Meshes, distance fields and the plug/socket interpenetration check.

pub mod bvh;
pub mod interpenetration;
pub mod io;
pub mod mesh;
pub mod primitives;
pub mod query;
pub mod sampling;
pub mod sdf;

pub use bvh::ClosestPoint;
pub use interpenetration::{interpenetration, max_interpenetration, IpOptions, IpReport};
pub use io::{load_mesh, MeshFormat};
pub use mesh::{Aabb, MeshWarning, TriangleMesh};
pub use query::{closest_point, contains_point, surface_distance};
pub use sampling::{sample_points, PointSample, SampleMode};
pub use sdf::{bake_sdf, SdfGrid, SdfSample};
