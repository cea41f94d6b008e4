//! Surface representations and their differential geometry.

mod curvature;
mod mesh;
mod model;

pub use curvature::{fitted_normal, principal_curvatures_fit};
#[cfg(test)]
pub(crate) use curvature::face_cotangents;
pub(crate) use curvature::{mixed_areas, FaceCotangents};
pub use mesh::{
    build_cylinder_mesh, build_disk, build_ellipsoid, build_icosphere, equilateral_rings,
    perpendicular_frame, Gauge, Mesh, Topology, Vec3,
};
pub use model::{ModelKind, ModelQuery, ModelSurface};
