//! Exact shrinking solutions and the rotationally symmetric solver.

mod axisym;
mod exact;

pub use axisym::{
    axisym_stable_timestep, axisym_step, axisym_step_with, axisym_to_mesh, AxisymProfile,
    ProfileBoundary, ProfileCurvature,
};
pub use exact::{cylinder_radius, exact_cylinder, exact_sphere, sphere_radius};
