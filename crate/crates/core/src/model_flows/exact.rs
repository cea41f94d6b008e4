use crate::error::{Error, Result};
use crate::geometry::{ModelSurface, Vec3};

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::arg("t", format!("exact flows exist for t < 0, got {t}")))
    }
}

/// Radius of the shrinking sphere, `r² = −4t`.
pub fn sphere_radius(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok((-4.0 * t).sqrt())
}

/// Radius of the shrinking cylinder, `r² = −2t`.
pub fn cylinder_radius(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok((-2.0 * t).sqrt())
}

/// The round sphere centered at the origin that vanishes at `t = 0`.
pub fn exact_sphere(t: f64) -> Result<ModelSurface> {
    ModelSurface::sphere(Vec3::zeros(), sphere_radius(t)?)
}

/// The round cylinder about the z-axis that vanishes at `t = 0`.
pub fn exact_cylinder(t: f64) -> Result<ModelSurface> {
    ModelSurface::cylinder(Vec3::zeros(), Vec3::z(), cylinder_radius(t)?)
}
