//! Exact plane, cylinder and sphere surfaces.

use serde::{Deserialize, Serialize};

use super::mesh::{
    build_cylinder_mesh, build_disk, build_icosphere, equilateral_rings, unit_axis, Mesh, Vec3,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Plane,
    Cylinder,
    Sphere,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Plane, ModelKind::Cylinder, ModelKind::Sphere];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Plane => "plane",
            ModelKind::Cylinder => "cylinder",
            ModelKind::Sphere => "sphere",
        }
    }
}

/// An exact model surface. `axis` is the plane normal, the cylinder axis,
/// and unused (but kept unit) for spheres. `radius` is `None` for planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct ModelSurface {
    kind: ModelKind,
    center: Vec3,
    axis: Vec3,
    radius: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    kind: ModelKind,
    center: [f64; 3],
    axis: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

impl TryFrom<ModelRepr> for ModelSurface {
    type Error = Error;
    fn try_from(r: ModelRepr) -> Result<Self> {
        let center = Vec3::from(r.center);
        let axis = Vec3::from(r.axis);
        match (r.kind, r.radius) {
            (ModelKind::Plane, None) => ModelSurface::plane(center, axis),
            (ModelKind::Plane, Some(_)) => Err(Error::arg("radius", "planes have no radius")),
            (ModelKind::Cylinder, Some(rad)) => ModelSurface::cylinder(center, axis, rad),
            (ModelKind::Sphere, Some(rad)) => {
                let mut s = ModelSurface::sphere(center, rad)?;
                s.axis = unit_axis(axis, "axis")?;
                Ok(s)
            }
            (_, None) => Err(Error::arg("radius", "required for cylinders and spheres")),
        }
    }
}

impl From<ModelSurface> for ModelRepr {
    fn from(m: ModelSurface) -> Self {
        ModelRepr {
            kind: m.kind,
            center: m.center.into(),
            axis: m.axis.into(),
            radius: m.radius,
        }
    }
}

/// Result of an exact closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelQuery {
    /// Positive on the side the normal points to (outside).
    pub signed_distance: f64,
    pub nearest: Vec3,
    pub normal: Vec3,
    pub mean_curvature: f64,
}

fn check_radius(radius: f64) -> Result<f64> {
    if radius > 0.0 && radius.is_finite() {
        Ok(radius)
    } else {
        Err(Error::arg("radius", format!("must be positive, got {radius}")))
    }
}

impl ModelSurface {
    pub fn plane(point: Vec3, normal: Vec3) -> Result<Self> {
        Ok(Self {
            kind: ModelKind::Plane,
            center: point,
            axis: unit_axis(normal, "normal")?,
            radius: None,
        })
    }

    pub fn cylinder(base: Vec3, axis: Vec3, radius: f64) -> Result<Self> {
        Ok(Self {
            kind: ModelKind::Cylinder,
            center: base,
            axis: unit_axis(axis, "axis")?,
            radius: Some(check_radius(radius)?),
        })
    }

    pub fn sphere(center: Vec3, radius: f64) -> Result<Self> {
        Ok(Self {
            kind: ModelKind::Sphere,
            center,
            axis: Vec3::z(),
            radius: Some(check_radius(radius)?),
        })
    }

    /// The origin-centered self-shrinker of the given kind: the plane
    /// `z = 0`, the unit cylinder about the z-axis, the sphere of radius √2.
    pub fn shrinker(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Plane => Self::plane(Vec3::zeros(), Vec3::z()),
            ModelKind::Cylinder => Self::cylinder(Vec3::zeros(), Vec3::z(), 1.0),
            ModelKind::Sphere => Self::sphere(Vec3::zeros(), std::f64::consts::SQRT_2),
        }
        .expect("valid constants")
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    /// Mean curvature with the outward-normal convention: 0, 1/r, 2/r.
    pub fn mean_curvature(&self) -> f64 {
        match (self.kind, self.radius) {
            (ModelKind::Plane, _) => 0.0,
            (ModelKind::Cylinder, Some(r)) => 1.0 / r,
            (ModelKind::Sphere, Some(r)) => 2.0 / r,
            _ => unreachable!("radius validated at construction"),
        }
    }

    /// Norm of the second fundamental form: 0, 1/r, √2/r.
    pub fn curvature_norm(&self) -> f64 {
        match (self.kind, self.radius) {
            (ModelKind::Plane, _) => 0.0,
            (ModelKind::Cylinder, Some(r)) => 1.0 / r,
            (ModelKind::Sphere, Some(r)) => std::f64::consts::SQRT_2 / r,
            _ => unreachable!("radius validated at construction"),
        }
    }

    /// Same surface scaled by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            center: self.center * factor,
            radius: self.radius.map(|r| r * factor),
            ..*self
        }
    }

    /// Exact closest point, signed distance, normal and H. Points on the
    /// cylinder axis or at the sphere center have no unique nearest point.
    pub fn query(&self, point: &Vec3) -> Result<ModelQuery> {
        let d = point - self.center;
        let h = self.mean_curvature();
        match self.kind {
            ModelKind::Plane => {
                let dist = d.dot(&self.axis);
                Ok(ModelQuery {
                    signed_distance: dist,
                    nearest: point - self.axis * dist,
                    normal: self.axis,
                    mean_curvature: h,
                })
            }
            ModelKind::Cylinder | ModelKind::Sphere => {
                let r = self.radius.expect("radius present");
                let radial = if self.kind == ModelKind::Cylinder {
                    d - self.axis * d.dot(&self.axis)
                } else {
                    d
                };
                let len = radial.norm();
                if len <= 1e-12 * r {
                    return Err(Error::Ambiguous(format!(
                        "{:?} queried at {:?}, on its {}",
                        self.kind,
                        point.as_slice(),
                        if self.kind == ModelKind::Cylinder { "axis" } else { "center" }
                    )));
                }
                let normal = radial / len;
                Ok(ModelQuery {
                    signed_distance: len - r,
                    nearest: point - normal * (len - r),
                    normal,
                    mean_curvature: h,
                })
            }
        }
    }

    /// Area of the part of the surface inside the ball `B_R(0)`.
    pub fn area_in_ball(&self, ball_radius: f64) -> f64 {
        use std::f64::consts::PI;
        let big_r = ball_radius;
        match self.kind {
            ModelKind::Plane => {
                let d = self.center.dot(&self.axis);
                (PI * (big_r * big_r - d * d)).max(0.0)
            }
            ModelKind::Sphere => {
                let r = self.radius.unwrap();
                let d = self.center.norm();
                if d < 1e-14 {
                    return if r <= big_r { 4.0 * PI * r * r } else { 0.0 };
                }
                // |c + r u|² ≤ R²  ⇔  cos θ ≤ (R² − d² − r²)/(2 r d), θ from ĉ
                let c = ((big_r * big_r - d * d - r * r) / (2.0 * r * d)).clamp(-1.0, 1.0);
                2.0 * PI * r * r * (1.0 + c)
            }
            ModelKind::Cylinder => {
                let r = self.radius.unwrap();
                // closest point of the axis to the origin, then the in-plane offset
                let p0 = self.center - self.axis * self.center.dot(&self.axis);
                let d = p0.norm();
                let n_theta = 720;
                let mut area = 0.0;
                for k in 0..n_theta {
                    let theta = (k as f64 + 0.5) * 2.0 * PI / n_theta as f64;
                    // |p0 + r e(θ)|² with e(0) along p0
                    let rho2 = d * d + r * r + 2.0 * d * r * theta.cos();
                    let z2 = big_r * big_r - rho2;
                    if z2 > 0.0 {
                        area += 2.0 * z2.sqrt() * r * 2.0 * PI / n_theta as f64;
                    }
                }
                area
            }
        }
    }

    /// Triangulates the model with geometry filled from exact formulas
    /// rather than the discrete estimators. `extent` bounds unbounded models
    /// (disk radius for planes, half-length for cylinders); `resolution` is
    /// the icosphere subdivision count, cylinder segment count, or disk ring
    /// count.
    pub fn sample_mesh(&self, extent: f64, resolution: usize) -> Result<Mesh> {
        let mut mesh = match self.kind {
            ModelKind::Plane => build_disk(extent, self.center, self.axis, resolution)?,
            ModelKind::Cylinder => {
                let r = self.radius.unwrap();
                let rings = equilateral_rings(r, extent, resolution);
                let mut m = build_cylinder_mesh(r, self.axis, extent, resolution, rings)?;
                for v in &mut m.vertices {
                    *v += self.center;
                }
                m
            }
            ModelKind::Sphere => {
                build_icosphere(self.radius.unwrap(), self.center, resolution as u32)?
            }
        };
        self.fill_exact_geometry(&mut mesh)?;
        Ok(mesh)
    }

    /// Overwrites normals and curvatures with the exact model values at each
    /// vertex's nearest model point. Area weights are kept.
    pub fn fill_exact_geometry(&self, mesh: &mut Mesh) -> Result<()> {
        let h = self.mean_curvature();
        let a = self.curvature_norm();
        for i in 0..mesh.len() {
            let q = self.query(&mesh.vertices[i])?;
            mesh.normals[i] = q.normal;
            mesh.mean_curvature[i] = h;
            mesh.curvature_norm[i] = a;
        }
        Ok(())
    }
}
