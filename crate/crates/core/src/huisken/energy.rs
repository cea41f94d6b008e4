//! Gaussian-area functionals and the dissipation integrand.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::gauge::GaugeMap;
use crate::error::{Error, Result};
use crate::geometry::{Gauge, Mesh, ModelKind, ModelSurface, Vec3};

/// Surface dimension.
pub const DIM: f64 = 2.0;

/// Rescaled points with `|ξ| > TRUNCATION_RADIUS` are dropped; `e^{-32}` is
/// far below quadrature error.
pub const TRUNCATION_RADIUS: f64 = 8.0;

/// Closed-form Gaussian area of the plane through the origin, `2π`.
pub const E_PLANE: f64 = 2.0 * PI;

/// Closed-form Gaussian area of the unit cylinder about an axis through the
/// origin, `2π √(2π/e)`.
pub fn e_cylinder() -> f64 {
    2.0 * PI * (2.0 * PI / std::f64::consts::E).sqrt()
}

/// Closed-form Gaussian area of the origin-centered sphere of radius √2,
/// `8π/e`.
pub fn e_sphere() -> f64 {
    8.0 * PI / std::f64::consts::E
}

/// Backward heat kernel `ρ_{(x₀,t₀)}(x, t)` for surfaces in R³.
pub fn gaussian_density(x: &Vec3, x0: &Vec3, t0: f64, t: f64) -> Result<f64> {
    let tau = t0 - t;
    if !(tau > 0.0) {
        return Err(Error::TimeNotBeforeBase { t, t0 });
    }
    Ok((4.0 * PI * tau).powf(-DIM / 2.0) * (-(x - x0).norm_squared() / (4.0 * tau)).exp())
}

/// Rescaled weight `ρ̃(ξ) = e^{-|ξ|²/2}`.
pub fn rescaled_density(xi: &Vec3) -> f64 {
    (-0.5 * xi.norm_squared()).exp()
}

/// Three interior points per triangle, exact for quadratics.
fn quadrature<F: Fn(&Vec3) -> f64>(mesh: &Mesh, f: F) -> f64 {
    const A: f64 = 2.0 / 3.0;
    const B: f64 = 1.0 / 6.0;
    let mut sum = 0.0;
    for (fi, &[i, j, k]) in mesh.faces().iter().enumerate() {
        let (p, q, r) = (mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]);
        let pts = [p * A + q * B + r * B, p * B + q * A + r * B, p * B + q * B + r * A];
        let vals: f64 = pts.iter().map(&f).sum();
        sum += mesh.face_area(fi) * vals / 3.0;
    }
    sum
}

fn require(mesh: &Mesh, gauge: Gauge) -> Result<()> {
    if mesh.gauge == gauge {
        Ok(())
    } else {
        Err(Error::GaugeMismatch {
            expected: gauge,
            found: mesh.gauge,
        })
    }
}

/// `E_{(x₀,t₀)}(t) = ∫_{M(t)} ρ_{(x₀,t₀)} dμ` on a physical-gauge mesh.
pub fn energy_e(mesh: &Mesh, t: f64, x0: &Vec3, t0: f64) -> Result<f64> {
    require(mesh, Gauge::Physical)?;
    let tau = t0 - t;
    if !(tau > 0.0) {
        return Err(Error::TimeNotBeforeBase { t, t0 });
    }
    let norm = (4.0 * PI * tau).powf(-DIM / 2.0);
    // same truncation as the rescaled functional: |x − x₀|² / (2τ) ≤ R²
    let cutoff = TRUNCATION_RADIUS * TRUNCATION_RADIUS * 2.0 * tau;
    Ok(quadrature(mesh, |x| {
        let d2 = (x - x0).norm_squared();
        if d2 > cutoff {
            0.0
        } else {
            norm * (-d2 / (4.0 * tau)).exp()
        }
    }))
}

/// `Ẽ = ∫ e^{-|ξ|²/2} dμ̃` on a rescaled-gauge mesh.
pub fn energy_etilde(mesh: &Mesh) -> Result<f64> {
    require(mesh, Gauge::Rescaled)?;
    let cutoff = TRUNCATION_RADIUS * TRUNCATION_RADIUS;
    Ok(quadrature(mesh, |xi| {
        let d2 = xi.norm_squared();
        if d2 > cutoff {
            0.0
        } else {
            (-0.5 * d2).exp()
        }
    }))
}

/// Gaussian area of an exact model centered (or with axis or plane through)
/// the origin: `2π` for planes, `2π r √(2π) e^{-r²/2}` for cylinders,
/// `4π r² e^{-r²/2}` for spheres. At the shrinker radii these are `2π`,
/// `2π√(2π/e)` and `8π/e`.
pub fn model_energy(model: &ModelSurface) -> Result<f64> {
    let c = model.center();
    let off_center = match model.kind() {
        ModelKind::Plane => c.dot(&model.axis()).abs(),
        ModelKind::Cylinder => (c - model.axis() * c.dot(&model.axis())).norm(),
        ModelKind::Sphere => c.norm(),
    };
    if off_center > 1e-12 {
        return Err(Error::arg(
            "model",
            format!("closed forms need an origin-centered model, offset {off_center}"),
        ));
    }
    Ok(match (model.kind(), model.radius()) {
        (ModelKind::Plane, _) => E_PLANE,
        (ModelKind::Cylinder, Some(r)) => 2.0 * PI * r * (2.0 * PI).sqrt() * (-0.5 * r * r).exp(),
        (ModelKind::Sphere, Some(r)) => 4.0 * PI * r * r * (-0.5 * r * r).exp(),
        _ => unreachable!(),
    })
}

/// `∫ |F̃^⊥ − H̃ ν̃|² ρ̃ dμ̃ = ∫ (F̃·ν̃ − H̃)² ρ̃ dμ̃`, lumped at vertices and
/// restricted to vertices outside the boundary collar. `∂_s Ẽ` equals minus
/// this quantity along the rescaled flow.
pub fn dissipation(mesh: &Mesh) -> Result<f64> {
    require(mesh, Gauge::Rescaled)?;
    Ok(mesh
        .interior_vertices()
        .map(|v| {
            let xi = &mesh.vertices[v];
            let r = xi.dot(&mesh.normals[v]) - mesh.mean_curvature[v];
            mesh.area_weights[v] * rescaled_density(xi) * r * r
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_tilde: f64,
    pub e: f64,
    pub dissipation: f64,
    /// `|Ẽ − (2π)^{N/2} E|`.
    pub relation_residual: f64,
}

impl EnergyReport {
    pub fn relative_residual(&self) -> f64 {
        self.relation_residual / self.e_tilde.abs().max(f64::MIN_POSITIVE)
    }
}

/// Compares `Ẽ(s)` on the rescaled snapshot with `(2π)^{N/2} E(t)` on the
/// physical one. The snapshots must sit at matching times.
pub fn check_e_relation(
    physical: &Mesh,
    t: f64,
    rescaled: &Mesh,
    s: f64,
    gauge: &GaugeMap,
) -> Result<EnergyReport> {
    let s_expected = gauge.s_of_t(t)?;
    if (s - s_expected).abs() > 1e-12 * (1.0 + s.abs()) {
        return Err(Error::TimeMismatch(format!(
            "rescaled snapshot at s = {s} but physical t = {t} maps to s = {s_expected}"
        )));
    }
    let e = energy_e(physical, t, &gauge.base_point, gauge.base_time)?;
    let e_tilde = energy_etilde(rescaled)?;
    Ok(EnergyReport {
        e_tilde,
        e,
        dissipation: dissipation(rescaled)?,
        relation_residual: (e_tilde - (2.0 * PI).powf(DIM / 2.0) * e).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk, build_icosphere};
    use std::f64::consts::SQRT_2;

    #[test]
    fn density_plug_ins() {
        let x0 = Vec3::new(1.0, 2.0, 3.0);
        let t = -1.0 / (4.0 * PI);
        assert!((gaussian_density(&x0, &x0, 0.0, t).unwrap() - 1.0).abs() < 1e-15);
        let tau: f64 = 0.3;
        let x = x0 + Vec3::x() * (4.0 * tau).sqrt();
        let want = (4.0 * PI * tau).recip() * (-1.0f64).exp();
        assert!((gaussian_density(&x, &x0, 0.0, -tau).unwrap() - want).abs() < 1e-15);
        assert!(gaussian_density(&x, &x0, 0.0, 0.0).is_err());
    }

    #[test]
    fn density_integrates_to_one_over_planes() {
        // polar quadrature oracle, independent of the mesh code
        for &tau in &[0.01, 0.25, 3.0] {
            let n_r = 4000;
            let r_max = 12.0 * (tau as f64).sqrt();
            let dr = r_max / n_r as f64;
            let integral: f64 = (0..n_r)
                .map(|k| {
                    let r = (k as f64 + 0.5) * dr;
                    let x = Vec3::new(r, 0.0, 0.0);
                    gaussian_density(&x, &Vec3::zeros(), 0.0, -tau).unwrap() * 2.0 * PI * r * dr
                })
                .sum();
            assert!((integral - 1.0).abs() < 1e-6, "tau {tau}: {integral}");
        }
    }

    #[test]
    fn closed_form_values_and_ordering() {
        assert!((E_PLANE - 6.283_185_307_179_586).abs() < 1e-15);
        assert!((e_sphere() - 9.245_818_798_327_374).abs() < 1e-13);
        assert!((e_cylinder() - 9.552_621_310_595_672).abs() < 1e-13);
        assert!(E_PLANE < e_sphere() && e_sphere() < e_cylinder());
        let m = |k| model_energy(&ModelSurface::shrinker(k)).unwrap();
        assert!((m(ModelKind::Plane) - E_PLANE).abs() < 1e-15);
        assert!((m(ModelKind::Sphere) - e_sphere()).abs() < 1e-14);
        assert!((m(ModelKind::Cylinder) - e_cylinder()).abs() < 1e-14);
        let off = ModelSurface::sphere(Vec3::x(), SQRT_2).unwrap();
        assert!(model_energy(&off).is_err());
    }

    #[test]
    fn meshed_plane_energy() {
        let mut disk = build_disk(9.0, Vec3::zeros(), Vec3::new(0.3, -0.4, 1.0), 60).unwrap();
        disk.gauge = Gauge::Rescaled;
        let e = energy_etilde(&disk).unwrap();
        assert!((e - E_PLANE).abs() < 1e-3 * E_PLANE, "{e}");
    }

    #[test]
    fn round_sphere_dissipation_closed_form() {
        // sphere of radius 2: F·ν = 2, H = 1, area 16π, ρ̃ = e^{-2}
        let model = ModelSurface::sphere(Vec3::zeros(), 2.0).unwrap();
        let mut m = model.sample_mesh(0.0, 5).unwrap();
        m.gauge = Gauge::Rescaled;
        let want = 16.0 * PI * (-2.0f64).exp();
        let d = dissipation(&m).unwrap();
        assert!((d - want).abs() < 2e-3 * want, "{d} vs {want}");
        assert!((want - 6.802_693_305_402_181).abs() < 1e-13);
    }

    #[test]
    fn shrinker_dissipation_vanishes() {
        for kind in [ModelKind::Sphere, ModelKind::Cylinder] {
            let model = ModelSurface::shrinker(kind);
            let mut m = model.sample_mesh(6.0, 4).unwrap();
            if kind == ModelKind::Cylinder {
                m = model.sample_mesh(6.0, 48).unwrap();
            }
            m.gauge = Gauge::Rescaled;
            assert!(dissipation(&m).unwrap() < 1e-5);
        }
        // discrete curvature on an icosphere is accurate enough as well
        let mut m = build_icosphere(SQRT_2, Vec3::zeros(), 4).unwrap();
        m.gauge = Gauge::Rescaled;
        assert!(dissipation(&m).unwrap() < 1e-5);
    }

    #[test]
    fn e_relation_on_exact_plane_and_gauge_errors() {
        let g = GaugeMap::default();
        let t = -0.7;
        let lambda = g.lambda(t).unwrap();
        let phys = build_disk(9.0 / lambda, Vec3::zeros(), Vec3::z(), 60).unwrap();
        let resc = g.rescale_surface(&phys, t).unwrap();
        let s = g.s_of_t(t).unwrap();
        let rep = check_e_relation(&phys, t, &resc, s, &g).unwrap();
        assert!((rep.e - 1.0).abs() < 1e-3);
        assert!(rep.relative_residual() < 1e-12);
        assert!(matches!(
            check_e_relation(&phys, t, &resc, s + 0.1, &g),
            Err(Error::TimeMismatch(_))
        ));
        assert!(energy_etilde(&phys).is_err());
        assert!(energy_e(&resc, t, &Vec3::zeros(), 0.0).is_err());
    }
}
