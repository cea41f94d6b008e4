use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Gauge, Mesh, Vec3};
use crate::huisken::GaugeMap;
use crate::model_flows::AxisymProfile;

/// True iff some vertex lies in the closed ball of radius `√2 (1 + tol)`
/// about the origin of a rescaled surface.
pub fn ball_check(mesh: &Mesh, tol: f64) -> Result<bool> {
    if mesh.gauge != Gauge::Rescaled {
        return Err(Error::GaugeMismatch {
            expected: Gauge::Rescaled,
            found: mesh.gauge,
        });
    }
    let r = std::f64::consts::SQRT_2 * (1.0 + tol);
    Ok(mesh.vertices.iter().any(|v| v.norm() <= r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowthReport {
    pub radii: Vec<f64>,
    /// Area of the surface inside `B_R(0)` for each radius.
    pub areas: Vec<f64>,
    /// Least-squares slope of `log area` against `log R`.
    pub degree: f64,
    /// `(c, d)` in the fit `area ≈ c R^d`.
    pub coefficients: (f64, f64),
}

const CLIP_DEPTH: u32 = 5;

/// Area of the part of a triangle inside `B_R(0)`: triangles straddling the
/// sphere are split into four until `CLIP_DEPTH`, where each piece counts
/// when its centroid lies inside.
fn clipped_area(p: [Vec3; 3], r: f64, depth: u32) -> f64 {
    let d = p.map(|q| q.norm());
    let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    if d.iter().all(|&x| x <= r) {
        return area;
    }
    let c = (p[0] + p[1] + p[2]) / 3.0;
    let spread = p.iter().map(|q| (q - c).norm()).fold(0.0, f64::max);
    if c.norm() - spread > r {
        return 0.0;
    }
    if depth == 0 {
        return if c.norm() <= r { area } else { 0.0 };
    }
    let m = [(p[0] + p[1]) * 0.5, (p[1] + p[2]) * 0.5, (p[2] + p[0]) * 0.5];
    clipped_area([p[0], m[0], m[2]], r, depth - 1)
        + clipped_area([m[0], p[1], m[1]], r, depth - 1)
        + clipped_area([m[2], m[1], p[2]], r, depth - 1)
        + clipped_area([m[0], m[1], m[2]], r, depth - 1)
}

pub fn area_in_ball(mesh: &Mesh, radius: f64) -> f64 {
    mesh.faces()
        .iter()
        .map(|tri| clipped_area(tri.map(|v| mesh.vertices[v]), radius, CLIP_DEPTH))
        .sum()
}

pub fn volume_growth(mesh: &Mesh, radii: &[f64]) -> Result<VolumeGrowthReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::arg("radii", "need at least two increasing positive radii"));
    }
    let areas: Vec<f64> = radii.iter().map(|&r| area_in_ball(mesh, r)).collect();
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(&areas)
        .filter(|(_, &a)| a > 0.0)
        .map(|(r, a)| (r.ln(), a.ln()))
        .collect();
    let (intercept, slope) = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        (my - slope * mx, slope)
    } else {
        (f64::NEG_INFINITY, 0.0)
    };
    Ok(VolumeGrowthReport {
        radii: radii.to_vec(),
        areas,
        degree: slope,
        coefficients: (intercept.exp(), slope),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularitySample {
    pub time: f64,
    pub lambda: f64,
    /// `max |∇A|` on the physical profile.
    pub grad_a: f64,
    /// `max |∇A| · λ^{-2}`, bounded for type-I flows.
    pub normalized: f64,
    /// `max |∇̃Ã|` computed on the rescaled profile.
    pub rescaled_grad_a: f64,
    /// `|rescaled_grad_a − grad_a / λ²| / max(grad_a / λ², tiny)`.
    pub relation_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub samples: Vec<RegularitySample>,
    pub max_normalized: f64,
    pub max_relation_residual: f64,
}

/// `|∇A|` scaling along rotationally symmetric snapshots. The rescaled
/// profile `v(y) = λ u(x₀ + y/λ)` is evaluated separately, so the relation
/// `|∇̃Ã| = |∇A| / λ²` checks two computations against each other.
pub fn regularity_scaling(snapshots: &[AxisymProfile], gauge: &GaugeMap) -> Result<RegularityReport> {
    if snapshots.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let x0 = gauge.base_point.x;
    let samples = snapshots
        .iter()
        .map(|p| {
            let lambda = gauge.lambda(p.time)?;
            let grad_a = p.curvature_gradient().into_iter().fold(0.0, f64::max);
            let rescaled = AxisymProfile::new(
                lambda * (p.x(0) - x0),
                lambda * p.spacing(),
                p.radii().iter().map(|u| lambda * u).collect(),
                gauge.s_of_t(p.time)?,
            )?;
            let rescaled_grad_a = rescaled.curvature_gradient().into_iter().fold(0.0, f64::max);
            let predicted = grad_a / (lambda * lambda);
            Ok(RegularitySample {
                time: p.time,
                lambda,
                grad_a,
                normalized: predicted,
                rescaled_grad_a,
                relation_residual: (rescaled_grad_a - predicted).abs() / predicted.max(1e-300),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_normalized = samples.iter().map(|s| s.normalized).fold(0.0, f64::max);
    let max_relation_residual = samples
        .iter()
        .filter(|s| s.grad_a > 0.0)
        .map(|s| s.relation_residual)
        .fold(0.0, f64::max);
    Ok(RegularityReport {
        samples,
        max_normalized,
        max_relation_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cylinder_mesh, build_disk, build_icosphere, ModelSurface};
    use std::f64::consts::{PI, SQRT_2};

    fn rescaled(mut m: Mesh) -> Mesh {
        m.gauge = Gauge::Rescaled;
        m
    }

    #[test]
    fn ball_check_examples() {
        let s = rescaled(build_icosphere(SQRT_2, Vec3::zeros(), 2).unwrap());
        assert!(ball_check(&s, 1e-9).unwrap());
        let c = rescaled(build_cylinder_mesh(1.0, Vec3::z(), 3.0, 16, 8).unwrap());
        assert!(ball_check(&c, 0.0).unwrap());
        let far = rescaled(build_icosphere(SQRT_2, Vec3::new(10.0, 0.0, 0.0), 2).unwrap());
        assert!(!ball_check(&far, 1e-3).unwrap());
    }

    #[test]
    fn growth_degrees() {
        let disk = build_disk(20.0, Vec3::zeros(), Vec3::z(), 40).unwrap();
        let radii = [2.0, 4.0, 8.0, 16.0];
        let r = volume_growth(&disk, &radii).unwrap();
        assert!((r.degree - 2.0).abs() < 0.02, "{}", r.degree);
        for (rad, a) in radii.iter().zip(&r.areas) {
            assert!((a - PI * rad * rad).abs() / a < 0.01);
        }
        assert!(r.areas.windows(2).all(|w| w[1] >= w[0]));

        let tube = ModelSurface::cylinder(Vec3::zeros(), Vec3::z(), 1.0).unwrap().sample_mesh(40.0, 48).unwrap();
        let radii = [8.0, 16.0, 32.0];
        let r = volume_growth(&tube, &radii).unwrap();
        assert!((r.degree - 1.0).abs() < 0.02, "{}", r.degree);
        for (rad, a) in radii.iter().zip(&r.areas) {
            let want = 4.0 * PI * (rad * rad - 1.0f64).sqrt();
            assert!((a - want).abs() / want < 0.01, "{a} vs {want}");
        }

        let sphere = build_icosphere(SQRT_2, Vec3::zeros(), 4).unwrap();
        let r = volume_growth(&sphere, &[2.0, 4.0, 8.0]).unwrap();
        assert!(r.degree.abs() < 1e-12);
        assert!((r.areas[0] - 8.0 * PI).abs() / (8.0 * PI) < 2e-3);
    }

    #[test]
    fn exact_flows_have_no_curvature_gradient() {
        let g = GaugeMap::default();
        let snaps: Vec<AxisymProfile> = [-1.0, -0.5, -0.1]
            .iter()
            .map(|&t| AxisymProfile::from_fn(1.0, 65, t, |_| (-2.0 * t).sqrt()).unwrap())
            .collect();
        let r = regularity_scaling(&snaps, &g).unwrap();
        assert_eq!(r.max_normalized, 0.0);
    }

    #[test]
    fn gauge_relation_on_a_dumbbell() {
        let g = GaugeMap::new(Vec3::zeros(), 0.1);
        let p = AxisymProfile::dumbbell(2.0, 257, 1.0, 0.3, -0.2).unwrap();
        let r = regularity_scaling(&[p], &g).unwrap();
        assert!(r.max_normalized > 0.0);
        assert!(r.max_relation_residual < 1e-10, "{}", r.max_relation_residual);
    }
}
