use crate::error::{Error, Result};
use crate::geometry::{mixed_areas, FaceCotangents, Gauge, Mesh, Vec3};

use super::linear::SystemMatrix;

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

fn check_step(name: &'static str, dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(name, format!("step must be positive and finite, got {dt}")))
    }
}

/// `safety · (min edge)²`.
pub fn cfl_timestep(mesh: &Mesh, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety.is_finite()) {
        return Err(Error::arg("safety", format!("must be positive, got {safety}")));
    }
    let h = mesh.min_edge_length();
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidMesh(format!("minimum edge length {h}")));
    }
    Ok(safety * h * h)
}

/// One backward-Euler step of `∂_t x = −H ν` with the cotangent operator
/// frozen at the current geometry: `(M + dt S) x' = M x`. Boundary vertices
/// stay fixed.
pub fn mcf_step(mesh: &Mesh, dt: f64) -> Result<Mesh> {
    require(mesh, Gauge::Physical)?;
    check_step("dt", dt)?;
    let mut next = advance(mesh, dt, 0.0, |x, _| *x)?;
    next.compute_geometry()?;
    Ok(next)
}

/// One step of `∂_s ξ = ξ − H̃ ν̃`, implicit in the curvature term:
/// `(M + ds S) ξ' = M (ξ + ds ξ)`. On meshes with boundary only the normal
/// part of `ξ` drives the motion, so interior vertices are not swept into
/// the fixed boundary. Fails with [`Error::Divergence`] once `sup |ξ|`
/// exceeds `guard`.
pub fn rescaled_step(mesh: &Mesh, ds: f64, guard: f64) -> Result<Mesh> {
    let mut next = rescaled_step_basic(mesh, ds, guard, 0.0)?;
    next.compute_geometry()?;
    Ok(next)
}

/// [`rescaled_step`] with tangential redistribution of strength
/// `smoothing` and without the fitted `|A|` on the result.
pub(crate) fn rescaled_step_basic(mesh: &Mesh, ds: f64, guard: f64, smoothing: f64) -> Result<Mesh> {
    require(mesh, Gauge::Rescaled)?;
    check_step("ds", ds)?;
    let closed = mesh.is_closed();
    let next = advance(mesh, ds, smoothing, |x, n| {
        let drift = if closed { *x } else { n * x.dot(n) };
        x + drift * ds
    })?;
    let sup_f = next.sup_norm();
    if sup_f > guard {
        return Err(Error::Divergence { sup_f, guard });
    }
    Ok(next)
}

/// [`mcf_step`] with tangential redistribution of strength `smoothing`.
pub(crate) fn mcf_step_smoothed(mesh: &Mesh, dt: f64, smoothing: f64) -> Result<Mesh> {
    require(mesh, Gauge::Physical)?;
    check_step("dt", dt)?;
    let mut next = advance(mesh, dt, smoothing, |x, _| *x)?;
    next.compute_geometry()?;
    Ok(next)
}

/// Tangential part of the umbrella offset `ū − x`, moved with velocity
/// `strength · 4 (ū − x)_T / ℓ²` (`ℓ²` the mean squared edge length at the
/// vertex) and capped at half the offset per step. Moving vertices within
/// the tangent plane reparametrizes the surface without changing it to
/// first order; it stops vertices from piling up where a normal velocity
/// varies quickly along the surface.
fn tangential_shift(mesh: &Mesh, v: usize, tau: f64, strength: f64) -> Vec3 {
    let ring = mesh.topology().neighbors(v);
    if strength == 0.0 || ring.is_empty() {
        return Vec3::zeros();
    }
    let x = mesh.vertices[v];
    let k = ring.len() as f64;
    let mean = ring.iter().map(|&w| mesh.vertices[w]).sum::<Vec3>() / k;
    let l2 = ring.iter().map(|&w| (mesh.vertices[w] - x).norm_squared()).sum::<f64>() / k;
    let n = mesh.normals[v];
    let d = mean - x;
    let d_t = d - n * d.dot(&n);
    d_t * (4.0 * strength * tau / l2).min(0.5)
}

fn advance(
    mesh: &Mesh,
    tau: f64,
    smoothing: f64,
    rhs_position: impl Fn(&Vec3, &Vec3) -> Vec3,
) -> Result<Mesh> {
    let mut current = mesh.clone();
    let cots: Vec<FaceCotangents> = current.compute_basic_geometry()?;
    let mass = mixed_areas(&current, &cots);
    let topo = current.topology().clone();
    let pinned: Vec<bool> = (0..current.len()).map(|v| topo.is_boundary(v)).collect();
    let rhs: Vec<Vec3> = (0..current.len())
        .map(|v| {
            let shift = tangential_shift(&current, v, tau, smoothing);
            (rhs_position(&current.vertices[v], &current.normals[v]) + shift) * mass[v]
        })
        .collect();
    let system = SystemMatrix::assemble(&current, &cots, &mass, tau, &pinned);
    let positions = system.solve_positions(&current, &cots, tau, &rhs, &pinned)?;
    if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::StepRejected("non-finite vertex position".into()));
    }
    let mut next = Mesh::with_topology(positions, topo, mesh.gauge);
    for f in 0..next.faces().len() {
        let before = current.face_normal(f);
        let after = next.face_normal(f);
        if after.dot(&before) <= 0.0 {
            return Err(Error::StepRejected(format!("triangle {f} inverted")));
        }
    }
    match next.compute_basic_geometry() {
        Ok(_) => Ok(next),
        Err(Error::DegenerateTriangles { faces }) => Err(Error::StepRejected(format!(
            "{} degenerate triangles after step",
            faces.len()
        ))),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk, build_icosphere};

    fn mean_radius(m: &Mesh) -> f64 {
        m.vertices.iter().map(|v| v.norm()).sum::<f64>() / m.len() as f64
    }

    #[test]
    fn cfl_formula() {
        let m = build_icosphere(1.0, Vec3::zeros(), 2).unwrap();
        let h = m.min_edge_length();
        assert!((cfl_timestep(&m, 0.25).unwrap() - 0.25 * h * h).abs() < 1e-18);
        let fine = build_icosphere(1.0, Vec3::zeros(), 3).unwrap();
        let ratio = cfl_timestep(&fine, 0.25).unwrap() / cfl_timestep(&m, 0.25).unwrap();
        assert!((ratio - 0.25).abs() < 0.05, "{ratio}");
        assert!(cfl_timestep(&m, 0.0).is_err());
        assert!(cfl_timestep(&m, -1.0).is_err());
    }

    #[test]
    fn flat_patch_does_not_move() {
        let m = build_disk(1.0, Vec3::zeros(), Vec3::new(0.0, 0.3, 1.0), 8).unwrap();
        let dt = cfl_timestep(&m, 0.25).unwrap();
        let next = mcf_step(&m, dt).unwrap();
        for (a, b) in m.vertices.iter().zip(&next.vertices) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn sphere_step_matches_radial_ode() {
        let m = build_icosphere(2.0, Vec3::zeros(), 3).unwrap();
        let dt = 1e-3;
        let next = mcf_step(&m, dt).unwrap();
        // r' ≈ r − 2 dt / r
        let want = 2.0 - 2.0 * dt / 2.0;
        assert!((mean_radius(&next) - want).abs() < 1e-5, "{}", mean_radius(&next));
    }

    #[test]
    fn rescaled_sphere_above_shrinker_radius_expands() {
        let mut m = build_icosphere(2.0, Vec3::zeros(), 3).unwrap();
        m.gauge = Gauge::Rescaled;
        let ds = 1e-3;
        let mut r = 2.0f64;
        for _ in 0..100 {
            m = rescaled_step(&m, ds, 100.0).unwrap();
            r += ds * (r - 2.0 / r);
        }
        let got = mean_radius(&m);
        assert!(got > 2.0);
        assert!((got - r).abs() < 2e-3, "{got} vs {r}");
    }

    #[test]
    fn gauges_are_enforced() {
        let m = build_icosphere(1.0, Vec3::zeros(), 1).unwrap();
        assert!(matches!(rescaled_step(&m, 0.1, 10.0), Err(Error::GaugeMismatch { .. })));
        assert!(mcf_step(&m, 0.0).is_err());
    }

    #[test]
    fn guard_reports_divergence() {
        let mut m = build_icosphere(3.0, Vec3::zeros(), 2).unwrap();
        m.gauge = Gauge::Rescaled;
        assert!(matches!(rescaled_step(&m, 0.1, 3.0), Err(Error::Divergence { .. })));
    }

    #[test]
    fn oversized_step_on_coarse_sphere_is_rejected_or_shrinks() {
        // a huge step collapses the sphere toward its centroid; it must not
        // come back inverted without an error
        let m = build_icosphere(1.0, Vec3::zeros(), 1).unwrap();
        match mcf_step(&m, 10.0) {
            Ok(next) => assert!(mean_radius(&next) < 0.5),
            Err(e) => assert!(matches!(e, Error::StepRejected(_))),
        }
    }
}
