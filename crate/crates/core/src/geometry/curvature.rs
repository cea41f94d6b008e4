//! Discrete curvature on triangle meshes.
//!
//! Mean curvature comes from the cotangent formula for the area gradient,
//! `K(x_i) = 1/(2 A_i) Σ_j (cot α_ij + cot β_ij)(x_i − x_j) = H_i ν_i`, with
//! `A_i` the mixed Voronoi area. `|A|` comes from a quadratic height fit over
//! the two-ring in the tangent frame of each vertex.

use nalgebra::{Matrix2, SMatrix, SVector};
use rayon::prelude::*;

use super::mesh::{Mesh, Vec3};
use crate::error::{Error, Result};

/// Per-face quantities shared by the curvature pass and the flow assembly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FaceCotangents {
    /// `cot[k]` is the cotangent of the angle at corner `k`, which weights the
    /// opposite edge `(k+1, k+2)`.
    pub cot: [f64; 3],
    pub area: f64,
}

pub(crate) fn face_cotangents(mesh: &Mesh) -> Result<Vec<FaceCotangents>> {
    let mut degenerate = Vec::new();
    let scale = mesh.max_edge_length().max(f64::MIN_POSITIVE);
    let out = mesh
        .faces()
        .iter()
        .enumerate()
        .map(|(f, &tri)| {
            let p = tri.map(|v| mesh.vertices[v]);
            let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let double_area = n.norm();
            if !(double_area > 1e-14 * scale * scale) {
                degenerate.push(f);
            }
            let mut cot = [0.0; 3];
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                cot[k] = u.dot(&v) / double_area;
            }
            FaceCotangents {
                cot,
                area: 0.5 * double_area,
            }
        })
        .collect();
    if degenerate.is_empty() {
        Ok(out)
    } else {
        Err(Error::DegenerateTriangles { faces: degenerate })
    }
}

/// Mixed Voronoi areas; they partition every triangle, so they sum to the
/// total surface area.
pub(crate) fn mixed_areas(mesh: &Mesh, cots: &[FaceCotangents]) -> Vec<f64> {
    let mut areas = vec![0.0; mesh.len()];
    for (tri, fc) in mesh.faces().iter().zip(cots) {
        let obtuse = (0..3).find(|&k| fc.cot[k] < 0.0);
        match obtuse {
            None => {
                for k in 0..3 {
                    let (i, j, l) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    let eij = (mesh.vertices[j] - mesh.vertices[i]).norm_squared();
                    let eil = (mesh.vertices[l] - mesh.vertices[i]).norm_squared();
                    // edge ij is opposite corner k+2, edge il opposite corner k+1
                    areas[i] += 0.125 * (eij * fc.cot[(k + 2) % 3] + eil * fc.cot[(k + 1) % 3]);
                }
            }
            Some(o) => {
                for k in 0..3 {
                    areas[tri[k]] += if k == o { 0.5 * fc.area } else { 0.25 * fc.area };
                }
            }
        }
    }
    areas
}

/// Cotangent mean-curvature vectors `K_i` (before division by the area).
pub(crate) fn area_gradient(mesh: &Mesh, cots: &[FaceCotangents]) -> Vec<Vec3> {
    let mut grad = vec![Vec3::zeros(); mesh.len()];
    for (tri, fc) in mesh.faces().iter().zip(cots) {
        for k in 0..3 {
            let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let d = (mesh.vertices[i] - mesh.vertices[j]) * (0.5 * fc.cot[k]);
            grad[i] += d;
            grad[j] -= d;
        }
    }
    grad
}

/// Angle-weighted vertex normals, oriented by the face winding.
pub(crate) fn vertex_normals(mesh: &Mesh) -> Vec<Vec3> {
    let mut normals = vec![Vec3::zeros(); mesh.len()];
    for &tri in mesh.faces() {
        let p = tri.map(|v| mesh.vertices[v]);
        let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let Some(n) = n.try_normalize(0.0) else {
            continue;
        };
        for k in 0..3 {
            let u = p[(k + 1) % 3] - p[k];
            let v = p[(k + 2) % 3] - p[k];
            normals[tri[k]] += n * u.angle(&v);
        }
    }
    for n in &mut normals {
        *n = n.try_normalize(0.0).unwrap_or_else(Vec3::z);
    }
    normals
}

/// Coefficients `(a, b, c, d, e)` of the height fit in units of `scale`.
fn height_fit(origin: &Vec3, normal: &Vec3, points: &[Vec3]) -> Option<(SVector<f64, 5>, f64, Vec3, Vec3)> {
    if points.len() < 5 {
        return None;
    }
    let (t1, t2) = super::mesh::perpendicular_frame(normal);
    let scale = points.iter().map(|p| (p - origin).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let mut ata = SMatrix::<f64, 5, 5>::zeros();
    let mut atb = SVector::<f64, 5>::zeros();
    // fit in units of the neighborhood size for conditioning
    for p in points {
        let d = (p - origin) / scale;
        let (x, y, h) = (d.dot(&t1), d.dot(&t2), d.dot(normal));
        let row = SVector::<f64, 5>::new(x * x, x * y, y * y, x, y);
        ata += row * row.transpose();
        atb += row * h;
    }
    Some((ata.cholesky()?.solve(&atb), scale, t1, t2))
}

/// Unit normal of the fitted height function at `origin`, oriented like
/// `normal`. Applied twice, so the second fit runs in a nearly level frame.
pub fn fitted_normal(origin: &Vec3, normal: &Vec3, points: &[Vec3]) -> Option<Vec3> {
    let mut n = *normal;
    for _ in 0..2 {
        let (coef, _, t1, t2) = height_fit(origin, &n, points)?;
        n = (n - t1 * coef[3] - t2 * coef[4]).try_normalize(0.0)?;
    }
    Some(n)
}

/// Principal curvatures from a least-squares fit of
/// `h = a x² + b xy + c y² + d x + e y` to neighbors in the tangent frame,
/// with `h` measured along the outward normal. Convex surfaces give positive
/// curvatures.
pub fn principal_curvatures_fit(origin: &Vec3, normal: &Vec3, points: &[Vec3]) -> Option<(f64, f64)> {
    let (coef, scale, _, _) = height_fit(origin, normal, points)?;
    let (a, b, c, d, e) = (coef[0], coef[1], coef[2], coef[3], coef[4]);
    let first = Matrix2::new(1.0 + d * d, d * e, d * e, 1.0 + e * e);
    let w = (1.0 + d * d + e * e).sqrt();
    let second = Matrix2::new(2.0 * a, b, b, 2.0 * c) / w;
    let shape = first.try_inverse()? * second;
    // shape operator is self-adjoint w.r.t. the first form; eigenvalues real
    let tr = shape.trace();
    let det = shape.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (k1, k2) = (0.5 * tr + disc, 0.5 * tr - disc);
    // h along the outward normal bends away from it on convex surfaces
    Some((-k2 / scale, -k1 / scale))
}

impl Mesh {
    /// Fills normals, mean curvature, |A| and area weights from the vertex
    /// positions. Fails on zero-area triangles.
    pub fn compute_geometry(&mut self) -> Result<()> {
        self.compute_basic_geometry()?;
        let topo = self.topology().clone();
        let vertices = &self.vertices;
        let normals = &self.normals;
        self.curvature_norm = (0..self.len())
            .into_par_iter()
            .map(|v| {
                let ring = topo.two_ring(v);
                let pts: Vec<Vec3> = ring.iter().map(|&w| vertices[w]).collect();
                match principal_curvatures_fit(&vertices[v], &normals[v], &pts) {
                    Some((k1, k2)) => (k1 * k1 + k2 * k2).sqrt(),
                    None => f64::NAN,
                }
            })
            .collect();
        Ok(())
    }

    /// Normals, cotangent mean curvature and mixed areas only.
    pub(crate) fn compute_basic_geometry(&mut self) -> Result<Vec<FaceCotangents>> {
        let cots = face_cotangents(self)?;
        let areas = mixed_areas(self, &cots);
        let grad = area_gradient(self, &cots);
        let normals = vertex_normals(self);
        self.mean_curvature = grad
            .iter()
            .zip(&normals)
            .zip(&areas)
            .map(|((g, n), a)| g.dot(n) / a)
            .collect();
        self.normals = normals;
        self.area_weights = areas;
        Ok(cots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::{build_cylinder_mesh, build_disk, build_icosphere, equilateral_rings};

    #[test]
    fn area_weights_sum_to_total_area() {
        let meshes = [
            build_icosphere(1.3, Vec3::zeros(), 3).unwrap(),
            build_cylinder_mesh(1.0, Vec3::z(), 2.0, 20, 10).unwrap(),
            build_disk(2.0, Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0), 5).unwrap(),
        ];
        for m in meshes {
            let sum: f64 = m.area_weights.iter().sum();
            let total = m.total_area();
            assert!((sum - total).abs() <= 1e-12 * total, "{sum} vs {total}");
            assert!(m.area_weights.iter().all(|&a| a > 0.0));
        }
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let m = build_icosphere(2.0, Vec3::new(0.5, -0.2, 0.1), 3).unwrap();
        let c = m.centroid();
        for (v, n) in m.vertices.iter().zip(&m.normals) {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert!(n.dot(&(v - c)) > 0.0);
        }
    }

    #[test]
    fn flat_patch_has_zero_curvature() {
        let m = build_disk(1.0, Vec3::new(0.3, 0.0, -1.0), Vec3::new(0.2, 0.5, 1.0), 6).unwrap();
        for v in m.interior_vertices() {
            assert!(m.mean_curvature[v].abs() < 1e-10);
            assert!(m.curvature_norm[v].abs() < 1e-10);
        }
    }

    #[test]
    fn cylinder_curvatures_near_exact() {
        let rings = equilateral_rings(1.0, 5.0, 64);
        let m = build_cylinder_mesh(1.0, Vec3::z(), 5.0, 64, rings).unwrap();
        for v in m.interior_vertices() {
            assert!((m.mean_curvature[v] - 1.0).abs() < 1e-2, "H = {}", m.mean_curvature[v]);
            assert!((m.curvature_norm[v] - 1.0).abs() < 1e-2, "|A| = {}", m.curvature_norm[v]);
        }
    }

    #[test]
    fn degenerate_triangle_reported() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        let err = Mesh::new(v, vec![[0, 1, 2]], crate::geometry::Gauge::Physical).unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangles { ref faces } if faces == &[0]));
    }

    #[test]
    fn fit_recovers_sphere_cap() {
        let r = 3.0;
        let normal = Vec3::z();
        let origin = Vec3::new(0.0, 0.0, r);
        let pts: Vec<Vec3> = (0..24)
            .map(|k| {
                let phi = k as f64 * 0.7;
                let theta = 0.05 + 0.02 * (k % 3) as f64;
                Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * r
            })
            .collect();
        let (k1, k2) = principal_curvatures_fit(&origin, &normal, &pts).unwrap();
        assert!((k1 - 1.0 / r).abs() < 1e-3 && (k2 - 1.0 / r).abs() < 1e-3, "{k1} {k2}");
    }
}
