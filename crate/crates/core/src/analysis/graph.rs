use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mesh, ModelSurface, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphOrder {
    C0,
    C1,
}

/// Height of a mesh over a model surface inside `B_R(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDistanceReport {
    pub ball_radius: f64,
    /// `sup |g|`.
    pub c0: f64,
    /// `max(sup |g|, sup |∇g|)`, present for order `C1`.
    pub c1: Option<f64>,
    /// Projected area of the mesh patch over the model area inside the ball.
    pub coverage: f64,
    pub vertices_used: usize,
}

/// Projects the mesh vertices inside the ball to their nearest model points
/// and measures the signed heights `g`. The gradient of `g` is taken per
/// triangle on the projected patch.
pub fn graph_distance(
    mesh: &Mesh,
    model: &ModelSurface,
    ball_radius: f64,
    order: GraphOrder,
) -> Result<GraphDistanceReport> {
    if !(ball_radius > 0.0 && ball_radius.is_finite()) {
        return Err(Error::arg("ball_radius", "must be positive"));
    }
    let n = mesh.len();
    let inside: Vec<bool> = mesh.vertices.iter().map(|v| v.norm() <= ball_radius).collect();
    let mut height = vec![0.0; n];
    let mut foot = vec![Vec3::zeros(); n];
    let mut model_normal = vec![Vec3::zeros(); n];
    let mut used = 0;
    for v in (0..n).filter(|&v| inside[v]) {
        let q = model.query(&mesh.vertices[v]).map_err(|_| Error::ProjectionAmbiguous { vertex: v })?;
        height[v] = q.signed_distance;
        foot[v] = q.nearest;
        model_normal[v] = q.normal;
        used += 1;
    }
    if used == 0 {
        return Err(Error::arg("ball_radius", "no mesh vertex inside the ball"));
    }
    check_distinct_feet(&foot, &inside, ball_radius)?;

    let c0 = (0..n).filter(|&v| inside[v]).map(|v| height[v].abs()).fold(0.0, f64::max);
    let mut grad_sup = 0.0f64;
    let mut projected_area = 0.0;
    for (f, tri) in mesh.faces().iter().enumerate() {
        if !tri.iter().all(|&v| inside[v]) {
            continue;
        }
        let p = tri.map(|v| foot[v]);
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let normal = e1.cross(&e2);
        let double_area = normal.norm();
        let reference: Vec3 = tri.iter().map(|&v| model_normal[v]).sum();
        if normal.dot(&reference) <= 0.0 || double_area <= 1e-14 * (e1.norm_squared() + e2.norm_squared()) {
            return Err(Error::NotAGraph(format!("projection of triangle {f} is folded or degenerate")));
        }
        projected_area += 0.5 * double_area;
        if order == GraphOrder::C1 {
            // gradient of the linear interpolant on the projected triangle
            let nn = normal / double_area;
            let g = tri.map(|v| height[v]);
            let grad = (nn.cross(&(p[2] - p[1])) * g[0]
                + nn.cross(&(p[0] - p[2])) * g[1]
                + nn.cross(&(p[1] - p[0])) * g[2])
                / double_area;
            grad_sup = grad_sup.max(grad.norm());
        }
    }
    let model_area = model.area_in_ball(ball_radius);
    let coverage = if model_area > 0.0 { projected_area / model_area } else { 0.0 };
    if coverage > 1.05 {
        return Err(Error::NotAGraph(format!("projected area covers the model {coverage:.3} times")));
    }
    Ok(GraphDistanceReport {
        ball_radius,
        c0,
        c1: (order == GraphOrder::C1).then(|| c0.max(grad_sup)),
        coverage: coverage.min(1.0),
        vertices_used: used,
    })
}

/// Two vertices landing on the same model point means the mesh is not a
/// single-valued graph there.
fn check_distinct_feet(foot: &[Vec3], inside: &[bool], ball_radius: f64) -> Result<()> {
    let tol = 1e-9 * ball_radius;
    let cell = 4.0 * tol;
    let key = |p: &Vec3| [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64];
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for v in (0..foot.len()).filter(|&v| inside[v]) {
        let k = key(&foot[v]);
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    if let Some(list) = buckets.get(&[k[0] + a, k[1] + b, k[2] + c]) {
                        if let Some(&w) = list.iter().find(|&&w| (foot[w] - foot[v]).norm() <= tol) {
                            return Err(Error::NotAGraph(format!(
                                "vertices {w} and {v} project to the same model point"
                            )));
                        }
                    }
                }
            }
        }
        buckets.entry(k).or_default().push(v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_icosphere, Gauge};
    use std::f64::consts::SQRT_2;

    #[test]
    fn exact_samples_have_zero_height() {
        let sphere = ModelSurface::sphere(Vec3::zeros(), SQRT_2).unwrap();
        let cyl = ModelSurface::cylinder(Vec3::zeros(), Vec3::x(), 1.0).unwrap();
        let plane = ModelSurface::plane(Vec3::zeros(), Vec3::new(1.0, 2.0, 2.0)).unwrap();
        for (model, mesh) in [
            (sphere, sphere.sample_mesh(0.0, 3).unwrap()),
            (cyl, cyl.sample_mesh(4.0, 32).unwrap()),
            (plane, plane.sample_mesh(3.0, 12).unwrap()),
        ] {
            for r in [1.5, 2.0, 3.0] {
                let g = graph_distance(&mesh, &model, r, GraphOrder::C1).unwrap();
                assert!(g.c0 < 1e-12 && g.c1.unwrap() < 1e-12, "{:?} {g:?}", model.kind());
                assert!((0.0..=1.0).contains(&g.coverage));
            }
        }
    }

    #[test]
    fn radial_offset_gives_height() {
        let eps = 0.03;
        let model = ModelSurface::sphere(Vec3::zeros(), SQRT_2).unwrap();
        let mut mesh = build_icosphere(SQRT_2 + eps, Vec3::zeros(), 3).unwrap();
        mesh.gauge = Gauge::Rescaled;
        let g = graph_distance(&mesh, &model, 3.0, GraphOrder::C0).unwrap();
        assert!((g.c0 - eps).abs() < 1e-12);
        assert!(g.coverage > 0.98);
    }

    #[test]
    fn detects_ambiguity_and_sheets() {
        let model = ModelSurface::sphere(Vec3::zeros(), 1.0).unwrap();
        let mut mesh = build_icosphere(1.0, Vec3::zeros(), 1).unwrap();
        mesh.vertices[0] = Vec3::zeros();
        assert!(matches!(
            graph_distance(&mesh, &model, 2.0, GraphOrder::C0),
            Err(Error::ProjectionAmbiguous { vertex: 0 })
        ));
        // two concentric spheres project onto the same points
        let a = build_icosphere(1.0, Vec3::zeros(), 2).unwrap();
        let b = build_icosphere(1.1, Vec3::zeros(), 2).unwrap();
        let mut verts = a.vertices.clone();
        verts.extend(b.vertices.iter().copied());
        let off = a.len();
        let mut faces = a.faces().to_vec();
        faces.extend(b.faces().iter().map(|t| t.map(|v| v + off)));
        let both = Mesh::new(verts, faces, Gauge::Rescaled).unwrap();
        assert!(matches!(
            graph_distance(&both, &model, 2.0, GraphOrder::C0),
            Err(Error::NotAGraph(_))
        ));
    }
}
