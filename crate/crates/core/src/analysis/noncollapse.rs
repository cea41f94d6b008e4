use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fitted_normal, Mesh, Vec3};

/// Largest admissible `α` at each vertex for the inner ball (on the `−ν`
/// side) and the outer ball (on the `+ν` side), both tangent at the vertex
/// with radius `α / H`. `None` means no other mesh point limits the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonCollapseReport {
    /// Vertices examined (outside the boundary collar).
    pub vertices: Vec<usize>,
    pub inner: Vec<Option<f64>>,
    pub outer: Vec<Option<f64>>,
    pub global_inner: Option<f64>,
    pub global_outer: Option<f64>,
    /// `min(global_inner, global_outer)`.
    pub global_alpha: Option<f64>,
}

impl NonCollapseReport {
    /// Per-vertex `α`: the smaller of the inner and outer values.
    pub fn per_vertex(&self) -> Vec<Option<f64>> {
        self.inner.iter().zip(&self.outer).map(|(a, b)| min_opt(*a, *b)).collect()
    }

    /// Vertices whose admissible `α` falls below `alpha`.
    pub fn violations(&self, alpha: f64) -> Vec<usize> {
        self.vertices
            .iter()
            .zip(self.per_vertex())
            .filter(|(_, a)| a.is_some_and(|a| a < alpha))
            .map(|(v, _)| *v)
            .collect()
    }
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Candidate bound from one obstacle point: the ball of radius `ρ` tangent
/// at `x` on the side `side·ν` contains `y` iff `ρ > |d|² / (2 d·(side ν))`.
/// Offsets with `d·dir` below `1e-12 |d|` are round-off on a tangent line
/// and do not bound the ball.
fn tangent_ball_bound(d: &Vec3, dir: &Vec3) -> Option<f64> {
    let h = d.dot(dir);
    (h > 1e-12 * d.norm()).then(|| d.norm_squared() / (2.0 * h))
}

fn check_mean_convex(mesh: &Mesh, vertices: &[usize]) -> Result<()> {
    let bad: Vec<usize> = vertices.iter().copied().filter(|&v| !(mesh.mean_curvature[v] > 0.0)).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::NonMeanConvex { vertices: bad })
    }
}

/// Normals from the two-ring height fit. The bound from a nearby point is
/// `|d|² / (2 d·ν)` with `d·ν = O(|d|²)`, so a normal tilt of order `h²`
/// from vertex-normal averaging would already spoil it at first order.
fn query_normals(mesh: &Mesh, vertices: &[usize]) -> Vec<Vec3> {
    vertices
        .par_iter()
        .map(|&v| {
            let pts: Vec<Vec3> = mesh.topology().two_ring(v).iter().map(|&w| mesh.vertices[w]).collect();
            fitted_normal(&mesh.vertices[v], &mesh.normals[v], &pts).unwrap_or(mesh.normals[v])
        })
        .collect()
}

fn coincidence_tolerance(mesh: &Mesh) -> f64 {
    1e-6 * mesh.diameter()
}

fn report(mesh: &Mesh, vertices: Vec<usize>, radii: Vec<(Option<f64>, Option<f64>)>) -> NonCollapseReport {
    let scale = |v: usize, r: Option<f64>| r.map(|r| r * mesh.mean_curvature[v]);
    let inner: Vec<Option<f64>> = vertices.iter().zip(&radii).map(|(&v, r)| scale(v, r.0)).collect();
    let outer: Vec<Option<f64>> = vertices.iter().zip(&radii).map(|(&v, r)| scale(v, r.1)).collect();
    let global_inner = inner.iter().fold(None, |acc, a| min_opt(acc, *a));
    let global_outer = outer.iter().fold(None, |acc, a| min_opt(acc, *a));
    NonCollapseReport {
        vertices,
        inner,
        outer,
        global_inner,
        global_outer,
        global_alpha: min_opt(global_inner, global_outer),
    }
}

/// Maximal non-collapsing constant at every vertex outside the boundary
/// collar. All mesh vertices act as obstacles; points within `1e-6 ×` the
/// bounding-box diagonal of the query vertex are ignored.
pub fn noncollapsing_alpha(mesh: &Mesh) -> Result<NonCollapseReport> {
    let vertices: Vec<usize> = mesh.interior_vertices().collect();
    check_mean_convex(mesh, &vertices)?;
    let tol = coincidence_tolerance(mesh);
    let grid = SpatialHash::new(&mesh.vertices, 2.0 * mesh.max_edge_length().max(tol));
    let reach = mesh.diameter();
    let normals = query_normals(mesh, &vertices);
    let radii = vertices
        .par_iter()
        .zip(&normals)
        .map(|(&v, &n)| {
            let x = mesh.vertices[v];
            (
                grid.min_ball_radius(&mesh.vertices, &x, &(-n), tol, reach),
                grid.min_ball_radius(&mesh.vertices, &x, &n, tol, reach),
            )
        })
        .collect();
    Ok(report(mesh, vertices, radii))
}

/// Same quantity by testing every vertex against every other.
pub fn noncollapsing_alpha_brute_force(mesh: &Mesh) -> Result<NonCollapseReport> {
    let vertices: Vec<usize> = mesh.interior_vertices().collect();
    check_mean_convex(mesh, &vertices)?;
    let tol = coincidence_tolerance(mesh);
    let normals = query_normals(mesh, &vertices);
    let radii = vertices
        .iter()
        .zip(&normals)
        .map(|(&v, &n)| {
            let x = mesh.vertices[v];
            let (mut inner, mut outer) = (None, None);
            for y in &mesh.vertices {
                let d = y - x;
                if d.norm() <= tol {
                    continue;
                }
                inner = min_opt(inner, tangent_ball_bound(&d, &(-n)));
                outer = min_opt(outer, tangent_ball_bound(&d, &n));
            }
            (inner, outer)
        })
        .collect();
    Ok(report(mesh, vertices, radii))
}

struct SpatialHash {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl SpatialHash {
    fn new(points: &[Vec3], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(p: &Vec3, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    /// Smallest bound over points within `radius` of `x`.
    fn scan(&self, points: &[Vec3], x: &Vec3, dir: &Vec3, tol: f64, radius: f64) -> Option<f64> {
        let lo = Self::key(&(x - Vec3::repeat(radius)), self.cell);
        let hi = Self::key(&(x + Vec3::repeat(radius)), self.cell);
        let cells = (0..3).map(|k| (hi[k] - lo[k] + 1) as f64).product::<f64>();
        let mut best = None;
        let mut visit = |i: usize| {
            let d = points[i] - x;
            let len = d.norm();
            if len <= tol || len > radius {
                return;
            }
            best = min_opt(best, tangent_ball_bound(&d, dir));
        };
        if cells > self.buckets.len() as f64 {
            for bucket in self.buckets.values() {
                bucket.iter().for_each(|&i| visit(i));
            }
        } else {
            for a in lo[0]..=hi[0] {
                for b in lo[1]..=hi[1] {
                    for c in lo[2]..=hi[2] {
                        if let Some(bucket) = self.buckets.get(&[a, b, c]) {
                            bucket.iter().for_each(|&i| visit(i));
                        }
                    }
                }
            }
        }
        best
    }

    /// A point at distance `|d|` bounds the radius by at least `|d| / 2`, so
    /// once the best bound inside a search ball is below half its radius no
    /// farther point can improve it.
    fn min_ball_radius(&self, points: &[Vec3], x: &Vec3, dir: &Vec3, tol: f64, reach: f64) -> Option<f64> {
        let mut radius = 2.0 * self.cell;
        loop {
            let best = self.scan(points, x, dir, tol, radius);
            if let Some(b) = best {
                if b < 0.5 * radius * (1.0 - 1e-12) {
                    return best;
                }
            }
            if radius > 2.0 * reach {
                return best;
            }
            radius *= 2.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cylinder_mesh, build_ellipsoid, build_icosphere, equilateral_rings};

    #[test]
    fn sphere_alpha_is_two() {
        let m = build_icosphere(1.7, Vec3::zeros(), 3).unwrap();
        let r = noncollapsing_alpha(&m).unwrap();
        assert!((r.global_inner.unwrap() - 2.0).abs() < 0.02, "{:?}", r.global_inner);
        assert_eq!(r.global_outer, None);
        assert!((r.global_alpha.unwrap() - 2.0).abs() < 0.02);
    }

    #[test]
    fn hash_matches_brute_force_exactly() {
        for m in [
            build_icosphere(1.0, Vec3::zeros(), 2).unwrap(),
            build_ellipsoid([2.0, 1.0, 1.0], 2).unwrap(),
        ] {
            let a = noncollapsing_alpha(&m).unwrap();
            let b = noncollapsing_alpha_brute_force(&m).unwrap();
            assert_eq!(a, b);
        }
        let rings = equilateral_rings(1.0, 3.0, 24);
        let c = build_cylinder_mesh(1.0, Vec3::z(), 3.0, 24, rings).unwrap();
        assert_eq!(noncollapsing_alpha(&c).unwrap(), noncollapsing_alpha_brute_force(&c).unwrap());
    }

    #[test]
    fn saddle_vertices_are_rejected() {
        let mut m = build_icosphere(1.0, Vec3::zeros(), 1).unwrap();
        m.mean_curvature[3] = -0.1;
        assert!(matches!(
            noncollapsing_alpha(&m),
            Err(Error::NonMeanConvex { ref vertices }) if vertices == &[3]
        ));
    }

    #[test]
    fn violations_at_query_alpha() {
        let m = build_ellipsoid([2.0, 1.0, 1.0], 2).unwrap();
        let r = noncollapsing_alpha(&m).unwrap();
        let g = r.global_alpha.unwrap();
        assert!(r.violations(g).is_empty());
        assert!(!r.violations(g * 1.01).is_empty());
        assert!(r.per_vertex().iter().all(|a| a.unwrap() >= g));
    }
}
