//! Triangle meshes with per-vertex geometry.
//!
//! A [`Mesh`] owns vertex positions and a shared, immutable [`Topology`].
//! Flows only ever move vertices, so cloning a mesh copies the position and
//! curvature buffers but shares connectivity.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Which coordinates a mesh lives in: the physical flow `(x, t)` or the
/// rescaled flow `(ξ, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    Physical,
    Rescaled,
}

impl Gauge {
    pub fn as_str(self) -> &'static str {
        match self {
            Gauge::Physical => "physical",
            Gauge::Rescaled => "rescaled",
        }
    }
}

/// Connectivity derived once from the face list.
#[derive(Debug)]
pub struct Topology {
    faces: Vec<[usize; 3]>,
    neighbors: Vec<Vec<usize>>,
    two_ring: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    collar: Vec<bool>,
    edges: Vec<[usize; 2]>,
}

impl Topology {
    pub fn new(num_vertices: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        let mut vertex_faces = vec![Vec::new(); num_vertices];
        // directed edge -> face; each directed edge may appear once in an
        // orientable edge-manifold mesh
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                if v >= num_vertices {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} references vertex {v} but there are {num_vertices} vertices"
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("face {f} repeats a vertex")));
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((a, b), f).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "directed edge ({a}, {b}) used twice: non-manifold or inconsistent orientation"
                    )));
                }
                vertex_faces[tri[k]].push(f);
            }
        }
        if let Some(v) = vertex_faces.iter().position(Vec::is_empty) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no face")));
        }

        let mut boundary = vec![false; num_vertices];
        let mut edges = Vec::with_capacity(directed.len() / 2 + 1);
        let mut neighbors = vec![Vec::new(); num_vertices];
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                boundary[a] = true;
                boundary[b] = true;
            }
            if a < b || !directed.contains_key(&(b, a)) {
                edges.push([a.min(b), a.max(b)]);
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        edges.sort_unstable();
        edges.dedup();
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }

        let collar: Vec<bool> = (0..num_vertices)
            .map(|v| boundary[v] || neighbors[v].iter().any(|&w| boundary[w]))
            .collect();

        let two_ring = (0..num_vertices)
            .map(|v| {
                let mut ring: Vec<usize> = neighbors[v]
                    .iter()
                    .flat_map(|&w| neighbors[w].iter().copied())
                    .chain(neighbors[v].iter().copied())
                    .filter(|&w| w != v)
                    .collect();
                ring.sort_unstable();
                ring.dedup();
                ring
            })
            .collect();

        Ok(Self {
            faces,
            neighbors,
            two_ring,
            vertex_faces,
            boundary,
            collar,
            edges,
        })
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn two_ring(&self, v: usize) -> &[usize] {
        &self.two_ring[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Boundary vertices and their one-ring. Curvature estimates there are
    /// unreliable, so diagnostics skip them.
    pub fn in_collar(&self, v: usize) -> bool {
        self.collar[v]
    }

    pub fn is_closed(&self) -> bool {
        !self.boundary.iter().any(|&b| b)
    }
}

/// A triangulated surface in R³ with per-vertex geometry.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub mean_curvature: Vec<f64>,
    pub curvature_norm: Vec<f64>,
    pub area_weights: Vec<f64>,
    pub gauge: Gauge,
    topology: Arc<Topology>,
}

impl Mesh {
    /// Builds a mesh and fills its geometry with the discrete estimators.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, gauge: Gauge) -> Result<Self> {
        let topology = Arc::new(Topology::new(vertices.len(), faces)?);
        let mut mesh = Self::with_topology(vertices, topology, gauge);
        mesh.compute_geometry()?;
        Ok(mesh)
    }

    /// Builds a mesh without computing geometry; per-vertex fields are zero.
    pub fn with_topology(vertices: Vec<Vec3>, topology: Arc<Topology>, gauge: Gauge) -> Self {
        let n = vertices.len();
        Self {
            vertices,
            normals: vec![Vec3::zeros(); n],
            mean_curvature: vec![0.0; n],
            curvature_norm: vec![0.0; n],
            area_weights: vec![0.0; n],
            gauge,
            topology,
        }
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        self.topology.faces()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.topology.is_closed()
    }

    /// Vertices away from the boundary collar. For closed meshes, all of them.
    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| !self.topology.in_collar(v))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces()[f];
        0.5 * (self.vertices[b] - self.vertices[a])
            .cross(&(self.vertices[c] - self.vertices[a]))
            .norm()
    }

    /// Unnormalized face normal (twice the area, oriented by winding).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces()[f];
        (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces().len()).map(|f| self.face_area(f)).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.topology
            .edges()
            .iter()
            .map(|&[a, b]| (self.vertices[a] - self.vertices[b]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.topology
            .edges()
            .iter()
            .map(|&[a, b]| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / self.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    /// Largest |A| over non-collar vertices and the vertex where it occurs.
    pub fn max_curvature_norm(&self) -> (f64, usize) {
        self.interior_vertices()
            .map(|v| (self.curvature_norm[v], v))
            .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    }

    /// Copy with every vertex scaled by `factor` about the origin. Curvatures
    /// scale by `1/factor` and area weights by `factor²`.
    pub fn scaled(&self, factor: f64) -> Mesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v *= factor;
        }
        for h in &mut out.mean_curvature {
            *h /= factor;
        }
        for a in &mut out.curvature_norm {
            *a /= factor;
        }
        for w in &mut out.area_weights {
            *w *= factor * factor;
        }
        out
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::with_capacity(self.len() * 48 + self.faces().len() * 24);
        for v in &self.vertices {
            let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
        }
        for f in self.faces() {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }

    pub fn write_obj(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_obj_string()).map_err(|e| Error::io(path, e))
    }

    /// Parses `v` and `f` records of an ASCII OBJ; other records are ignored.
    /// Polygonal faces are fan-triangulated.
    pub fn from_obj_str(src: &str, gauge: Gauge) -> Result<Mesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in src.lines().enumerate() {
            let mut it = line.split_whitespace();
            let bad = |what: &str| Error::InvalidMesh(format!("OBJ line {}: {what}", lineno + 1));
            match it.next() {
                Some("v") => {
                    let mut c = [0.0; 3];
                    for x in &mut c {
                        *x = it
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("bad vertex"))?;
                    }
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = it
                        .map(|t| {
                            t.split('/')
                                .next()
                                .and_then(|i| i.parse::<i64>().ok())
                                .and_then(|i| {
                                    if i > 0 {
                                        Some(i as usize - 1)
                                    } else if i < 0 {
                                        vertices.len().checked_sub((-i) as usize)
                                    } else {
                                        None
                                    }
                                })
                                .ok_or_else(|| bad("bad face index"))
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(bad("face with fewer than 3 vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Mesh::new(vertices, faces, gauge)
    }

    pub fn read_obj(path: &Path, gauge: Gauge) -> Result<Mesh> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Mesh::from_obj_str(&src, gauge)
    }
}

/// Icosahedron subdivided `subdivisions` times and projected onto the sphere.
pub fn build_icosphere(radius: f64, center: Vec3, subdivisions: u32) -> Result<Mesh> {
    let (vertices, faces) = unit_icosphere(radius, subdivisions)?;
    let vertices = vertices.into_iter().map(|v| center + v * radius).collect();
    Mesh::new(vertices, faces, Gauge::Physical)
}

/// Icosphere mapped onto the ellipsoid with the given semi-axes along x, y, z.
pub fn build_ellipsoid(semi_axes: [f64; 3], subdivisions: u32) -> Result<Mesh> {
    if semi_axes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::arg("semi_axes", "must be positive and finite"));
    }
    let (vertices, faces) = unit_icosphere(1.0, subdivisions)?;
    let vertices = vertices
        .into_iter()
        .map(|v| Vec3::new(v.x * semi_axes[0], v.y * semi_axes[1], v.z * semi_axes[2]))
        .collect();
    Mesh::new(vertices, faces, Gauge::Physical)
}

fn unit_icosphere(radius: f64, subdivisions: u32) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::arg("radius", format!("must be positive, got {radius}")));
    }
    if subdivisions > 7 {
        return Err(Error::arg(
            "subdivisions",
            format!("at most 7 supported, got {subdivisions}"),
        ));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Ok((vertices, faces))
}

/// Orthonormal pair spanning the plane perpendicular to `axis`, with
/// `e1 × e2 = axis`.
pub fn perpendicular_frame(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

pub(crate) fn unit_axis(axis: Vec3, name: &'static str) -> Result<Vec3> {
    let n = axis.norm();
    if !(n > 1e-12) || !n.is_finite() {
        return Err(Error::arg(name, "degenerate direction"));
    }
    Ok(axis / n)
}

/// Open tube (no caps) around `axis` through the origin, sampled with
/// `segments` points per ring and `rings + 1` rings. Alternate rings are
/// rotated by half a segment so interior vertices all see the same
/// neighborhood.
pub fn build_cylinder_mesh(
    radius: f64,
    axis: Vec3,
    half_length: f64,
    segments: usize,
    rings: usize,
) -> Result<Mesh> {
    if !(radius > 0.0) || !(half_length > 0.0) {
        return Err(Error::arg("radius", "radius and half_length must be positive"));
    }
    if segments < 3 || rings < 1 {
        return Err(Error::arg("resolution", "need segments >= 3 and rings >= 1"));
    }
    let axis = unit_axis(axis, "axis")?;
    let (e1, e2) = perpendicular_frame(&axis);
    let dtheta = 2.0 * PI / segments as f64;
    let dz = 2.0 * half_length / rings as f64;
    let offset = |j: usize| if j % 2 == 1 { 0.5 * dtheta } else { 0.0 };
    let mut vertices = Vec::with_capacity(segments * (rings + 1));
    for j in 0..=rings {
        let z = -half_length + dz * j as f64;
        for i in 0..segments {
            let theta = dtheta * i as f64 + offset(j);
            let (s, c) = theta.sin_cos();
            vertices.push(axis * z + (e1 * c + e2 * s) * radius);
        }
    }
    let id = |i: usize, j: usize| j * segments + (i % segments);
    let mut faces = Vec::with_capacity(2 * segments * rings);
    for j in 0..rings {
        let upper_shifted = j % 2 == 0;
        for i in 0..segments {
            if upper_shifted {
                faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                faces.push([id(i, j + 1), id(i + 1, j), id(i + 1, j + 1)]);
            } else {
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            }
        }
    }
    Mesh::new(vertices, faces, Gauge::Physical)
}

/// Number of rings giving near-equilateral triangles for a tube.
pub fn equilateral_rings(radius: f64, half_length: f64, segments: usize) -> usize {
    let dtheta = 2.0 * PI / segments as f64;
    let dz = radius * dtheta * 3f64.sqrt() / 2.0;
    let n = (2.0 * half_length / dz).round() as usize;
    (n + n % 2).max(2)
}

/// Flat disk of the given radius through `center` with unit normal `normal`,
/// triangulated on a hexagonal lattice with `rings` concentric rings.
pub fn build_disk(radius: f64, center: Vec3, normal: Vec3, rings: usize) -> Result<Mesh> {
    if !(radius > 0.0) {
        return Err(Error::arg("radius", "must be positive"));
    }
    if rings < 1 {
        return Err(Error::arg("rings", "need at least one ring"));
    }
    let normal = unit_axis(normal, "normal")?;
    let (e1, e2) = perpendicular_frame(&normal);
    let k = rings as i64;
    let h = radius / rings as f64;
    let mut index = HashMap::new();
    let mut vertices = Vec::new();
    for q in -k..=k {
        for r in -k..=k {
            let ring = q.abs().max(r.abs()).max((q + r).abs());
            if ring > k {
                continue;
            }
            let lattice = (q as f64 + 0.5 * r as f64, r as f64 * 3f64.sqrt() / 2.0);
            let len = (lattice.0 * lattice.0 + lattice.1 * lattice.1).sqrt();
            // push the hexagonal ring `ring` out onto the circle of radius ring*h
            let scale = if ring == 0 { 0.0 } else { ring as f64 * h / len };
            index.insert((q, r), vertices.len());
            vertices.push(center + (e1 * lattice.0 + e2 * lattice.1) * scale);
        }
    }
    let mut faces = Vec::new();
    for q in -k..=k {
        for r in -k..=k {
            let tris = [
                [(q, r), (q + 1, r), (q, r + 1)],
                [(q + 1, r), (q + 1, r + 1), (q, r + 1)],
            ];
            for tri in tris {
                if let (Some(&a), Some(&b), Some(&c)) =
                    (index.get(&tri[0]), index.get(&tri[1]), index.get(&tri[2]))
                {
                    faces.push([a, b, c]);
                }
            }
        }
    }
    Mesh::new(vertices, faces, Gauge::Physical)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_base_case() {
        let m = build_icosphere(1.0, Vec3::zeros(), 0).unwrap();
        assert_eq!(m.len(), 12);
        assert_eq!(m.faces().len(), 20);
        assert!(m.is_closed());
        for v in &m.vertices {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn icosphere_vertices_lie_on_sphere() {
        let c = Vec3::new(1.0, 0.0, 0.0);
        let m = build_icosphere(2.0, c, 3).unwrap();
        assert_eq!(m.len(), 642);
        for v in &m.vertices {
            assert!(((v - c).norm() - 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn icosphere_rejects_bad_input() {
        assert!(build_icosphere(0.0, Vec3::zeros(), 1).is_err());
        assert!(build_icosphere(-1.0, Vec3::zeros(), 1).is_err());
        assert!(build_icosphere(1.0, Vec3::zeros(), 8).is_err());
    }

    #[test]
    fn icosphere_faces_point_outward() {
        let m = build_icosphere(1.0, Vec3::zeros(), 2).unwrap();
        for f in 0..m.faces().len() {
            let [a, b, c] = m.faces()[f];
            let centroid = (m.vertices[a] + m.vertices[b] + m.vertices[c]) / 3.0;
            assert!(m.face_normal(f).dot(&centroid) > 0.0);
        }
    }

    #[test]
    fn cylinder_vertices_at_radius() {
        let m = build_cylinder_mesh(2.0, Vec3::x(), 1.0, 12, 4).unwrap();
        for v in &m.vertices {
            let off_axis = (v - Vec3::x() * v.x).norm();
            assert!((off_axis - 2.0).abs() <= 1e-12);
        }
        assert!(!m.is_closed());
    }

    #[test]
    fn cylinder_rejects_degenerate_axis() {
        assert!(build_cylinder_mesh(1.0, Vec3::zeros(), 1.0, 12, 4).is_err());
    }

    #[test]
    fn cylinder_faces_point_outward() {
        let m = build_cylinder_mesh(1.0, Vec3::z(), 1.0, 16, 6).unwrap();
        for f in 0..m.faces().len() {
            let [a, b, c] = m.faces()[f];
            let mut centroid = (m.vertices[a] + m.vertices[b] + m.vertices[c]) / 3.0;
            centroid.z = 0.0;
            assert!(m.face_normal(f).dot(&centroid) > 0.0);
        }
    }

    #[test]
    fn disk_is_flat_and_bounded() {
        let m = build_disk(3.0, Vec3::zeros(), Vec3::z(), 6).unwrap();
        assert_eq!(m.len(), 1 + 3 * 6 * 7);
        for v in &m.vertices {
            assert_eq!(v.z, 0.0);
            assert!(v.norm() <= 3.0 + 1e-12);
        }
        for f in 0..m.faces().len() {
            assert!(m.face_normal(f).z > 0.0);
        }
    }

    #[test]
    fn obj_round_trip_preserves_mesh() {
        let m = build_icosphere(1.5, Vec3::new(0.1, 0.2, 0.3), 1).unwrap();
        let back = Mesh::from_obj_str(&m.to_obj_string(), Gauge::Physical).unwrap();
        assert_eq!(back.faces(), m.faces());
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_out_of_range_and_nonmanifold() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        assert!(Mesh::new(v.clone(), vec![[0, 1, 9]], Gauge::Physical).is_err());
        // two faces sharing a directed edge: inconsistent orientation
        assert!(Mesh::new(v.clone(), vec![[0, 1, 2], [0, 1, 3]], Gauge::Physical).is_err());
        // unused vertex
        assert!(Mesh::new(v, vec![[0, 1, 2]], Gauge::Physical).is_err());
    }
}
