//! Rotationally symmetric surfaces `{(x, u(x) cos θ, u(x) sin θ)}` evolving by
//! `u_t = u_xx / (1 + u_x²) − 1/u`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{perpendicular_frame, Gauge, Mesh, Topology, Vec3};

/// A profile sampled on a uniform grid over `[x_min, x_min + (n−1) dx]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisymProfile {
    x_min: f64,
    dx: f64,
    radii: Vec<f64>,
    pub time: f64,
}

/// Boundary handling at the two ends of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileBoundary {
    /// `u_x = 0`.
    Neumann,
    /// Prescribed end radii at the new time level.
    Dirichlet { left: f64, right: f64 },
}

impl AxisymProfile {
    pub fn new(x_min: f64, dx: f64, radii: Vec<f64>, time: f64) -> Result<Self> {
        if radii.len() < 3 {
            return Err(Error::arg("radii", "need at least three samples"));
        }
        if !(dx > 0.0 && dx.is_finite()) || !x_min.is_finite() || !time.is_finite() {
            return Err(Error::arg("grid", "spacing must be positive and finite"));
        }
        if let Some(i) = radii.iter().position(|&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::arg("radii", format!("u[{i}] = {} is not positive", radii[i])));
        }
        Ok(Self {
            x_min,
            dx,
            radii,
            time,
        })
    }

    /// Samples `f` at `n` uniform points on `[−half_length, half_length]`.
    pub fn from_fn(half_length: f64, n: usize, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 3 || !(half_length > 0.0) {
            return Err(Error::arg("grid", "need n >= 3 and a positive half length"));
        }
        let dx = 2.0 * half_length / (n - 1) as f64;
        let radii = (0..n).map(|i| f(-half_length + dx * i as f64)).collect();
        Self::new(-half_length, dx, radii, time)
    }

    /// Builds a profile from explicit samples, checking grid uniformity.
    pub fn from_samples(xs: &[f64], radii: Vec<f64>, time: f64) -> Result<Self> {
        if xs.len() != radii.len() || xs.len() < 3 {
            return Err(Error::arg("samples", "x and u must have equal length >= 3"));
        }
        let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let span = (xs[xs.len() - 1] - xs[0]).abs().max(1.0);
        for (i, &x) in xs.iter().enumerate() {
            if (x - (xs[0] + dx * i as f64)).abs() > 1e-12 * span {
                return Err(Error::arg("samples", format!("grid is not uniform at index {i}")));
            }
        }
        Self::new(xs[0], dx, radii, time)
    }

    /// Symmetric two-bulb profile with bulb radius `bulb` at the ends and
    /// radius `neck` at `x = 0`; `u_x = 0` at both ends.
    pub fn dumbbell(half_length: f64, n: usize, bulb: f64, neck: f64, time: f64) -> Result<Self> {
        if !(bulb > neck && neck > 0.0) {
            return Err(Error::arg("dumbbell", "need bulb > neck > 0"));
        }
        Self::from_fn(half_length, n, time, |x| {
            let c = (0.5 * PI * x / half_length).cos();
            bulb - (bulb - neck) * c * c
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Smallest radius and its grid position.
    pub fn min_radius(&self) -> (f64, f64) {
        let (i, u) = self
            .radii
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, u)| if u < acc.1 { (i, u) } else { acc });
        (u, self.x(i))
    }

    /// Meridian points `(x, u)` with mirrored ghosts at both ends.
    fn padded(&self) -> Vec<[f64; 2]> {
        let n = self.len();
        let mut p = Vec::with_capacity(n + 2);
        p.push([self.x(0) - self.dx, self.radii[1]]);
        p.extend((0..n).map(|i| [self.x(i), self.radii[i]]));
        p.push([self.x(n - 1) + self.dx, self.radii[n - 2]]);
        p
    }

    /// Per-sample meridian curvature `κ₁`, rotational curvature `κ₂` and unit
    /// outward meridian normal `(n_x, n_u)`. Each sample uses the circle
    /// through it and its two neighbors, which is exact on lines and circles.
    pub fn curvatures(&self) -> Vec<ProfileCurvature> {
        let p = self.padded();
        (1..p.len() - 1)
            .map(|i| {
                let (a, b, c) = (p[i - 1], p[i], p[i + 1]);
                let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - b[0], c[1] - b[1]]);
                let cross = e1[0] * e2[1] - e1[1] * e2[0];
                let (la, lb) = (e1[0].hypot(e1[1]), e2[0].hypot(e2[1]));
                let lc = (c[0] - a[0]).hypot(c[1] - a[1]);
                let (normal, k1) = if cross.abs() <= 1e-13 * la * lb {
                    let t = [c[0] - a[0], c[1] - a[1]];
                    ([-t[1] / lc, t[0] / lc], 0.0)
                } else {
                    // circumcenter of a, b, c
                    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
                    let sq = |q: [f64; 2]| q[0] * q[0] + q[1] * q[1];
                    let cx = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d;
                    let cy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d;
                    let r = (b[0] - cx).hypot(b[1] - cy);
                    let radial = [(b[0] - cx) / r, (b[1] - cy) / r];
                    if radial[1] >= 0.0 {
                        (radial, 1.0 / r)
                    } else {
                        ([-radial[0], -radial[1]], -1.0 / r)
                    }
                };
                ProfileCurvature {
                    meridian: k1,
                    rotational: normal[1] / b[1],
                    normal,
                }
            })
            .collect()
    }

    /// `|∇A|` per sample from arclength differences of the principal
    /// curvatures: `|∇A|² = κ₁'² + 3 κ₂'²`.
    pub fn curvature_gradient(&self) -> Vec<f64> {
        let k = self.curvatures();
        let n = self.len();
        let arc = |i: usize, j: usize| (self.x(j) - self.x(i)).hypot(self.radii[j] - self.radii[i]);
        (0..n)
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
                let ds = arc(lo, i) + arc(i, hi);
                let d1 = (k[hi].meridian - k[lo].meridian) / ds;
                let d2 = (k[hi].rotational - k[lo].rotational) / ds;
                (d1 * d1 + 3.0 * d2 * d2).sqrt()
            })
            .collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "u"])?;
        for (i, u) in self.radii.iter().enumerate() {
            w.write_record([format!("{:.17e}", self.x(i)), format!("{u:.17e}")])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Validation {
            field: "csv".into(),
            reason: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, time: f64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let (mut xs, mut us) = (Vec::new(), Vec::new());
        for row in r.deserialize::<(f64, f64)>() {
            let (x, u) = row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            xs.push(x);
            us.push(u);
        }
        Self::from_samples(&xs, us, time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileCurvature {
    pub meridian: f64,
    pub rotational: f64,
    pub normal: [f64; 2],
}

impl ProfileCurvature {
    pub fn mean(&self) -> f64 {
        self.meridian + self.rotational
    }

    pub fn norm(&self) -> f64 {
        self.meridian.hypot(self.rotational)
    }
}

/// `safety · min u²`; the reaction term `−1/u` sets the time scale.
pub fn axisym_stable_timestep(profile: &AxisymProfile, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety < 0.5) {
        return Err(Error::arg("safety", "must lie in (0, 0.5)"));
    }
    let (u, _) = profile.min_radius();
    Ok(safety * u * u)
}

/// One step with Neumann ends. Fails with [`Error::NeckPinch`] once the
/// minimum radius falls below `floor`.
pub fn axisym_step(profile: &AxisymProfile, dt: f64, floor: f64) -> Result<AxisymProfile> {
    axisym_step_with(profile, dt, floor, ProfileBoundary::Neumann)
}

/// One split step: half a step of the exact reaction `u̇ = −1/u`, an implicit
/// step of the diffusion with coefficient `1/(1 + u_x²)` frozen, and another
/// half reaction step.
pub fn axisym_step_with(
    profile: &AxisymProfile,
    dt: f64,
    floor: f64,
    boundary: ProfileBoundary,
) -> Result<AxisymProfile> {
    let (u_min, x_min) = profile.min_radius();
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::arg("dt", "must be positive"));
    }
    if dt >= u_min * u_min {
        return Err(Error::arg(
            "dt",
            format!("step {dt} exceeds the reaction bound {} at x = {x_min}", u_min * u_min),
        ));
    }
    let half_reaction = |u: &mut [f64]| {
        for v in u.iter_mut() {
            *v = (*v * *v - dt).sqrt();
        }
    };
    let n = profile.len();
    let mut u = profile.radii.clone();
    half_reaction(&mut u);

    let inv_dx2 = 1.0 / (profile.dx * profile.dx);
    let slope = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            match boundary {
                ProfileBoundary::Neumann => 0.0,
                ProfileBoundary::Dirichlet { .. } => {
                    let (a, b) = if i == 0 { (0, 1) } else { (n - 2, n - 1) };
                    (u[b] - u[a]) / profile.dx
                }
            }
        } else {
            (u[i + 1] - u[i - 1]) / (2.0 * profile.dx)
        }
    };
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = u.clone();
    for i in 0..n {
        let ux = slope(i);
        let r = dt * inv_dx2 / (1.0 + ux * ux);
        diag[i] = 1.0 + 2.0 * r;
        if i > 0 {
            lower[i] = -r;
        }
        if i + 1 < n {
            upper[i] = -r;
        }
    }
    match boundary {
        ProfileBoundary::Neumann => {
            // mirrored ghosts u₋₁ = u₁, u_n = u_{n−2}
            upper[0] *= 2.0;
            lower[n - 1] *= 2.0;
        }
        ProfileBoundary::Dirichlet { left, right } => {
            // the end values after the closing half reaction must match
            let pre = |v: f64| (v * v + dt).sqrt();
            diag[0] = 1.0;
            upper[0] = 0.0;
            rhs[0] = pre(left);
            diag[n - 1] = 1.0;
            lower[n - 1] = 0.0;
            rhs[n - 1] = pre(right);
        }
    }
    let mut next = solve_tridiagonal(&lower, &diag, &upper, &rhs);
    let (low, at) = next
        .iter()
        .copied()
        .enumerate()
        .fold((f64::INFINITY, 0), |acc, (i, v)| if v < acc.0 { (v, i) } else { acc });
    if !(low * low > dt) {
        return Err(Error::NeckPinch {
            x: profile.x(at),
            t: profile.time + dt,
            min_u: low.max(0.0),
            floor,
        });
    }
    half_reaction(&mut next);
    let out = AxisymProfile {
        x_min: profile.x_min,
        dx: profile.dx,
        radii: next,
        time: profile.time + dt,
    };
    let (m, x) = out.min_radius();
    if m < floor {
        return Err(Error::NeckPinch {
            x,
            t: out.time,
            min_u: m,
            floor,
        });
    }
    Ok(out)
}

/// Thomas algorithm; the systems here are strictly diagonally dominant.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Surface of revolution about the x-axis with `segments` points per ring.
/// Normals and curvatures come from the profile, area weights from the mesh.
pub fn axisym_to_mesh(profile: &AxisymProfile, segments: usize) -> Result<Mesh> {
    if segments < 3 {
        return Err(Error::arg("segments", "need at least three"));
    }
    let (e1, e2) = perpendicular_frame(&Vec3::x());
    let rings = profile.len();
    let dtheta = 2.0 * PI / segments as f64;
    let angle = |i: usize, j: usize| dtheta * (i as f64 + if j % 2 == 1 { 0.5 } else { 0.0 });
    let curv = profile.curvatures();
    let mut vertices = Vec::with_capacity(rings * segments);
    for j in 0..rings {
        for i in 0..segments {
            let (s, c) = angle(i, j).sin_cos();
            vertices.push(Vec3::x() * profile.x(j) + (e1 * c + e2 * s) * profile.radii[j]);
        }
    }
    let id = |i: usize, j: usize| j * segments + (i % segments);
    let mut faces = Vec::with_capacity(2 * segments * (rings - 1));
    for j in 0..rings - 1 {
        for i in 0..segments {
            if j % 2 == 0 {
                faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                faces.push([id(i, j + 1), id(i + 1, j), id(i + 1, j + 1)]);
            } else {
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            }
        }
    }
    let topology = Arc::new(Topology::new(vertices.len(), faces)?);
    let mut mesh = Mesh::with_topology(vertices, topology, Gauge::Physical);
    mesh.compute_basic_geometry()?;
    for j in 0..rings {
        let k = &curv[j];
        for i in 0..segments {
            let v = id(i, j);
            let (s, c) = angle(i, j).sin_cos();
            mesh.normals[v] = Vec3::x() * k.normal[0] + (e1 * c + e2 * s) * k.normal[1];
            mesh.mean_curvature[v] = k.mean();
            mesh.curvature_norm[v] = k.norm();
        }
    }
    Ok(mesh)
}
