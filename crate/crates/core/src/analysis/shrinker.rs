use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Gauge, Mesh, ModelKind, ModelSurface, Vec3};
use crate::huisken::{energy_etilde, model_energy, rescaled_density, TRUNCATION_RADIUS};

fn require_rescaled(mesh: &Mesh) -> Result<()> {
    if mesh.gauge == Gauge::Rescaled {
        Ok(())
    } else {
        Err(Error::GaugeMismatch {
            expected: Gauge::Rescaled,
            found: mesh.gauge,
        })
    }
}

/// Pointwise `|H̃ − ξ·ν|` aggregated over vertices outside the boundary
/// collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerResidual {
    pub sup: f64,
    /// `(Σ w r² / Σ w)^{1/2}` with `w = ρ̃ · area`.
    pub weighted_rms: f64,
}

pub fn shrinker_residual(mesh: &Mesh) -> Result<ShrinkerResidual> {
    require_rescaled(mesh)?;
    let mut sup = 0.0f64;
    let (mut num, mut den) = (0.0, 0.0);
    for v in mesh.interior_vertices() {
        let xi = &mesh.vertices[v];
        let r = (mesh.mean_curvature[v] - xi.dot(&mesh.normals[v])).abs();
        sup = sup.max(r);
        let w = mesh.area_weights[v] * rescaled_density(xi);
        num += w * r * r;
        den += w;
    }
    Ok(ShrinkerResidual {
        sup,
        weighted_rms: if den > 0.0 { (num / den).sqrt() } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkerKind {
    Plane,
    Cylinder,
    Sphere,
    Unknown,
}

impl ShrinkerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ShrinkerKind::Plane => "plane",
            ShrinkerKind::Cylinder => "cylinder",
            ShrinkerKind::Sphere => "sphere",
            ShrinkerKind::Unknown => "unknown",
        }
    }
}

impl From<ModelKind> for ShrinkerKind {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Plane => ShrinkerKind::Plane,
            ModelKind::Cylinder => ShrinkerKind::Cylinder,
            ModelKind::Sphere => ShrinkerKind::Sphere,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Largest accepted weighted RMS distance to the fitted model.
    pub fit_tolerance: f64,
    /// Largest accepted weighted RMS shrinker residual.
    pub residual_tolerance: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            fit_tolerance: 0.05,
            residual_tolerance: 0.1,
        }
    }
}

/// One fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCandidate {
    pub model: ModelSurface,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub kind: ShrinkerKind,
    /// Best-fitting model, also present when `kind` is unknown.
    pub model: Option<ModelSurface>,
    pub radius: Option<f64>,
    /// Weighted RMS distance to the best model.
    pub rms_residual: f64,
    pub shrinker_residual: ShrinkerResidual,
    /// `|radius − r_shrinker|` for cylinders and spheres.
    pub radius_error: Option<f64>,
    pub e_tilde: f64,
    /// `|Ẽ_mesh − Ẽ_model|` against the closed form of the best kind.
    pub energy_gap: f64,
    /// `|Ẽ_mesh − Ẽ|` for each of plane, sphere, cylinder.
    pub energy_gaps: [(ModelKind, f64); 3],
    pub candidates: Vec<FitCandidate>,
}

const MIN_SAMPLES: usize = 10;

struct Samples {
    points: Vec<Vec3>,
    weights: Vec<f64>,
}

impl Samples {
    fn collect(mesh: &Mesh) -> Self {
        let cutoff = TRUNCATION_RADIUS * TRUNCATION_RADIUS;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for v in mesh.interior_vertices() {
            let x = mesh.vertices[v];
            if x.norm_squared() <= cutoff {
                points.push(x);
                weights.push(mesh.area_weights[v] * rescaled_density(&x));
            }
        }
        Self { points, weights }
    }

    fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn centroid(&self) -> Vec3 {
        let mut c = Vec3::zeros();
        for (p, w) in self.points.iter().zip(&self.weights) {
            c += p * *w;
        }
        c / self.total()
    }

    fn covariance(&self, c: &Vec3) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for (p, w) in self.points.iter().zip(&self.weights) {
            let d = p - c;
            m += d * d.transpose() * *w;
        }
        m / self.total()
    }

    fn rms(&self, model: &ModelSurface) -> f64 {
        let mut num = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            let d = match model.query(p) {
                Ok(q) => q.signed_distance,
                Err(_) => model.radius().unwrap_or(0.0),
            };
            num += w * d * d;
        }
        (num / self.total()).sqrt()
    }
}

fn sorted_eigen(m: Matrix3<f64>) -> [(f64, Vec3); 3] {
    let e = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec3)> = (0..3)
        .map(|k| (e.eigenvalues[k], e.eigenvectors.column(k).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    [pairs[0], pairs[1], pairs[2]]
}

fn fit_plane(s: &Samples) -> Option<ModelSurface> {
    let c = s.centroid();
    let [(_, normal), _, _] = sorted_eigen(s.covariance(&c));
    ModelSurface::plane(c, normal).ok()
}

/// Algebraic fit `|x|² = 2 c·x + k`, radius `√(k + |c|²)`.
fn fit_sphere(s: &Samples) -> Option<ModelSurface> {
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for (p, w) in s.points.iter().zip(&s.weights) {
        let row = Vector4::new(2.0 * p.x, 2.0 * p.y, 2.0 * p.z, 1.0);
        ata += row * row.transpose() * *w;
        atb += row * (p.norm_squared() * w);
    }
    let sol = ata.cholesky()?.solve(&atb);
    let center = Vec3::new(sol[0], sol[1], sol[2]);
    let r2 = sol[3] + center.norm_squared();
    if !(r2 > 0.0 && r2.is_finite()) {
        return None;
    }
    ModelSurface::sphere(center, r2.sqrt()).ok()
}

/// Axis from the dominant second moment, radius from the weighted mean
/// distance to that axis.
fn fit_cylinder(s: &Samples) -> Option<ModelSurface> {
    let c = s.centroid();
    let [_, _, (_, axis)] = sorted_eigen(s.covariance(&c));
    let mut num = 0.0;
    for (p, w) in s.points.iter().zip(&s.weights) {
        let d = p - c;
        num += w * (d - axis * d.dot(&axis)).norm();
    }
    let r = num / s.total();
    ModelSurface::cylinder(c, axis, r).ok()
}

fn shrinker_radius(kind: ModelKind) -> Option<f64> {
    ModelSurface::shrinker(kind).radius()
}

/// Fits plane, sphere and cylinder to the vertices with `|ξ| ≤ 8` (outside
/// the boundary collar), weighted by `ρ̃ · area`, and picks the lowest RMS
/// distance. Ties within `1e-9` go to the model with lower Gaussian area.
pub fn classify_shrinker(mesh: &Mesh, options: &ClassifyOptions) -> Result<ClassificationResult> {
    require_rescaled(mesh)?;
    let samples = Samples::collect(mesh);
    if samples.points.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            found: samples.points.len(),
            needed: MIN_SAMPLES,
        });
    }
    // ordered by increasing shrinker energy: plane < sphere < cylinder
    let mut candidates: Vec<FitCandidate> = [fit_plane(&samples), fit_sphere(&samples), fit_cylinder(&samples)]
        .into_iter()
        .flatten()
        .map(|model| FitCandidate {
            rms: samples.rms(&model),
            model,
        })
        .filter(|c| c.rms.is_finite())
        .collect();
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        match best {
            Some(b) if c.rms >= candidates[b].rms - 1e-9 => {}
            _ => best = Some(i),
        }
    }
    let e_tilde = energy_etilde(mesh)?;
    let residual = shrinker_residual(mesh)?;
    let energy_gaps = ModelKind::ALL.map(|k| {
        let e = model_energy(&ModelSurface::shrinker(k)).expect("shrinker models are centered");
        (k, (e_tilde - e).abs())
    });
    let Some(b) = best else {
        return Ok(ClassificationResult {
            kind: ShrinkerKind::Unknown,
            model: None,
            radius: None,
            rms_residual: f64::INFINITY,
            shrinker_residual: residual,
            radius_error: None,
            e_tilde,
            energy_gap: f64::INFINITY,
            energy_gaps,
            candidates,
        });
    };
    let chosen = candidates[b].clone();
    let kind = chosen.model.kind();
    let accepted = chosen.rms < options.fit_tolerance && residual.weighted_rms < options.residual_tolerance;
    let radius = chosen.model.radius();
    let radius_error = radius.zip(shrinker_radius(kind)).map(|(r, want)| (r - want).abs());
    let energy_gap = energy_gaps.iter().find(|(k, _)| *k == kind).map(|g| g.1).unwrap();
    candidates.sort_by(|a, b| a.rms.total_cmp(&b.rms));
    Ok(ClassificationResult {
        kind: if accepted { kind.into() } else { ShrinkerKind::Unknown },
        model: Some(chosen.model),
        radius,
        rms_residual: chosen.rms,
        shrinker_residual: residual,
        radius_error,
        e_tilde,
        energy_gap,
        energy_gaps,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn rescaled(mut m: Mesh) -> Mesh {
        m.gauge = Gauge::Rescaled;
        m
    }

    #[test]
    fn residual_of_exact_models() {
        let s = rescaled(ModelSurface::sphere(Vec3::zeros(), SQRT_2).unwrap().sample_mesh(0.0, 3).unwrap());
        let r = shrinker_residual(&s).unwrap();
        assert!(r.sup < 1e-12, "{}", r.sup);
        let unit = rescaled(ModelSurface::sphere(Vec3::zeros(), 1.0).unwrap().sample_mesh(0.0, 3).unwrap());
        let r = shrinker_residual(&unit).unwrap();
        assert!((r.sup - 1.0).abs() < 1e-12 && (r.weighted_rms - 1.0).abs() < 1e-12);
        let wide = ModelSurface::cylinder(Vec3::zeros(), Vec3::z(), 2.0).unwrap();
        let r = shrinker_residual(&rescaled(wide.sample_mesh(4.0, 48).unwrap())).unwrap();
        assert!((r.sup - 1.5).abs() < 1e-12);
    }

    #[test]
    fn classifies_discrete_shrinkers() {
        let opts = ClassifyOptions::default();
        let s = rescaled(crate::geometry::build_icosphere(SQRT_2, Vec3::zeros(), 4).unwrap());
        let c = classify_shrinker(&s, &opts).unwrap();
        assert_eq!(c.kind, ShrinkerKind::Sphere);
        assert!(c.radius_error.unwrap() < 1e-2 && c.energy_gap < 1e-2);

        let rings = crate::geometry::equilateral_rings(1.0, 6.0, 64);
        let cyl = rescaled(crate::geometry::build_cylinder_mesh(1.0, Vec3::new(1.0, 1.0, 0.0), 6.0, 64, rings).unwrap());
        let c = classify_shrinker(&cyl, &opts).unwrap();
        assert_eq!(c.kind, ShrinkerKind::Cylinder);
        assert!(c.radius_error.unwrap() < 1e-2);
        let axis = c.model.unwrap().axis();
        assert!(axis.dot(&Vec3::new(1.0, 1.0, 0.0).normalize()).abs() > 1.0 - 1e-6);

        let disk = rescaled(crate::geometry::build_disk(6.0, Vec3::zeros(), Vec3::new(0.0, 1.0, 1.0), 30).unwrap());
        let c = classify_shrinker(&disk, &opts).unwrap();
        assert_eq!(c.kind, ShrinkerKind::Plane);
        assert!(c.energy_gap < 0.05, "{}", c.energy_gap);
    }

    #[test]
    fn wrong_scale_is_not_a_shrinker() {
        let rings = crate::geometry::equilateral_rings(2.0, 6.0, 64);
        let cyl = rescaled(crate::geometry::build_cylinder_mesh(2.0, Vec3::z(), 6.0, 64, rings).unwrap());
        let c = classify_shrinker(&cyl, &ClassifyOptions::default()).unwrap();
        assert_eq!(c.kind, ShrinkerKind::Unknown);
        assert!(c.shrinker_residual.sup > 1.4);
    }

    #[test]
    fn needs_enough_samples() {
        let far = rescaled(crate::geometry::build_icosphere(1.0, Vec3::new(20.0, 0.0, 0.0), 2).unwrap());
        assert!(matches!(
            classify_shrinker(&far, &ClassifyOptions::default()),
            Err(Error::TooFewSamples { .. })
        ));
        let phys = crate::geometry::build_icosphere(1.0, Vec3::zeros(), 1).unwrap();
        assert!(classify_shrinker(&phys, &ClassifyOptions::default()).is_err());
    }
}
