//! Acceptance report over run directories.
//!
//! Each criterion is evaluated from the runs that carry the matching role,
//! plus direct computations for the checks that need no trajectory
//! (closed-form energies, type-I ratios of exact flows, non-collapsing
//! constants of round meshes).

use std::collections::BTreeMap;
use std::f64::consts::{E, PI, SQRT_2};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mcf_core::analysis::{noncollapsing_alpha, noncollapsing_alpha_brute_force, ShrinkerKind};
use mcf_core::flow::SingularTrigger;
use mcf_core::geometry::{
    build_cylinder_mesh, build_icosphere, equilateral_rings, Gauge, Mesh, ModelKind, ModelSurface, Vec3,
};
use mcf_core::huisken::{energy_etilde, model_energy, GaugeMap};
use mcf_core::model_flows::{cylinder_radius, exact_cylinder, exact_sphere, sphere_radius};
use serde::{Deserialize, Serialize};

use crate::artifacts::*;
use crate::config::Role;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// No run carries the evidence this criterion needs.
    Missing,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Missing => "missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub title: String,
    pub outcome: Outcome,
    pub measured: String,
    pub expected: String,
    pub tolerance: String,
    /// Runs that contributed.
    pub runs: Vec<String>,
    /// One line per individual check.
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub name: String,
    pub dir: PathBuf,
    pub status: RunStatus,
    pub roles: Vec<Role>,
    pub records: usize,
    pub wall_time_seconds: f64,
    /// The manifest's config hash matches the stored config.
    pub config_hash_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub criteria: Vec<Criterion>,
    pub runs: Vec<RunRow>,
    /// Expected files that were absent, as paths.
    pub missing_files: Vec<PathBuf>,
}

impl Report {
    pub fn failed(&self) -> usize {
        self.criteria.iter().filter(|c| c.outcome == Outcome::Fail).count()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("# Acceptance report\n\n");
        s.push_str("| # | Criterion | Outcome | Measured | Expected | Tolerance |\n");
        s.push_str("|---|---|---|---|---|---|\n");
        for c in &self.criteria {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} |",
                c.id,
                c.title,
                c.outcome.as_str(),
                c.measured,
                c.expected,
                c.tolerance
            );
        }
        s.push_str("\n## Details\n");
        for c in &self.criteria {
            let _ = writeln!(s, "\n### {}. {}\n", c.id, c.title);
            if !c.runs.is_empty() {
                let _ = writeln!(s, "Runs: {}\n", c.runs.join(", "));
            }
            for d in &c.details {
                let _ = writeln!(s, "- {d}");
            }
        }
        s.push_str("\n## Runs\n\n| Run | Status | Roles | Records | Wall time (s) | Config hash |\n|---|---|---|---|---|---|\n");
        for r in &self.runs {
            let roles: Vec<String> = r.roles.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(
                s,
                "| {} | {:?} | {} | {} | {:.1} | {} |",
                r.name,
                r.status,
                roles.join(" "),
                r.records,
                r.wall_time_seconds,
                if r.config_hash_ok { "ok" } else { "MISMATCH" }
            );
        }
        if !self.missing_files.is_empty() {
            s.push_str("\n## Missing files\n\n");
            for p in &self.missing_files {
                let _ = writeln!(s, "- {}", p.display());
            }
        }
        s
    }
}

/// One loaded run directory; absent files are `None`.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: Option<RunSummary>,
    pub entries: Option<Vec<RecordEntry>>,
    pub trace_sha256: Option<String>,
    pub config_hash_ok: bool,
}

impl LoadedRun {
    fn name(&self) -> &str {
        &self.manifest.name
    }

    fn has_role(&self, role: Role) -> bool {
        self.summary.as_ref().is_some_and(|s| s.roles.contains(&role))
    }
}

/// Run directories below `paths`: a path holding a manifest is a run,
/// otherwise its subdirectories are searched. Sorted by path.
pub fn find_runs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for p in paths {
        if !p.is_dir() {
            return Err(LabError::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            ));
        }
        collect_runs(p, &mut found)?;
    }
    found.sort();
    found.dedup();
    Ok(found)
}

fn collect_runs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.join(MANIFEST_FILE).is_file() {
        out.push(dir.to_path_buf());
        return Ok(());
    }
    for entry in std::fs::read_dir(dir).map_err(|e| LabError::io(dir, e))? {
        let path = entry.map_err(|e| LabError::io(dir, e))?.path();
        if path.is_dir() {
            collect_runs(&path, out)?;
        }
    }
    Ok(())
}

fn load_run(dir: &Path, missing: &mut Vec<PathBuf>) -> Result<LoadedRun> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    let mut optional = |rel: &str| -> Option<PathBuf> {
        let p = dir.join(rel);
        if p.is_file() {
            Some(p)
        } else {
            missing.push(p);
            None
        }
    };
    let summary = optional(SUMMARY_FILE).map(|p| read_json(&p)).transpose()?;
    let entries = optional(RECORDS_FILE).map(|p| read_json(&p)).transpose()?;
    let trace_sha256 = match optional(TRACE_FILE) {
        Some(p) => Some(sha256_hex(&std::fs::read(&p).map_err(|e| LabError::io(&p, e))?)),
        None => None,
    };
    let config_hash_ok = match optional(CONFIG_FILE) {
        Some(p) => sha256_hex(&std::fs::read(&p).map_err(|e| LabError::io(&p, e))?) == manifest.config_sha256,
        None => false,
    };
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        manifest,
        summary,
        entries,
        trace_sha256,
        config_hash_ok,
    })
}

/// Loads every run below `paths` and evaluates all criteria. Fails with a
/// usage error when no run directory is found.
pub fn report(paths: &[PathBuf]) -> Result<Report> {
    let dirs = find_runs(paths)?;
    if dirs.is_empty() {
        return Err(LabError::Usage("no run directories (with manifest.json) found".into()));
    }
    let mut missing = Vec::new();
    let runs = dirs.iter().map(|d| load_run(d, &mut missing)).collect::<Result<Vec<_>>>()?;
    Ok(evaluate(&runs, missing))
}

pub fn evaluate(runs: &[LoadedRun], missing_files: Vec<PathBuf>) -> Report {
    let criteria = vec![
        closed_form_energies(runs),
        exact_sphere_tracking(runs),
        rescaled_fixed_points(runs),
        monotonicity(runs),
        forward_classification(runs),
        neckpinch(runs),
        type_one_ratio_exact(),
        noncollapsing_round(),
        gauge_identities(runs),
        trapping_and_ball(runs),
        determinism(runs),
    ];
    let rows = runs
        .iter()
        .map(|r| RunRow {
            name: r.name().to_string(),
            dir: r.dir.clone(),
            status: r.manifest.status,
            roles: r.summary.as_ref().map(|s| s.roles.clone()).unwrap_or_default(),
            records: r.entries.as_ref().map(Vec::len).unwrap_or(0),
            wall_time_seconds: r.manifest.wall_time_seconds,
            config_hash_ok: r.config_hash_ok,
        })
        .collect();
    Report {
        criteria,
        runs: rows,
        missing_files,
    }
}

/// Accumulates individual checks into one criterion.
struct Checks {
    details: Vec<String>,
    runs: Vec<String>,
    all_pass: bool,
    any: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            details: Vec::new(),
            runs: Vec::new(),
            all_pass: true,
            any: false,
        }
    }

    fn check(&mut self, pass: bool, line: String) {
        self.any = true;
        self.all_pass &= pass;
        self.details.push(format!("{}: {line}", if pass { "pass" } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(line);
    }

    fn run(&mut self, name: &str) {
        if !self.runs.iter().any(|r| r == name) {
            self.runs.push(name.to_string());
        }
    }

    fn outcome(&self) -> Outcome {
        match (self.any, self.all_pass) {
            (false, _) => Outcome::Missing,
            (true, true) => Outcome::Pass,
            (true, false) => Outcome::Fail,
        }
    }

    fn finish(self, id: u32, title: &str, measured: String, expected: &str, tolerance: &str) -> Criterion {
        Criterion {
            id,
            title: title.to_string(),
            outcome: self.outcome(),
            measured,
            expected: expected.to_string(),
            tolerance: tolerance.to_string(),
            runs: self.runs,
            details: self.details,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn closed_form(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Plane => 2.0 * PI,
        ModelKind::Sphere => 8.0 * PI / E,
        ModelKind::Cylinder => 2.0 * PI * (2.0 * PI / E).sqrt(),
    }
}

fn shrinker_model(kind: ModelKind) -> ModelSurface {
    match kind {
        ModelKind::Plane => ModelSurface::plane(Vec3::zeros(), Vec3::z()),
        ModelKind::Sphere => ModelSurface::sphere(Vec3::zeros(), SQRT_2),
        ModelKind::Cylinder => ModelSurface::cylinder(Vec3::zeros(), Vec3::z(), 1.0),
    }
    .expect("valid shrinker")
}

fn rescaled(mut m: Mesh) -> Mesh {
    m.gauge = Gauge::Rescaled;
    m
}

/// Triangulations of the three shrinkers fine enough for a 1e-3 quadrature.
fn meshed_shrinker(kind: ModelKind) -> mcf_core::Result<Mesh> {
    Ok(rescaled(match kind {
        ModelKind::Plane => mcf_core::geometry::build_disk(9.0, Vec3::zeros(), Vec3::z(), 24)?,
        ModelKind::Sphere => build_icosphere(SQRT_2, Vec3::zeros(), 4)?,
        ModelKind::Cylinder => build_cylinder_mesh(1.0, Vec3::z(), 9.0, 64, equilateral_rings(1.0, 9.0, 64))?,
    }))
}

const KINDS: [ModelKind; 3] = [ModelKind::Plane, ModelKind::Sphere, ModelKind::Cylinder];

fn closed_form_energies(runs: &[LoadedRun]) -> Criterion {
    let tol = 1e-3;
    let mut c = Checks::new();
    let mut meshed = BTreeMap::new();
    for kind in KINDS {
        let exact = closed_form(kind);
        match model_energy(&shrinker_model(kind)) {
            Ok(e) => c.check(rel(e, exact) <= tol, format!("analytic {}: {e:.6} vs {exact:.6}", kind.as_str())),
            Err(e) => c.check(false, format!("analytic {}: {e}", kind.as_str())),
        }
        match meshed_shrinker(kind).and_then(|m| energy_etilde(&m)) {
            Ok(e) => {
                c.check(rel(e, exact) <= tol, format!("meshed {}: {e:.6} (rel {:.2e})", kind.as_str(), rel(e, exact)));
                meshed.insert(kind, e);
            }
            Err(e) => c.check(false, format!("meshed {}: {e}", kind.as_str())),
        }
    }
    let ordered = |m: &BTreeMap<ModelKind, f64>| {
        match (m.get(&ModelKind::Plane), m.get(&ModelKind::Sphere), m.get(&ModelKind::Cylinder)) {
            (Some(p), Some(s), Some(cy)) => Some(p < s && s < cy),
            _ => None,
        }
    };
    if let Some(ok) = ordered(&meshed) {
        c.check(ok, "meshed ordering P < S < C".into());
    }
    let mut from_runs = BTreeMap::new();
    for r in runs.iter().filter(|r| r.has_role(Role::ModelEnergy)) {
        let Some(kind) = r.summary.as_ref().and_then(|s| s.model) else {
            c.check(false, format!("{}: run has no model surface", r.name()));
            continue;
        };
        c.run(r.name());
        match r.entries.as_ref().and_then(|e| e.first()) {
            Some(first) => {
                let e = first.record.e_tilde;
                let exact = closed_form(kind);
                c.check(
                    rel(e, exact) <= tol,
                    format!("run {} ({}): Ẽ = {e:.6} vs {exact:.6} (rel {:.2e})", r.name(), kind.as_str(), rel(e, exact)),
                );
                from_runs.insert(kind, e);
            }
            None => c.check(false, format!("{}: no records", r.name())),
        }
    }
    match ordered(&from_runs) {
        Some(ok) => c.check(ok, "run ordering P < S < C".into()),
        None => c.note("run ordering: not all three model runs present".into()),
    }
    let measured = KINDS
        .iter()
        .map(|k| {
            let v = from_runs.get(k).or(meshed.get(k)).copied().unwrap_or(f64::NAN);
            format!("{}={v:.5}", k.as_str())
        })
        .collect::<Vec<_>>()
        .join(", ");
    c.finish(
        1,
        "Closed-form energies, ordering P<S<C",
        measured,
        "2π, 8π/e, 2π√(2π/e); strict order",
        "1e-3 relative",
    )
}

fn exact_sphere_tracking(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let mut worst = f64::NAN;
    let mut extinction = f64::NAN;
    for r in runs.iter().filter(|r| r.has_role(Role::ExactSphere)) {
        c.run(r.name());
        let Some(entries) = r.entries.as_ref().filter(|e| !e.is_empty()) else {
            c.check(false, format!("{}: no records", r.name()));
            continue;
        };
        let t_start = entries[0].metrics.physical_time;
        let window: Vec<&RecordEntry> = entries.iter().filter(|e| e.metrics.physical_time <= -0.05).collect();
        let reached = entries.iter().any(|e| e.metrics.physical_time >= -0.05 - 1e-12);
        c.check(reached, format!("{}: run reaches t = −0.05", r.name()));
        let err = window
            .iter()
            .filter_map(|e| sphere_radius(e.metrics.physical_time).ok().map(|x| rel(e.metrics.mean_radius, x)))
            .fold(0.0, f64::max);
        worst = err;
        c.check(err <= 0.01, format!("{}: worst radius error {err:.3e} over {} records", r.name(), window.len()));
        match r.summary.as_ref().and_then(|s| s.event.as_ref()) {
            Some(ev) => {
                extinction = ev.time;
                let tol = 0.02 * t_start.abs();
                c.check(ev.time.abs() <= tol, format!("{}: extrapolated extinction {:.3e} (|T| ≤ {tol})", r.name(), ev.time));
            }
            None => c.check(false, format!("{}: no singular event recorded", r.name())),
        }
    }
    c.finish(
        2,
        "Exact shrinking sphere",
        format!("radius err {worst:.2e}; T = {extinction:.2e}"),
        "r = √(−4t) on [−1, −0.05]; T = 0",
        "1% radius; 2% of |t₀| for T",
    )
}

fn rescaled_fixed_points(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let mut measured = Vec::new();
    let mut kinds = Vec::new();
    for r in runs.iter().filter(|r| r.has_role(Role::FixedPoint)) {
        c.run(r.name());
        let kind = r.summary.as_ref().and_then(|s| s.model);
        let Some(entries) = r.entries.as_ref().filter(|e| e.len() >= 2) else {
            c.check(false, format!("{}: fewer than two records", r.name()));
            continue;
        };
        if let Some(k) = kind {
            kinds.push(k);
        }
        let (first, last) = (&entries[0], &entries[entries.len() - 1]);
        let span = last.record.time - first.record.time;
        c.check(span >= 5.0 - 1e-9, format!("{}: span Δs = {span}", r.name()));
        let sup = entries.iter().filter_map(|e| e.metrics.shrinker_sup).fold(0.0, f64::max);
        c.check(sup < 5e-3, format!("{}: sup |H̃ − ξ·ν| = {sup:.3e}", r.name()));
        match (first.metrics.support_radius, last.metrics.support_radius) {
            (Some(a), Some(b)) => {
                let drift = (b - a).abs() / span;
                c.check(drift < 1e-3, format!("{}: radius {a:.6} → {b:.6}, drift {drift:.3e} per unit s", r.name()));
                let line = format!("{}: sup {sup:.1e}, drift {drift:.1e}", r.name());
                if !measured.contains(&line) {
                    measured.push(line);
                }
            }
            _ => c.check(false, format!("{}: no support radius", r.name())),
        }
    }
    for k in [ModelKind::Sphere, ModelKind::Cylinder] {
        if !kinds.contains(&k) {
            c.check(false, format!("no {} fixed-point run", k.as_str()));
        }
    }
    c.finish(
        3,
        "Rescaled fixed points (sphere √2, cylinder 1)",
        measured.join("; "),
        "stationary over s ∈ [0, 5]",
        "sup residual < 5e-3; drift < 1e-3 / unit s",
    )
}

fn monotonicity(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let mut measured = String::new();
    for r in runs.iter().filter(|r| r.has_role(Role::Monotonicity)) {
        c.run(r.name());
        let Some(s) = &r.summary else { continue };
        match &s.energy {
            Some(e) => {
                c.check(
                    e.max_increase <= 1e-4 * e.initial,
                    format!("{}: largest Ẽ increase {:.3e} = {:.3e}·Ẽ(s₀)", r.name(), e.max_increase, e.max_increase_relative),
                );
                measured = format!("jump {:.2e}·Ẽ₀", e.max_increase_relative);
            }
            None => c.check(false, format!("{}: no energy summary", r.name())),
        }
        match &s.dissipation {
            Some(d) if d.compared > 0 => {
                let w = d.worst_relative_mismatch.unwrap_or(f64::INFINITY);
                c.check(
                    w <= 0.1,
                    format!("{}: −ΔẼ/Δs vs dissipation, worst {w:.3e} over {} intervals", r.name(), d.compared),
                );
                let _ = write!(measured, "; dissipation mismatch {w:.2e}");
            }
            _ => c.check(false, format!("{}: no dissipation intervals above threshold", r.name())),
        }
    }
    c.finish(
        4,
        "Monotonicity of Ẽ and dissipation match",
        measured,
        "Ẽ non-increasing; −dẼ/ds = ∫|ξ·ν − H̃|²ρ̃",
        "1e-4·Ẽ(s₀) per step; 10% where dissipation > 1e-4",
    )
}

fn forward_classification(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let mut measured = String::new();
    for r in runs.iter().filter(|r| r.has_role(Role::ForwardClassification)) {
        c.run(r.name());
        measured.clear();
        let (Some(s), Some(entries)) = (&r.summary, &r.entries) else {
            c.check(false, format!("{}: summary or records missing", r.name()));
            continue;
        };
        match &s.final_class {
            Some(cls) => {
                let radius = cls.radius.unwrap_or(f64::NAN);
                c.check(
                    cls.kind == ShrinkerKind::Sphere.as_str() && (radius - SQRT_2).abs() <= 1e-2,
                    format!("{}: final class {} radius {radius:.6}", r.name(), cls.kind),
                );
                let _ = write!(measured, "{} r={radius:.4}", cls.kind);
            }
            None => c.check(false, format!("{}: final record unclassified", r.name())),
        }
        match entries.last() {
            Some(last) => {
                let gap = (last.record.e_tilde - 8.0 * PI / E).abs();
                c.check(gap < 1e-2, format!("{}: final Ẽ gap {gap:.3e}", r.name()));
                let _ = write!(measured, ", gap {gap:.1e}");
            }
            None => c.check(false, format!("{}: no records", r.name())),
        }
        let c0: Vec<Option<f64>> = [0.0, 2.0, 4.0]
            .iter()
            .map(|&s| {
                entries
                    .iter()
                    .find(|e| (e.record.time - s).abs() < 1e-9)
                    .and_then(|e| e.metrics.graph_c0)
            })
            .collect();
        if c0.iter().all(Option::is_some) {
            let v: Vec<f64> = c0.into_iter().flatten().collect();
            c.check(
                v[0] > v[1] && v[1] > v[2],
                format!("{}: C⁰ distance at s = 0, 2, 4: {:.4e}, {:.4e}, {:.4e}", r.name(), v[0], v[1], v[2]),
            );
            let _ = write!(measured, ", C⁰ {:.2e}→{:.2e}→{:.2e}", v[0], v[1], v[2]);
        } else {
            c.check(false, format!("{}: graph distance not recorded at s = 0, 2, 4", r.name()));
        }
    }
    c.finish(
        5,
        "Forward classification of the 2:1:1 ellipsoid",
        measured,
        "sphere √2; C⁰ strictly decreasing",
        "radius ±1e-2; Ẽ gap < 1e-2",
    )
}

fn neckpinch(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let mut measured = String::new();
    for r in runs.iter().filter(|r| r.has_role(Role::Neckpinch)) {
        c.run(r.name());
        let Some(s) = &r.summary else { continue };
        match &s.event {
            Some(ev) => c.check(
                ev.trigger == SingularTrigger::NeckPinch,
                format!("{}: {:?} at t = {:.6}, x = {:.3e}", r.name(), ev.trigger, ev.time, ev.location.x),
            ),
            None => c.check(false, format!("{}: no pinch", r.name())),
        }
        match &s.last_classified {
            Some((t, cls)) => {
                let radius = cls.radius.unwrap_or(f64::NAN);
                c.check(
                    cls.kind == ShrinkerKind::Cylinder.as_str() && (radius - 1.0).abs() <= 2e-2,
                    format!("{}: tangent flow at t = {t:.6}: {} radius {radius:.5}, fit rms {:.3e}", r.name(), cls.kind, cls.residual),
                );
                measured = format!("{} r={radius:.4}", cls.kind);
            }
            None => c.check(false, format!("{}: no classified pre-pinch snapshot", r.name())),
        }
    }
    c.finish(
        6,
        "Neckpinch tangent flow",
        measured,
        "cylinder radius 1",
        "radius ±2e-2",
    )
}

/// The exact flows at 20 log-spaced times in `[−1, −1e-3]`, twice: from the
/// exact `|A|` and from `|A|` estimated on a mesh of the exact surface.
fn type_one_ratio_exact() -> Criterion {
    let mut c = Checks::new();
    let map = GaugeMap::default();
    let times: Vec<f64> = (0..20).map(|k| -(10f64).powf(-3.0 * k as f64 / 19.0)).collect();
    let mut worst = 0.0f64;
    for (label, model_at, mesh_at) in [
        (
            "sphere",
            Box::new(|t: f64| exact_sphere(t)) as Box<dyn Fn(f64) -> mcf_core::Result<ModelSurface>>,
            Box::new(|t: f64| sphere_radius(t).and_then(|r| build_icosphere(r, Vec3::zeros(), 4)))
                as Box<dyn Fn(f64) -> mcf_core::Result<Mesh>>,
        ),
        (
            "cylinder",
            Box::new(|t: f64| exact_cylinder(t)),
            Box::new(|t: f64| {
                cylinder_radius(t).and_then(|r| build_cylinder_mesh(r, Vec3::z(), 3.0 * r, 64, equilateral_rings(r, 3.0 * r, 64)))
            }),
        ),
    ] {
        let (mut w_exact, mut w_mesh) = (0.0f64, 0.0f64);
        for &t in &times {
            let lambda = map.lambda(t).expect("t < 0");
            match model_at(t) {
                Ok(m) => w_exact = w_exact.max((m.curvature_norm() / lambda - 1.0).abs()),
                Err(_) => w_exact = f64::INFINITY,
            }
            match mesh_at(t) {
                Ok(m) => {
                    let a = m.interior_vertices().map(|v| m.curvature_norm[v]).fold(0.0, f64::max);
                    w_mesh = w_mesh.max((a / lambda - 1.0).abs());
                }
                Err(_) => w_mesh = f64::INFINITY,
            }
        }
        c.check(w_exact <= 0.02, format!("{label}, exact |A|: worst |ratio − 1| = {w_exact:.3e}"));
        c.check(w_mesh <= 0.02, format!("{label}, meshed |A|: worst |ratio − 1| = {w_mesh:.3e}"));
        worst = worst.max(w_exact).max(w_mesh);
    }
    c.finish(
        7,
        "Type-I ratio max|A|/λ on exact flows",
        format!("worst |ratio − 1| = {worst:.2e}"),
        "1 at 20 log-spaced times",
        "2%",
    )
}

/// α on round meshes at three refinements; the coarsest also by brute force.
fn noncollapsing_round() -> Criterion {
    let mut c = Checks::new();
    let mut measured = Vec::new();
    let spheres: Vec<mcf_core::Result<Mesh>> = (2..5).map(|s| build_icosphere(1.0, Vec3::zeros(), s)).collect();
    let cylinders: Vec<mcf_core::Result<Mesh>> = [16usize, 32, 64]
        .iter()
        .map(|&n| build_cylinder_mesh(1.0, Vec3::z(), 2.0, n, equilateral_rings(1.0, 2.0, n)))
        .collect();
    for (label, target, meshes) in [("sphere", 2.0, spheres), ("cylinder", 1.0, cylinders)] {
        let mut alphas = Vec::new();
        for (level, mesh) in meshes.iter().enumerate() {
            let report = mesh.as_ref().map_err(|e| e.to_string()).and_then(|m| noncollapsing_alpha(m).map_err(|e| e.to_string()));
            match report {
                Ok(rep) => {
                    let a = rep.global_alpha.unwrap_or(f64::NAN);
                    c.check(rel(a, target) <= 0.02, format!("{label} level {level}: α = {a:.5}"));
                    alphas.push(a);
                    if level == 0 {
                        let m = mesh.as_ref().expect("built above");
                        match noncollapsing_alpha_brute_force(m) {
                            Ok(brute) => c.check(
                                brute.inner == rep.inner && brute.outer == rep.outer && brute.global_alpha == rep.global_alpha,
                                format!("{label} level 0: hash search equals brute force ({} vertices)", rep.vertices.len()),
                            ),
                            Err(e) => c.check(false, format!("{label} brute force: {e}")),
                        }
                    }
                }
                Err(e) => c.check(false, format!("{label} level {level}: {e}")),
            }
        }
        measured.push(format!("{label} {}", alphas.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>().join("/")));
    }
    c.finish(
        8,
        "Non-collapsing α on round meshes",
        measured.join("; "),
        "sphere 2, cylinder 1; brute force equal",
        "2% at 3 levels; exact at coarsest",
    )
}

fn gauge_identities(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let (mut worst_gauge, mut worst_energy) = (0.0f64, 0.0f64);
    for r in runs {
        let Some(entries) = &r.entries else { continue };
        if entries.is_empty() {
            continue;
        }
        c.run(r.name());
        let g = entries.iter().map(|e| e.record.gauge_identity_residual).fold(0.0, f64::max);
        let e = entries.iter().map(|e| e.record.energy_relation_residual).fold(0.0, f64::max);
        worst_gauge = worst_gauge.max(g);
        worst_energy = worst_energy.max(e);
        c.check(
            g <= 1e-6 && e <= 1e-6,
            format!("{}: e^s vs √2λ {g:.2e}, Ẽ vs 2πE {e:.2e} over {} records", r.name(), entries.len()),
        );
    }
    c.finish(
        9,
        "Gauge identities on every snapshot",
        format!("e^s: {worst_gauge:.2e}; Ẽ=2πE: {worst_energy:.2e}"),
        "e^s = √2λ(t); Ẽ = 2πE",
        "1e-6 relative",
    )
}

fn trapping_and_ball(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let mut trapped = 0;
    let mut balls = 0;
    for r in runs {
        let Some(s) = &r.summary else { continue };
        if let Some(t) = &s.trapping {
            c.run(r.name());
            trapped += 1;
            c.check(
                !t.report.violated_any_reference,
                format!(
                    "{}: sup|F̃| ≤ 2·max{{C₀, sup|F̃|(later)}} (C₀ = {:.4}, max sup|F̃| = {:.4}); initial-slice bound 2Λ = {:.4} {}",
                    r.name(),
                    t.c0,
                    t.report.max_sup_f,
                    2.0 * t.report.lambda_bound,
                    if t.report.violated { "exceeded" } else { "held" }
                ),
            );
        }
        if let Some(b) = &s.ball {
            c.run(r.name());
            balls += 1;
            c.check(
                b.all_intersect && b.checked > 0,
                format!(
                    "{}: ball check on {} rescaled snapshots about t₀ = {:.4e}, {} misses ({} about the configured base time)",
                    r.name(),
                    b.checked,
                    b.base_time,
                    b.misses.len(),
                    b.configured_base_misses
                ),
            );
        }
    }
    c.finish(
        10,
        "Trapping and origin ball",
        format!("{trapped} trapping runs, {balls} ball-check runs"),
        "no trapping violation; M̃(s) ∩ B̄_√2(0) ≠ ∅",
        "ball radius √2·(1 + tol)",
    )
}

fn determinism(runs: &[LoadedRun]) -> Criterion {
    let mut c = Checks::new();
    let mut groups: BTreeMap<(String, String, u64), Vec<&LoadedRun>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.name().to_string(), r.manifest.config_sha256.clone(), r.manifest.seed))
            .or_default()
            .push(r);
    }
    let mut repeated = 0;
    for ((name, _, seed), members) in groups.iter().filter(|(_, m)| m.len() >= 2) {
        repeated += 1;
        let hashes: Vec<Option<&String>> = members.iter().map(|r| r.trace_sha256.as_ref()).collect();
        let same = hashes.iter().all(|h| h.is_some() && *h == hashes[0]);
        for m in members {
            c.run(&m.dir.display().to_string());
        }
        c.check(same, format!("{name} (seed {seed}): {} runs, traces {}", members.len(), if same { "identical" } else { "differ" }));
    }
    for r in runs.iter().filter(|r| !r.config_hash_ok) {
        c.check(false, format!("{}: stored config does not match the manifest hash", r.dir.display()));
    }
    c.finish(
        11,
        "Determinism of repeated runs",
        format!("{repeated} repeated scenarios"),
        "byte-identical trace.csv",
        "exact",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_criteria_pass() {
        for c in [closed_form_energies(&[]), type_one_ratio_exact(), noncollapsing_round()] {
            assert_eq!(c.outcome, Outcome::Pass, "{}: {:#?}", c.title, c.details);
        }
    }

    #[test]
    fn run_criteria_without_runs_are_missing() {
        let r = evaluate(&[], Vec::new());
        for id in [2, 3, 4, 5, 6, 9, 10, 11] {
            assert_ne!(r.criteria[id - 1].outcome, Outcome::Pass, "{id}");
        }
        assert_eq!(r.criteria[1].outcome, Outcome::Missing);
        assert_eq!(r.criteria.len(), 11);
        assert!(r.to_markdown().contains("| 1 | Closed-form energies"));
    }

    #[test]
    fn empty_directory_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = report(&[dir.path().to_path_buf()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = report(&[dir.path().join("absent")]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
