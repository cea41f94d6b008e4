//! Scenario files: TOML, unknown keys rejected, validated before any run.

use std::path::{Path, PathBuf};

use mcf_core::analysis::ClassifyOptions;
use mcf_core::flow::{AxisymParams, CalibrationOptions, FlowParams};
use mcf_core::geometry::{Gauge, ModelKind, Vec3};
use mcf_core::huisken::GaugeMap;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// What a run is evidence for; the report picks runs by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ModelEnergy,
    ExactSphere,
    FixedPoint,
    Monotonicity,
    ForwardClassification,
    Neckpinch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Parent of the run directory `<output_dir>/<name>`, relative to the
    /// working directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub roles: Vec<Role>,
    pub initial: InitialSurface,
    pub time: TimeSpan,
    #[serde(default)]
    pub step: StepControl,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn origin() -> [f64; 3] {
    [0.0; 3]
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_subdivisions() -> u32 {
    3
}

/// Initial surface. Mesh paths are relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSurface {
    Sphere {
        radius: f64,
        #[serde(default = "origin")]
        center: [f64; 3],
        #[serde(default = "default_subdivisions")]
        subdivisions: u32,
        #[serde(default)]
        perturbation: f64,
    },
    Ellipsoid {
        axes: [f64; 3],
        #[serde(default = "default_subdivisions")]
        subdivisions: u32,
        #[serde(default)]
        perturbation: f64,
    },
    Cylinder {
        radius: f64,
        half_length: f64,
        segments: usize,
        #[serde(default = "z_axis")]
        axis: [f64; 3],
        /// Defaults to near-equilateral triangles.
        #[serde(default)]
        rings: Option<usize>,
        #[serde(default)]
        perturbation: f64,
    },
    Disk {
        radius: f64,
        rings: usize,
        #[serde(default = "origin")]
        center: [f64; 3],
        #[serde(default = "z_axis")]
        normal: [f64; 3],
        #[serde(default)]
        perturbation: f64,
    },
    Mesh {
        path: PathBuf,
        #[serde(default)]
        perturbation: f64,
    },
    /// Rotationally symmetric two-bulb profile about the x axis.
    Dumbbell {
        half_length: f64,
        points: usize,
        bulb: f64,
        neck: f64,
    },
    /// Profile samples `x,u` from a CSV file with a header row.
    Profile { path: PathBuf },
}

impl InitialSurface {
    pub fn is_axisym(&self) -> bool {
        matches!(self, InitialSurface::Dumbbell { .. } | InitialSurface::Profile { .. })
    }

    pub fn perturbation(&self) -> f64 {
        match self {
            InitialSurface::Sphere { perturbation, .. }
            | InitialSurface::Ellipsoid { perturbation, .. }
            | InitialSurface::Cylinder { perturbation, .. }
            | InitialSurface::Disk { perturbation, .. }
            | InitialSurface::Mesh { perturbation, .. } => *perturbation,
            _ => 0.0,
        }
    }

    /// The model surface the initial data samples, if any.
    pub fn model_kind(&self) -> Option<ModelKind> {
        match self {
            InitialSurface::Sphere { .. } => Some(ModelKind::Sphere),
            InitialSurface::Cylinder { .. } => Some(ModelKind::Cylinder),
            InitialSurface::Disk { .. } => Some(ModelKind::Plane),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpan {
    pub gauge: Gauge,
    /// `t` in the physical gauge, `s` in the rescaled gauge.
    pub start: f64,
    pub end: f64,
    /// Base point `(x₀, t₀)` of the rescaling.
    #[serde(default)]
    pub base_time: f64,
    #[serde(default = "origin")]
    pub base_point: [f64; 3],
    /// Extra record times; steps land on them exactly.
    #[serde(default)]
    pub record_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    /// Defaults to 0.25 for meshes and 0.01 for profiles.
    pub safety: Option<f64>,
    pub record_every: usize,
    pub max_steps: usize,
    pub max_step: Option<f64>,
    pub tangential_smoothing: f64,
    pub min_edge_ratio: f64,
    /// Physical meshes only.
    pub blowup_threshold: Option<f64>,
    /// Rescaled only.
    pub guard_radius: Option<f64>,
    /// Rescaled only: shoot for the initial dilation that neither expands
    /// nor collapses before running.
    pub calibrate: bool,
    pub calibration_tolerance: Option<f64>,
    /// Profiles only.
    pub floor_ratio: Option<f64>,
    pub tangent_window: Option<f64>,
    pub tangent_segments: Option<usize>,
    pub max_rescaled_spacing: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            safety: None,
            record_every: 10,
            max_steps: 1_000_000,
            max_step: None,
            tangential_smoothing: 0.0,
            min_edge_ratio: 1e-3,
            blowup_threshold: None,
            guard_radius: None,
            calibrate: false,
            calibration_tolerance: None,
            floor_ratio: None,
            tangent_window: None,
            tangent_segments: None,
            max_rescaled_spacing: None,
        }
    }
}

/// Distance target for the graph-distance diagnostic, centered at the
/// origin with axis or normal `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphTarget {
    pub model: ModelKind,
    /// Defaults to the shrinker radius (√2 sphere, unit cylinder).
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "default_ball_radius")]
    pub ball_radius: f64,
    #[serde(default)]
    pub c1: bool,
}

fn default_ball_radius() -> f64 {
    8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Diagnostics {
    pub energy: bool,
    pub dissipation: bool,
    pub classification: bool,
    pub type_one: bool,
    pub noncollapsing: bool,
    pub graph_distance: Option<GraphTarget>,
    pub ball_check: bool,
    pub ball_tolerance: f64,
    pub trapping: bool,
    pub snapshots: bool,
    /// Every n-th record is written as a snapshot; the first and last always
    /// are.
    pub snapshot_every: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            energy: true,
            dissipation: true,
            classification: false,
            type_one: false,
            noncollapsing: false,
            graph_distance: None,
            ball_check: false,
            ball_tolerance: 0.01,
            trapping: false,
            snapshots: true,
            snapshot_every: 10,
        }
    }
}

/// Reads, parses and validates a scenario file. Relative mesh and profile
/// paths are resolved against the file's directory.
pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let mut config = parse_scenario_str(&src, path)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    match &mut config.initial {
        InitialSurface::Mesh { path, .. } | InitialSurface::Profile { path } if path.is_relative() => {
            *path = dir.join(&*path);
        }
        _ => {}
    }
    Ok(config)
}

/// Parses scenario text; `origin` only labels errors.
pub fn parse_scenario_str(src: &str, origin: &Path) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = toml::from_str(src).map_err(|e| {
        let line = e
            .span()
            .map(|s| unknown_key_offset(src, s.start, e.message()).unwrap_or(s.start))
            .map(|offset| line_of(src, offset))
            .unwrap_or(1);
        LabError::Parse {
            path: origin.to_path_buf(),
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// Tagged tables are deserialized from a buffer, so an unknown key inside
/// one is reported at the table header; find the key itself.
fn unknown_key_offset(src: &str, from: usize, message: &str) -> Option<usize> {
    let key = message.strip_prefix("unknown field `")?.split('`').next()?;
    let mut offset = from.min(src.len());
    for line in src[offset..].split_inclusive('\n') {
        let trimmed = line.trim_start();
        if offset > from && trimmed.starts_with('[') {
            return None;
        }
        if trimmed.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('=')) {
            return Some(offset);
        }
        offset += line.len();
    }
    None
}

fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes()[..offset.min(src.len())].iter().filter(|&&b| b == b'\n').count() + 1
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::invalid(field, format!("must be non-negative and finite, got {v}")))
    }
}

fn unit_vector(field: &str, v: [f64; 3]) -> Result<()> {
    if Vec3::from(v).norm() > 0.0 && v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LabError::invalid(field, "must be a finite non-zero vector"))
    }
}

fn only_for(field: &str, present: bool, allowed: bool, what: &str) -> Result<()> {
    if present && !allowed {
        Err(LabError::invalid(field, format!("only applies to {what}")))
    } else {
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
            || self.name.starts_with('.')
        {
            return Err(LabError::invalid("name", "must be non-empty and use only [A-Za-z0-9._-]"));
        }
        self.validate_initial()?;
        self.validate_time()?;
        self.validate_step()?;
        self.validate_diagnostics()
    }

    fn validate_initial(&self) -> Result<()> {
        match &self.initial {
            InitialSurface::Sphere {
                radius, center, subdivisions, ..
            } => {
                positive("initial.radius", *radius)?;
                if !center.iter().all(|x| x.is_finite()) {
                    return Err(LabError::invalid("initial.center", "must be finite"));
                }
                if *subdivisions > 7 {
                    return Err(LabError::invalid("initial.subdivisions", "at most 7"));
                }
            }
            InitialSurface::Ellipsoid { axes, subdivisions, .. } => {
                for a in axes {
                    positive("initial.axes", *a)?;
                }
                if *subdivisions > 7 {
                    return Err(LabError::invalid("initial.subdivisions", "at most 7"));
                }
            }
            InitialSurface::Cylinder {
                radius,
                half_length,
                segments,
                axis,
                rings,
                ..
            } => {
                positive("initial.radius", *radius)?;
                positive("initial.half_length", *half_length)?;
                unit_vector("initial.axis", *axis)?;
                if *segments < 3 {
                    return Err(LabError::invalid("initial.segments", "at least 3"));
                }
                if *rings == Some(0) {
                    return Err(LabError::invalid("initial.rings", "at least 1"));
                }
            }
            InitialSurface::Disk {
                radius, rings, normal, ..
            } => {
                positive("initial.radius", *radius)?;
                unit_vector("initial.normal", *normal)?;
                if *rings < 1 {
                    return Err(LabError::invalid("initial.rings", "at least 1"));
                }
            }
            InitialSurface::Mesh { .. } | InitialSurface::Profile { .. } => {}
            InitialSurface::Dumbbell {
                half_length,
                points,
                bulb,
                neck,
            } => {
                positive("initial.half_length", *half_length)?;
                positive("initial.neck", *neck)?;
                if !(bulb > neck) {
                    return Err(LabError::invalid("initial.bulb", "must exceed the neck radius"));
                }
                if *points < 8 {
                    return Err(LabError::invalid("initial.points", "at least 8"));
                }
            }
        }
        non_negative("initial.perturbation", self.initial.perturbation())
    }

    fn validate_time(&self) -> Result<()> {
        let t = &self.time;
        if !(t.start.is_finite() && t.end.is_finite() && t.end > t.start) {
            return Err(LabError::invalid(
                "time.end",
                format!("time span must be non-degenerate, got [{}, {}]", t.start, t.end),
            ));
        }
        if !t.base_time.is_finite() || !t.base_point.iter().all(|x| x.is_finite()) {
            return Err(LabError::invalid("time.base_time", "base point and time must be finite"));
        }
        if t.gauge == Gauge::Physical && t.end > t.base_time {
            return Err(LabError::invalid(
                "time.end",
                format!("physical runs must end by the base time {} (ancient flows)", t.base_time),
            ));
        }
        if self.initial.is_axisym() {
            if t.gauge != Gauge::Physical {
                return Err(LabError::invalid("time.gauge", "profiles evolve in the physical gauge"));
            }
            if !t.record_times.is_empty() {
                return Err(LabError::invalid("time.record_times", "not supported for profiles"));
            }
        }
        if let Some(r) = t.record_times.iter().find(|r| !(**r > t.start && **r < t.end)) {
            return Err(LabError::invalid("time.record_times", format!("{r} is outside ({}, {})", t.start, t.end)));
        }
        Ok(())
    }

    fn validate_step(&self) -> Result<()> {
        let s = &self.step;
        let gauge = self.time.gauge;
        let axisym = self.initial.is_axisym();
        if let Some(v) = s.safety {
            positive("step.safety", v)?;
        }
        if let Some(v) = s.max_step {
            positive("step.max_step", v)?;
        }
        if s.record_every == 0 {
            return Err(LabError::invalid("step.record_every", "at least 1"));
        }
        if s.max_steps == 0 {
            return Err(LabError::invalid("step.max_steps", "at least 1"));
        }
        non_negative("step.tangential_smoothing", s.tangential_smoothing)?;
        non_negative("step.min_edge_ratio", s.min_edge_ratio)?;
        let physical_mesh = gauge == Gauge::Physical && !axisym;
        only_for("step.blowup_threshold", s.blowup_threshold.is_some(), physical_mesh, "physical-gauge meshes")?;
        let rescaled = gauge == Gauge::Rescaled;
        only_for("step.guard_radius", s.guard_radius.is_some(), rescaled, "the rescaled gauge")?;
        only_for("step.calibrate", s.calibrate, rescaled, "the rescaled gauge")?;
        only_for("step.calibration_tolerance", s.calibration_tolerance.is_some(), s.calibrate, "calibrated runs")?;
        for (field, present) in [
            ("step.floor_ratio", s.floor_ratio.is_some()),
            ("step.tangent_window", s.tangent_window.is_some()),
            ("step.tangent_segments", s.tangent_segments.is_some()),
            ("step.max_rescaled_spacing", s.max_rescaled_spacing.is_some()),
        ] {
            only_for(field, present, axisym, "profile initial data")?;
        }
        only_for("step.max_step", s.max_step.is_some(), !axisym, "meshes")?;
        only_for(
            "step.tangential_smoothing",
            s.tangential_smoothing > 0.0,
            !axisym,
            "meshes",
        )?;
        for (field, v) in [
            ("step.blowup_threshold", s.blowup_threshold),
            ("step.guard_radius", s.guard_radius),
            ("step.calibration_tolerance", s.calibration_tolerance),
            ("step.floor_ratio", s.floor_ratio),
            ("step.tangent_window", s.tangent_window),
            ("step.max_rescaled_spacing", s.max_rescaled_spacing),
        ] {
            if let Some(v) = v {
                positive(field, v)?;
            }
        }
        if s.tangent_segments.is_some_and(|n| n < 3) {
            return Err(LabError::invalid("step.tangent_segments", "at least 3"));
        }
        Ok(())
    }

    fn validate_diagnostics(&self) -> Result<()> {
        let d = &self.diagnostics;
        if d.snapshot_every == 0 {
            return Err(LabError::invalid("diagnostics.snapshot_every", "at least 1"));
        }
        non_negative("diagnostics.ball_tolerance", d.ball_tolerance)?;
        only_for("diagnostics.noncollapsing", d.noncollapsing, !self.initial.is_axisym(), "meshes")?;
        if let Some(g) = &d.graph_distance {
            positive("diagnostics.graph_distance.ball_radius", g.ball_radius)?;
            if let Some(r) = g.radius {
                positive("diagnostics.graph_distance.radius", r)?;
            }
            only_for("diagnostics.graph_distance.radius", g.radius.is_some(), g.model != ModelKind::Plane, "spheres and cylinders")?;
            only_for("diagnostics.graph_distance", true, !self.initial.is_axisym(), "meshes")?;
        }
        Ok(())
    }

    pub fn is_axisym(&self) -> bool {
        self.initial.is_axisym()
    }

    pub fn gauge_map(&self) -> GaugeMap {
        GaugeMap::new(Vec3::from(self.time.base_point), self.time.base_time)
    }

    pub fn classify_options(&self) -> Option<ClassifyOptions> {
        self.diagnostics.classification.then(ClassifyOptions::default)
    }

    pub fn flow_params(&self) -> FlowParams {
        let s = &self.step;
        FlowParams {
            start: self.time.start,
            end: self.time.end,
            safety: s.safety.unwrap_or(0.25),
            max_step: s.max_step,
            record_every: s.record_every,
            max_steps: s.max_steps,
            blowup_threshold: s.blowup_threshold,
            guard_radius: s.guard_radius,
            min_edge_ratio: s.min_edge_ratio,
            tangential_smoothing: s.tangential_smoothing,
            classify: self.classify_options(),
            record_times: self.time.record_times.clone(),
            gauge_map: self.gauge_map(),
        }
    }

    pub fn calibration_options(&self) -> Option<CalibrationOptions> {
        self.step.calibrate.then(|| {
            let mut opts = CalibrationOptions::default();
            if let Some(tol) = self.step.calibration_tolerance {
                opts.relative_tolerance = tol;
            }
            opts
        })
    }

    pub fn axisym_params(&self) -> AxisymParams {
        let s = &self.step;
        let d = AxisymParams::default();
        AxisymParams {
            safety: s.safety.unwrap_or(d.safety),
            floor_ratio: s.floor_ratio.unwrap_or(d.floor_ratio),
            end: Some(self.time.end),
            record_every: s.record_every,
            max_steps: s.max_steps,
            classify: self.classify_options(),
            tangent_window: s.tangent_window.unwrap_or(d.tangent_window),
            segments: s.tangent_segments.unwrap_or(d.segments),
            max_rescaled_spacing: s.max_rescaled_spacing.unwrap_or(d.max_rescaled_spacing),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "sphere"

[initial]
kind = "sphere"
radius = 2.0

[time]
gauge = "physical"
start = -1.0
end = -0.1
"#;

    fn parse(src: &str) -> Result<ScenarioConfig> {
        parse_scenario_str(src, Path::new("test.toml"))
    }

    #[test]
    fn minimal_sphere_gets_all_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.output_dir, PathBuf::from("runs"));
        assert!(c.roles.is_empty());
        assert_eq!(
            c.initial,
            InitialSurface::Sphere {
                radius: 2.0,
                center: [0.0; 3],
                subdivisions: 3,
                perturbation: 0.0
            }
        );
        assert_eq!(c.time.base_time, 0.0);
        assert!(c.time.record_times.is_empty());
        assert_eq!(c.step, StepControl::default());
        assert_eq!(c.diagnostics, Diagnostics::default());
        let p = c.flow_params();
        assert_eq!(p.safety, 0.25);
        assert_eq!(p.record_every, 10);
    }

    #[test]
    fn physical_only_option_in_rescaled_gauge_is_rejected() {
        let src = MINIMAL.replace("\"physical\"", "\"rescaled\"") + "\n[step]\nblowup_threshold = 10.0\n";
        match parse(&src).unwrap_err() {
            LabError::Validation { field, .. } => assert_eq!(field, "step.blowup_threshold"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let src = MINIMAL.replace("radius = 2.0", "radius = 2.0\nradius_typo = 1.0");
        match parse(&src).unwrap_err() {
            LabError::Parse { line, message, .. } => {
                assert_eq!(line, 7, "{message}");
                assert!(message.contains("radius_typo"), "{message}");
            }
            e => panic!("{e}"),
        }
        let bad = "name = \"x\"\n[initial\n";
        assert!(matches!(parse(bad).unwrap_err(), LabError::Parse { line: 2, .. }));
    }

    #[test]
    fn ancient_physical_runs_end_by_the_base_time() {
        let src = MINIMAL.replace("end = -0.1", "end = 0.5");
        assert!(matches!(parse(&src).unwrap_err(), LabError::Validation { ref field, .. } if field == "time.end"));
        let src = MINIMAL.replace("end = -0.1", "end = -2.0");
        assert!(matches!(parse(&src).unwrap_err(), LabError::Validation { ref field, .. } if field == "time.end"));
    }

    #[test]
    fn profiles_are_physical_only() {
        let src = r#"
name = "db"
[initial]
kind = "dumbbell"
half_length = 5.0
points = 128
bulb = 1.0
neck = 0.5
[time]
gauge = "rescaled"
start = 0.0
end = 1.0
"#;
        assert!(matches!(parse(src).unwrap_err(), LabError::Validation { ref field, .. } if field == "time.gauge"));
        let ok = src.replace("\"rescaled\"", "\"physical\"").replace("start = 0.0\nend = 1.0", "start = -1.0\nend = 0.0");
        let c = parse(&ok).unwrap();
        assert!(c.is_axisym());
        assert_eq!(c.axisym_params().end, Some(0.0));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let e = parse_scenario(Path::new("/nonexistent/scenario.toml")).unwrap_err();
        assert!(matches!(e, LabError::Io { .. }));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn relative_mesh_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(
            &path,
            "name = \"m\"\n[initial]\nkind = \"mesh\"\npath = \"m.obj\"\n[time]\ngauge = \"rescaled\"\nstart = 0.0\nend = 1.0\n",
        )
        .unwrap();
        let c = parse_scenario(&path).unwrap();
        assert_eq!(
            c.initial,
            InitialSurface::Mesh {
                path: dir.path().join("m.obj"),
                perturbation: 0.0
            }
        );
    }
}
