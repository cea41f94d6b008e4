use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_shrinker, ClassifyOptions};
use crate::error::{Error, Result};
use crate::geometry::{Gauge, Mesh, Vec3};
use crate::huisken::{dissipation, energy_e, energy_etilde, rescaled_density, GaugeMap, DIM};

use super::step::{cfl_timestep, mcf_step_smoothed, rescaled_step_basic};
use super::trace::{detect_singularity, ClassSnapshot, FlowTrace, SingularEvent, SingularTrigger, TraceRecord};

/// Integration settings for one trajectory. The gauge is taken from the
/// initial mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub start: f64,
    pub end: f64,
    /// Step size is `safety · (min edge)²`, capped by `max_step`.
    pub safety: f64,
    pub max_step: Option<f64>,
    pub record_every: usize,
    pub max_steps: usize,
    /// Physical runs stop once `max |A|` exceeds this; defaults to
    /// `50 / diameter` of the initial mesh.
    pub blowup_threshold: Option<f64>,
    /// Rescaled runs fail once `sup |ξ|` exceeds this; defaults to ten times
    /// the initial `sup |ξ|`.
    pub guard_radius: Option<f64>,
    /// Stop when the shortest edge falls below this fraction of its
    /// initial length.
    pub min_edge_ratio: f64,
    /// Strength of the tangential vertex redistribution; 0 moves vertices
    /// along the mean-curvature vector only.
    pub tangential_smoothing: f64,
    pub classify: Option<ClassifyOptions>,
    /// Times inside `(start, end)` that steps land on exactly and that are
    /// always recorded.
    pub record_times: Vec<f64>,
    pub gauge_map: GaugeMap,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: 1.0,
            safety: 0.25,
            max_step: None,
            record_every: 10,
            max_steps: 1_000_000,
            blowup_threshold: None,
            guard_radius: None,
            min_edge_ratio: 1e-3,
            tangential_smoothing: 0.0,
            classify: None,
            record_times: Vec::new(),
            gauge_map: GaugeMap::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EndTime,
    StepBudget,
    Singular,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub trace: FlowTrace,
    pub final_mesh: Mesh,
    pub final_time: f64,
    pub steps: usize,
    pub stop: StopReason,
    pub event: Option<SingularEvent>,
}

/// A failed trajectory together with everything recorded before the error.
#[derive(Debug)]
pub struct FlowFailure {
    pub error: Error,
    pub trace: FlowTrace,
    pub last_mesh: Mesh,
    pub last_time: f64,
}

impl fmt::Display for FlowFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "flow failed at time {}: {}", self.last_time, self.error)
    }
}

impl std::error::Error for FlowFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Area-weighted centroid of the vertices with `|A| ≥ 0.9 max |A|`.
fn peak_position(mesh: &Mesh, max_a: f64) -> Vec3 {
    let mut c = Vec3::zeros();
    let mut w = 0.0;
    for v in mesh.interior_vertices() {
        if mesh.curvature_norm[v] >= 0.9 * max_a {
            c += mesh.vertices[v] * mesh.area_weights[v];
            w += mesh.area_weights[v];
        }
    }
    if w > 0.0 {
        c / w
    } else {
        mesh.centroid()
    }
}

/// Step from `time`: the CFL step capped by `max_step` and shortened to
/// land on the next record time or the end. The flag is set when the step
/// lands on such a stop.
fn plan_step(mesh: &Mesh, time: f64, params: &FlowParams) -> Result<(f64, Option<f64>)> {
    let mut dt = cfl_timestep(mesh, params.safety)?;
    if let Some(cap) = params.max_step {
        dt = dt.min(cap);
    }
    let stop = params
        .record_times
        .iter()
        .copied()
        .filter(|&t| t > time && t < params.end)
        .fold(params.end, f64::min);
    if stop - time <= dt * (1.0 + 1e-9) {
        Ok((stop - time, Some(stop)))
    } else {
        Ok((dt, None))
    }
}

/// Diagnostics of one snapshot. Energies, dissipation and `sup |F̃|` are
/// taken on the rescaled surface, `max |A|` in the mesh's own gauge.
pub fn record_snapshot(
    mesh: &Mesh,
    time: f64,
    gauge_map: &GaugeMap,
    classify: Option<&ClassifyOptions>,
) -> Result<TraceRecord> {
    let (physical_time, rescaled, e) = match mesh.gauge {
        Gauge::Physical => {
            let rescaled = gauge_map.rescale_surface(mesh, time)?;
            let e = energy_e(mesh, time, &gauge_map.base_point, gauge_map.base_time)?;
            (time, rescaled, e)
        }
        Gauge::Rescaled => {
            let physical = gauge_map.unrescale_surface(mesh, time)?;
            let t = gauge_map.t_of_s(time);
            let e = energy_e(&physical, t, &gauge_map.base_point, gauge_map.base_time)?;
            (t, mesh.clone(), e)
        }
    };
    let e_tilde = energy_etilde(&rescaled)?;
    let (max_a, _) = mesh.max_curvature_norm();
    let class = match classify {
        Some(opts) => classify_shrinker(&rescaled, opts).ok().map(|c| ClassSnapshot {
            kind: c.kind.as_str().to_string(),
            radius: c.radius,
            residual: c.rms_residual,
        }),
        None => None,
    };
    Ok(TraceRecord {
        time,
        e_tilde,
        e,
        dissipation: dissipation(&rescaled)?,
        max_a,
        max_grad_a: None,
        sup_f: rescaled.sup_norm(),
        min_edge: mesh.min_edge_length(),
        class,
        peak_position: peak_position(mesh, max_a),
        energy_relation_residual: (e_tilde - (2.0 * PI).powf(DIM / 2.0) * e).abs() / e_tilde.abs().max(f64::MIN_POSITIVE),
        gauge_identity_residual: gauge_map.identity_residual(physical_time)?,
    })
}

fn validate(initial: &Mesh, params: &FlowParams) -> Result<()> {
    if !(params.end > params.start) || !params.start.is_finite() || !params.end.is_finite() {
        return Err(Error::Validation {
            field: "time span".into(),
            reason: format!("need start < end, got [{}, {}]", params.start, params.end),
        });
    }
    if params.record_every == 0 {
        return Err(Error::Validation {
            field: "record_every".into(),
            reason: "must be at least 1".into(),
        });
    }
    if !(params.safety > 0.0) {
        return Err(Error::Validation {
            field: "safety".into(),
            reason: "must be positive".into(),
        });
    }
    if !(params.tangential_smoothing >= 0.0 && params.tangential_smoothing.is_finite()) {
        return Err(Error::Validation {
            field: "tangential_smoothing".into(),
            reason: "must be finite and non-negative".into(),
        });
    }
    if let Some(t) = params.record_times.iter().find(|t| !(**t > params.start && **t < params.end)) {
        return Err(Error::Validation {
            field: "record_times".into(),
            reason: format!("{t} is outside ({}, {})", params.start, params.end),
        });
    }
    if initial.gauge == Gauge::Physical && params.end > params.gauge_map.base_time {
        return Err(Error::Validation {
            field: "end".into(),
            reason: format!("physical runs must end by the base time {}", params.gauge_map.base_time),
        });
    }
    Ok(())
}

/// Evolves `initial` over `[start, end]` in its own gauge, recording every
/// `record_every` steps and at the final step. The observer sees each
/// recorded snapshot.
pub fn run_flow(
    initial: Mesh,
    params: &FlowParams,
    observer: &mut dyn FnMut(&Mesh, &TraceRecord) -> Result<()>,
) -> std::result::Result<FlowRun, FlowFailure> {
    let gauge = initial.gauge;
    let mut trace = FlowTrace::new(gauge, params.gauge_map);
    let mut mesh = initial;
    let mut time = params.start;
    macro_rules! bail {
        ($e:expr) => {
            return Err(FlowFailure {
                error: $e,
                trace,
                last_mesh: mesh,
                last_time: time,
            })
        };
    }
    if let Err(e) = validate(&mesh, params) {
        bail!(e);
    }
    let blowup = params.blowup_threshold.unwrap_or(50.0 / mesh.diameter());
    let guard = params.guard_radius.unwrap_or(10.0 * mesh.sup_norm());
    let edge_floor = params.min_edge_ratio * mesh.min_edge_length();
    let classify = params.classify.as_ref();

    let mut record = |mesh: &Mesh, time: f64, trace: &mut FlowTrace| -> Result<()> {
        let r = record_snapshot(mesh, time, &params.gauge_map, classify)?;
        observer(mesh, &r)?;
        trace.push(r)
    };
    if let Err(e) = record(&mesh, time, &mut trace) {
        bail!(e);
    }
    let end_tol = 1e-12 * params.end.abs().max(1.0);
    let mut steps = 0;
    let stop = loop {
        if time >= params.end - end_tol {
            break StopReason::EndTime;
        }
        if steps >= params.max_steps {
            if trace.last().map(|r| r.time) != Some(time) {
                if let Err(e) = mesh.compute_geometry() {
                    bail!(e);
                }
                if let Err(e) = record(&mesh, time, &mut trace) {
                    bail!(e);
                }
            }
            break StopReason::StepBudget;
        }
        let (dt, stop_at) = match plan_step(&mesh, time, params) {
            Ok(plan) => plan,
            Err(e) => bail!(e),
        };
        let next = match gauge {
            Gauge::Physical => mcf_step_smoothed(&mesh, dt, params.tangential_smoothing),
            Gauge::Rescaled => rescaled_step_basic(&mesh, dt, guard, params.tangential_smoothing),
        };
        mesh = match next {
            Ok(m) => m,
            Err(e) => bail!(e),
        };
        time = stop_at.unwrap_or(time + dt);
        steps += 1;
        let blew_up = gauge == Gauge::Physical && mesh.max_curvature_norm().0 > blowup;
        let collapsed = mesh.min_edge_length() < edge_floor;
        if steps % params.record_every == 0 || stop_at.is_some() || blew_up || collapsed {
            if gauge == Gauge::Rescaled {
                if let Err(e) = mesh.compute_geometry() {
                    bail!(e);
                }
            }
            if let Err(e) = record(&mesh, time, &mut trace) {
                bail!(e);
            }
        }
        if blew_up || collapsed {
            break StopReason::Singular;
        }
    };
    let event = if stop == StopReason::Singular {
        detect_singularity(&trace, blowup).map(|mut ev| {
            if mesh.min_edge_length() < edge_floor && mesh.max_curvature_norm().0 <= blowup {
                ev.trigger = SingularTrigger::MinEdgeCollapse;
            }
            ev
        })
    } else {
        None
    };
    Ok(FlowRun {
        trace,
        final_mesh: mesh,
        final_time: time,
        steps,
        stop,
        event,
    })
}

/// `Σ w ξ·ν / Σ w` with `w = ρ̃ · area` over non-collar vertices: the
/// radius of a centered sphere or cylinder.
pub fn support_radius(mesh: &Mesh) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for v in mesh.interior_vertices() {
        let x = &mesh.vertices[v];
        let w = mesh.area_weights[v] * rescaled_density(x);
        num += w * x.dot(&mesh.normals[v]);
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Trials end once the support radius grows or shrinks by these factors.
    pub expand_ratio: f64,
    pub collapse_ratio: f64,
    /// Bisection stops at this relative bracket width.
    pub relative_tolerance: f64,
    pub max_trials: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            expand_ratio: 2.0,
            collapse_ratio: 0.5,
            relative_tolerance: 1e-13,
            max_trials: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCalibration {
    pub scale: f64,
    /// Largest scale seen to collapse and smallest seen to expand.
    pub collapsing: f64,
    pub expanding: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Expands,
    Collapses,
}

fn trial(initial: &Mesh, scale: f64, params: &FlowParams, opts: &CalibrationOptions) -> Outcome {
    let mut mesh = initial.scaled(scale);
    let guard = params.guard_radius.unwrap_or(10.0 * initial.sup_norm()) * scale.max(1.0);
    let r0 = support_radius(&mesh);
    let (mut prev, mut time) = (r0, params.start);
    let end_tol = 1e-12 * params.end.abs().max(1.0);
    let mut steps = 0;
    while time < params.end - end_tol && steps < params.max_steps {
        let Ok((dt, stop_at)) = plan_step(&mesh, time, params) else {
            return Outcome::Collapses;
        };
        mesh = match rescaled_step_basic(&mesh, dt, guard, params.tangential_smoothing) {
            Ok(m) => m,
            Err(Error::Divergence { .. }) => return Outcome::Expands,
            Err(_) => return Outcome::Collapses,
        };
        time = stop_at.unwrap_or(time + dt);
        steps += 1;
        let r = support_radius(&mesh);
        if !(r > opts.collapse_ratio * r0) {
            return Outcome::Collapses;
        }
        if r > opts.expand_ratio * r0 {
            return Outcome::Expands;
        }
        if time >= params.end - end_tol {
            return if r >= prev { Outcome::Expands } else { Outcome::Collapses };
        }
        prev = r;
    }
    if support_radius(&mesh) >= prev {
        Outcome::Expands
    } else {
        Outcome::Collapses
    }
}

/// Finds the dilation of a rescaled initial surface that neither expands
/// nor collapses over `[start, end]` under the same step rules as
/// [`run_flow`]. A compact surface shrinking to a point at the origin is
/// an unstable fixed point of the rescaled flow in the dilation direction;
/// this shooting step places the discrete singular time at the gauge base.
pub fn calibrate_singular_scale(
    initial: &Mesh,
    params: &FlowParams,
    opts: &CalibrationOptions,
) -> Result<ScaleCalibration> {
    if initial.gauge != Gauge::Rescaled {
        return Err(Error::GaugeMismatch {
            expected: Gauge::Rescaled,
            found: initial.gauge,
        });
    }
    validate(initial, params)?;
    let trials = std::cell::Cell::new(0usize);
    let run = |s: f64| {
        trials.set(trials.get() + 1);
        trial(initial, s, params, opts)
    };
    let mut lo;
    let mut hi;
    if run(1.0) == Outcome::Expands {
        hi = 1.0;
        lo = 0.8;
        while run(lo) == Outcome::Expands {
            hi = lo;
            lo *= 0.8;
            if lo < 1e-6 {
                return Err(Error::Validation {
                    field: "calibration".into(),
                    reason: "every trial scale expands".into(),
                });
            }
        }
    } else {
        lo = 1.0;
        hi = 1.25;
        while run(hi) == Outcome::Collapses {
            lo = hi;
            hi *= 1.25;
            if hi > 1e6 {
                return Err(Error::Validation {
                    field: "calibration".into(),
                    reason: "every trial scale collapses".into(),
                });
            }
        }
    }
    while (hi - lo) > opts.relative_tolerance * hi && trials.get() < opts.max_trials {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match run(mid) {
            Outcome::Expands => hi = mid,
            Outcome::Collapses => lo = mid,
        }
    }
    Ok(ScaleCalibration {
        scale: 0.5 * (lo + hi),
        collapsing: lo,
        expanding: hi,
        trials: trials.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_icosphere;

    #[test]
    fn sphere_run_tracks_exact_radius() {
        let mesh = build_icosphere(2.0, Vec3::zeros(), 3).unwrap();
        let params = FlowParams {
            start: -1.0,
            end: -0.25,
            record_every: 20,
            safety: 0.05,
            ..FlowParams::default()
        };
        let run = run_flow(mesh, &params, &mut |_, _| Ok(())).unwrap();
        assert_eq!(run.stop, StopReason::EndTime);
        assert_eq!(run.final_time, -0.25);
        let r = run.final_mesh.vertices.iter().map(|v| v.norm()).sum::<f64>() / run.final_mesh.len() as f64;
        assert!((r - 1.0).abs() < 1e-2, "{r}");
        for rec in run.trace.records() {
            assert!(rec.energy_relation_residual < 1e-10);
            assert!(rec.gauge_identity_residual < 1e-14);
        }
    }

    #[test]
    fn physical_runs_may_not_pass_the_base_time() {
        let mesh = build_icosphere(2.0, Vec3::zeros(), 1).unwrap();
        let params = FlowParams {
            start: -1.0,
            end: 0.5,
            ..FlowParams::default()
        };
        let err = run_flow(mesh, &params, &mut |_, _| Ok(())).unwrap_err();
        assert!(matches!(err.error, Error::Validation { .. }));
        assert!(err.trace.is_empty());
    }

    #[test]
    fn support_radius_of_sphere() {
        let mut m = build_icosphere(1.3, Vec3::zeros(), 3).unwrap();
        m.gauge = Gauge::Rescaled;
        assert!((support_radius(&m) - 1.3).abs() < 1e-3);
    }

    #[test]
    fn record_times_are_hit_exactly() {
        let mut m = build_icosphere(2.0f64.sqrt(), Vec3::zeros(), 2).unwrap();
        m.gauge = Gauge::Rescaled;
        let params = FlowParams {
            start: 0.0,
            end: 0.3,
            record_every: 1000,
            record_times: vec![0.1, 0.2],
            ..FlowParams::default()
        };
        let run = run_flow(m.clone(), &params, &mut |_, _| Ok(())).unwrap();
        let times: Vec<f64> = run.trace.records().iter().map(|r| r.time).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.2, 0.3]);

        let bad = FlowParams {
            record_times: vec![0.5],
            ..params
        };
        let err = run_flow(m, &bad, &mut |_, _| Ok(())).unwrap_err();
        assert!(matches!(err.error, Error::Validation { ref field, .. } if field == "record_times"));
    }

    #[test]
    fn planned_steps_never_overshoot() {
        let m = build_icosphere(1.0, Vec3::zeros(), 2).unwrap();
        let params = FlowParams {
            start: -1.0,
            end: -0.9,
            max_step: Some(0.03),
            record_times: vec![-0.95],
            ..FlowParams::default()
        };
        let (dt, stop) = plan_step(&m, -1.0, &params).unwrap();
        assert!(dt <= 0.03 && stop.is_none());
        let (dt, stop) = plan_step(&m, -0.96, &params).unwrap();
        assert_eq!(stop, Some(-0.95));
        assert!((dt - 0.01).abs() < 1e-12);
        let (_, stop) = plan_step(&m, -0.95, &params).unwrap();
        assert!(stop.is_none() || stop == Some(-0.9));
    }
}
