use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Gauge, Vec3};
use crate::huisken::GaugeMap;

/// Column order of the exported trace.
pub const TRACE_COLUMNS: [&str; 10] = [
    "time",
    "gauge",
    "E_tilde",
    "dissipation",
    "maxA",
    "supF",
    "minEdge",
    "class",
    "class_radius",
    "class_residual",
];

/// Classification at a recorded step, reduced to what the trace stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSnapshot {
    pub kind: String,
    pub radius: Option<f64>,
    /// RMS distance from the fitted model.
    pub residual: f64,
}

/// Diagnostics at one recorded step.
///
/// `e_tilde`, `dissipation` and `sup_f` always refer to the rescaled
/// surface about the trace's gauge base point; `max_a` is measured in the
/// trace's own gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: f64,
    pub e_tilde: f64,
    /// `E(t)` on the physical surface.
    pub e: f64,
    pub dissipation: f64,
    pub max_a: f64,
    pub max_grad_a: Option<f64>,
    pub sup_f: f64,
    pub min_edge: f64,
    pub class: Option<ClassSnapshot>,
    /// Area-weighted centroid of the vertices with `|A| ≥ 0.9 max |A|`.
    pub peak_position: Vec3,
    /// `|Ẽ − 2πE| / Ẽ`.
    pub energy_relation_residual: f64,
    /// `|e^s − √2 λ(t)| / (√2 λ(t))`.
    pub gauge_identity_residual: f64,
}

/// Recorded diagnostics of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    gauge: Gauge,
    gauge_map: GaugeMap,
    records: Vec<TraceRecord>,
}

impl FlowTrace {
    pub fn new(gauge: Gauge, gauge_map: GaugeMap) -> Self {
        Self {
            gauge,
            gauge_map,
            records: Vec::new(),
        }
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn gauge_map(&self) -> &GaugeMap {
        &self.gauge_map
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Appends a record; times must increase strictly.
    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(prev) = self.records.last() {
            if !(record.time > prev.time) {
                return Err(Error::Validation {
                    field: "time".into(),
                    reason: format!("trace times must increase: {} after {}", record.time, prev.time),
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Physical time of a record.
    pub fn physical_time(&self, record: &TraceRecord) -> f64 {
        match self.gauge {
            Gauge::Physical => record.time,
            Gauge::Rescaled => self.gauge_map.t_of_s(record.time),
        }
    }

    /// Rescaling factor `λ` at a record.
    pub fn lambda(&self, record: &TraceRecord) -> Result<f64> {
        match self.gauge {
            Gauge::Physical => self.gauge_map.lambda(record.time),
            Gauge::Rescaled => Ok(self.gauge_map.lambda_of_s(record.time)),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TRACE_COLUMNS)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let (kind, radius, residual) = match &r.class {
                Some(c) => (c.kind.clone(), opt(c.radius), c.residual.to_string()),
                None => ("none".to_string(), String::new(), String::new()),
            };
            w.write_record([
                r.time.to_string(),
                self.gauge.as_str().to_string(),
                r.e_tilde.to_string(),
                r.dissipation.to_string(),
                r.max_a.to_string(),
                r.sup_f.to_string(),
                r.min_edge.to_string(),
                kind,
                radius,
                residual,
            ])?;
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
}

/// What ended a singular trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularTrigger {
    CurvatureBlowUp,
    NeckPinch,
    MinEdgeCollapse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularEvent {
    pub location: Vec3,
    pub time: f64,
    pub peak_curvature: f64,
    pub trigger: SingularTrigger,
}

/// Locates a curvature blow-up on a physical trace whose `max |A|` exceeds
/// `threshold`. The time comes from a least-squares line through
/// `1 / max|A|²` against `t` over the final records, which vanishes at the
/// singular time when `max |A| ≈ C₀ (2 (T − t))^{-1/2}`; the location is
/// the peak position of the last record.
pub fn detect_singularity(trace: &FlowTrace, threshold: f64) -> Option<SingularEvent> {
    if trace.gauge() != Gauge::Physical {
        return None;
    }
    let records = trace.records();
    let peak = records.iter().map(|r| r.max_a).fold(0.0, f64::max);
    if !(peak > threshold) {
        return None;
    }
    let last = records.last()?;
    let time = extrapolate_blowup_time(records).unwrap_or(last.time);
    Some(SingularEvent {
        location: last.peak_position,
        time,
        peak_curvature: peak,
        trigger: SingularTrigger::CurvatureBlowUp,
    })
}

/// Zero of the line through `(t, 1/max|A|²)` over the last quarter of the
/// records (at least three).
pub fn extrapolate_blowup_time(records: &[TraceRecord]) -> Option<f64> {
    let n = records.len();
    if n < 2 {
        return None;
    }
    let k = (n / 4).max(3).min(n);
    let tail = &records[n - k..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|r| r.max_a > 0.0)
        .map(|r| (r.time, r.max_a.powi(-2)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    Some(mt - my / slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(time: f64, max_a: f64) -> TraceRecord {
        TraceRecord {
            time,
            e_tilde: 1.0,
            e: 1.0,
            dissipation: 0.0,
            max_a,
            max_grad_a: None,
            sup_f: 1.0,
            min_edge: 0.1,
            class: None,
            peak_position: Vec3::zeros(),
            energy_relation_residual: 0.0,
            gauge_identity_residual: 0.0,
        }
    }

    #[test]
    fn times_must_increase() {
        let mut t = FlowTrace::new(Gauge::Rescaled, GaugeMap::default());
        t.push(record(0.0, 1.0)).unwrap();
        assert!(t.push(record(0.0, 1.0)).is_err());
        t.push(record(0.5, 1.0)).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn csv_has_fixed_header_and_blank_class_fields() {
        let mut t = FlowTrace::new(Gauge::Physical, GaugeMap::default());
        t.push(record(-1.0, 0.5)).unwrap();
        let mut r = record(-0.5, 1.0);
        r.class = Some(ClassSnapshot {
            kind: "sphere".into(),
            radius: Some(1.5),
            residual: 0.01,
        });
        t.push(r).unwrap();
        let csv = t.to_csv_string().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_COLUMNS.join(","));
        assert_eq!(lines[1], "-1,physical,1,0,0.5,1,0.1,none,,");
        assert_eq!(lines[2], "-0.5,physical,1,0,1,1,0.1,sphere,1.5,0.01");
    }

    #[test]
    fn blowup_time_from_exact_sphere_curvature() {
        // |A| = √2 / r with r² = −4t, so 1/|A|² = −2t
        let mut trace = FlowTrace::new(Gauge::Physical, GaugeMap::default());
        for k in 0..30 {
            let t = -1.0 + 0.033 * k as f64;
            trace.push(record(t, (2.0f64).sqrt() / (-4.0 * t).sqrt())).unwrap();
        }
        let ev = detect_singularity(&trace, 3.0).unwrap();
        assert!(ev.time.abs() < 1e-12, "{}", ev.time);
        assert_eq!(ev.trigger, SingularTrigger::CurvatureBlowUp);
        assert!(detect_singularity(&trace, 1e3).is_none());
    }
}
