//! On-disk layout of a run directory and the JSON documents in it.
//!
//! ```text
//! <run>/config.toml         effective scenario, hashed in the manifest
//! <run>/trace.csv           one row per recorded step
//! <run>/snapshots/          OBJ meshes (and profile CSVs)
//! <run>/reports/*.json      summary, per-record metrics, diagnostics
//! <run>/manifest.json       status, versions, hashes; written last
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use mcf_core::analysis::{TrappingReport, TypeOneReport};
use mcf_core::flow::{ClassSnapshot, ScaleCalibration, SingularEvent, StopReason, TraceRecord};
use mcf_core::geometry::{Gauge, ModelKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Role;
use crate::error::{LabError, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const REPORT_DIR: &str = "reports";
pub const SUMMARY_FILE: &str = "reports/summary.json";
pub const RECORDS_FILE: &str = "reports/records.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub tool_version: String,
    pub core_version: String,
    /// SHA-256 of `config.toml` as stored in the run directory.
    pub config_sha256: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub status: RunStatus,
    pub error: Option<String>,
    /// SHA-256 of every other file in the run directory, by relative path.
    pub files: BTreeMap<String, String>,
}

/// Observer measurements of one record, beside the trace columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetrics {
    pub physical_time: f64,
    pub lambda: Option<f64>,
    /// Mean distance of the physical surface from the base point; for
    /// profiles, the neck radius.
    pub mean_radius: f64,
    /// `ρ̃`-weighted mean of `ξ·ν` on the rescaled surface.
    pub support_radius: Option<f64>,
    pub shrinker_sup: Option<f64>,
    pub shrinker_rms: Option<f64>,
    pub graph_c0: Option<f64>,
    pub graph_c1: Option<f64>,
    pub ball: Option<bool>,
    /// Smallest physical distance of a vertex from the base point.
    pub origin_distance: Option<f64>,
    pub alpha: Option<f64>,
    pub snapshot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub record: TraceRecord,
    pub metrics: RecordMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub initial: f64,
    pub last: f64,
    pub min: f64,
    pub max: f64,
    /// Largest `Ẽ(i+1) − Ẽ(i)` between consecutive records.
    pub max_increase: f64,
    pub max_increase_relative: f64,
    pub max_energy_relation_residual: f64,
    pub max_gauge_identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationInterval {
    pub s0: f64,
    pub s1: f64,
    /// `−ΔẼ/Δs`.
    pub rate: f64,
    /// Trapezoid mean of the recorded dissipation at both ends.
    pub quadrature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationSummary {
    pub threshold: f64,
    pub intervals: Vec<DissipationInterval>,
    pub compared: usize,
    /// Worst `|rate − quadrature| / quadrature` where the quadrature
    /// exceeds the threshold.
    pub worst_relative_mismatch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappingSummary {
    /// Bound on `|H̃|` used as `C₀`.
    pub c0: f64,
    pub report: TrappingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSummary {
    pub tolerance: f64,
    /// Time the surfaces were rescaled about.
    pub base_time: f64,
    pub checked: usize,
    pub all_intersect: bool,
    /// Times of records whose rescaled surface misses the ball.
    pub misses: Vec<f64>,
    /// Misses when rescaling about the configured base time.
    pub configured_base_misses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub gauge: Gauge,
    pub axisymmetric: bool,
    /// The model surface sampled by the initial data, if any.
    pub model: Option<ModelKind>,
    pub roles: Vec<Role>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub steps: usize,
    pub stop: Option<StopReason>,
    pub final_time: Option<f64>,
    pub event: Option<SingularEvent>,
    pub calibration: Option<ScaleCalibration>,
    pub final_class: Option<ClassSnapshot>,
    /// Latest record carrying a classification.
    pub last_classified: Option<(f64, ClassSnapshot)>,
    pub records: usize,
    pub energy: Option<EnergySummary>,
    pub dissipation: Option<DissipationSummary>,
    pub type_one: Option<TypeOneReport>,
    pub trapping: Option<TrappingSummary>,
    pub ball: Option<BallSummary>,
    pub min_alpha: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::invalid("json", e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Hashes of all files under `dir` except the manifest, keyed by relative
/// path with `/` separators, in sorted order.
pub fn hash_files(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| LabError::io(&d, e))? {
            let path = entry.map_err(|e| LabError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(dir).expect("walked below dir");
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            if key == MANIFEST_FILE {
                continue;
            }
            let bytes = std::fs::read(&path).map_err(|e| LabError::io(&path, e))?;
            out.insert(key, sha256_hex(&bytes));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hashes_skip_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("reports")).unwrap();
        std::fs::write(dir.path().join("reports/a.json"), "{}").unwrap();
        std::fs::write(dir.path().join(MANIFEST_FILE), "{}").unwrap();
        let h = hash_files(dir.path()).unwrap();
        assert_eq!(h.keys().collect::<Vec<_>>(), vec!["reports/a.json"]);
    }
}
