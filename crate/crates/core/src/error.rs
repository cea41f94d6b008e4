use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Gauge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangles (zero area): faces {faces:?}")]
    DegenerateTriangles { faces: Vec<usize> },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("gauge mismatch: expected {expected:?}, found {found:?}")]
    GaugeMismatch { expected: Gauge, found: Gauge },

    #[error("time {t} is not before the base time {t0}")]
    TimeNotBeforeBase { t: f64, t0: f64 },

    #[error("nearest point is ambiguous: {0}")]
    Ambiguous(String),

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("divergence: sup |F| = {sup_f} exceeds guard radius {guard}")]
    Divergence { sup_f: f64, guard: f64 },

    #[error("neck pinch at x = {x}, t = {t}: min u = {min_u} below floor {floor}")]
    NeckPinch { x: f64, t: f64, min_u: f64, floor: f64 },

    #[error("surface is not mean convex at {} vertices (first: {:?})", .vertices.len(), .vertices.first())]
    NonMeanConvex { vertices: Vec<usize> },

    #[error("projection ambiguous for vertex {vertex}")]
    ProjectionAmbiguous { vertex: usize },

    #[error("mesh is not a graph over the model: {0}")]
    NotAGraph(String),

    #[error("too few samples for a stable fit: {found} (need {needed})")]
    TooFewSamples { found: usize, needed: usize },

    #[error("time mismatch: {0}")]
    TimeMismatch(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("validation error in `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
