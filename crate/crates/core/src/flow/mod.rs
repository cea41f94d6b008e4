//! Time integration of mean curvature flow on meshes in both gauges.

mod axisym_run;
mod linear;
mod run;
mod step;
mod trace;

pub use axisym_run::{classify_tangent_flow, run_axisym, tangent_flow_mesh, AxisymParams, AxisymRun};
pub use run::{
    calibrate_singular_scale, record_snapshot, run_flow, support_radius, CalibrationOptions,
    FlowFailure, FlowParams, FlowRun, ScaleCalibration, StopReason,
};
pub use step::{cfl_timestep, mcf_step, rescaled_step};
pub use trace::{
    detect_singularity, extrapolate_blowup_time, ClassSnapshot, FlowTrace, SingularEvent,
    SingularTrigger, TraceRecord, TRACE_COLUMNS,
};
