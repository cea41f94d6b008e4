//! Diagnostics evaluated on snapshots and traces.

mod graph;
mod growth;
mod noncollapse;
mod shrinker;
mod trace_checks;

pub use graph::{graph_distance, GraphDistanceReport, GraphOrder};
pub use growth::{
    area_in_ball, ball_check, regularity_scaling, volume_growth, RegularityReport,
    RegularitySample, VolumeGrowthReport,
};
pub use noncollapse::{noncollapsing_alpha, noncollapsing_alpha_brute_force, NonCollapseReport};
pub use shrinker::{
    classify_shrinker, shrinker_residual, ClassificationResult, ClassifyOptions, FitCandidate,
    ShrinkerKind, ShrinkerResidual,
};
pub use trace_checks::{
    mean_curvature_bound, trapping_bound, trapping_bound_samples, type_one_ratio,
    type_one_ratio_samples, TrappingReport, TypeOneReport,
};
