use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrace;
use crate::geometry::Gauge;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeOneReport {
    /// Physical times of the samples.
    pub times: Vec<f64>,
    /// `max |A| / λ(t)` per sample.
    pub ratios: Vec<f64>,
    /// Largest ratio: the empirical type-I constant.
    pub c0: f64,
    /// True when the ratios never decrease, i.e. the supremum sits at the
    /// last sample and may not be saturated yet.
    pub monotone_envelope: bool,
}

/// Type-I ratios from raw samples `(t, max |A|, λ(t))`.
pub fn type_one_ratio_samples(samples: &[(f64, f64, f64)]) -> Result<TypeOneReport> {
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let times = samples.iter().map(|s| s.0).collect();
    let ratios: Vec<f64> = samples.iter().map(|s| s.1 / s.2).collect();
    if let Some(i) = ratios.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Validation {
            field: "max_a".into(),
            reason: format!("sample {i} gives a non-positive type-I ratio"),
        });
    }
    let c0 = ratios.iter().copied().fold(0.0, f64::max);
    let monotone_envelope = ratios.windows(2).all(|w| w[1] >= w[0]);
    Ok(TypeOneReport {
        times,
        ratios,
        c0,
        monotone_envelope,
    })
}

/// `max |A| / λ(t)` along a trace. On rescaled traces the recorded
/// `max |Ã| = max |A| / λ` is the ratio itself.
pub fn type_one_ratio(trace: &FlowTrace) -> Result<TypeOneReport> {
    let samples = trace
        .records()
        .iter()
        .map(|r| {
            let lambda = match trace.gauge() {
                Gauge::Physical => trace.lambda(r)?,
                Gauge::Rescaled => 1.0,
            };
            Ok((trace.physical_time(r), r.max_a, lambda))
        })
        .collect::<Result<Vec<_>>>()?;
    type_one_ratio_samples(&samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappingReport {
    /// `Λ = max{C₀, sup |F̃|}` at the earliest record.
    pub lambda_bound: f64,
    pub max_sup_f: f64,
    /// Some record has `sup |F̃| > 2Λ`.
    pub violated: bool,
    /// Some record has `sup |F̃|` above twice `max{C₀, sup |F̃|}` of a later
    /// record, i.e. the bound fails with the reference slice taken later.
    pub violated_any_reference: bool,
}

/// Checks the trapping ball `B_{2Λ}(0)` along a trace whose recorded
/// `sup |F̃|` refers to the rescaled surface. `c0` bounds `|H̃|`.
pub fn trapping_bound(trace: &FlowTrace, c0: f64) -> Result<TrappingReport> {
    let sups: Vec<f64> = trace.records().iter().map(|r| r.sup_f).collect();
    trapping_bound_samples(&sups, c0)
}

pub fn trapping_bound_samples(sup_f: &[f64], c0: f64) -> Result<TrappingReport> {
    let first = *sup_f.first().ok_or(Error::EmptyTrace)?;
    let lambda_bound = c0.max(first);
    let max_sup_f = sup_f.iter().copied().fold(0.0, f64::max);
    // running max of earlier slices against each later reference
    let mut earlier_max = 0.0f64;
    let mut violated_any_reference = false;
    for &s in sup_f {
        earlier_max = earlier_max.max(s);
        if earlier_max > 2.0 * c0.max(s) {
            violated_any_reference = true;
        }
    }
    Ok(TrappingReport {
        lambda_bound,
        max_sup_f,
        violated: max_sup_f > 2.0 * lambda_bound,
        violated_any_reference,
    })
}

/// Type-I constant for `|H̃|` along a trace: `√2 · max |Ã|`.
pub fn mean_curvature_bound(trace: &FlowTrace) -> Result<f64> {
    let report = type_one_ratio(trace)?;
    Ok(std::f64::consts::SQRT_2 * report.c0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_flows::{cylinder_radius, sphere_radius};
    use crate::huisken::GaugeMap;

    #[test]
    fn exact_flows_have_unit_ratio() {
        let g = GaugeMap::default();
        let times: Vec<f64> = (0..20).map(|k| -(10f64).powf(-3.0 + 3.0 * k as f64 / 19.0)).collect();
        let sphere: Vec<(f64, f64, f64)> = times
            .iter()
            .map(|&t| (t, std::f64::consts::SQRT_2 / sphere_radius(t).unwrap(), g.lambda(t).unwrap()))
            .collect();
        let cyl: Vec<(f64, f64, f64)> = times
            .iter()
            .map(|&t| (t, 1.0 / cylinder_radius(t).unwrap(), g.lambda(t).unwrap()))
            .collect();
        for s in [sphere, cyl] {
            let r = type_one_ratio_samples(&s).unwrap();
            assert!(r.ratios.iter().all(|x| (x - 1.0).abs() < 1e-14));
            assert!((r.c0 - 1.0).abs() < 1e-14);
        }
        assert!(matches!(type_one_ratio_samples(&[]), Err(Error::EmptyTrace)));
    }

    #[test]
    fn trapping_detector() {
        let stationary = vec![std::f64::consts::SQRT_2; 10];
        let r = trapping_bound_samples(&stationary, 2.0).unwrap();
        assert_eq!(r.lambda_bound, 2.0);
        assert!(!r.violated && !r.violated_any_reference);
        let mut injected = stationary.clone();
        injected[5] = 3.0 * 2.0;
        let r = trapping_bound_samples(&injected, 2.0).unwrap();
        assert!(r.violated);
        assert!(trapping_bound_samples(&[], 1.0).is_err());
    }
}
