use approx::assert_relative_eq;
use mcf_core::analysis::{
    graph_distance, noncollapsing_alpha, noncollapsing_alpha_brute_force, type_one_ratio_samples, GraphOrder,
};
use mcf_core::geometry::{build_icosphere, Gauge, Mesh, ModelSurface, Vec3};
use mcf_core::huisken::{energy_e, energy_etilde, GaugeMap};
use mcf_core::model_flows::sphere_radius;
use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;

fn rescaled_sphere(radius: f64, subdivisions: u32) -> Mesh {
    let mut m = build_icosphere(radius, Vec3::zeros(), subdivisions).unwrap();
    m.gauge = Gauge::Rescaled;
    m
}

fn unit(v: (f64, f64, f64)) -> Option<Unit<Vec3>> {
    Unit::try_new(Vec3::new(v.0, v.1, v.2), 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn etilde_is_rotation_invariant(
        axis in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        angle in 0.0f64..std::f64::consts::TAU,
        radius in 0.8f64..2.5,
    ) {
        let Some(axis) = unit(axis) else { return Ok(()) };
        let m = rescaled_sphere(radius, 2);
        let rot = Rotation3::from_axis_angle(&axis, angle);
        let r = Mesh::new(m.vertices.iter().map(|v| rot * v).collect(), m.faces().to_vec(), Gauge::Rescaled).unwrap();
        let (a, b) = (energy_etilde(&m).unwrap(), energy_etilde(&r).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a, "{} vs {}", a, b);
    }

    #[test]
    fn physical_and_rescaled_energies_agree(
        t0 in -0.5f64..0.5,
        tau in 0.05f64..2.0,
        x0 in (-0.5f64..0.5, -0.5f64..0.5, -0.5f64..0.5),
    ) {
        let base = Vec3::new(x0.0, x0.1, x0.2);
        let map = GaugeMap::new(base, t0);
        let t = t0 - tau;
        let physical = build_icosphere(1.3, base * 0.5, 2).unwrap();
        let e = energy_e(&physical, t, &base, t0).unwrap();
        let et = energy_etilde(&map.rescale_surface(&physical, t).unwrap()).unwrap();
        prop_assert!((et - std::f64::consts::TAU * e).abs() <= 1e-10 * et.max(1e-300));
    }

    #[test]
    fn rescaling_round_trips(t in -3.0f64..-0.01, t0 in -0.2f64..0.2) {
        let map = GaugeMap::new(Vec3::new(0.1, -0.2, 0.3), t0);
        let t = t + t0;
        let m = build_icosphere(1.0, Vec3::zeros(), 1).unwrap();
        let s = map.s_of_t(t).unwrap();
        let back = map.unrescale_surface(&map.rescale_surface(&m, t).unwrap(), s).unwrap();
        for (a, b) in m.vertices.iter().zip(&back.vertices) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        prop_assert!(map.identity_residual(t).unwrap() < 1e-14);
    }

    #[test]
    fn type_one_ratio_is_unit_for_any_singular_time(
        t_sing in -1.0f64..1.0,
        offsets in prop::collection::vec(1e-4f64..10.0, 1..20),
    ) {
        // the sphere of radius √(−4(t − T)) becomes extinct at T
        let map = GaugeMap::new(Vec3::zeros(), t_sing);
        let samples: Vec<(f64, f64, f64)> = offsets
            .iter()
            .map(|&d| {
                let t = t_sing - d;
                let a = std::f64::consts::SQRT_2 / sphere_radius(-d).unwrap();
                (t, a, map.lambda(t).unwrap())
            })
            .collect();
        let report = type_one_ratio_samples(&samples).unwrap();
        for r in &report.ratios {
            prop_assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_samples_have_zero_graph_distance(radius in 0.5f64..3.0, sub in 1usize..4) {
        let model = ModelSurface::sphere(Vec3::zeros(), radius).unwrap();
        let mesh = model.sample_mesh(0.0, sub).unwrap();
        let report = graph_distance(&mesh, &model, 2.0 * radius, GraphOrder::C0).unwrap();
        prop_assert!(report.c0 < 1e-12 * radius);
    }

    #[test]
    fn hash_search_matches_brute_force(
        noise in prop::collection::vec(-1.0f64..1.0, 162),
        radius in 0.5f64..2.0,
    ) {
        let m = build_icosphere(radius, Vec3::zeros(), 2).unwrap();
        let scale = 0.02 * m.min_edge_length();
        let vertices = m
            .vertices
            .iter()
            .zip(&noise)
            .map(|(v, e)| v * (1.0 + scale * e / radius))
            .collect();
        let mut p = Mesh::new(vertices, m.faces().to_vec(), Gauge::Physical).unwrap();
        p.compute_geometry().unwrap();
        let fast = noncollapsing_alpha(&p).unwrap();
        let slow = noncollapsing_alpha_brute_force(&p).unwrap();
        prop_assert_eq!(fast.inner, slow.inner);
        prop_assert_eq!(fast.outer, slow.outer);
        prop_assert_eq!(fast.global_alpha, slow.global_alpha);
    }
}

#[test]
fn sampled_sphere_energy_converges_to_closed_form() {
    let exact = mcf_core::huisken::e_sphere();
    let errs: Vec<f64> = (2..5)
        .map(|sub| (energy_etilde(&rescaled_sphere(std::f64::consts::SQRT_2, sub)).unwrap() - exact).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert_relative_eq!(errs[2] / exact, 0.0, epsilon = 1e-3);
}
