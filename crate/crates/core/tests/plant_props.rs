use palpation::contact::{ContactLaw, DrmParams, KvParams};
use palpation::plant::{simulate, simulate_noise_free, NoiseSpec, PlantConfig, TraceSample};
use proptest::prelude::*;

fn drm_cfg(kappa: f64, lambda: f64) -> PlantConfig {
    PlantConfig::for_law(ContactLaw::Drm(DrmParams { kappa, lambda }))
}

fn mean_d(trace: &[TraceSample], from: f64) -> f64 {
    let tail: Vec<f64> = trace.iter().filter(|s| s.t >= from).map(|s| s.d_true).collect();
    tail.iter().sum::<f64>() / tail.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulation_is_a_pure_function_of_its_config(
        kappa in 0.5..2.5f64, lambda in 0.01..0.1f64, seed in any::<u64>(),
    ) {
        let mut cfg = drm_cfg(kappa, lambda);
        cfg.noise.seed = seed;
        let a = simulate(&cfg, 0.5).unwrap();
        let b = simulate(&cfg, 0.5).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Lowering the desired position (pressing further into the body) gives a
    /// deeper steady-state penetration.
    #[test]
    fn lower_set_point_presses_deeper(kappa in 0.5..2.5f64, lambda in 0.01..0.1f64, shift in 0.05..1.0f64) {
        let mut cfg = drm_cfg(kappa, lambda);
        cfg.trajectory.z1 = 0.0;
        cfg.trajectory.z2 = 0.0;
        cfg.noise = NoiseSpec::none();
        let shallow = simulate(&cfg, 2.0).unwrap();
        cfg.trajectory.z0 -= shift;
        let deep = simulate(&cfg, 2.0).unwrap();
        prop_assert!(mean_d(&deep, 1.5) > mean_d(&shallow, 1.5));
    }

    /// The material's damping term only ever removes energy over a full
    /// period of the excitation.
    #[test]
    fn material_damping_dissipates(
        kv in any::<bool>(), stiff in 0.5..4.0f64, damp in 0.01..0.15f64,
    ) {
        let law = if kv {
            ContactLaw::Kv(KvParams { k_m: stiff, c_m: damp })
        } else {
            ContactLaw::Drm(DrmParams { kappa: stiff / 2.0, lambda: damp / 2.0 })
        };
        let mut cfg = PlantConfig::for_law(law);
        cfg.noise = NoiseSpec::none();
        let trace = simulate_noise_free(&cfg, 3.0).unwrap();
        // The two tones share a 0.5 s period; integrate [2, 2.5] s by trapezoids.
        let window: Vec<&TraceSample> = trace.iter().filter(|s| s.t >= 2.0 - 1e-9 && s.t <= 2.5 + 1e-9).collect();
        let power = |s: &TraceSample| law.damping_force(s.d_true, s.d_dot_true) * s.d_dot_true;
        let work: f64 = window.windows(2).map(|w| 0.5 * (power(w[0]) + power(w[1])) * (w[1].t - w[0].t)).sum();
        prop_assert!(work >= -1e-9, "damping work {work}");
    }
}

#[test]
fn noise_free_measurements_follow_the_truth() {
    let mut cfg = drm_cfg(0.742, 0.038);
    cfg.noise = NoiseSpec::none();
    for s in simulate(&cfg, 1.0).unwrap() {
        assert_eq!(s.z_ee_dot_meas, -s.d_dot_true);
        assert_eq!(s.z_ee, cfg.surface_z - s.d_true);
    }
}
