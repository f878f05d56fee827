//! M1 with its material parameters known and frozen is a linear system in
//! `[d, ḋ]`; the EKF must then coincide with a textbook Kalman filter,
//! written here from scratch on plain arrays.

use nalgebra::{Matrix4, Vector4};
use palpation::contact::{ContactLaw, KvParams};
use palpation::estimator::{run_filter, FilterConfig, ModelVariant, StateVector, VariantTag};
use palpation::plant::{simulate, PlantConfig, TraceSample};

struct LinearKf {
    x: [f64; 2],
    p: [[f64; 2]; 2],
}

impl LinearKf {
    /// `x' = A x + B u` with `A = [[1, dt], [-dt k/m, 1 - dt c/m]]`,
    /// `B = [0, dt/m]`, process noise `diag(q1, q2)`.
    #[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
    fn predict(&mut self, u: f64, k: f64, c: f64, m: f64, dt: f64, q1: f64, q2: f64) {
        let a = [[1.0, dt], [-dt * k / m, 1.0 - dt * c / m]];
        let x = [
            a[0][0] * self.x[0] + a[0][1] * self.x[1],
            a[1][0] * self.x[0] + a[1][1] * self.x[1] + dt / m * u,
        ];
        let mut ap = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                ap[i][j] = a[i][0] * self.p[0][j] + a[i][1] * self.p[1][j];
            }
        }
        let mut p = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] = ap[i][0] * a[j][0] + ap[i][1] * a[j][1];
            }
        }
        p[0][0] += q1;
        p[1][1] += q2;
        self.x = x;
        self.p = p;
    }

    /// Scalar measurement of the velocity state.
    #[allow(clippy::needless_range_loop)]
    fn correct(&mut self, z: f64, r: f64) {
        let s = self.p[1][1] + r;
        let gain = [self.p[0][1] / s, self.p[1][1] / s];
        let innovation = z - self.x[1];
        self.x[0] += gain[0] * innovation;
        self.x[1] += gain[1] * innovation;
        let p = self.p;
        for j in 0..2 {
            self.p[0][j] = p[0][j] - gain[0] * p[1][j];
            self.p[1][j] = p[1][j] - gain[1] * p[1][j];
        }
    }
}

fn trace() -> (PlantConfig, Vec<TraceSample>) {
    let cfg = PlantConfig::for_law(ContactLaw::Kv(KvParams { k_m: 2.03, c_m: 0.093 }));
    let trace = simulate(&cfg, 4999.0 / cfg.sample_rate).unwrap();
    assert_eq!(trace.len(), 5000);
    (cfg, trace)
}

/// Runs frozen M1 and the oracle side by side over a 5000-sample KV trace
/// and returns the largest state or covariance deviation. Panics if the
/// parameters or their covariance move.
pub fn frozen_m1_deviation() -> f64 {
    let (plant, trace) = trace();
    let (k, c) = (2.03, 0.093);
    let (q1, q2, r) = (1e-8, 1e-2, 0.01);
    let cfg = FilterConfig {
        dt: 1.0 / plant.sample_rate,
        q: Matrix4::from_diagonal(&Vector4::new(q1, q2, 0.0, 0.0)),
        r_meas: r,
        x0: StateVector::new(1.0, 1.0, k, c),
        p0: Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 0.0, 0.0)),
        ..FilterConfig::default()
    };
    let variant = ModelVariant {
        tag: VariantTag::M1,
        controller_mode: plant.controller_mode,
        gains: plant.gains,
        m_i: plant.m_i,
    };
    let ekf = run_filter(&trace, &variant, &cfg).unwrap();

    let mut kf = LinearKf { x: [1.0, 1.0], p: [[1.0, 0.0], [0.0, 1.0]] };
    let mut worst = 0.0f64;
    for (i, s) in trace.iter().enumerate() {
        if i > 0 {
            kf.predict(trace[i - 1].f_ft_meas, k, c, plant.m_i, cfg.dt, q1, q2);
        }
        kf.correct(-s.z_ee_dot_meas, r);
        let b = &ekf[i].1;
        assert!(kf.x[0] > 0.0, "oracle left contact at sample {i}");
        for a in 0..2 {
            worst = worst.max((b.x_hat[a] - kf.x[a]).abs());
            for bb in 0..2 {
                worst = worst.max((b.p[(a, bb)] - kf.p[a][bb]).abs());
            }
        }
        assert_eq!((b.x_hat[2], b.x_hat[3]), (k, c), "parameters moved at sample {i}");
        for a in 0..4 {
            for bb in 2..4 {
                assert_eq!(b.p[(a, bb)], 0.0);
            }
        }
    }
    worst
}
