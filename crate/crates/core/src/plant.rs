//! Ground-truth simulator: a spherical indenter of mass `m_I` held by a
//! Cartesian impedance controller against a viscoelastic half-space.
//!
//! The contact axis `z` points from the soft body toward the robot, the
//! undeformed surface sits at `surface_z` and penetration is
//! `d = surface_z − z_ee`, so `ż_ee = −ḋ` while in contact. Pressing means
//! commanding `z_d` below the current end-effector position.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::contact::{ContactLaw, DrmParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid plant configuration: {0}")]
    InvalidConfig(String),
    #[error("loss of contact at t = {t} s (d = {d} mm)")]
    LossOfContact { t: f64, d: f64 },
    #[error("non-finite state at t = {t} s; dt_sim is probably too large")]
    NonFinite { t: f64 },
}

/// Contact-direction entries of the impedance controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains {
    /// Apparent inertia Λ₃₃ [N·s²/mm].
    pub lambda33: f64,
    /// Damping D₃₃ [N·s/mm].
    pub d33: f64,
    /// Stiffness K₃₃ [N/mm].
    pub k33: f64,
}

impl ImpedanceGains {
    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.lambda33 >= 0.0) || !(self.d33 >= 0.0) || !(self.k33 > 0.0) {
            return Err(PlantError::InvalidConfig(format!(
                "impedance gains need Lambda33 >= 0, D33 >= 0, K33 > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which control law the robot actually renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerMode {
    /// Impedance law including the apparent inertia term.
    Full,
    /// Acceleration term dropped; only the indenter mass is accelerated.
    Simplified,
}

impl ControllerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::Full => "FULL",
            ControllerMode::Simplified => "SIMPLIFIED",
        }
    }
}

/// Two-tone sinusoidal desired position `z0 + z1·sin(2π f1 t) + z2·sin(2π f2 t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Desired position and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredState {
    pub z: f64,
    pub z_dot: f64,
    pub z_ddot: f64,
}

impl Trajectory {
    /// Offset chosen so that, with the sinusoids switched off, the indenter
    /// rests at penetration `d_mean` under `law`.
    pub fn centered(
        law: &ContactLaw,
        gains: &ImpedanceGains,
        surface_z: f64,
        d_mean: f64,
        z1: f64,
        z2: f64,
    ) -> Self {
        Self {
            z0: equilibrium_z_d(law, gains, surface_z, d_mean),
            z1,
            z2,
            f1: 2.0,
            f2: 4.0,
        }
    }
}

/// Desired position that holds the indenter statically at penetration `d`.
pub fn equilibrium_z_d(law: &ContactLaw, gains: &ImpedanceGains, surface_z: f64, d: f64) -> f64 {
    surface_z - d - law.force(d, 0.0) / gains.k33
}

pub fn desired_trajectory(traj: &Trajectory, t: f64) -> DesiredState {
    let w1 = TAU * traj.f1;
    let w2 = TAU * traj.f2;
    let (s1, c1) = (w1 * t).sin_cos();
    let (s2, c2) = (w2 * t).sin_cos();
    DesiredState {
        z: traj.z0 + traj.z1 * s1 + traj.z2 * s2,
        z_dot: traj.z1 * w1 * c1 + traj.z2 * w2 * c2,
        z_ddot: -traj.z1 * w1 * w1 * s1 - traj.z2 * w2 * w2 * s2,
    }
}

/// Seeded additive Gaussian noise on the measured channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Velocity noise standard deviation [mm/s].
    pub sigma_vel: f64,
    /// Force noise standard deviation [N].
    pub sigma_force: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            sigma_vel: 0.0,
            sigma_force: 0.0,
            seed: 0,
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            sigma_vel: 0.05,
            sigma_force: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    /// Indenter mass m_I [N·s²/mm].
    pub m_i: f64,
    pub gains: ImpedanceGains,
    pub trajectory: Trajectory,
    pub truth_model: ContactLaw,
    pub controller_mode: ControllerMode,
    /// Undeformed surface height [mm].
    pub surface_z: f64,
    /// RK4 step upper bound [s].
    pub dt_sim: f64,
    /// Output sample rate [Hz].
    pub sample_rate: f64,
    pub noise: NoiseSpec,
    /// Initial penetration [mm].
    pub d0: f64,
    /// Initial penetration rate [mm/s].
    pub d_dot0: f64,
}

/// Mean penetration the default trajectories are centred on [mm].
pub const DEFAULT_MEAN_PENETRATION: f64 = 3.0;

impl PlantConfig {
    /// Default rig pressing into a material described by `law`, with the
    /// desired trajectory centred on [`DEFAULT_MEAN_PENETRATION`].
    pub fn for_law(law: ContactLaw) -> Self {
        let m_i = 1e-3;
        let gains = ImpedanceGains {
            lambda33: 10.0 * m_i,
            d33: 0.02,
            k33: 0.5,
        };
        let surface_z = 0.0;
        let trajectory = Trajectory::centered(
            &law,
            &gains,
            surface_z,
            DEFAULT_MEAN_PENETRATION,
            1.0,
            0.5,
        );
        Self {
            m_i,
            gains,
            trajectory,
            truth_model: law,
            controller_mode: ControllerMode::Full,
            surface_z,
            dt_sim: 1e-4,
            sample_rate: 500.0,
            noise: NoiseSpec::default(),
            d0: DEFAULT_MEAN_PENETRATION,
            d_dot0: 0.0,
        }
    }

    /// Re-centres the trajectory offset on `d_mean` for the current law and
    /// gains, and starts the run at rest there.
    pub fn recenter(&mut self, d_mean: f64) {
        self.trajectory.z0 = equilibrium_z_d(&self.truth_model, &self.gains, self.surface_z, d_mean);
        self.d0 = d_mean;
        self.d_dot0 = 0.0;
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        self.gains.validate()?;
        let bad = |msg: String| Err(PlantError::InvalidConfig(msg));
        if !(self.m_i > 0.0) {
            return bad(format!("m_I must be positive, got {}", self.m_i));
        }
        if !(self.dt_sim > 0.0) {
            return bad(format!("dt_sim must be positive, got {}", self.dt_sim));
        }
        if !(self.sample_rate > 0.0) {
            return bad(format!("sample_rate must be positive, got {}", self.sample_rate));
        }
        if self.sample_rate * self.dt_sim > 1.0 + 1e-12 {
            return bad(format!(
                "sample_rate * dt_sim must be <= 1 (got {} * {})",
                self.sample_rate, self.dt_sim
            ));
        }
        if !(self.trajectory.f1 > 0.0) || !(self.trajectory.f2 > 0.0) {
            return bad("trajectory frequencies must be positive".into());
        }
        if !(self.noise.sigma_vel >= 0.0) || !(self.noise.sigma_force >= 0.0) {
            return bad("noise standard deviations must be non-negative".into());
        }
        if !(self.d0 >= 0.0) {
            return bad(format!("initial penetration must be in contact (d0 >= 0), got {}", self.d0));
        }
        Ok(())
    }
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self::for_law(ContactLaw::Drm(DrmParams {
            kappa: 0.742,
            lambda: 0.038,
        }))
    }
}

/// One sampled record of the simulated rig.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub z_d: f64,
    pub z_d_dot: f64,
    pub z_d_ddot: f64,
    /// True end-effector position [mm].
    pub z_ee: f64,
    /// Measured (noisy) end-effector velocity [mm/s].
    pub z_ee_dot_meas: f64,
    pub d_true: f64,
    pub d_dot_true: f64,
    /// Force exerted by the material [N].
    pub f_contact_true: f64,
    /// Simulated F/T sensor reading (material force plus indenter inertia) [N].
    pub f_ft_meas: f64,
}

impl TraceSample {
    /// Position error `z̃ = z_d − z_ee`.
    pub fn z_tilde(&self) -> f64 {
        self.z_d - self.z_ee
    }
}

/// Penetration acceleration for given desired motion and position error.
fn accel_from_error(cfg: &PlantConfig, des: &DesiredState, z_tilde: f64, d: f64, d_dot: f64) -> f64 {
    let g = &cfg.gains;
    let material = cfg.truth_model.force(d, d_dot);
    match cfg.controller_mode {
        ControllerMode::Full => {
            -(g.lambda33 * des.z_ddot + g.d33 * des.z_dot + g.k33 * z_tilde + g.d33 * d_dot + material)
                / (cfg.m_i + g.lambda33)
        }
        ControllerMode::Simplified => {
            -(g.d33 * des.z_dot + g.k33 * z_tilde + g.d33 * d_dot + material) / cfg.m_i
        }
    }
}

fn accel_unchecked(cfg: &PlantConfig, d: f64, d_dot: f64, t: f64) -> f64 {
    let des = desired_trajectory(&cfg.trajectory, t);
    let z_tilde = des.z - (cfg.surface_z - d);
    accel_from_error(cfg, &des, z_tilde, d, d_dot)
}

/// Penetration acceleration `d̈` of the in-contact rig at time `t`.
pub fn contact_accel(cfg: &PlantConfig, d: f64, d_dot: f64, t: f64) -> Result<f64, PlantError> {
    if d < 0.0 {
        return Err(PlantError::LossOfContact { t, d });
    }
    Ok(accel_unchecked(cfg, d, d_dot, t))
}

fn rk4_step(cfg: &PlantConfig, t: f64, h: f64, d: f64, v: f64) -> (f64, f64) {
    let a1 = accel_unchecked(cfg, d, v, t);
    let (d2, v2) = (d + 0.5 * h * v, v + 0.5 * h * a1);
    let a2 = accel_unchecked(cfg, d2, v2, t + 0.5 * h);
    let (d3, v3) = (d + 0.5 * h * v2, v + 0.5 * h * a2);
    let a3 = accel_unchecked(cfg, d3, v3, t + 0.5 * h);
    let (d4, v4) = (d + h * v3, v + h * a3);
    let a4 = accel_unchecked(cfg, d4, v4, t + h);
    (
        d + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
        v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
    )
}

fn sample_at(cfg: &PlantConfig, t: f64, d: f64, d_dot: f64) -> Result<TraceSample, PlantError> {
    let des = desired_trajectory(&cfg.trajectory, t);
    let accel = contact_accel(cfg, d, d_dot, t)?;
    let f_contact = cfg.truth_model.force(d, d_dot);
    Ok(TraceSample {
        t,
        z_d: des.z,
        z_d_dot: des.z_dot,
        z_d_ddot: des.z_ddot,
        z_ee: cfg.surface_z - d,
        z_ee_dot_meas: -d_dot,
        d_true: d,
        d_dot_true: d_dot,
        f_contact_true: f_contact,
        f_ft_meas: f_contact + cfg.m_i * accel,
    })
}

/// Integrates the rig for `duration` seconds with fixed-step RK4 and samples
/// it at `cfg.sample_rate`, then applies `cfg.noise` to the measured columns.
///
/// Each sample interval is split into the fewest equal RK4 steps no longer
/// than `cfg.dt_sim`, so sample times are exact multiples of the period.
pub fn simulate(cfg: &PlantConfig, duration: f64) -> Result<Vec<TraceSample>, PlantError> {
    let clean = simulate_noise_free(cfg, duration)?;
    Ok(add_noise(&clean, &cfg.noise))
}

/// [`simulate`] without the measurement-noise pass.
pub fn simulate_noise_free(cfg: &PlantConfig, duration: f64) -> Result<Vec<TraceSample>, PlantError> {
    cfg.validate()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(PlantError::InvalidConfig(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let period = 1.0 / cfg.sample_rate;
    let n_intervals = (duration * cfg.sample_rate + 1e-9).floor() as usize;
    let substeps = ((period / cfg.dt_sim) - 1e-9).ceil().max(1.0) as usize;
    let h = period / substeps as f64;

    let mut out = Vec::with_capacity(n_intervals + 1);
    let (mut d, mut v) = (cfg.d0, cfg.d_dot0);
    out.push(sample_at(cfg, 0.0, d, v)?);
    for k in 0..n_intervals {
        let t0 = k as f64 * period;
        for j in 0..substeps {
            let t = t0 + j as f64 * h;
            (d, v) = rk4_step(cfg, t, h, d, v);
            if !d.is_finite() || !v.is_finite() {
                return Err(PlantError::NonFinite { t: t + h });
            }
            if d < 0.0 {
                return Err(PlantError::LossOfContact { t: t + h, d });
            }
        }
        let t = (k + 1) as f64 / cfg.sample_rate;
        out.push(sample_at(cfg, t, d, v)?);
    }
    Ok(out)
}

/// Perturbs the measured velocity and force columns of a noise-free trace
/// with seeded white Gaussian noise. Truth columns are left untouched.
pub fn add_noise(trace: &[TraceSample], noise: &NoiseSpec) -> Vec<TraceSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    trace
        .iter()
        .map(|s| {
            let nv: f64 = StandardNormal.sample(&mut rng);
            let nf: f64 = StandardNormal.sample(&mut rng);
            TraceSample {
                z_ee_dot_meas: s.z_ee_dot_meas + noise.sigma_vel * nv,
                f_ft_meas: s.f_ft_meas + noise.sigma_force * nf,
                ..*s
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::KvParams;
    use std::f64::consts::PI;

    fn kv_cfg(k: f64, c: f64) -> PlantConfig {
        PlantConfig::for_law(ContactLaw::Kv(KvParams { k_m: k, c_m: c }))
    }

    #[test]
    fn trajectory_examples() {
        let constant = Trajectory { z0: 5.0, z1: 0.0, z2: 0.0, f1: 2.0, f2: 4.0 };
        assert_eq!(
            desired_trajectory(&constant, 3.0),
            DesiredState { z: 5.0, z_dot: 0.0, z_ddot: 0.0 }
        );

        let single = Trajectory { z0: 0.0, z1: 1.0, z2: 0.0, f1: 2.0, f2: 4.0 };
        let s = desired_trajectory(&single, 0.0);
        assert_eq!(s.z, 0.0);
        assert!((s.z_dot - 4.0 * PI).abs() < 1e-12);
        assert_eq!(s.z_ddot, 0.0);

        let two = Trajectory { z0: 0.0, z1: 1.0, z2: 0.5, f1: 2.0, f2: 4.0 };
        assert!((desired_trajectory(&two, 0.125).z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_derivatives_match_finite_differences() {
        let traj = Trajectory { z0: -4.0, z1: 1.0, z2: 0.5, f1: 2.0, f2: 4.0 };
        let h = 1e-6;
        for &t in &[0.0, 0.1, 0.37, 1.9] {
            let s = desired_trajectory(&traj, t + h);
            let m = desired_trajectory(&traj, t - h);
            let c = desired_trajectory(&traj, t);
            assert!(((s.z - m.z) / (2.0 * h) - c.z_dot).abs() < 1e-5);
            assert!(((s.z_dot - m.z_dot) / (2.0 * h) - c.z_ddot).abs() < 1e-3);
        }
    }

    #[test]
    fn accel_hand_example() {
        let mut cfg = kv_cfg(0.0, 0.0);
        cfg.m_i = 0.001;
        cfg.gains = ImpedanceGains { lambda33: 0.0, d33: 0.0, k33: 1.0 };
        cfg.surface_z = 0.0;
        cfg.trajectory = Trajectory { z0: 1.0, z1: 0.0, z2: 0.0, f1: 2.0, f2: 4.0 };
        let a = contact_accel(&cfg, 0.0, 0.0, 0.0).unwrap();
        assert!((a + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn accel_zero_at_static_equilibrium() {
        let mut cfg = PlantConfig::default();
        cfg.trajectory.z1 = 0.0;
        cfg.trajectory.z2 = 0.0;
        cfg.recenter(2.5);
        let a = contact_accel(&cfg, 2.5, 0.0, 0.7).unwrap();
        assert!(a.abs() < 1e-9, "{a}");
    }

    #[test]
    fn modes_coincide_without_apparent_inertia() {
        let mut full = PlantConfig::default();
        full.gains.lambda33 = 0.0;
        let mut simple = full.clone();
        simple.controller_mode = ControllerMode::Simplified;
        for &t in &[0.0, 0.05, 0.21] {
            assert_eq!(
                contact_accel(&full, 3.1, 0.4, t).unwrap(),
                contact_accel(&simple, 3.1, 0.4, t).unwrap()
            );
        }
    }

    #[test]
    fn accel_rejects_out_of_contact() {
        let cfg = PlantConfig::default();
        assert!(matches!(
            contact_accel(&cfg, -0.01, 0.0, 1.0),
            Err(PlantError::LossOfContact { .. })
        ));
    }

    #[test]
    fn equilibrium_run_stays_put() {
        let mut cfg = PlantConfig::default();
        cfg.trajectory.z1 = 0.0;
        cfg.trajectory.z2 = 0.0;
        cfg.noise = NoiseSpec::none();
        cfg.recenter(3.0);
        let trace = simulate(&cfg, 2.0).unwrap();
        assert_eq!(trace.len(), 1001);
        for s in &trace {
            assert!((s.d_true - 3.0).abs() < 1e-9);
            assert!(s.d_dot_true.abs() < 1e-9);
        }
    }

    #[test]
    fn truth_columns_are_consistent() {
        let cfg = PlantConfig::default();
        let trace = simulate(&cfg, 1.0).unwrap();
        for s in &trace {
            assert_eq!(s.z_ee, cfg.surface_z - s.d_true);
            assert!(s.z_tilde().is_finite());
        }
    }

    #[test]
    fn lost_contact_is_reported_with_time() {
        let mut cfg = PlantConfig::default();
        cfg.trajectory.z1 = 12.0;
        match simulate(&cfg, 3.0) {
            Err(PlantError::LossOfContact { t, .. }) => assert!(t > 0.0 && t < 3.0),
            other => panic!("expected loss of contact, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = PlantConfig::default();
        cfg.sample_rate = 20_000.0;
        assert!(simulate(&cfg, 1.0).is_err());
        let mut cfg = PlantConfig::default();
        cfg.d0 = -1.0;
        assert!(simulate(&cfg, 1.0).is_err());
        assert!(simulate(&PlantConfig::default(), 0.0).is_err());
        let mut cfg = PlantConfig::default();
        cfg.gains.k33 = 0.0;
        assert!(simulate(&cfg, 1.0).is_err());
    }

    #[test]
    fn zero_noise_leaves_measured_columns_exact() {
        let mut cfg = PlantConfig::default();
        cfg.noise = NoiseSpec::none();
        let trace = simulate(&cfg, 0.5).unwrap();
        for s in &trace {
            assert_eq!(s.z_ee_dot_meas, -s.d_dot_true);
            let accel = contact_accel(&cfg, s.d_true, s.d_dot_true, s.t).unwrap();
            assert_eq!(s.f_ft_meas, s.f_contact_true + cfg.m_i * accel);
        }
    }

    #[test]
    fn noise_is_seeded() {
        let cfg = PlantConfig::default();
        let a = simulate(&cfg, 0.5).unwrap();
        let b = simulate(&cfg, 0.5).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.noise.seed = 99;
        let c = simulate(&other, 0.5).unwrap();
        assert_ne!(a, c);
        for (x, y) in a.iter().zip(&c) {
            assert_eq!(x.d_true, y.d_true);
        }
    }

    #[test]
    fn velocity_noise_has_requested_spread() {
        let template = TraceSample {
            t: 0.0, z_d: 0.0, z_d_dot: 0.0, z_d_ddot: 0.0, z_ee: 0.0,
            z_ee_dot_meas: -1.5, d_true: 1.0, d_dot_true: 1.5,
            f_contact_true: 0.0, f_ft_meas: 0.0,
        };
        let clean = vec![template; 100_000];
        let noisy = add_noise(&clean, &NoiseSpec { sigma_vel: 0.1, sigma_force: 0.0, seed: 3 });
        let n = noisy.len() as f64;
        let resid: Vec<f64> = noisy.iter().map(|s| s.z_ee_dot_meas + s.d_dot_true).collect();
        let mean = resid.iter().sum::<f64>() / n;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.1).abs() < 0.002, "std {}", var.sqrt());
        assert!(noisy.iter().all(|s| s.f_ft_meas == 0.0));
    }
}
