//! Discrete process models M1–M4 and their analytic Jacobians.
//!
//! The state is `[d, ḋ, stiffness, damping]`. M1/M3 are driven by the F/T
//! force reading; M2/M4 replace the sensor with the impedance controller's
//! own quantities. M1/M2 use the Kelvin-Voigt law, M3/M4 the
//! dimensionality-reduction law.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, Matrix4x2, Vector4};

use super::FilterError;
use crate::contact::ModelKind;
use crate::plant::{ControllerMode, ImpedanceGains};

/// `[d, ḋ, stiffness, damping]`.
pub type StateVector = Vector4<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VariantTag {
    /// Kelvin-Voigt, force sensor.
    M1,
    /// Kelvin-Voigt, impedance controller.
    M2,
    /// Dimensionality reduction, force sensor.
    M3,
    /// Dimensionality reduction, impedance controller.
    M4,
}

impl VariantTag {
    pub const ALL: [VariantTag; 4] = [VariantTag::M1, VariantTag::M2, VariantTag::M3, VariantTag::M4];

    pub fn law(self) -> ModelKind {
        match self {
            VariantTag::M1 | VariantTag::M2 => ModelKind::Kv,
            VariantTag::M3 | VariantTag::M4 => ModelKind::Drm,
        }
    }

    /// True for the variants that need no force sensor.
    pub fn is_sensorless(self) -> bool {
        matches!(self, VariantTag::M2 | VariantTag::M4)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariantTag::M1 => "M1",
            VariantTag::M2 => "M2",
            VariantTag::M3 => "M3",
            VariantTag::M4 => "M4",
        }
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" => Ok(VariantTag::M1),
            "M2" => Ok(VariantTag::M2),
            "M3" => Ok(VariantTag::M3),
            "M4" => Ok(VariantTag::M4),
            other => Err(format!("unknown model variant '{other}' (expected M1..M4)")),
        }
    }
}

/// A process model together with the rig constants it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelVariant {
    pub tag: VariantTag,
    /// Only read by M2/M4.
    pub controller_mode: ControllerMode,
    /// Only read by M2/M4; Λ₃₃ enters through the input vector.
    pub gains: ImpedanceGains,
    pub m_i: f64,
}

/// Source of the position error `z̃` fed to the sensorless models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZTilde {
    /// `z_d − z_ee` with `z_ee` read from the robot.
    Measured(f64),
    /// `z_d − (surface_z − x1)`: the end-effector position is rebuilt from
    /// the penetration estimate, so `z̃` depends on the state.
    FromPenetration { z_d: f64, surface_z: f64 },
}

impl ZTilde {
    fn value(&self, x1: f64) -> f64 {
        match *self {
            ZTilde::Measured(v) => v,
            ZTilde::FromPenetration { z_d, surface_z } => z_d - (surface_z - x1),
        }
    }

    fn d_dx1(&self) -> f64 {
        match self {
            ZTilde::Measured(_) => 0.0,
            ZTilde::FromPenetration { .. } => 1.0,
        }
    }
}

/// Sensorless input `[z̃, ż_d, z̈_d, Λ₃₃]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceInput {
    pub z_tilde: ZTilde,
    pub z_d_dot: f64,
    pub z_d_ddot: f64,
    pub lambda33: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessInput {
    /// F/T sensor reading [N] (M1/M3).
    Force(f64),
    /// Impedance-controller quantities (M2/M4).
    Impedance(ImpedanceInput),
}

/// Material force of the KV law and its gradient w.r.t. the state.
fn kv_terms(x: &StateVector) -> (f64, [f64; 4]) {
    (x[0] * x[2] + x[1] * x[3], [x[2], x[3], x[0], x[1]])
}

/// Material force of the DRM law and its gradient. Powers act on the
/// non-negative part of `x1`; the singular `x1^{-1/2}` factor of the
/// gradient is evaluated at `max(x1, eps)`.
fn drm_terms(x: &StateVector, eps: f64) -> (f64, [f64; 4]) {
    let d = x[0].max(0.0);
    let sqrt_d = d.sqrt();
    let d32 = d * sqrt_d;
    let force = d32 * x[2] + sqrt_d * x[1] * x[3];
    let d_dx1 = if x[0] > 0.0 {
        1.5 * sqrt_d * x[2] + 0.5 / x[0].max(eps).sqrt() * x[1] * x[3]
    } else {
        0.0
    };
    (force, [d_dx1, sqrt_d * x[3], d32, sqrt_d * x[1]])
}

fn with_velocity(x: &StateVector, dt: f64, x2_next: f64) -> StateVector {
    StateVector::new(x[0] + dt * x[1], x2_next, x[2], x[3])
}

/// Kelvin-Voigt with force input.
pub fn process_m1(x: &StateVector, u_force: f64, m_i: f64, dt: f64) -> StateVector {
    let (g, _) = kv_terms(x);
    with_velocity(x, dt, x[1] + dt / m_i * (u_force - g))
}

/// Dimensionality reduction with force input.
pub fn process_m3(x: &StateVector, u_force: f64, m_i: f64, dt: f64, eps_pen: f64) -> StateVector {
    let (g, _) = drm_terms(x, eps_pen);
    with_velocity(x, dt, x[1] + dt / m_i * (u_force - g))
}

/// Effective mass and feed-forward term of the sensorless velocity update.
fn impedance_split(u: &ImpedanceInput, m_i: f64, mode: ControllerMode) -> (f64, f64) {
    match mode {
        ControllerMode::Full => (m_i + u.lambda33, u.lambda33 * u.z_d_ddot),
        ControllerMode::Simplified => (m_i, 0.0),
    }
}

fn sensorless_update(
    x: &StateVector,
    u: &ImpedanceInput,
    gains: &ImpedanceGains,
    m_i: f64,
    dt: f64,
    mode: ControllerMode,
    material: f64,
) -> StateVector {
    let (mass, feed_forward) = impedance_split(u, m_i, mode);
    let drive = feed_forward
        + gains.d33 * u.z_d_dot
        + gains.k33 * u.z_tilde.value(x[0])
        + material
        + gains.d33 * x[1];
    with_velocity(x, dt, x[1] - dt / mass * drive)
}

/// Kelvin-Voigt with impedance-controller input.
pub fn process_m2(
    x: &StateVector,
    u: &ImpedanceInput,
    gains: &ImpedanceGains,
    m_i: f64,
    dt: f64,
    mode: ControllerMode,
) -> StateVector {
    let (g, _) = kv_terms(x);
    sensorless_update(x, u, gains, m_i, dt, mode, g)
}

/// Dimensionality reduction with impedance-controller input.
pub fn process_m4(
    x: &StateVector,
    u: &ImpedanceInput,
    gains: &ImpedanceGains,
    m_i: f64,
    dt: f64,
    mode: ControllerMode,
    eps_pen: f64,
) -> StateVector {
    let (g, _) = drm_terms(x, eps_pen);
    sensorless_update(x, u, gains, m_i, dt, mode, g)
}

/// Velocity measurement model `h(x) = ḋ`.
pub fn measurement(x: &StateVector) -> f64 {
    x[1]
}

/// `∂h/∂x`.
pub fn measurement_jacobian() -> nalgebra::RowVector4<f64> {
    nalgebra::RowVector4::new(0.0, 1.0, 0.0, 0.0)
}

impl ModelVariant {
    fn mismatch(&self, u: &ProcessInput) -> FilterError {
        FilterError::InputMismatch(format!(
            "{} cannot take input {:?}",
            self.tag, u
        ))
    }

    /// One step of the selected process model.
    pub fn propagate(
        &self,
        x: &StateVector,
        u: &ProcessInput,
        dt: f64,
        eps_pen: f64,
    ) -> Result<StateVector, FilterError> {
        match (self.tag, u) {
            (VariantTag::M1, ProcessInput::Force(f)) => Ok(process_m1(x, *f, self.m_i, dt)),
            (VariantTag::M3, ProcessInput::Force(f)) => {
                Ok(process_m3(x, *f, self.m_i, dt, eps_pen))
            }
            (VariantTag::M2, ProcessInput::Impedance(imp)) => Ok(process_m2(
                x,
                imp,
                &self.gains,
                self.m_i,
                dt,
                self.controller_mode,
            )),
            (VariantTag::M4, ProcessInput::Impedance(imp)) => Ok(process_m4(
                x,
                imp,
                &self.gains,
                self.m_i,
                dt,
                self.controller_mode,
                eps_pen,
            )),
            _ => Err(self.mismatch(u)),
        }
    }

    /// `∂f/∂x` evaluated at `(x, u)`.
    pub fn jacobian_a(
        &self,
        x: &StateVector,
        u: &ProcessInput,
        dt: f64,
        eps_pen: f64,
    ) -> Result<Matrix4<f64>, FilterError> {
        let (_, grad) = match self.tag.law() {
            ModelKind::Kv => kv_terms(x),
            ModelKind::Drm => drm_terms(x, eps_pen),
        };
        let mut a = Matrix4::identity();
        a[(0, 1)] = dt;
        match (self.tag.is_sensorless(), u) {
            (false, ProcessInput::Force(_)) => {
                let s = dt / self.m_i;
                for j in 0..4 {
                    a[(1, j)] -= s * grad[j];
                }
            }
            (true, ProcessInput::Impedance(imp)) => {
                let (mass, _) = impedance_split(imp, self.m_i, self.controller_mode);
                let s = dt / mass;
                for j in 0..4 {
                    a[(1, j)] -= s * grad[j];
                }
                a[(1, 1)] -= s * self.gains.d33;
                a[(1, 0)] -= s * self.gains.k33 * imp.z_tilde.d_dx1();
            }
            _ => return Err(self.mismatch(u)),
        }
        Ok(a)
    }

    /// `∂f/∂w`: process noise `[w1, w2]` enters the penetration and rate
    /// equations additively.
    pub fn jacobian_g(&self, _x: &StateVector, _u: &ProcessInput) -> Matrix4x2<f64> {
        let mut g = Matrix4x2::zeros();
        g[(0, 0)] = 1.0;
        g[(1, 1)] = 1.0;
        g
    }
}
