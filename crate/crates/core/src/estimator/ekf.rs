//! Predict/correct steps of the extended Kalman filter.

use nalgebra::{Matrix2, Matrix4};

use super::model::{measurement, measurement_jacobian, ModelVariant, ProcessInput, StateVector};
use super::{FilterConfig, FilterError};

/// State estimate and its error covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    pub x_hat: StateVector,
    pub p: Matrix4<f64>,
}

impl Belief {
    pub fn new(x_hat: StateVector, p: Matrix4<f64>) -> Self {
        Self { x_hat, p }
    }

    pub fn initial(cfg: &FilterConfig) -> Self {
        Self::new(cfg.x0, cfg.p0)
    }
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

fn check_finite(b: &Belief) -> Result<(), FilterError> {
    if b.x_hat.iter().chain(b.p.iter()).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FilterError::NonFinite)
    }
}

/// Time update: `x̂⁻ = f(x̂, u, 0)`, `P⁻ = A·P·Aᵀ + G·Q_w·Gᵀ + Q_θ`, where
/// `Q_w` is the rate/penetration block of `cfg.q` and `Q_θ` the rest.
pub fn ekf_predict(
    b: &Belief,
    variant: &ModelVariant,
    u: &ProcessInput,
    cfg: &FilterConfig,
) -> Result<Belief, FilterError> {
    let a = variant.jacobian_a(&b.x_hat, u, cfg.dt, cfg.eps_pen)?;
    let g = variant.jacobian_g(&b.x_hat, u);
    let x_minus = variant.propagate(&b.x_hat, u, cfg.dt, cfg.eps_pen)?;

    let q_w: Matrix2<f64> = cfg.q.fixed_view::<2, 2>(0, 0).into_owned();
    let mut q_rest = cfg.q;
    q_rest.fixed_view_mut::<2, 2>(0, 0).fill(0.0);
    let p_minus = a * b.p * a.transpose() + g * q_w * g.transpose() + q_rest;

    let out = Belief::new(x_minus, symmetrize(&p_minus));
    check_finite(&out)?;
    Ok(out)
}

/// Measurement update with a velocity reading `z` [mm/s]; afterwards the
/// penetration and both material parameters are clamped to be non-negative.
pub fn ekf_correct(b_minus: &Belief, z: f64, cfg: &FilterConfig) -> Result<Belief, FilterError> {
    let h = measurement_jacobian();
    let s = (h * b_minus.p * h.transpose())[(0, 0)] + cfg.r_meas;
    if !(s > 0.0) || !s.is_finite() {
        return Err(FilterError::SingularInnovation(s));
    }
    let gain = b_minus.p * h.transpose() / s;
    let innovation = z - measurement(&b_minus.x_hat);
    let mut x = b_minus.x_hat + gain * innovation;
    let p = (Matrix4::identity() - gain * h) * b_minus.p;

    x[0] = x[0].max(0.0);
    x[2] = x[2].max(0.0);
    x[3] = x[3].max(0.0);
    let out = Belief::new(x, symmetrize(&p));
    check_finite(&out)?;
    Ok(out)
}
