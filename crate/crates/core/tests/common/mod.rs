//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod linear_kf;

use nalgebra::{Matrix4, Matrix4x2};
use palpation::estimator::{ImpedanceInput, ModelVariant, ProcessInput, StateVector, VariantTag, ZTilde};
use palpation::plant::{ControllerMode, ImpedanceGains};

pub const FD_STEP: f64 = 1e-6;
pub const EPS_PEN: f64 = 1e-6;

pub fn variant(tag: VariantTag, mode: ControllerMode) -> ModelVariant {
    ModelVariant {
        tag,
        controller_mode: mode,
        gains: ImpedanceGains { lambda33: 1e-2, d33: 0.02, k33: 0.5 },
        m_i: 1e-3,
    }
}

/// A plausible input for `tag`; `from_penetration` makes `z̃` depend on the
/// state for the sensorless models.
pub fn input(tag: VariantTag, r: [f64; 4], from_penetration: bool) -> ProcessInput {
    if tag.is_sensorless() {
        let z_tilde = if from_penetration {
            ZTilde::FromPenetration { z_d: -8.0 + 4.0 * r[0], surface_z: 0.0 }
        } else {
            ZTilde::Measured(-8.0 + 4.0 * r[0])
        };
        ProcessInput::Impedance(ImpedanceInput {
            z_tilde,
            z_d_dot: -25.0 + 50.0 * r[1],
            z_d_ddot: -300.0 + 600.0 * r[2],
            lambda33: 1e-2,
        })
    } else {
        ProcessInput::Force(10.0 * r[3])
    }
}

/// Central differences of the process model, one coordinate at a time.
pub fn fd_jacobian_a(v: &ModelVariant, x: &StateVector, u: &ProcessInput, dt: f64) -> Matrix4<f64> {
    let mut a = Matrix4::zeros();
    for j in 0..4 {
        let mut hi = *x;
        let mut lo = *x;
        hi[j] += FD_STEP;
        lo[j] -= FD_STEP;
        let col = (v.propagate(&hi, u, dt, EPS_PEN).unwrap() - v.propagate(&lo, u, dt, EPS_PEN).unwrap())
            / (2.0 * FD_STEP);
        a.set_column(j, &col);
    }
    a
}

/// Central differences with respect to additive process noise on the
/// penetration and rate equations.
pub fn fd_jacobian_g(v: &ModelVariant, x: &StateVector, u: &ProcessInput, dt: f64) -> Matrix4x2<f64> {
    let f = |w: [f64; 2]| {
        let mut next = v.propagate(x, u, dt, EPS_PEN).unwrap();
        next[0] += w[0];
        next[1] += w[1];
        next
    };
    let mut g = Matrix4x2::zeros();
    for j in 0..2 {
        let mut hi = [0.0; 2];
        let mut lo = [0.0; 2];
        hi[j] = FD_STEP;
        lo[j] = -FD_STEP;
        g.set_column(j, &((f(hi) - f(lo)) / (2.0 * FD_STEP)));
    }
    g
}

/// Largest violation of `|analytic − fd| ≤ rel·|fd| + abs` over all entries,
/// as a multiple of the allowance (≤ 1 passes).
pub fn worst_ratio<const C: usize>(
    analytic: &nalgebra::SMatrix<f64, 4, C>,
    fd: &nalgebra::SMatrix<f64, 4, C>,
    rel: f64,
    abs: f64,
) -> f64 {
    analytic
        .iter()
        .zip(fd.iter())
        .map(|(a, f)| (a - f).abs() / (rel * f.abs() + abs))
        .fold(0.0, f64::max)
}

/// Maps four unit-interval draws onto a state away from the `x1 = 0` kink.
pub fn state(r: [f64; 4], x2: f64) -> StateVector {
    StateVector::new(0.05 + 6.0 * r[0], x2, 5.0 * r[2], 0.3 * r[3])
}
