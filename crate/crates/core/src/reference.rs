//! Offline least-squares reference fit of the lumped contact laws from
//! traces with known penetration.
//!
//! Both laws are linear in their coefficients, so each fit is a two-regressor
//! ordinary least-squares problem solved through its 2×2 normal equations.

use thiserror::Error;

use crate::contact::{ContactLaw, ModelKind};
use crate::plant::TraceSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 2 in-contact samples, got {0}")]
    TooFewSamples(usize),
    #[error("regressor '{regressor}' is identically zero; '{other}' alone fits {estimate}")]
    Degenerate {
        regressor: &'static str,
        other: &'static str,
        /// Least-squares coefficient of the remaining regressor.
        estimate: f64,
    },
    #[error("regressors are collinear (condition number {0:e})")]
    Collinear(f64),
    #[error("empty window [{0}, {1}]")]
    EmptyWindow(f64, f64),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Condition numbers above this are reported with the fit.
pub const CONDITION_REPORT_THRESHOLD: f64 = 1e8;
/// Condition numbers above this make the fit fail.
const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: ContactLaw,
    /// Mean squared force residual over the fitted samples [N²].
    pub residual_mse: f64,
    pub n_samples: usize,
    /// Normal-matrix condition number, present only when it exceeds
    /// [`CONDITION_REPORT_THRESHOLD`].
    pub condition_number: Option<f64>,
}

/// Stiffness and damping regressors of `law` at `(d, ḋ)`.
fn regressors(law: ModelKind, d: f64, d_dot: f64) -> (f64, f64) {
    match law {
        ModelKind::Kv => (d, d_dot),
        ModelKind::Drm => (d.powf(1.5), d.sqrt() * d_dot),
    }
}

fn names(law: ModelKind) -> (&'static str, &'static str) {
    match law {
        ModelKind::Kv => ("d", "d_dot"),
        ModelKind::Drm => ("d^(3/2)", "d^(1/2)*d_dot"),
    }
}

/// Least-squares fit of `law` to `(d_true, d_dot_true, F_contact_true)` over
/// samples with `d_true ≥ 0`.
pub fn fit_ls(trace: &[TraceSample], law: ModelKind) -> Result<FitResult, FitError> {
    let rows: Vec<(f64, f64, f64)> = trace
        .iter()
        .filter(|s| s.d_true >= 0.0)
        .map(|s| {
            let (a, b) = regressors(law, s.d_true, s.d_dot_true);
            (a, b, s.f_contact_true)
        })
        .collect();
    if rows.len() < 2 {
        return Err(FitError::TooFewSamples(rows.len()));
    }

    let (mut saa, mut sab, mut sbb, mut sa_f, mut sb_f) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, f) in &rows {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sa_f += a * f;
        sb_f += b * f;
    }

    let (stiff_name, damp_name) = names(law);
    if sbb == 0.0 {
        return Err(FitError::Degenerate {
            regressor: damp_name,
            other: stiff_name,
            estimate: if saa > 0.0 { sa_f / saa } else { 0.0 },
        });
    }
    if saa == 0.0 {
        return Err(FitError::Degenerate {
            regressor: stiff_name,
            other: damp_name,
            estimate: sb_f / sbb,
        });
    }

    // Symmetric 2×2 normal matrix: eigenvalues give the condition number.
    let mean = 0.5 * (saa + sbb);
    let spread = (0.25 * (saa - sbb).powi(2) + sab * sab).sqrt();
    let (lo, hi) = (mean - spread, mean + spread);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let det = saa * sbb - sab * sab;
    if !(condition < CONDITION_LIMIT) || !(det > 0.0) {
        return Err(FitError::Collinear(condition));
    }
    let stiffness = (sbb * sa_f - sab * sb_f) / det;
    let damping = (saa * sb_f - sab * sa_f) / det;

    let residual_mse = rows
        .iter()
        .map(|&(a, b, f)| (f - stiffness * a - damping * b).powi(2))
        .sum::<f64>()
        / rows.len() as f64;

    Ok(FitResult {
        params: law.with_coefficients(stiffness, damping),
        residual_mse,
        n_samples: rows.len(),
        condition_number: (condition > CONDITION_REPORT_THRESHOLD).then_some(condition),
    })
}

pub fn fit_kv_ls(trace: &[TraceSample]) -> Result<FitResult, FitError> {
    fit_ls(trace, ModelKind::Kv)
}

pub fn fit_drm_ls(trace: &[TraceSample]) -> Result<FitResult, FitError> {
    fit_ls(trace, ModelKind::Drm)
}

/// Mean of `(a − b)²` over samples whose time lies in `[t_a, t_b]`.
pub fn window_mse(
    times: &[f64],
    a: &[f64],
    b: &[f64],
    window: (f64, f64),
) -> Result<f64, FitError> {
    if times.len() != a.len() || a.len() != b.len() {
        return Err(FitError::LengthMismatch(a.len(), b.len()));
    }
    let (lo, hi) = window;
    let (sum, n) = times
        .iter()
        .zip(a.iter().zip(b))
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .fold((0.0, 0usize), |(s, n), (_, (x, y))| (s + (x - y).powi(2), n + 1));
    if n == 0 {
        return Err(FitError::EmptyWindow(lo, hi));
    }
    Ok(sum / n as f64)
}

/// Mean squared error between the law `params` evaluated on the truth
/// kinematics and the trace's material force, over `window`.
pub fn residual_mse(
    trace: &[TraceSample],
    params: &ContactLaw,
    window: (f64, f64),
) -> Result<f64, FitError> {
    let times: Vec<f64> = trace.iter().map(|s| s.t).collect();
    let model: Vec<f64> = trace.iter().map(|s| params.force(s.d_true, s.d_dot_true)).collect();
    let reference: Vec<f64> = trace.iter().map(|s| s.f_contact_true).collect();
    window_mse(&times, &model, &reference, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{DrmParams, KvParams};

    fn sample(t: f64, d: f64, d_dot: f64, f: f64) -> TraceSample {
        TraceSample {
            t,
            z_d: 0.0,
            z_d_dot: 0.0,
            z_d_ddot: 0.0,
            z_ee: -d,
            z_ee_dot_meas: -d_dot,
            d_true: d,
            d_dot_true: d_dot,
            f_contact_true: f,
            f_ft_meas: f,
        }
    }

    #[test]
    fn two_point_kv_solution() {
        let trace = [sample(0.0, 1.0, 0.0, 2.0), sample(0.1, 0.0, 1.0, 3.0)];
        let fit = fit_kv_ls(&trace).unwrap();
        let (k, c) = fit.params.coefficients();
        assert!((k - 2.0).abs() < 1e-12 && (c - 3.0).abs() < 1e-12, "{k} {c}");
    }

    #[test]
    fn kv_without_motion_is_degenerate_in_damping() {
        let trace: Vec<_> = (0..20)
            .map(|i| {
                let d = 1.0 + 0.1 * i as f64;
                sample(i as f64, d, 0.0, 2.03 * d)
            })
            .collect();
        match fit_kv_ls(&trace) {
            Err(FitError::Degenerate { regressor, estimate, .. }) => {
                assert_eq!(regressor, "d_dot");
                assert!((estimate - 2.03).abs() < 1e-12);
            }
            other => panic!("expected degenerate damping, got {other:?}"),
        }
    }

    #[test]
    fn drm_static_pair() {
        let trace = [sample(0.0, 1.0, 0.0, 1.0), sample(0.1, 4.0, 0.0, 8.0)];
        match fit_drm_ls(&trace) {
            Err(FitError::Degenerate { regressor, estimate, .. }) => {
                assert_eq!(regressor, "d^(1/2)*d_dot");
                assert!((estimate - 1.0).abs() < 1e-12);
            }
            other => panic!("expected degenerate damping, got {other:?}"),
        }
    }

    #[test]
    fn zero_force_fits_zero() {
        let trace: Vec<_> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.01;
                sample(t, 2.0 + (7.0 * t).sin(), 7.0 * (7.0 * t).cos(), 0.0)
            })
            .collect();
        let fit = fit_drm_ls(&trace).unwrap();
        assert_eq!(fit.params.coefficients(), (0.0, 0.0));
        assert_eq!(fit.residual_mse, 0.0);
    }

    #[test]
    fn too_few_samples() {
        let trace = [sample(0.0, 1.0, 1.0, 1.0), sample(0.1, -1.0, 0.0, 0.0)];
        assert_eq!(fit_kv_ls(&trace), Err(FitError::TooFewSamples(1)));
    }

    #[test]
    fn collinear_regressors() {
        // ḋ proportional to d.
        let trace: Vec<_> = (1..30)
            .map(|i| {
                let d = i as f64 * 0.1;
                sample(i as f64, d, 3.0 * d, d)
            })
            .collect();
        assert!(matches!(fit_kv_ls(&trace), Err(FitError::Collinear(_))));
    }

    #[test]
    fn mse_of_constant_offset() {
        let trace: Vec<_> = (0..100)
            .map(|i| {
                let t = i as f64 * 0.1;
                let d = 2.0 + 0.3 * t.sin();
                let d_dot = 0.3 * t.cos();
                let law = KvParams { k_m: 2.0, c_m: 0.1 };
                sample(t, d, d_dot, law.k_m * d + law.c_m * d_dot + 0.25)
            })
            .collect();
        let law = ContactLaw::Kv(KvParams { k_m: 2.0, c_m: 0.1 });
        let mse = residual_mse(&trace, &law, (5.0, 10.0)).unwrap();
        assert!((mse - 0.0625).abs() < 1e-12);
        assert!(matches!(
            residual_mse(&trace, &law, (20.0, 30.0)),
            Err(FitError::EmptyWindow(..))
        ));
    }

    #[test]
    fn exact_self_fit_has_zero_window_error() {
        let law = DrmParams { kappa: 1.01, lambda: 0.052 };
        let trace: Vec<_> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.05;
                let d = 3.0 + 0.5 * (2.0 * t).sin();
                let d_dot = (2.0 * t).cos();
                sample(t, d, d_dot, crate::contact::drm_force(&law, d, d_dot))
            })
            .collect();
        let fit = fit_drm_ls(&trace).unwrap();
        assert!(residual_mse(&trace, &fit.params, (5.0, 10.0)).unwrap() < 1e-12);
    }
}
