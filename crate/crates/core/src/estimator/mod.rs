//! Online estimation of penetration and material parameters with an
//! extended Kalman filter over the M1–M4 process models.

mod ekf;
mod model;

pub use ekf::{ekf_correct, ekf_predict, Belief};
pub use model::{
    measurement, measurement_jacobian, process_m1, process_m2, process_m3, process_m4,
    ImpedanceInput, ModelVariant, ProcessInput, StateVector, VariantTag, ZTilde,
};

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

use crate::contact::ModelKind;
use crate::plant::TraceSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid filter configuration: {0}")]
    InvalidConfig(String),
    #[error("input does not match model: {0}")]
    InputMismatch(String),
    #[error("non-finite filter state")]
    NonFinite,
    #[error("innovation covariance is not positive ({0})")]
    SingularInnovation(f64),
    #[error("sample {index}: spacing {spacing} s does not match filter step {dt} s")]
    TraceSpacing { index: usize, spacing: f64, dt: f64 },
    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<FilterError>,
    },
}

/// Where the sensorless models take the end-effector position from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZTildeSource {
    /// The trace's `z_ee` column.
    Trace,
    /// `surface_z − x̂1`, for runs without a reliable `z_ee`.
    Estimate { surface_z: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Filter step ΔT [s]; must equal the trace sample spacing.
    pub dt: f64,
    /// Process-noise covariance over the full state.
    pub q: Matrix4<f64>,
    /// Velocity measurement variance [mm²/s²].
    pub r_meas: f64,
    pub x0: StateVector,
    pub p0: Matrix4<f64>,
    /// Penetration floor inside fractional powers [mm].
    pub eps_pen: f64,
    pub z_tilde: ZTildeSource,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            dt: 2e-3,
            q: Matrix4::from_diagonal(&Vector4::new(1e-8, 1e-2, 0.0, 0.0)),
            r_meas: (2.0f64 * 0.05).powi(2),
            x0: StateVector::new(1.0, 1.0, 0.0, 0.0),
            p0: Matrix4::identity(),
            eps_pen: 1e-6,
            z_tilde: ZTildeSource::Trace,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |m: String| Err(FilterError::InvalidConfig(m));
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.r_meas > 0.0) {
            return bad(format!("R_meas must be positive, got {}", self.r_meas));
        }
        if !(self.eps_pen > 0.0) {
            return bad(format!("eps_pen must be positive, got {}", self.eps_pen));
        }
        if (self.q - self.q.transpose()).amax() > 0.0 {
            return bad("Q must be symmetric".into());
        }
        if self.q.symmetric_eigenvalues().min() < -1e-12 {
            return bad("Q must be positive semi-definite".into());
        }
        // Zero variance is allowed: it marks a component as known exactly.
        if (self.p0 - self.p0.transpose()).amax() > 0.0 || self.p0.symmetric_eigenvalues().min() < -1e-12 {
            return bad("P0 must be symmetric positive semi-definite".into());
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return bad("x0 must be finite".into());
        }
        Ok(())
    }
}

/// Assembles the model input for `variant` from one trace sample.
pub fn input_from_sample(
    sample: &TraceSample,
    variant: &ModelVariant,
    source: ZTildeSource,
) -> ProcessInput {
    if variant.tag.is_sensorless() {
        let z_tilde = match source {
            ZTildeSource::Trace => ZTilde::Measured(sample.z_tilde()),
            ZTildeSource::Estimate { surface_z } => ZTilde::FromPenetration {
                z_d: sample.z_d,
                surface_z,
            },
        };
        ProcessInput::Impedance(ImpedanceInput {
            z_tilde,
            z_d_dot: sample.z_d_dot,
            z_d_ddot: sample.z_d_ddot,
            lambda33: variant.gains.lambda33,
        })
    } else {
        ProcessInput::Force(sample.f_ft_meas)
    }
}

/// Runs the filter over a trace: the first sample only corrects the initial
/// belief, every later one predicts with the previous sample's input and
/// corrects with its own velocity reading (`z = −ż_ee`).
pub fn run_filter(
    trace: &[TraceSample],
    variant: &ModelVariant,
    cfg: &FilterConfig,
) -> Result<Vec<(f64, Belief)>, FilterError> {
    cfg.validate()?;
    let at = |index: usize| move |e: FilterError| FilterError::AtSample { index, source: Box::new(e) };

    for (index, pair) in trace.windows(2).enumerate() {
        let spacing = pair[1].t - pair[0].t;
        if !((spacing - cfg.dt).abs() <= 0.01 * cfg.dt) {
            return Err(FilterError::TraceSpacing { index: index + 1, spacing, dt: cfg.dt });
        }
    }

    let mut out = Vec::with_capacity(trace.len());
    let mut belief = Belief::initial(cfg);
    for (index, sample) in trace.iter().enumerate() {
        if index > 0 {
            let u = input_from_sample(&trace[index - 1], variant, cfg.z_tilde);
            belief = ekf_predict(&belief, variant, &u, cfg).map_err(at(index))?;
        }
        belief = ekf_correct(&belief, -sample.z_ee_dot_meas, cfg).map_err(at(index))?;
        out.push((sample.t, belief));
    }
    Ok(out)
}

/// Contact force implied by a state estimate.
pub fn estimated_force(x: &StateVector, law: ModelKind) -> f64 {
    let d = x[0].max(0.0);
    match law {
        ModelKind::Kv => x[2] * d + x[3] * x[1],
        ModelKind::Drm => x[2] * d.powf(1.5) + x[3] * d.sqrt() * x[1],
    }
}

/// Force reconstruction `(t, F̂)` along a filter run.
pub fn reconstruct_force(beliefs: &[(f64, Belief)], tag: VariantTag) -> Vec<(f64, f64)> {
    beliefs
        .iter()
        .map(|(t, b)| (*t, estimated_force(&b.x_hat, tag.law())))
        .collect()
}
