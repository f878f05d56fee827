//! Simulation and online estimation of viscoelastic contact for robotic
//! palpation with a spherical indenter.
//!
//! - [`contact`]: Kelvin-Voigt and dimensionality-reduction force laws.
//! - [`plant`]: impedance-controlled indenter simulator producing traces.
//! - [`estimator`]: EKF over the four process models M1–M4.
//! - [`reference`]: offline least-squares reference fits.
//! - [`harness`]: presets, experiments, reports, file formats and config.

// `!(x > 0.0)` style guards reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod estimator;
pub mod harness;
pub mod plant;
pub mod reference;
