//! Contact-force laws for a rigid spherical indenter pressed into a
//! viscoelastic half-space.
//!
//! Two lumped laws are provided: the linear Kelvin-Voigt spring/damper and
//! the dimensionality-reduction closed form `κ·d^{3/2} + λ·d^{1/2}·ḋ`, whose
//! coefficients follow from the material's shear modulus, viscosity and the
//! indenter radius. [`drm_discrete_force`] sums the underlying 1D foundation
//! of independent spring/damper elements and acts as a brute-force check on
//! the closed form.
//!
//! Units are millimetres, newtons and seconds throughout.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Incompressible viscoelastic material probed by a sphere of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSpec {
    /// Shear elastic modulus G [N/mm²].
    shear_modulus: f64,
    /// Viscosity η [N·s/mm²].
    viscosity: f64,
    /// Indenter sphere radius R [mm].
    radius: f64,
}

/// The only Poisson ratio the closed form is valid for.
pub const INCOMPRESSIBLE_POISSON: f64 = 0.5;

impl MaterialSpec {
    pub fn new(
        shear_modulus: f64,
        viscosity: f64,
        poisson: f64,
        radius: f64,
    ) -> Result<Self, ContactError> {
        if poisson != INCOMPRESSIBLE_POISSON {
            return Err(ContactError::InvalidMaterial(format!(
                "only incompressible materials (nu = 0.5) are supported, got nu = {poisson}"
            )));
        }
        if !(shear_modulus > 0.0) || !shear_modulus.is_finite() {
            return Err(ContactError::InvalidMaterial(format!(
                "shear modulus must be positive, got {shear_modulus}"
            )));
        }
        if !(viscosity >= 0.0) || !viscosity.is_finite() {
            return Err(ContactError::InvalidMaterial(format!(
                "viscosity must be non-negative, got {viscosity}"
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(ContactError::InvalidMaterial(format!(
                "indenter radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            shear_modulus,
            viscosity,
            radius,
        })
    }

    /// Shorthand for an incompressible material.
    pub fn incompressible(
        shear_modulus: f64,
        viscosity: f64,
        radius: f64,
    ) -> Result<Self, ContactError> {
        Self::new(shear_modulus, viscosity, INCOMPRESSIBLE_POISSON, radius)
    }

    pub fn shear_modulus(&self) -> f64 {
        self.shear_modulus
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    pub fn poisson(&self) -> f64 {
        INCOMPRESSIBLE_POISSON
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Kelvin-Voigt coefficients: stiffness `k_m` [N/mm], damping `c_m` [N·s/mm].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KvParams {
    pub k_m: f64,
    pub c_m: f64,
}

impl KvParams {
    pub fn new(k_m: f64, c_m: f64) -> Result<Self, ContactError> {
        check_non_negative("k_M", k_m)?;
        check_non_negative("c_M", c_m)?;
        Ok(Self { k_m, c_m })
    }
}

/// Dimensionality-reduction coefficients: `kappa` [N/mm^{3/2}],
/// `lambda` [N·s/mm^{3/2}].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrmParams {
    pub kappa: f64,
    pub lambda: f64,
}

impl DrmParams {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self, ContactError> {
        check_non_negative("kappa", kappa)?;
        check_non_negative("lambda", lambda)?;
        Ok(Self { kappa, lambda })
    }
}

fn check_non_negative(name: &str, v: f64) -> Result<(), ContactError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ContactError::InvalidParameter(format!(
            "{name} must be finite and non-negative, got {v}"
        )))
    }
}

/// A lumped contact law with its coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactLaw {
    Kv(KvParams),
    Drm(DrmParams),
}

impl ContactLaw {
    pub fn force(&self, d: f64, d_dot: f64) -> f64 {
        match self {
            ContactLaw::Kv(p) => kv_force(p, d, d_dot),
            ContactLaw::Drm(p) => drm_force(p, d, d_dot),
        }
    }

    /// Damping part of [`ContactLaw::force`] alone.
    pub fn damping_force(&self, d: f64, d_dot: f64) -> f64 {
        match self {
            ContactLaw::Kv(p) => kv_force(&KvParams { k_m: 0.0, ..*p }, d, d_dot),
            ContactLaw::Drm(p) => drm_force(&DrmParams { kappa: 0.0, ..*p }, d, d_dot),
        }
    }

    /// `(stiffness, damping)` coefficient pair.
    pub fn coefficients(&self) -> (f64, f64) {
        match self {
            ContactLaw::Kv(p) => (p.k_m, p.c_m),
            ContactLaw::Drm(p) => (p.kappa, p.lambda),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ContactLaw::Kv(_) => ModelKind::Kv,
            ContactLaw::Drm(_) => ModelKind::Drm,
        }
    }
}

/// Which lumped law a set of coefficients belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Kv,
    Drm,
}

impl ModelKind {
    pub fn with_coefficients(self, stiffness: f64, damping: f64) -> ContactLaw {
        match self {
            ModelKind::Kv => ContactLaw::Kv(KvParams {
                k_m: stiffness,
                c_m: damping,
            }),
            ModelKind::Drm => ContactLaw::Drm(DrmParams {
                kappa: stiffness,
                lambda: damping,
            }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Kv => "KV",
            ModelKind::Drm => "DRM",
        }
    }
}

/// Kelvin-Voigt force. Zero out of contact; `d = 0` belongs to the contact
/// branch, so the damper still acts there.
pub fn kv_force(p: &KvParams, d: f64, d_dot: f64) -> f64 {
    if d < 0.0 {
        0.0
    } else {
        p.k_m * d + p.c_m * d_dot
    }
}

/// Closed-form viscoelastic sphere force `κ·d^{3/2} + λ·d^{1/2}·ḋ`.
///
/// Retraction (`ḋ < 0`) is not clamped, so the result can be negative.
pub fn drm_force(p: &DrmParams, d: f64, d_dot: f64) -> f64 {
    if d < 0.0 {
        return 0.0;
    }
    p.kappa * d.powf(1.5) + p.lambda * d.sqrt() * d_dot
}

/// Maps material constants to `κ = (16·G/3)·√R` and `λ = 8·η·√R`.
pub fn drm_params_from_material(m: &MaterialSpec) -> DrmParams {
    let sqrt_r = m.radius.sqrt();
    DrmParams {
        kappa: 16.0 * m.shear_modulus / 3.0 * sqrt_r,
        lambda: 8.0 * m.viscosity * sqrt_r,
    }
}

/// Brute-force foundation sum: elements of width `dx` centred on a midpoint
/// grid over `[-a, a]`, each pressed by the parabolic profile of the
/// equivalent radius `R/2` and contributing `(4·G·dᵢ + 4·η·ḋ)·dx`.
pub fn drm_discrete_force(
    m: &MaterialSpec,
    d: f64,
    d_dot: f64,
    dx: f64,
) -> Result<f64, ContactError> {
    if !(d >= 0.0) {
        return Err(ContactError::InvalidParameter(format!(
            "penetration must be non-negative, got {d}"
        )));
    }
    if !(dx > 0.0) {
        return Err(ContactError::InvalidParameter(format!(
            "element spacing must be positive, got {dx}"
        )));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    let r1 = m.radius / 2.0;
    let half_width = (2.0 * r1 * d).sqrt();
    // Elements tile [-a, a] symmetrically; the last partial element is
    // trimmed so the grid never spills past the contact edge.
    let n_half = (half_width / dx).ceil() as usize;
    let mut sum = 0.0;
    for i in 0..n_half {
        let lo = i as f64 * dx;
        let hi = (lo + dx).min(half_width);
        let width = hi - lo;
        let x = 0.5 * (lo + hi);
        let local = d - x * x / (2.0 * r1);
        if local > 0.0 {
            sum += (4.0 * m.shear_modulus * local + 4.0 * m.viscosity * d_dot) * width;
        }
    }
    Ok(2.0 * sum)
}
