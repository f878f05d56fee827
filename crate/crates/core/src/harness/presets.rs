//! Synthetic analogs of the four silicone specimens. S2 and S4 stand in for
//! S1 and S3 with an embedded stiff inclusion: the ball is not modelled
//! geometrically, it only shows up as a stiffer lumped parameter set.

use std::fmt;
use std::str::FromStr;

use crate::contact::{ContactLaw, DrmParams, KvParams, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    S1,
    S2,
    S3,
    S4,
}

/// `(plain, with inclusion)` specimen pairs used for detection.
pub const INCLUSION_PAIRS: [(Preset, Preset); 2] = [(Preset::S1, Preset::S2), (Preset::S3, Preset::S4)];

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::S1, Preset::S2, Preset::S3, Preset::S4];

    /// Kelvin-Voigt reference `(k_M [N/mm], c_M [N·s/mm])`.
    pub fn kv(self) -> KvParams {
        let (k_m, c_m) = match self {
            Preset::S1 => (2.03, 0.093),
            Preset::S2 => (2.49, 0.118),
            Preset::S3 => (3.53, 0.160),
            Preset::S4 => (4.19, 0.121),
        };
        KvParams { k_m, c_m }
    }

    /// DRM reference `(κ [N/mm^1.5], λ [N·s/mm^1.5])`.
    pub fn drm(self) -> DrmParams {
        let (kappa, lambda) = match self {
            Preset::S1 => (0.742, 0.038),
            Preset::S2 => (1.01, 0.052),
            Preset::S3 => (1.70, 0.081),
            Preset::S4 => (2.18, 0.069),
        };
        DrmParams { kappa, lambda }
    }

    pub fn law(self, kind: ModelKind) -> ContactLaw {
        match kind {
            ModelKind::Kv => ContactLaw::Kv(self.kv()),
            ModelKind::Drm => ContactLaw::Drm(self.drm()),
        }
    }

    pub fn has_inclusion(self) -> bool {
        matches!(self, Preset::S2 | Preset::S4)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::S1 => "S1",
            Preset::S2 => "S2",
            Preset::S3 => "S3",
            Preset::S4 => "S4",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" => Ok(Preset::S1),
            "S2" => Ok(Preset::S2),
            "S3" => Ok(Preset::S3),
            "S4" => Ok(Preset::S4),
            other => Err(format!("unknown preset '{other}' (expected S1..S4)")),
        }
    }
}
