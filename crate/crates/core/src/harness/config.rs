//! Experiment configuration and its flat `key = value` text form.
//!
//! Keys are dotted paths such as `plant.gains.K33` (matched without regard
//! to case). Later sources override earlier ones:
//! defaults < preset < config file < `PALPATION_SEED` < command-line flags.

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

use super::presets::Preset;
use crate::contact::ModelKind;
use crate::estimator::{FilterConfig, ModelVariant, StateVector, VariantTag, ZTildeSource};
use crate::plant::{ControllerMode, PlantConfig, DEFAULT_MEAN_PENETRATION};

/// Environment variable that overrides the noise seed.
pub const SEED_ENV: &str = "PALPATION_SEED";

/// Sample rate of the noise-free protocol [Hz].
pub const NOISE_FREE_SAMPLE_RATE: f64 = 40_000.0;

/// Velocity process-noise variance for the sensorless variants [mm²/s²].
pub const SENSORLESS_Q22: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("bad value '{value}' for '{key}': {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid experiment configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Specimen the truth parameters were taken from (label only once the
    /// truth coefficients are overridden).
    pub preset: Preset,
    pub plant: PlantConfig,
    /// Process models run on the shared trace, in report order.
    pub variants: Vec<VariantTag>,
    /// Controller law the sensorless models assume.
    pub filter_mode: ControllerMode,
    pub filter: FilterConfig,
    /// Replaces `Q22` for M2/M4. Their velocity equation has no noisy force
    /// input, so the force-noise share of `Q22` does not apply to them.
    pub sensorless_q22: Option<f64>,
    /// Simulated time [s].
    pub duration: f64,
    /// Times at which `(x̂3, x̂4)` are reported [s].
    pub checkpoints: Vec<f64>,
    /// Force MSE window `[t_a, t_b]` [s].
    pub mse_window: (f64, f64),
    /// Relative stiffness gap above which two specimens are called distinct.
    pub detection_threshold: f64,
}

impl ExperimentConfig {
    /// Noisy matched rig for `preset` with `kind` as the truth law and all
    /// four variants.
    pub fn for_preset(preset: Preset, kind: ModelKind) -> Self {
        let plant = PlantConfig::for_law(preset.law(kind));
        let filter = FilterConfig {
            dt: 1.0 / plant.sample_rate,
            ..FilterConfig::default()
        };
        Self {
            preset,
            filter_mode: plant.controller_mode,
            plant,
            variants: VariantTag::ALL.to_vec(),
            filter,
            sensorless_q22: Some(SENSORLESS_Q22),
            duration: 10.0,
            checkpoints: vec![5.0, 10.0],
            mse_window: (5.0, 10.0),
            detection_threshold: 0.15,
        }
    }

    /// Switches to the noise-free protocol: clean measurements, a fast
    /// sample rate so the Euler step of the process models adds little bias,
    /// no state process noise, and a faint parameter random walk that lets
    /// the filter shed linearisation errors from its start-up transient.
    pub fn noise_free(mut self) -> Self {
        let seed = self.plant.noise.seed;
        self.plant.noise = crate::plant::NoiseSpec { seed, ..crate::plant::NoiseSpec::none() };
        self.plant.sample_rate = NOISE_FREE_SAMPLE_RATE;
        self.plant.dt_sim = 1.0 / NOISE_FREE_SAMPLE_RATE;
        self.filter.dt = 1.0 / NOISE_FREE_SAMPLE_RATE;
        self.filter.q = Matrix4::from_diagonal(&Vector4::new(0.0, 0.0, 1e-12, 1e-15));
        self.sensorless_q22 = None;
        self
    }

    /// Same rig and filter with `preset`'s truth parameters under the current
    /// law, re-centred on the current initial penetration.
    pub fn for_specimen(&self, preset: Preset) -> Self {
        let mut cfg = self.clone();
        cfg.preset = preset;
        cfg.plant.truth_model = preset.law(self.plant.truth_model.kind());
        cfg.plant.recenter(self.plant.d0);
        cfg
    }

    pub fn seed(&self) -> u64 {
        self.plant.noise.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.plant.noise.seed = seed;
        self
    }

    /// Filter settings used for `tag`.
    pub fn filter_for(&self, tag: VariantTag) -> FilterConfig {
        let mut f = self.filter.clone();
        if let (true, Some(q22)) = (tag.is_sensorless(), self.sensorless_q22) {
            f.q[(1, 1)] = q22;
        }
        f
    }

    /// The configured variants with the rig constants of the plant.
    pub fn model_variants(&self) -> Vec<ModelVariant> {
        self.variants
            .iter()
            .map(|&tag| ModelVariant {
                tag,
                controller_mode: self.filter_mode,
                gains: self.plant.gains,
                m_i: self.plant.m_i,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.plant.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.filter.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(q22) = self.sensorless_q22 {
            if !(q22 >= 0.0) {
                return bad(format!("sensorless Q22 must be non-negative, got {q22}"));
            }
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.variants.is_empty() {
            return bad("at least one variant is required".into());
        }
        let Some(&first) = self.checkpoints.first() else {
            return bad("at least one checkpoint is required".into());
        };
        if !(first >= 0.0) || self.checkpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return bad(format!("checkpoints must be non-negative and increasing, got {:?}", self.checkpoints));
        }
        let last = *self.checkpoints.last().unwrap_or(&first);
        if last > self.duration + 1e-9 {
            return bad(format!("checkpoint {last} s lies beyond the duration {} s", self.duration));
        }
        let (a, b) = self.mse_window;
        if !(a >= 0.0 && b > a && b <= self.duration + 1e-9) {
            return bad(format!("MSE window [{a}, {b}] must satisfy 0 <= t_a < t_b <= duration"));
        }
        if !(self.detection_threshold >= 0.0) {
            return bad(format!("detection threshold must be non-negative, got {}", self.detection_threshold));
        }
        let period = 1.0 / self.plant.sample_rate;
        if (self.filter.dt - period).abs() > 0.01 * period {
            return bad(format!(
                "filter dt {} s does not match the sample period {period} s",
                self.filter.dt
            ));
        }
        Ok(())
    }

    /// Every setting as `key = value` lines in a fixed order. Reading the
    /// text back yields the same configuration.
    pub fn to_kv(&self) -> String {
        let p = &self.plant;
        let (stiffness, damping) = p.truth_model.coefficients();
        let mut lines: Vec<(&str, String)> = vec![
            ("experiment.preset", self.preset.to_string()),
            ("experiment.duration", num(self.duration)),
            ("experiment.checkpoints", list(&self.checkpoints)),
            ("experiment.mse_window", list(&[self.mse_window.0, self.mse_window.1])),
            ("experiment.threshold", num(self.detection_threshold)),
            (
                "experiment.variants",
                self.variants.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", "),
            ),
            ("plant.truth", p.truth_model.kind().as_str().to_string()),
            ("plant.truth.stiffness", num(stiffness)),
            ("plant.truth.damping", num(damping)),
            ("plant.controller_mode", p.controller_mode.as_str().to_string()),
            ("plant.m_i", num(p.m_i)),
            ("plant.gains.lambda33", num(p.gains.lambda33)),
            ("plant.gains.d33", num(p.gains.d33)),
            ("plant.gains.k33", num(p.gains.k33)),
            ("plant.trajectory.z0", num(p.trajectory.z0)),
            ("plant.trajectory.z1", num(p.trajectory.z1)),
            ("plant.trajectory.z2", num(p.trajectory.z2)),
            ("plant.trajectory.f1", num(p.trajectory.f1)),
            ("plant.trajectory.f2", num(p.trajectory.f2)),
            ("plant.surface_z", num(p.surface_z)),
            ("plant.dt_sim", num(p.dt_sim)),
            ("plant.sample_rate", num(p.sample_rate)),
            ("plant.d0", num(p.d0)),
            ("plant.d_dot0", num(p.d_dot0)),
            ("plant.noise.sigma_vel", num(p.noise.sigma_vel)),
            ("plant.noise.sigma_force", num(p.noise.sigma_force)),
            ("plant.noise.seed", p.noise.seed.to_string()),
            ("filter.controller_mode", self.filter_mode.as_str().to_string()),
            ("filter.dt", num(self.filter.dt)),
            ("filter.q", matrix(&self.filter.q)),
            (
                "filter.sensorless_q22",
                self.sensorless_q22.map_or_else(|| "none".to_string(), num),
            ),
            ("filter.r_meas", num(self.filter.r_meas)),
            ("filter.x0", list(self.filter.x0.as_slice())),
            ("filter.p0", matrix(&self.filter.p0)),
            ("filter.eps_pen", num(self.filter.eps_pen)),
        ];
        lines.push(match self.filter.z_tilde {
            ZTildeSource::Trace => ("filter.z_tilde", "trace".to_string()),
            ZTildeSource::Estimate { surface_z } => ("filter.z_tilde", format!("estimate {}", num(surface_z))),
        });
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_preset(Preset::S1, ModelKind::Drm)
    }
}

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
}

/// Four diagonal entries when the matrix is diagonal, else sixteen in row
/// order.
fn matrix(m: &Matrix4<f64>) -> String {
    let diagonal = (0..4).all(|i| (0..4).all(|j| i == j || m[(i, j)] == 0.0));
    if diagonal {
        list(m.diagonal().as_slice())
    } else {
        let rows: Vec<f64> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|ij| m[ij]).collect();
        list(&rows)
    }
}

/// Splits `key = value` text into trimmed pairs. Blank lines and lines
/// starting with `#` are skipped; keys are lower-cased.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                reason: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, reason: "empty key".into() });
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Everything a run's configuration can come from.
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    pub preset: Option<Preset>,
    pub truth: Option<ModelKind>,
    pub noise_free: Option<bool>,
    /// Contents of a config file.
    pub file: Option<String>,
    /// Value of [`SEED_ENV`], if set.
    pub env_seed: Option<String>,
    /// Command-line `key = value` overrides, applied last.
    pub overrides: Vec<(String, String)>,
}

const BASE_KEYS: [&str; 3] = ["experiment.preset", "plant.truth", "experiment.noise_free"];

/// Builds the configuration from its layered sources.
///
/// The preset, truth law and protocol pick the starting point. Unless
/// `plant.trajectory.z0` is given, the trajectory is re-centred on
/// `plant.mean_penetration` after all overrides, so changing gains or truth
/// keeps the mean penetration. `filter.dt` follows the sample rate unless set.
pub fn resolve_config(src: &ConfigSources) -> Result<ExperimentConfig, ConfigError> {
    let file_pairs = match &src.file {
        Some(text) => parse_kv(text)?,
        None => Vec::new(),
    };
    let mut layered: Vec<(String, String)> = file_pairs;
    if let Some(seed) = &src.env_seed {
        layered.push(("plant.noise.seed".into(), seed.clone()));
    }
    layered.extend(src.overrides.iter().map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string())));

    let last_of = |key: &str| layered.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let preset = match src.preset {
        Some(p) => p,
        None => last_of("experiment.preset").map(|v| parse_with(BASE_KEYS[0], v, str::parse)).transpose()?.unwrap_or(Preset::S1),
    };
    let truth = match src.truth {
        Some(k) => k,
        None => last_of("plant.truth").map(|v| parse_with(BASE_KEYS[1], v, parse_kind)).transpose()?.unwrap_or(ModelKind::Drm),
    };
    let noise_free = match src.noise_free {
        Some(b) => b,
        None => last_of("experiment.noise_free").map(|v| parse_with(BASE_KEYS[2], v, parse_bool)).transpose()?.unwrap_or(false),
    };

    let mut cfg = ExperimentConfig::for_preset(preset, truth);
    if noise_free {
        cfg = cfg.noise_free();
    }
    let mut overlay = Overlay::default();
    for (key, value) in &layered {
        if BASE_KEYS.contains(&key.as_str()) {
            continue;
        }
        overlay.apply(&mut cfg, key, value)?;
    }
    overlay.finish(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Default)]
struct Overlay {
    z0_set: bool,
    d0_set: bool,
    d_dot0_set: bool,
    filter_dt_set: bool,
    mean_penetration: Option<f64>,
}

impl Overlay {
    fn apply(&mut self, cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), ConfigError> {
        let f = |v: &str| parse_with(key, v, parse_f64);
        let p = &mut cfg.plant;
        match key {
            "experiment.duration" => cfg.duration = f(value)?,
            "experiment.checkpoints" => cfg.checkpoints = parse_with(key, value, parse_list)?,
            "experiment.mse_window" => {
                let w = parse_with(key, value, parse_list)?;
                if w.len() != 2 {
                    return Err(bad_value(key, value, "expected two times"));
                }
                cfg.mse_window = (w[0], w[1]);
            }
            "experiment.threshold" => cfg.detection_threshold = f(value)?,
            "experiment.variants" => {
                cfg.variants = value
                    .split(',')
                    .map(|s| s.parse::<VariantTag>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| bad_value(key, value, &e))?;
            }
            "plant.truth.stiffness" => {
                let (_, c) = p.truth_model.coefficients();
                p.truth_model = p.truth_model.kind().with_coefficients(f(value)?, c);
            }
            "plant.truth.damping" => {
                let (k, _) = p.truth_model.coefficients();
                p.truth_model = p.truth_model.kind().with_coefficients(k, f(value)?);
            }
            "plant.controller_mode" => p.controller_mode = parse_with(key, value, parse_mode)?,
            "plant.m_i" => p.m_i = f(value)?,
            "plant.gains.lambda33" => p.gains.lambda33 = f(value)?,
            "plant.gains.d33" => p.gains.d33 = f(value)?,
            "plant.gains.k33" => p.gains.k33 = f(value)?,
            "plant.trajectory.z0" => {
                p.trajectory.z0 = f(value)?;
                self.z0_set = true;
            }
            "plant.trajectory.z1" => p.trajectory.z1 = f(value)?,
            "plant.trajectory.z2" => p.trajectory.z2 = f(value)?,
            "plant.trajectory.f1" => p.trajectory.f1 = f(value)?,
            "plant.trajectory.f2" => p.trajectory.f2 = f(value)?,
            "plant.mean_penetration" => self.mean_penetration = Some(f(value)?),
            "plant.surface_z" => p.surface_z = f(value)?,
            "plant.dt_sim" => p.dt_sim = f(value)?,
            "plant.sample_rate" => p.sample_rate = f(value)?,
            "plant.d0" => {
                p.d0 = f(value)?;
                self.d0_set = true;
            }
            "plant.d_dot0" => {
                p.d_dot0 = f(value)?;
                self.d_dot0_set = true;
            }
            "plant.noise.sigma_vel" => p.noise.sigma_vel = f(value)?,
            "plant.noise.sigma_force" => p.noise.sigma_force = f(value)?,
            "plant.noise.seed" | "seed" => {
                p.noise.seed = value.parse().map_err(|_| bad_value(key, value, "expected an unsigned integer"))?
            }
            "filter.controller_mode" => cfg.filter_mode = parse_with(key, value, parse_mode)?,
            "filter.dt" => {
                cfg.filter.dt = f(value)?;
                self.filter_dt_set = true;
            }
            "filter.q" => cfg.filter.q = parse_with(key, value, parse_matrix)?,
            "filter.sensorless_q22" => {
                cfg.sensorless_q22 = match value.to_ascii_lowercase().as_str() {
                    "none" => None,
                    _ => Some(f(value)?),
                }
            }
            "filter.r_meas" => cfg.filter.r_meas = f(value)?,
            "filter.x0" => {
                let v = parse_with(key, value, parse_list)?;
                if v.len() != 4 {
                    return Err(bad_value(key, value, "expected four values"));
                }
                cfg.filter.x0 = StateVector::from_column_slice(&v);
            }
            "filter.p0" => cfg.filter.p0 = parse_with(key, value, parse_matrix)?,
            "filter.eps_pen" => cfg.filter.eps_pen = f(value)?,
            "filter.z_tilde" => {
                let lower = value.to_ascii_lowercase();
                let mut parts = lower.split_whitespace();
                cfg.filter.z_tilde = match (parts.next(), parts.next(), parts.next()) {
                    (Some("trace"), None, None) => ZTildeSource::Trace,
                    (Some("estimate"), s, None) => ZTildeSource::Estimate {
                        surface_z: s.map(f).transpose()?.unwrap_or(cfg.plant.surface_z),
                    },
                    _ => return Err(bad_value(key, value, "expected 'trace' or 'estimate [surface_z]'")),
                };
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn finish(self, cfg: &mut ExperimentConfig) {
        let p = &mut cfg.plant;
        if !self.z0_set {
            let (d0, d_dot0) = (p.d0, p.d_dot0);
            p.recenter(self.mean_penetration.unwrap_or(DEFAULT_MEAN_PENETRATION));
            if self.d0_set {
                p.d0 = d0;
            }
            if self.d_dot0_set {
                p.d_dot0 = d_dot0;
            }
        }
        if !self.filter_dt_set {
            cfg.filter.dt = 1.0 / p.sample_rate;
        }
    }
}

fn bad_value(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_with<T>(key: &str, value: &str, p: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
    p(value).map_err(|reason| bad_value(key, value, &reason))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| "expected a number".to_string())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("expected a finite number".into())
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

fn parse_matrix(s: &str) -> Result<Matrix4<f64>, String> {
    let v = parse_list(s)?;
    match v.len() {
        4 => Ok(Matrix4::from_diagonal(&Vector4::from_column_slice(&v))),
        16 => Ok(Matrix4::from_row_slice(&v)),
        n => Err(format!("expected 4 diagonal or 16 row-major entries, got {n}")),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

pub(crate) fn parse_kind(s: &str) -> Result<ModelKind, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "kv" => Ok(ModelKind::Kv),
        "drm" => Ok(ModelKind::Drm),
        _ => Err("expected KV or DRM".into()),
    }
}

pub(crate) fn parse_mode(s: &str) -> Result<ControllerMode, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "full" => Ok(ControllerMode::Full),
        "simplified" => Ok(ControllerMode::Simplified),
        _ => Err("expected FULL or SIMPLIFIED".into()),
    }
}
