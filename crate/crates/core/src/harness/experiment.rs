use std::fmt;
use std::thread;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::presets::{Preset, INCLUSION_PAIRS};
use super::HarnessError;
use crate::contact::{ContactLaw, ModelKind};
use crate::estimator::{reconstruct_force, run_filter, Belief, VariantTag};
use crate::plant::{simulate, TraceSample};
use crate::reference::{fit_drm_ls, fit_kv_ls, window_mse, FitResult};

/// `(x̂3, x̂4)` at one reporting time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// Requested time [s].
    pub t: f64,
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantOutcome {
    pub tag: VariantTag,
    pub checkpoints: Vec<Checkpoint>,
    /// Mean squared error of the reconstructed force over the MSE window [N²].
    pub force_mse: f64,
}

impl VariantOutcome {
    /// The checkpoint at the latest time.
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("validated configs have checkpoints")
    }
}

/// Least-squares references fitted on the run's truth columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct References {
    pub kv: FitResult,
    pub drm: FitResult,
}

impl References {
    pub fn for_law(&self, kind: ModelKind) -> &FitResult {
        match kind {
            ModelKind::Kv => &self.kv,
            ModelKind::Drm => &self.drm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Hash of the configuration echo; identifies the run.
    pub run_id: String,
    pub seed: u64,
    pub preset: Preset,
    pub truth: ContactLaw,
    /// Full configuration as `key = value` lines.
    pub config_echo: String,
    pub mse_window: (f64, f64),
    pub references: References,
    pub variants: Vec<VariantOutcome>,
}

impl ExperimentReport {
    pub fn variant(&self, tag: VariantTag) -> Option<&VariantOutcome> {
        self.variants.iter().find(|v| v.tag == tag)
    }
}

/// A report together with the trace and filter runs behind it.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub trace: Vec<TraceSample>,
    pub estimates: Vec<(VariantTag, Vec<(f64, Belief)>)>,
}

/// First 16 hex digits of the SHA-256 of the configuration echo.
pub fn run_id(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_kv().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    Ok(run_experiment_detailed(cfg)?.report)
}

/// Simulates once, filters the shared trace with every configured variant
/// (in parallel), fits both references and scores the force reconstruction.
pub fn run_experiment_detailed(cfg: &ExperimentConfig) -> Result<ExperimentRun, HarnessError> {
    cfg.validate()?;
    let trace = simulate(&cfg.plant, cfg.duration)?;
    let references = References {
        kv: fit_kv_ls(&trace).map_err(|source| HarnessError::Fit { law: ModelKind::Kv, source })?,
        drm: fit_drm_ls(&trace).map_err(|source| HarnessError::Fit { law: ModelKind::Drm, source })?,
    };

    let variants = cfg.model_variants();
    let runs: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = variants
            .iter()
            .map(|v| {
                let trace = &trace;
                let fc = cfg.filter_for(v.tag);
                s.spawn(move || run_filter(trace, v, &fc))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("filter thread panicked")).collect()
    });

    let times: Vec<f64> = trace.iter().map(|s| s.t).collect();
    let f_true: Vec<f64> = trace.iter().map(|s| s.f_contact_true).collect();
    let half_period = 0.5 / cfg.plant.sample_rate;
    let mut outcomes = Vec::with_capacity(variants.len());
    let mut estimates = Vec::with_capacity(variants.len());
    for (v, run) in variants.iter().zip(runs) {
        let beliefs = run.map_err(|source| HarnessError::Filter { variant: v.tag, source })?;
        let checkpoints = cfg
            .checkpoints
            .iter()
            .map(|&t| {
                let i = beliefs.partition_point(|(ti, _)| *ti <= t + half_period).saturating_sub(1);
                let x = &beliefs[i].1.x_hat;
                Checkpoint { t, stiffness: x[2], damping: x[3] }
            })
            .collect();
        let f_hat: Vec<f64> = reconstruct_force(&beliefs, v.tag).into_iter().map(|(_, f)| f).collect();
        let force_mse = window_mse(&times, &f_hat, &f_true, cfg.mse_window)
            .map_err(|source| HarnessError::Fit { law: v.tag.law(), source })?;
        outcomes.push(VariantOutcome { tag: v.tag, checkpoints, force_mse });
        estimates.push((v.tag, beliefs));
    }

    let report = ExperimentReport {
        run_id: run_id(cfg),
        seed: cfg.seed(),
        preset: cfg.preset,
        truth: cfg.plant.truth_model,
        config_echo: cfg.to_kv(),
        mse_window: cfg.mse_window,
        references,
        variants: outcomes,
    };
    Ok(ExperimentRun { report, trace, estimates })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    DistinctAStiffer,
    DistinctBStiffer,
    Indistinguishable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::DistinctAStiffer => "DISTINCT_A_STIFFER",
            Verdict::DistinctBStiffer => "DISTINCT_B_STIFFER",
            Verdict::Indistinguishable => "INDISTINGUISHABLE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Calls two stiffness estimates distinct when their gap relative to the
/// smaller one exceeds `rel_threshold`.
pub fn compare_stiffness(a: f64, b: f64, rel_threshold: f64) -> Verdict {
    if a == b {
        return Verdict::Indistinguishable;
    }
    let gap = (a - b).abs() / a.min(b);
    if gap > rel_threshold {
        if a > b {
            Verdict::DistinctAStiffer
        } else {
            Verdict::DistinctBStiffer
        }
    } else {
        Verdict::Indistinguishable
    }
}

/// Inclusion check for one specimen pair under one variant, made at the
/// last checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub tag: VariantTag,
    pub plain: Preset,
    pub with_inclusion: Preset,
    pub plain_stiffness: f64,
    pub inclusion_stiffness: f64,
    pub verdict: Verdict,
}

impl Detection {
    /// True when the inclusion-bearing specimen was found distinctly stiffer.
    pub fn detected(&self) -> bool {
        self.verdict == Verdict::DistinctBStiffer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub reports: Vec<ExperimentReport>,
    pub detections: Vec<Detection>,
}

impl CampaignReport {
    pub fn report(&self, preset: Preset) -> Option<&ExperimentReport> {
        self.reports.iter().find(|r| r.preset == preset)
    }
}

/// Runs `base` once per preset (see [`ExperimentConfig::for_specimen`]), then
/// compares every inclusion pair present.
pub fn run_campaign(base: &ExperimentConfig, presets: &[Preset]) -> Result<CampaignReport, HarnessError> {
    let reports = presets
        .iter()
        .map(|&p| run_experiment(&base.for_specimen(p)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut detections = Vec::new();
    for (plain, with_inclusion) in INCLUSION_PAIRS {
        let (Some(a), Some(b)) = (
            reports.iter().find(|r| r.preset == plain),
            reports.iter().find(|r| r.preset == with_inclusion),
        ) else {
            continue;
        };
        for &tag in &base.variants {
            let (Some(va), Some(vb)) = (a.variant(tag), b.variant(tag)) else {
                continue;
            };
            let (ka, kb) = (va.last().stiffness, vb.last().stiffness);
            detections.push(Detection {
                tag,
                plain,
                with_inclusion,
                plain_stiffness: ka,
                inclusion_stiffness: kb,
                verdict: compare_stiffness(ka, kb, base.detection_threshold),
            });
        }
    }
    Ok(CampaignReport { reports, detections })
}
