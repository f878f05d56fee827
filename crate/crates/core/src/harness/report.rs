//! Human-readable tables and the machine-readable key-value report.
//!
//! The key-value file starts with a `timestamp` line; everything after it is
//! a pure function of the campaign, so identical runs give identical bytes
//! below the first line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::config::parse_kind;
use super::experiment::{
    compare_stiffness, CampaignReport, Checkpoint, Detection, ExperimentReport, References, VariantOutcome, Verdict,
};
use super::presets::Preset;
use crate::contact::ModelKind;
use crate::estimator::VariantTag;
use crate::reference::FitResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing report key '{0}'")]
    Missing(String),
    #[error("bad value for '{key}': {reason}")]
    BadValue { key: String, reason: String },
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn law_units(kind: ModelKind) -> (&'static str, &'static str) {
    match kind {
        ModelKind::Kv => ("N/mm", "N s/mm"),
        ModelKind::Drm => ("N/mm^1.5", "N s/mm^1.5"),
    }
}

/// Table laid out like the paper's results table: one row per specimen and
/// model, estimates at every checkpoint next to the least-squares reference
/// of the model's own law. Kelvin-Voigt and DRM models get separate blocks
/// because their coefficients have different units.
pub fn render_table(c: &CampaignReport) -> String {
    let mut out = String::new();
    for r in &c.reports {
        let _ = writeln!(
            out,
            "run {} | specimen {} | truth {} {:?} | seed {}",
            r.run_id,
            r.preset,
            r.truth.kind().as_str(),
            r.truth.coefficients(),
            r.seed
        );
    }
    for kind in [ModelKind::Kv, ModelKind::Drm] {
        let rows: Vec<(&ExperimentReport, &VariantOutcome)> = VariantTag::ALL
            .iter()
            .filter(|t| t.law() == kind)
            .flat_map(|&t| c.reports.iter().filter_map(move |r| r.variant(t).map(|v| (r, v))))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let (ku, cu) = law_units(kind);
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<9}{:<7}{:<11}{:<24}{:<24}{:<14}{:<14}force MSE [N^2]",
            "Specimen",
            "Model",
            "Time [s]",
            format!("x3 [{ku}]"),
            format!("x4 [{cu}]"),
            "ref x3",
            "ref x4",
        );
        for (r, v) in rows {
            let join = |f: fn(&Checkpoint) -> f64, prec: usize| {
                v.checkpoints.iter().map(|cp| format!("{:.*}", prec, f(cp))).collect::<Vec<_>>().join(" / ")
            };
            let times = v.checkpoints.iter().map(|cp| format!("{}", cp.t)).collect::<Vec<_>>().join("/");
            let (rk, rc) = r.references.for_law(kind).params.coefficients();
            let _ = writeln!(
                out,
                "{:<9}{:<7}{:<11}{:<24}{:<24}{:<14.4}{:<14.4}{:.3e}",
                r.preset.as_str(),
                v.tag.as_str(),
                times,
                join(|cp| cp.stiffness, 4),
                join(|cp| cp.damping, 4),
                rk,
                rc,
                v.force_mse
            );
        }
    }
    if !c.detections.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Inclusion detection (last checkpoint)");
        for d in &c.detections {
            let _ = writeln!(
                out,
                "{} vs {} {}: {:.4} vs {:.4} -> {}",
                d.plain, d.with_inclusion, d.tag, d.plain_stiffness, d.inclusion_stiffness, d.verdict
            );
        }
    }
    out
}

fn push(out: &mut String, key: &str, value: impl AsRef<str>) {
    out.push_str(key);
    out.push_str(" = ");
    out.push_str(value.as_ref());
    out.push('\n');
}

fn push_fit(out: &mut String, prefix: &str, fit: &FitResult) {
    let (k, c) = fit.params.coefficients();
    push(out, &format!("{prefix}.stiffness"), num(k));
    push(out, &format!("{prefix}.damping"), num(c));
    push(out, &format!("{prefix}.residual_mse"), num(fit.residual_mse));
    push(out, &format!("{prefix}.n_samples"), fit.n_samples.to_string());
    push(out, &format!("{prefix}.condition_number"), fit.condition_number.map_or("none".into(), num));
}

/// Key-value report. `timestamp` (seconds since the Unix epoch) is the only
/// field that may differ between identical runs.
pub fn render_kv(c: &CampaignReport, timestamp: u64) -> String {
    let mut out = String::new();
    push(&mut out, "timestamp", timestamp.to_string());
    push(
        &mut out,
        "runs",
        c.reports.iter().map(|r| r.preset.as_str()).collect::<Vec<_>>().join(","),
    );
    for r in &c.reports {
        let p = format!("run.{}", r.preset);
        push(&mut out, &format!("{p}.id"), &r.run_id);
        push(&mut out, &format!("{p}.seed"), r.seed.to_string());
        let (k, d) = r.truth.coefficients();
        push(&mut out, &format!("{p}.truth.law"), r.truth.kind().as_str());
        push(&mut out, &format!("{p}.truth.stiffness"), num(k));
        push(&mut out, &format!("{p}.truth.damping"), num(d));
        push(&mut out, &format!("{p}.mse_window"), format!("{}, {}", num(r.mse_window.0), num(r.mse_window.1)));
        push_fit(&mut out, &format!("{p}.reference.kv"), &r.references.kv);
        push_fit(&mut out, &format!("{p}.reference.drm"), &r.references.drm);
        push(
            &mut out,
            &format!("{p}.variants"),
            r.variants.iter().map(|v| v.tag.as_str()).collect::<Vec<_>>().join(","),
        );
        for v in &r.variants {
            let vp = format!("{p}.{}", v.tag);
            push(
                &mut out,
                &format!("{vp}.checkpoints"),
                v.checkpoints.iter().map(|cp| num(cp.t)).collect::<Vec<_>>().join(", "),
            );
            for (i, cp) in v.checkpoints.iter().enumerate() {
                push(&mut out, &format!("{vp}.x3.{i}"), num(cp.stiffness));
                push(&mut out, &format!("{vp}.x4.{i}"), num(cp.damping));
            }
            push(&mut out, &format!("{vp}.force_mse"), num(v.force_mse));
        }
        for line in r.config_echo.lines() {
            out.push_str(&format!("{p}.config."));
            out.push_str(line);
            out.push('\n');
        }
    }
    for d in &c.detections {
        let p = format!("detection.{}_{}.{}", d.plain, d.with_inclusion, d.tag);
        push(&mut out, &format!("{p}.plain_x3"), num(d.plain_stiffness));
        push(&mut out, &format!("{p}.inclusion_x3"), num(d.inclusion_stiffness));
        push(&mut out, &format!("{p}.verdict"), d.verdict.as_str());
    }
    out
}

/// Drops the `timestamp` line so two reports can be compared.
pub fn strip_timestamp(kv: &str) -> String {
    kv.lines()
        .filter(|l| !l.starts_with("timestamp ="))
        .map(|l| format!("{l}\n"))
        .collect()
}

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn get(&self, key: &str) -> Result<&str, ReportError> {
        self.0.get(key).map(String::as_str).ok_or_else(|| ReportError::Missing(key.into()))
    }

    fn parse<T>(&self, key: &str, p: impl Fn(&str) -> Result<T, String>) -> Result<T, ReportError> {
        p(self.get(key)?).map_err(|reason| ReportError::BadValue { key: key.into(), reason })
    }

    fn f64(&self, key: &str) -> Result<f64, ReportError> {
        self.parse(key, |s| s.parse::<f64>().map_err(|e| e.to_string()))
    }

    fn list<T>(&self, key: &str, p: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, ReportError> {
        let s = self.get(key)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|x| p(x.trim()).map_err(|reason| ReportError::BadValue { key: key.into(), reason }))
            .collect()
    }

    fn fit(&self, prefix: &str, kind: ModelKind) -> Result<FitResult, ReportError> {
        let cond = self.get(&format!("{prefix}.condition_number"))?;
        Ok(FitResult {
            params: kind.with_coefficients(
                self.f64(&format!("{prefix}.stiffness"))?,
                self.f64(&format!("{prefix}.damping"))?,
            ),
            residual_mse: self.f64(&format!("{prefix}.residual_mse"))?,
            n_samples: self.parse(&format!("{prefix}.n_samples"), |s| s.parse().map_err(|_| "not a count".into()))?,
            condition_number: match cond {
                "none" => None,
                _ => Some(self.f64(&format!("{prefix}.condition_number"))?),
            },
        })
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("'{s}' is not a number"))
}

fn parse_verdict(s: &str) -> Result<Verdict, String> {
    match s {
        "DISTINCT_A_STIFFER" => Ok(Verdict::DistinctAStiffer),
        "DISTINCT_B_STIFFER" => Ok(Verdict::DistinctBStiffer),
        "INDISTINGUISHABLE" => Ok(Verdict::Indistinguishable),
        _ => Err(format!("unknown verdict '{s}'")),
    }
}

/// Reads a key-value report back into a campaign.
pub fn parse_kv_report(text: &str) -> Result<CampaignReport, ReportError> {
    let mut map = BTreeMap::new();
    let mut echoes: BTreeMap<String, String> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once(" = ") else {
            return Err(ReportError::Syntax { line: i + 1, reason: "expected 'key = value'".into() });
        };
        if let Some((run, _)) = k.strip_prefix("run.").and_then(|rest| rest.split_once(".config.")) {
            let echo_line = &line[format!("run.{run}.config.").len()..];
            let e = echoes.entry(run.to_string()).or_default();
            e.push_str(echo_line);
            e.push('\n');
            continue;
        }
        map.insert(k.to_string(), v.to_string());
    }
    let keys = Keys(map);

    let mut reports = Vec::new();
    for preset in keys.list("runs", |s| s.parse::<Preset>())? {
        let p = format!("run.{preset}");
        let law = keys.parse(&format!("{p}.truth.law"), parse_kind)?;
        let window = keys.list(&format!("{p}.mse_window"), parse_f64)?;
        let [wa, wb] = window[..] else {
            return Err(ReportError::BadValue { key: format!("{p}.mse_window"), reason: "expected two times".into() });
        };
        let mut variants = Vec::new();
        for tag in keys.list(&format!("{p}.variants"), |s| s.parse::<VariantTag>())? {
            let vp = format!("{p}.{tag}");
            let times = keys.list(&format!("{vp}.checkpoints"), parse_f64)?;
            let checkpoints = times
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    Ok(Checkpoint {
                        t,
                        stiffness: keys.f64(&format!("{vp}.x3.{i}"))?,
                        damping: keys.f64(&format!("{vp}.x4.{i}"))?,
                    })
                })
                .collect::<Result<_, ReportError>>()?;
            variants.push(VariantOutcome {
                tag,
                checkpoints,
                force_mse: keys.f64(&format!("{vp}.force_mse"))?,
            });
        }
        reports.push(ExperimentReport {
            run_id: keys.get(&format!("{p}.id"))?.to_string(),
            seed: keys.parse(&format!("{p}.seed"), |s| s.parse().map_err(|_| "not a seed".into()))?,
            preset,
            truth: law.with_coefficients(
                keys.f64(&format!("{p}.truth.stiffness"))?,
                keys.f64(&format!("{p}.truth.damping"))?,
            ),
            config_echo: echoes.remove(preset.as_str()).unwrap_or_default(),
            mse_window: (wa, wb),
            references: References {
                kv: keys.fit(&format!("{p}.reference.kv"), ModelKind::Kv)?,
                drm: keys.fit(&format!("{p}.reference.drm"), ModelKind::Drm)?,
            },
            variants,
        });
    }

    let mut detections = Vec::new();
    for k in keys.0.keys().filter(|k| k.starts_with("detection.") && k.ends_with(".verdict")) {
        let body = &k["detection.".len()..k.len() - ".verdict".len()];
        let bad = || ReportError::BadValue { key: k.clone(), reason: "malformed detection key".into() };
        let (pair, tag) = body.split_once('.').ok_or_else(bad)?;
        let (a, b) = pair.split_once('_').ok_or_else(bad)?;
        let p = format!("detection.{body}");
        detections.push(Detection {
            tag: tag.parse().map_err(|_| bad())?,
            plain: a.parse().map_err(|_| bad())?,
            with_inclusion: b.parse().map_err(|_| bad())?,
            plain_stiffness: keys.f64(&format!("{p}.plain_x3"))?,
            inclusion_stiffness: keys.f64(&format!("{p}.inclusion_x3"))?,
            verdict: keys.parse(k, parse_verdict)?,
        });
    }
    detections.sort_by_key(|d| (d.plain, d.tag));
    Ok(CampaignReport { reports, detections })
}

/// Re-derives each detection verdict at a different threshold.
pub fn reclassify(c: &CampaignReport, rel_threshold: f64) -> Vec<Detection> {
    c.detections
        .iter()
        .map(|d| Detection {
            verdict: compare_stiffness(d.plain_stiffness, d.inclusion_stiffness, rel_threshold),
            ..*d
        })
        .collect()
}
