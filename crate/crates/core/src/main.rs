use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use palpation::contact::ModelKind;
use palpation::estimator::{run_filter, VariantTag};
use palpation::harness::{
    parse_kv_report, read_trace, reclassify, render_kv, render_table, resolve_config, run_campaign,
    run_experiment_detailed, write_estimates, write_trace, CampaignReport, ConfigError, ConfigSources,
    ExperimentConfig, HarnessError, Preset, SEED_ENV,
};
use palpation::plant::simulate;
use palpation::reference::fit_ls;

/// Simulated robotic palpation: impedance-controlled indentation of a
/// viscoelastic body and online estimation of its stiffness and damping.
#[derive(Parser)]
#[command(name = "palpation", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a palpation and write the trace CSV.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one filter variant over a trace CSV and write the estimate CSV.
    /// The filter step is taken from the trace's sample spacing.
    Estimate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "M3")]
        variant: VariantTag,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares reference fit on a trace's truth columns.
    FitReference {
        #[arg(long)]
        trace: PathBuf,
        /// KV, DRM or both.
        #[arg(long, default_value = "both")]
        law: String,
    },
    /// Run an experiment (one or more specimens) and report it.
    Experiment {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated specimens; defaults to the configured preset.
        #[arg(long, value_delimiter = ',')]
        presets: Vec<Preset>,
        /// Directory for report.txt and report.kv; the table goes to
        /// standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the table of a saved key-value report, or run an experiment and
    /// write per-variant time series for plotting.
    Report {
        #[command(flatten)]
        config: ConfigArgs,
        /// Saved key-value report to render.
        #[arg(long, conflicts_with = "emit_series")]
        input: Option<PathBuf>,
        /// Re-judge detections at this relative threshold.
        #[arg(long, requires = "input")]
        threshold: Option<f64>,
        /// Directory for trace and estimate CSVs of every specimen and variant.
        #[arg(long)]
        emit_series: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        presets: Vec<Preset>,
    },
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    /// Truth law of the simulated body: KV or DRM.
    #[arg(long)]
    truth: Option<String>,
    /// Clean measurements at the fast noise-free sample rate.
    #[arg(long)]
    noise_free: bool,
    /// Noise seed (overrides the file and the environment).
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated time [s].
    #[arg(long)]
    duration: Option<f64>,
    /// Any configuration key, e.g. --set plant.gains.K33=0.8
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => Failure::Usage(c.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn runtime<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{context}: {e}"))
}

fn parse_law(s: &str) -> Result<ModelKind, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "kv" => Ok(ModelKind::Kv),
        "drm" => Ok(ModelKind::Drm),
        _ => Err(Failure::Usage(format!("unknown law '{s}' (expected KV or DRM)"))),
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let file = match &self.config {
            Some(path) => Some(
                fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?,
            ),
            None => None,
        };
        let mut overrides = Vec::new();
        if let Some(seed) = self.seed {
            overrides.push(("plant.noise.seed".to_string(), seed.to_string()));
        }
        if let Some(d) = self.duration {
            overrides.push(("experiment.duration".to_string(), d.to_string()));
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got '{item}'")))?;
            overrides.push((k.to_string(), v.to_string()));
        }
        let sources = ConfigSources {
            preset: self.preset,
            truth: self.truth.as_deref().map(parse_law).transpose()?,
            noise_free: self.noise_free.then_some(true),
            file,
            env_seed: std::env::var(SEED_ENV).ok(),
            overrides,
        };
        Ok(resolve_config(&sources)?)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(runtime(&format!("cannot create {}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_trace(path: &Path) -> Result<Vec<palpation::plant::TraceSample>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
    read_trace(file).map_err(runtime(&format!("{}", path.display())))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn campaign(cfg: &ExperimentConfig, presets: &[Preset]) -> Result<CampaignReport, Failure> {
    let presets = if presets.is_empty() { vec![cfg.preset] } else { presets.to_vec() };
    Ok(run_campaign(cfg, &presets)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = config.resolve()?;
            let trace = simulate(&cfg.plant, cfg.duration).map_err(runtime("simulation failed"))?;
            write_trace(output(out.as_deref())?, &trace).map_err(runtime("writing trace"))?;
        }
        Command::Estimate { config, trace, variant, out } => {
            let cfg = config.resolve()?;
            let samples = load_trace(&trace)?;
            let mut fc = cfg.filter_for(variant);
            if let [a, b, ..] = samples[..] {
                fc.dt = b.t - a.t;
            }
            let model = cfg
                .model_variants()
                .into_iter()
                .find(|v| v.tag == variant)
                .unwrap_or(palpation::estimator::ModelVariant {
                    tag: variant,
                    controller_mode: cfg.filter_mode,
                    gains: cfg.plant.gains,
                    m_i: cfg.plant.m_i,
                });
            let beliefs = run_filter(&samples, &model, &fc).map_err(runtime("filter failed"))?;
            write_estimates(output(out.as_deref())?, &beliefs, variant.law()).map_err(runtime("writing estimates"))?;
        }
        Command::FitReference { trace, law } => {
            let samples = load_trace(&trace)?;
            let laws = match law.to_ascii_lowercase().as_str() {
                "both" => vec![ModelKind::Kv, ModelKind::Drm],
                other => vec![parse_law(other)?],
            };
            let mut out = output(None)?;
            for kind in laws {
                let fit = fit_ls(&samples, kind).map_err(runtime(&format!("{} fit failed", kind.as_str())))?;
                let (k, c) = fit.params.coefficients();
                let name = kind.as_str().to_ascii_lowercase();
                let write = |out: &mut Box<dyn Write>| -> io::Result<()> {
                    writeln!(out, "{name}.stiffness = {k:?}")?;
                    writeln!(out, "{name}.damping = {c:?}")?;
                    writeln!(out, "{name}.residual_mse = {:?}", fit.residual_mse)?;
                    writeln!(out, "{name}.n_samples = {}", fit.n_samples)?;
                    if let Some(cond) = fit.condition_number {
                        writeln!(out, "{name}.condition_number = {cond:?}")?;
                    }
                    Ok(())
                };
                write(&mut out).map_err(runtime("writing fit"))?;
            }
            out.flush().map_err(runtime("writing fit"))?;
        }
        Command::Experiment { config, presets, out } => {
            let cfg = config.resolve()?;
            let c = campaign(&cfg, &presets)?;
            let table = render_table(&c);
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(runtime(&format!("cannot create {}", dir.display())))?;
                    fs::write(dir.join("report.txt"), &table).map_err(runtime("writing report.txt"))?;
                    fs::write(dir.join("report.kv"), render_kv(&c, now())).map_err(runtime("writing report.kv"))?;
                }
                None => print!("{table}"),
            }
        }
        Command::Report { config, input, threshold, emit_series, presets } => {
            if let Some(path) = input {
                let text = fs::read_to_string(&path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                let mut c = parse_kv_report(&text).map_err(runtime(&format!("{}", path.display())))?;
                if let Some(t) = threshold {
                    c.detections = reclassify(&c, t);
                }
                print!("{}", render_table(&c));
                return Ok(());
            }
            let Some(dir) = emit_series else {
                return Err(Failure::Usage("report needs --input FILE or --emit-series DIR".into()));
            };
            let cfg = config.resolve()?;
            fs::create_dir_all(&dir).map_err(runtime(&format!("cannot create {}", dir.display())))?;
            let presets = if presets.is_empty() { vec![cfg.preset] } else { presets };
            for p in presets {
                let run = run_experiment_detailed(&cfg.for_specimen(p))?;
                let create = |name: String| {
                    File::create(dir.join(&name)).map(BufWriter::new).map_err(runtime(&format!("cannot create {name}")))
                };
                write_trace(create(format!("{p}_trace.csv"))?, &run.trace).map_err(runtime("writing trace"))?;
                for (tag, beliefs) in &run.estimates {
                    write_estimates(create(format!("{p}_{tag}.csv"))?, beliefs, tag.law())
                        .map_err(runtime("writing estimates"))?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
