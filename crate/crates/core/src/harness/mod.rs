//! Experiment presets, configuration, file formats, runs and reports.

mod config;
mod csvio;
mod experiment;
mod presets;
mod report;

pub use config::{
    parse_kv, resolve_config, ConfigError, ConfigSources, ExperimentConfig, NOISE_FREE_SAMPLE_RATE, SEED_ENV,
    SENSORLESS_Q22,
};
pub use csvio::{
    read_estimates, read_trace, write_estimates, write_trace, CsvError, ESTIMATE_HEADER, TRACE_HEADER,
};
pub use experiment::{
    compare_stiffness, run_campaign, run_experiment, run_experiment_detailed, run_id, CampaignReport, Checkpoint,
    Detection, ExperimentReport, ExperimentRun, References, VariantOutcome, Verdict,
};
pub use presets::{Preset, INCLUSION_PAIRS};
pub use report::{parse_kv_report, reclassify, render_kv, render_table, strip_timestamp, ReportError};

use thiserror::Error;

use crate::contact::ModelKind;
use crate::estimator::{FilterError, VariantTag};
use crate::plant::PlantError;
use crate::reference::FitError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Plant(#[from] PlantError),
    #[error("{variant} filter failed: {source}")]
    Filter {
        variant: VariantTag,
        #[source]
        source: FilterError,
    },
    #[error("{} reference fit failed: {source}", law.as_str())]
    Fit {
        law: ModelKind,
        #[source]
        source: FitError,
    },
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Report(#[from] ReportError),
}
