//! Configured experiments, versioned result records and summaries.

mod config;
mod dichotomy;
mod presets;
mod record;
mod report;
mod run;

pub use config::{
    BumpSpec, DichotomyMode, ExperimentConfig, ExperimentKind, ObservableSpec, OutputSpec, PointSpec, Tolerances,
    WeightSource,
};
pub use dichotomy::{dichotomy, DichotomyParams, DichotomyReport, Verdict, DENSITY_CAVEAT};
pub use presets::{preset_inverse_rep, preset_point, ten_bump_cover, PRESETS};
pub use record::{
    append_record, config_hash, content_id, read_records, Environment, Exponents, ResultRecord, RunStatus, Table,
    SCHEMA_VERSION,
};
pub use report::{report, Criterion, Report, AVERAGE_SLOPE_MAX};
pub use run::{
    execute, rescale, run, run_record, verdict_of, AveragePayload, BlocksPayload, MixingPayload, OrbitPayload,
    ReducePayload, RunArtifacts, RunOutput, SievePayload,
};
