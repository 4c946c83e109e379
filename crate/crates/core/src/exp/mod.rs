//! Experiment configuration, runners and report emission.

mod config;
mod report;
mod runs;
mod union;

pub use config::{
    BcSuiteConfig, CrossConfig, ExperimentConfig, ExperimentKind, HomogConfig, PlanConfig,
    ProbeConfig, RaceConfig, UnionConfig,
};
pub use report::{config_hash, emit_report, Cell, Check, ExperimentReport, Provenance, Table};
pub use runs::{
    run, run_bc_suite, run_coeff_probe, run_cross_qv, run_homog_sweep, run_plan, run_race,
    run_union, transcripts_consistent, LevelPlan, MIN_RACE_DT,
};
pub use union::{run_union_experiment, UnionCurve};
