//! Brownian paths, Euler-Maruyama integration of common-noise bundles,
//! frozen coefficients and the level race.

mod brownian;
mod export;
mod frozen;
mod integrate;
mod race;

pub use brownian::{BrownianPath, Increments, Noise};
pub use export::{write_paths_csv, write_transcript_csv};
pub use frozen::{frozen_integrate, FrozenCoefficient};
pub(crate) use integrate::par_map;
pub use integrate::{
    check_step, integrate, integrate_bundle, integrate_line, required_dt, Exit, FlowBundle,
    IntegrateOptions, SolutionPath, StopRule, DEFAULT_RHO,
};
pub use race::{
    active_frequency, race_stopping_times, refinement_for, RaceLevel, RaceOptions, RaceTranscript,
};
