//! Periodic profiles and the multi-frequency strip coefficient field.
//!
//! For `x` in `[n, n+1]` the unit square is cut into `M_n` horizontal strips.
//! Even strip `j` carries `H(a_i x)` with `i = (j mod N_n) / 2`; odd strips
//! blend their two even neighbours with a smooth step over a centred band of
//! relative width `blend_width`, and copy the nearest neighbour outside it.
//! For `x <= 0` the field is `H(x)`. All frequencies are integers, so the
//! field equals `H(0)` on every integer line.

mod config;
mod field;
mod layout;
mod profile;
mod validate;

pub use config::{FieldConfig, LadderConfig, LayoutConfig, ProfileConfig, Variant};
pub use field::{
    sigma_eval, Coefficient, CoefficientField, ConstantCoefficient, Drivers, LineCoefficient,
    ScaledProfile,
};
pub use layout::{strip_of, FrequencyLadder, GrowthRule, StripInfo, StripKind, StripLayout};
pub use profile::{bump, smooth_step, PeriodicProfile, ProfileKind};
pub use validate::{validate_field, PointFinding, ValidationReport};
