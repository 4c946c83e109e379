use serde::{Deserialize, Serialize};

use super::field::{CoefficientField, Drivers};
use super::layout::{FrequencyLadder, GrowthRule, StripLayout};
use super::profile::{PeriodicProfile, ProfileKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    OneDriver,
    TwoDriver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            kind: ProfileKind::FlatPointBump,
            lower: 0.5,
            upper: 1.0,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<GrowthRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<u64>>,
    #[serde(default = "default_a_max")]
    pub a_max: u64,
}

fn default_a_max() -> u64 {
    1000
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            rule: None,
            values: None,
            a_max: default_a_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    #[serde(rename = "N")]
    pub n: Vec<u64>,
    #[serde(default = "default_blend")]
    pub blend_width: f64,
}

fn default_blend() -> f64 {
    0.25
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            n: vec![4, 6, 8, 10],
            blend_width: default_blend(),
        }
    }
}

/// Text description of a coefficient field (`[profile]`, `[ladder]`,
/// `[layout]` tables plus `variant`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default)]
    pub layout: LayoutConfig,
}

impl FieldConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Profile as described, without the `[1/2, 1]` range check.
    pub fn profile(&self) -> Result<PeriodicProfile> {
        let p = &self.profile;
        let profile = match p.kind {
            ProfileKind::CustomTable => {
                let samples = p
                    .samples
                    .clone()
                    .ok_or_else(|| Error::Config("custom_table needs profile.samples".into()))?;
                PeriodicProfile::from_samples(samples)?
            }
            kind => PeriodicProfile::unchecked(kind, p.lower, p.upper),
        };
        profile.check()?;
        Ok(profile)
    }

    pub fn drivers(&self) -> Result<Drivers> {
        let profile = self.profile()?;
        match self.variant {
            Variant::OneDriver => Ok(Drivers::one(profile)),
            Variant::TwoDriver => Drivers::two_from_h1_range(&profile, profile.lower, profile.upper),
        }
    }

    pub fn ladder(&self) -> Result<FrequencyLadder> {
        match (&self.ladder.values, self.ladder.rule) {
            (Some(values), None | Some(GrowthRule::ExplicitList)) => {
                Ok(FrequencyLadder::explicit(values.clone())?.capped(self.ladder.a_max))
            }
            (None, None | Some(GrowthRule::GeometricSuper)) => {
                FrequencyLadder::geometric_super(self.ladder.a_max)
            }
            (Some(_), Some(GrowthRule::GeometricSuper)) => Err(Error::Config(
                "ladder.values given together with rule = geometric_super".into(),
            )),
            (None, Some(GrowthRule::ExplicitList)) => {
                Err(Error::Config("rule = explicit_list needs ladder.values".into()))
            }
        }
    }

    pub fn build(&self) -> Result<CoefficientField> {
        CoefficientField::new(
            self.drivers()?,
            self.ladder()?,
            StripLayout::new(self.layout.n.clone(), self.layout.blend_width)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_description() {
        let text = r#"
            variant = "two_driver"
            [profile]
            kind = "flat_point_bump"
            lower = 0.5
            upper = 0.8660254037844386
            [ladder]
            values = [1, 3, 12]
            [layout]
            N = [4, 6]
            blend_width = 0.2
        "#;
        let cfg = FieldConfig::from_toml(text).unwrap();
        let f = cfg.build().unwrap();
        assert_eq!(f.ladder.values, vec![1, 3, 12]);
        assert_eq!(f.drivers.count(), 2);
    }

    #[test]
    fn defaults_build() {
        let f = FieldConfig::default().build().unwrap();
        assert_eq!(f.ladder.values, vec![1, 2, 8, 48, 384]);
        assert_eq!(f.layout.n, vec![4, 6, 8, 10]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = FieldConfig::from_toml("[profile]\nkind = \"raised_cosine\"\nlower = 0.5\nupper = 1.0\ncolour = 3\n");
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
