//! TOML experiment configuration. Every section is optional; unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};

use crate::bc::{PlanGrid, RateMode};
use crate::coeff::FieldConfig;
use crate::error::{Error, Result};
use crate::sde::DEFAULT_RHO;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CoeffProbe,
    HomogSweep,
    CrossQv,
    UnionProb,
    Race,
    BcSuite,
    CorollaryPlan,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::CoeffProbe => "coeff_probe",
            Self::HomogSweep => "homog_sweep",
            Self::CrossQv => "cross_qv",
            Self::UnionProb => "union_prob",
            Self::Race => "race",
            Self::BcSuite => "bc_suite",
            Self::CorollaryPlan => "corollary_plan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub resolution: usize,
    /// Grid points per unit in x and in y of the emitted sample table.
    pub sample_x: usize,
    pub sample_y: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            resolution: 200,
            sample_x: 64,
            sample_y: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomogConfig {
    pub epsilons: Vec<f64>,
    pub t: f64,
    pub n_paths: usize,
    /// Largest admissible relative QV error at the smallest epsilon.
    pub tolerance: f64,
}

impl Default for HomogConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.2, 0.1, 0.05, 0.02],
            t: 1.0,
            n_paths: 200,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossConfig {
    pub epsilon: f64,
    pub epsilon_tilde: Vec<f64>,
    pub t: f64,
    pub n_paths: usize,
    pub cross_tolerance: f64,
    pub correlation_tolerance: f64,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            epsilon_tilde: vec![0.005],
            t: 1.0,
            n_paths: 200,
            cross_tolerance: 0.10,
            correlation_tolerance: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnionConfig {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub a: f64,
    pub delta: f64,
    pub s: f64,
    pub t: f64,
    pub n_max: usize,
    pub n_mc: usize,
    /// Grid steps per unit time.
    pub steps_per_unit: usize,
    pub target: f64,
}

impl Default for UnionConfig {
    fn default() -> Self {
        Self {
            alpha_hat: 1.0,
            beta_hat: 1.0,
            a: 1.0,
            delta: 0.1,
            s: 1.0,
            t: 1.0,
            n_max: 200,
            n_mc: 10_000,
            steps_per_unit: 1024,
            target: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RaceConfig {
    /// Number of levels raced (`0..levels`).
    pub levels: usize,
    pub seeds: usize,
    /// Frequency cap for racers.
    pub a_max: u64,
    /// Total simulated time per seed.
    pub horizon: f64,
    pub base_dt: f64,
    pub grid_per_strip: usize,
    /// Union-experiment replicas for `m_n`.
    pub union_mc: usize,
    pub union_n_max: usize,
    /// Paths for the `k_n` decorrelation estimate.
    pub k_paths: usize,
    pub k_tolerance: f64,
}

impl Default for RaceConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            seeds: 100,
            a_max: 48,
            horizon: 200.0,
            base_dt: 1.0 / 64.0,
            grid_per_strip: 1,
            union_mc: 2000,
            union_n_max: 200,
            k_paths: 200,
            k_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcSuiteConfig {
    pub n_max: usize,
    pub vectors: usize,
    pub passage_paths: usize,
    pub passage_steps: usize,
    pub rates: Vec<f64>,
    pub passage_a: f64,
    pub passage_t: f64,
}

impl Default for BcSuiteConfig {
    fn default() -> Self {
        Self {
            n_max: 12,
            vectors: 1000,
            passage_paths: 100_000,
            passage_steps: 16,
            rates: vec![0.25, 1.0],
            passage_a: 0.5,
            passage_t: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub eps: f64,
    pub m: u64,
    pub n_mc: usize,
    pub steps: usize,
    pub rate_mode: RateMode,
    pub grid: PlanGrid,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            t: 1.0,
            eps: 0.25,
            m: 2,
            n_mc: 10_000,
            steps: 1024,
            rate_mode: RateMode::Uniform,
            grid: PlanGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    /// Step policy constant: `dt <= (rho / a)^2`.
    pub rho: f64,
    pub output_dir: Option<String>,
    pub field: FieldConfig,
    pub probe: ProbeConfig,
    pub homog: HomogConfig,
    pub cross: CrossConfig,
    pub union: UnionConfig,
    pub race: RaceConfig,
    pub bc: BcSuiteConfig,
    pub plan: PlanConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 1,
            rho: DEFAULT_RHO,
            output_dir: None,
            field: FieldConfig::default(),
            probe: ProbeConfig::default(),
            homog: HomogConfig::default(),
            cross: CrossConfig::default(),
            union: UnionConfig::default(),
            race: RaceConfig::default(),
            bc: BcSuiteConfig::default(),
            plan: PlanConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML form; its SHA-256 is the config hash.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("rho", self.rho)?;
        self.field.build().map_err(|e| Error::Config(format!("field: {e}")))?;
        nonzero("probe.resolution", self.probe.resolution)?;
        let h = &self.homog;
        if h.epsilons.is_empty() {
            return Err(Error::Config("homog.epsilons is empty".into()));
        }
        for e in &h.epsilons {
            positive("homog.epsilons", *e)?;
        }
        if h.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("homog.epsilons must be strictly decreasing".into()));
        }
        positive("homog.t", h.t)?;
        nonzero("homog.n_paths", h.n_paths)?;
        positive("homog.tolerance", h.tolerance)?;
        let c = &self.cross;
        positive("cross.epsilon", c.epsilon)?;
        if c.epsilon_tilde.is_empty() {
            return Err(Error::Config("cross.epsilon_tilde is empty".into()));
        }
        for e in &c.epsilon_tilde {
            positive("cross.epsilon_tilde", *e)?;
        }
        positive("cross.t", c.t)?;
        nonzero("cross.n_paths", c.n_paths)?;
        let u = &self.union;
        for (n, v) in [("union.alpha_hat", u.alpha_hat), ("union.s", u.s), ("union.t", u.t)] {
            positive(n, v)?;
        }
        if !(u.beta_hat >= 0.0 && u.a >= 0.0 && u.delta > 0.0) {
            return Err(Error::Config("union: need beta_hat >= 0, a >= 0, delta > 0".into()));
        }
        nonzero("union.n_max", u.n_max)?;
        nonzero("union.n_mc", u.n_mc)?;
        nonzero("union.steps_per_unit", u.steps_per_unit)?;
        let r = &self.race;
        nonzero("race.levels", r.levels)?;
        nonzero("race.seeds", r.seeds)?;
        positive("race.horizon", r.horizon)?;
        positive("race.base_dt", r.base_dt)?;
        nonzero("race.grid_per_strip", r.grid_per_strip)?;
        nonzero("race.k_paths", r.k_paths)?;
        if r.a_max == 0 {
            return Err(Error::Config("race.a_max must be positive".into()));
        }
        let b = &self.bc;
        nonzero("bc.n_max", b.n_max)?;
        if b.n_max > crate::bc::ENUMERATION_LIMIT {
            return Err(Error::Config(format!(
                "bc.n_max above {} needs more than 2^24 outcomes",
                crate::bc::ENUMERATION_LIMIT
            )));
        }
        nonzero("bc.vectors", b.vectors)?;
        nonzero("bc.passage_paths", b.passage_paths)?;
        for v in &b.rates {
            positive("bc.rates", *v)?;
        }
        let p = &self.plan;
        positive("plan.alpha", p.alpha)?;
        positive("plan.beta", p.beta)?;
        positive("plan.T", p.t)?;
        nonzero("plan.n_mc", p.n_mc)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn canonical_roundtrip() {
        let c = ExperimentConfig::from_toml("seed = 9\n[homog]\nn_paths = 5\n").unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(
            ExperimentConfig::from_toml("sed = 1"),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_toml("[homog]\nfoo = 1").is_err());
        assert!(ExperimentConfig::from_toml("[homog]\nepsilons = [0.1, 0.2]").is_err());
        assert!(ExperimentConfig::from_toml("rho = -1.0").is_err());
        assert!(ExperimentConfig::from_toml("[field.profile]\nupper = 1.5").is_err());
    }
}
