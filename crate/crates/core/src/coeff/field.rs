use serde::{Deserialize, Serialize};

use super::layout::{strip_unchecked, FrequencyLadder, StripKind, StripLayout};
use super::profile::{smooth_step, PeriodicProfile};
use crate::error::{Error, Result};

/// Diffusion coefficient restricted to one horizontal line.
pub trait Coefficient: Sync {
    /// Number of driving Brownian motions (1 or 2).
    fn drivers(&self) -> usize;
    /// `[sigma_1(x), sigma_2(x)]`; the second entry is 0 for one driver.
    fn sigma(&self, x: f64) -> [f64; 2];
    /// Largest oscillation frequency the line can reach; 0 for constant fields.
    fn max_frequency(&self) -> f64;
}

/// Profile(s) feeding the field: a single `H`, or an angle profile `theta`
/// giving `H_1 = cos theta`, `H_2 = sin theta` so that `H_1^2 + H_2^2 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Drivers {
    OneDriver { profile: PeriodicProfile },
    TwoDriver { angle: PeriodicProfile },
}

impl Drivers {
    pub fn one(profile: PeriodicProfile) -> Self {
        Drivers::OneDriver { profile }
    }

    /// Pair with `H_1` ranging over `[h1_lower, h1_upper]`, shaped by `kind` of
    /// `shape` (the angle runs over `[acos h1_upper, acos h1_lower]`).
    pub fn two_from_h1_range(shape: &PeriodicProfile, h1_lower: f64, h1_upper: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&h1_lower) || !(0.0..=1.0).contains(&h1_upper) || h1_lower >= h1_upper {
            return Err(Error::param(format!(
                "H_1 range must satisfy 0 <= lower < upper <= 1, got [{h1_lower}, {h1_upper}]"
            )));
        }
        let mut angle = shape.clone();
        angle.lower = h1_upper.acos();
        angle.upper = h1_lower.acos();
        Ok(Drivers::TwoDriver { angle })
    }

    /// Default two-driver pair: both `H_1`, `H_2` in `[1/2, sqrt(3)/2]`.
    pub fn default_pair() -> Self {
        let shape = PeriodicProfile::flat_point_bump(0.5, 1.0).expect("static bounds");
        Self::two_from_h1_range(&shape, 0.5, 0.75f64.sqrt()).expect("static bounds")
    }

    pub fn count(&self) -> usize {
        match self {
            Drivers::OneDriver { .. } => 1,
            Drivers::TwoDriver { .. } => 2,
        }
    }

    pub fn base(&self) -> &PeriodicProfile {
        match self {
            Drivers::OneDriver { profile } => profile,
            Drivers::TwoDriver { angle } => angle,
        }
    }

    /// Value of the underlying profile (H or the angle); blending acts on this.
    #[inline]
    pub fn raw(&self, x: f64) -> f64 {
        self.base().eval(x)
    }

    #[inline]
    pub fn output(&self, raw: f64) -> [f64; 2] {
        match self {
            Drivers::OneDriver { .. } => [raw, 0.0],
            Drivers::TwoDriver { .. } => [raw.cos(), raw.sin()],
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> [f64; 2] {
        self.output(self.raw(x))
    }

    pub fn h1(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    pub fn h2(&self, x: f64) -> f64 {
        self.eval(x)[1]
    }

    pub fn check(&self) -> Result<()> {
        self.base().check()
    }
}

/// Multi-frequency strip field on `R x [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub drivers: Drivers,
    pub ladder: FrequencyLadder,
    pub layout: StripLayout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LevelRule {
    Freq(f64),
    /// `(1 - w) * P(lo x) + w * P(hi x)`
    Blend { lo: f64, hi: f64, w: f64 },
}

impl CoefficientField {
    pub fn new(drivers: Drivers, ladder: FrequencyLadder, layout: StripLayout) -> Result<Self> {
        let field = Self {
            drivers,
            ladder,
            layout,
        };
        field.check()?;
        Ok(field)
    }

    pub fn check(&self) -> Result<()> {
        self.drivers.check()?;
        self.ladder.check()?;
        self.layout.check()?;
        let needed = (0..self.layout.levels())
            .map(|n| self.layout.frequencies_at(n))
            .max()
            .unwrap_or(0);
        if needed > self.ladder.len() {
            return Err(Error::param(format!(
                "layout needs {needed} frequencies but the ladder has {}",
                self.ladder.len()
            )));
        }
        Ok(())
    }

    /// Frequency `a_i` used by even strip `j` at `level`.
    pub fn strip_frequency(&self, level: usize, strip: u64) -> u64 {
        let n = self.layout.n[level];
        self.ladder.values[((strip % n) / 2) as usize]
    }

    pub(crate) fn rule(&self, level: usize, y: f64) -> LevelRule {
        let m = self.layout.m(level);
        let s = strip_unchecked(y, m);
        match s.kind {
            StripKind::EvenCore => LevelRule::Freq(self.strip_frequency(level, s.index) as f64),
            StripKind::OddBlend => {
                let lo = self.strip_frequency(level, s.index - 1) as f64;
                if s.index + 1 >= m {
                    return LevelRule::Freq(lo);
                }
                let hi = self.strip_frequency(level, s.index + 1) as f64;
                let h = 1.0 / m as f64;
                let center = (s.index as f64 + 0.5) * h;
                let width = self.layout.blend_width * h;
                let w = smooth_step((y - (center - 0.5 * width)) / width);
                if w <= 0.0 {
                    LevelRule::Freq(lo)
                } else if w >= 1.0 {
                    LevelRule::Freq(hi)
                } else {
                    LevelRule::Blend { lo, hi, w }
                }
            }
        }
    }

    /// Level whose strip layout governs `x > 0`; levels past the layout reuse
    /// the last one.
    #[inline]
    pub(crate) fn level_of(&self, x: f64) -> usize {
        (x.floor().max(0.0) as usize).min(self.layout.levels() - 1)
    }

    /// `sigma(x, y)`; `y` is clamped to `[0, 1]`.
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        if x <= 0.0 {
            return self.drivers.eval(x);
        }
        let y = y.clamp(0.0, 1.0);
        let rule = self.rule(self.level_of(x), y);
        self.drivers.output(apply_rule(&self.drivers, rule, x))
    }

    /// Precomputed coefficient along the line at height `y`.
    pub fn line(&self, y: f64) -> LineCoefficient {
        let y = y.clamp(0.0, 1.0);
        let rules: Vec<LevelRule> = (0..self.layout.levels()).map(|n| self.rule(n, y)).collect();
        let max_frequency = if self.drivers.base().is_constant() {
            0.0
        } else {
            rules.iter().map(rule_frequency).fold(1.0, f64::max)
        };
        LineCoefficient {
            drivers: self.drivers.clone(),
            y,
            rules,
            max_frequency,
        }
    }

    /// Largest frequency in use; 0 for a constant probe profile.
    pub fn max_frequency(&self) -> u64 {
        if self.drivers.base().is_constant() {
            return 0;
        }
        let needed = (0..self.layout.levels())
            .map(|n| self.layout.frequencies_at(n))
            .max()
            .unwrap_or(1);
        self.ladder.values[needed.max(1) - 1]
    }

    /// Value `H(0)` (or its pair image) taken on every integer line.
    pub fn glue_value(&self) -> [f64; 2] {
        self.drivers.eval(0.0)
    }
}

fn rule_frequency(rule: &LevelRule) -> f64 {
    match *rule {
        LevelRule::Freq(a) => a,
        LevelRule::Blend { lo, hi, .. } => lo.max(hi),
    }
}

#[inline]
fn apply_rule(drivers: &Drivers, rule: LevelRule, x: f64) -> f64 {
    match rule {
        LevelRule::Freq(a) => drivers.raw(a * x),
        LevelRule::Blend { lo, hi, w } => (1.0 - w) * drivers.raw(lo * x) + w * drivers.raw(hi * x),
    }
}

/// Free-function form of [`CoefficientField::eval`].
pub fn sigma_eval(field: &CoefficientField, x: f64, y: f64) -> [f64; 2] {
    field.eval(x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineCoefficient {
    drivers: Drivers,
    y: f64,
    rules: Vec<LevelRule>,
    max_frequency: f64,
}

impl LineCoefficient {
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Largest frequency met for `x < level`.
    pub fn max_frequency_below(&self, level: usize) -> f64 {
        if self.max_frequency == 0.0 {
            return 0.0;
        }
        self.rules[..level.min(self.rules.len())]
            .iter()
            .map(rule_frequency)
            .fold(1.0, f64::max)
    }

    pub fn drivers_ref(&self) -> &Drivers {
        &self.drivers
    }
}

impl Coefficient for LineCoefficient {
    fn drivers(&self) -> usize {
        self.drivers.count()
    }

    #[inline]
    fn sigma(&self, x: f64) -> [f64; 2] {
        if x <= 0.0 {
            return self.drivers.eval(x);
        }
        let level = (x.floor() as usize).min(self.rules.len() - 1);
        self.drivers.output(apply_rule(&self.drivers, self.rules[level], x))
    }

    fn max_frequency(&self) -> f64 {
        self.max_frequency
    }
}

/// `sigma = c` for every x (probe field).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficient {
    pub values: [f64; 2],
    pub drivers: usize,
}

impl ConstantCoefficient {
    pub fn one(c: f64) -> Self {
        Self {
            values: [c, 0.0],
            drivers: 1,
        }
    }
}

impl Coefficient for ConstantCoefficient {
    fn drivers(&self) -> usize {
        self.drivers
    }

    #[inline]
    fn sigma(&self, _x: f64) -> [f64; 2] {
        self.values
    }

    fn max_frequency(&self) -> f64 {
        0.0
    }
}

/// `H_1(x / eps), H_2(x / eps)`: the rapidly oscillating coefficient of the
/// homogenization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProfile {
    pub drivers: Drivers,
    pub epsilon: f64,
    inv_eps: f64,
}

impl ScaledProfile {
    pub fn new(drivers: Drivers, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            drivers,
            epsilon,
            inv_eps: 1.0 / epsilon,
        })
    }
}

impl Coefficient for ScaledProfile {
    fn drivers(&self) -> usize {
        self.drivers.count()
    }

    #[inline]
    fn sigma(&self, x: f64) -> [f64; 2] {
        self.drivers.eval(x * self.inv_eps)
    }

    fn max_frequency(&self) -> f64 {
        self.inv_eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> CoefficientField {
        CoefficientField::new(
            Drivers::one(PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap()),
            FrequencyLadder::geometric_super(1000).unwrap(),
            StripLayout::new(vec![4, 6], 0.25).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn negative_x_uses_base_profile() {
        let f = field();
        let h = PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap();
        for &y in &[0.0, 0.37, 1.0] {
            assert!((f.eval(-3.7, y)[0] - h.eval(0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn integers_glue_to_h0() {
        let f = field();
        for n in 0..5 {
            for i in 0..=50 {
                let y = i as f64 / 50.0;
                assert!((f.eval(n as f64, y)[0] - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bottom_strip_keeps_unit_frequency() {
        let f = field();
        let h = PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap();
        assert_eq!(f.eval(1.5, 0.0)[0], h.eval(0.5));
        assert_eq!(f.eval(1.5, 0.0)[0], 1.0);
    }

    #[test]
    fn even_strip_uses_its_frequency() {
        let f = field();
        // level 1: M_1 = 24, strip 2 -> (2 mod 6)/2 = 1 -> a_1 = 2
        let y = 2.5 / 24.0;
        let h = PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap();
        assert_eq!(f.eval(1.3, y)[0], h.eval(2.0 * 1.3));
        // level 0: M_0 = 4, strip 2 -> a_1 = 2
        assert_eq!(f.eval(0.3, 0.6)[0], h.eval(0.6));
    }

    #[test]
    fn odd_strip_blends_between_neighbours() {
        let f = field();
        let h = PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap();
        // level 0, odd strip 1 = [0.25, 0.5): centre 0.375, blend width 0.0625
        let x = 0.3;
        assert_eq!(f.eval(x, 0.26)[0], h.eval(x));
        assert_eq!(f.eval(x, 0.49)[0], h.eval(2.0 * x));
        let mid = f.eval(x, 0.375)[0];
        assert!((mid - 0.5 * (h.eval(x) + h.eval(2.0 * x))).abs() < 1e-12);
    }

    #[test]
    fn line_matches_pointwise() {
        let f = field();
        for &y in &[0.01, 0.2, 0.37, 0.52, 0.99] {
            let line = f.line(y);
            for i in -20..60 {
                let x = i as f64 * 0.061;
                assert_eq!(line.sigma(x), f.eval(x, y));
            }
        }
    }

    #[test]
    fn two_driver_unit_norm() {
        let f = CoefficientField::new(
            Drivers::default_pair(),
            FrequencyLadder::geometric_super(1000).unwrap(),
            StripLayout::new(vec![4, 6], 0.25).unwrap(),
        )
        .unwrap();
        for i in 0..200 {
            let x = -1.0 + i as f64 * 0.017;
            let y = (i as f64 * 0.618).fract();
            let [a, b] = f.eval(x, y);
            assert!((a * a + b * b - 1.0).abs() < 1e-12);
            assert!(a >= 0.5 - 1e-12 && b >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn ladder_must_cover_layout() {
        let r = CoefficientField::new(
            Drivers::one(PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap()),
            FrequencyLadder::explicit(vec![1, 2]).unwrap(),
            StripLayout::new(vec![6], 0.25).unwrap(),
        );
        assert!(r.is_err());
    }
}
