use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthRule {
    /// `a_i = i! * 2^i`, truncated at a cap.
    GeometricSuper,
    ExplicitList,
}

/// Increasing integer frequencies `a_0 = 1 < a_1 < ...` with strictly
/// increasing ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLadder {
    pub values: Vec<u64>,
    pub rule: GrowthRule,
}

impl FrequencyLadder {
    /// All values of `i! * 2^i` not exceeding `a_max`.
    pub fn geometric_super(a_max: u64) -> Result<Self> {
        if a_max == 0 {
            return Err(Error::param("a_max must be at least 1"));
        }
        let mut values = vec![1u64];
        let mut i = 1u64;
        loop {
            let last = *values.last().unwrap();
            let Some(next) = last.checked_mul(2 * i) else { break };
            if next > a_max {
                break;
            }
            values.push(next);
            i += 1;
        }
        Ok(Self {
            values,
            rule: GrowthRule::GeometricSuper,
        })
    }

    pub fn explicit(values: Vec<u64>) -> Result<Self> {
        let ladder = Self {
            values,
            rule: GrowthRule::ExplicitList,
        };
        ladder.check()?;
        Ok(ladder)
    }

    pub fn check(&self) -> Result<()> {
        let v = &self.values;
        if v.first() != Some(&1) {
            return Err(Error::param("frequency ladder must start with a_0 = 1"));
        }
        for w in v.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::param(format!(
                    "frequency ladder must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for w in v.windows(3) {
            // a2/a1 > a1/a0  <=>  a2*a0 > a1^2
            if (w[2] as u128) * (w[0] as u128) <= (w[1] as u128) * (w[1] as u128) {
                return Err(Error::param(format!(
                    "ladder ratios must strictly increase: {}/{} vs {}/{}",
                    w[2], w[1], w[1], w[0]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<u64> {
        self.values.get(i).copied()
    }

    /// Keeps only values `<= a_max`.
    pub fn capped(&self, a_max: u64) -> Self {
        Self {
            values: self.values.iter().copied().filter(|&a| a <= a_max).collect(),
            rule: self.rule,
        }
    }
}

/// Strip counts per unit x-level: level `n` splits `[0,1]` into
/// `M_n = N_0 * ... * N_n` strips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripLayout {
    #[serde(rename = "N")]
    pub n: Vec<u64>,
    pub blend_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StripKind {
    EvenCore,
    OddBlend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StripInfo {
    pub index: u64,
    pub kind: StripKind,
}

impl StripInfo {
    /// Frequency index `(j mod N_n) / 2` of an even strip.
    pub fn frequency_index(&self, n_level: u64) -> Option<usize> {
        match self.kind {
            StripKind::EvenCore => Some(((self.index % n_level) / 2) as usize),
            StripKind::OddBlend => None,
        }
    }
}

impl StripLayout {
    pub fn new(n: Vec<u64>, blend_width: f64) -> Result<Self> {
        let layout = Self { n, blend_width };
        layout.check()?;
        Ok(layout)
    }

    pub fn check(&self) -> Result<()> {
        if self.n.is_empty() {
            return Err(Error::param("layout needs at least N_0"));
        }
        if let Some(bad) = self.n.iter().find(|&&v| v < 2 || v % 2 == 1) {
            return Err(Error::param(format!(
                "strip counts must be even and >= 2, got {bad}"
            )));
        }
        if !(self.blend_width > 0.0 && self.blend_width < 0.5) {
            return Err(Error::param(format!(
                "blend_width must lie in (0, 1/2), got {}",
                self.blend_width
            )));
        }
        self.m_checked(self.n.len() - 1)?;
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.n.len()
    }

    fn m_checked(&self, level: usize) -> Result<u64> {
        let mut m = 1u64;
        for &v in &self.n[..=level] {
            m = m.checked_mul(v).filter(|&m| m <= (1u64 << 52)).ok_or_else(|| {
                Error::Capacity(format!("M_{level} exceeds 2^52 strips"))
            })?;
        }
        Ok(m)
    }

    /// `M_n`; `M_{-1} = 1` is represented by [`StripLayout::m_before`].
    pub fn m(&self, level: usize) -> u64 {
        self.n[..=level].iter().product()
    }

    /// `M_{n-1}`, with `M_{-1} = 1`.
    pub fn m_before(&self, level: usize) -> u64 {
        if level == 0 {
            1
        } else {
            self.m(level - 1)
        }
    }

    /// Number of distinct frequencies used at `level`.
    pub fn frequencies_at(&self, level: usize) -> usize {
        (self.n[level] / 2) as usize
    }
}

/// Strip containing `y` at `level`: `j = floor(y * M_n)`, with `y = 1`
/// assigned to the top strip.
pub fn strip_of(y: f64, level: usize, layout: &StripLayout) -> Result<StripInfo> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("y = {y} outside [0, 1]")));
    }
    if level >= layout.levels() {
        return Err(Error::param(format!(
            "layout defines {} levels, asked for level {level}",
            layout.levels()
        )));
    }
    Ok(strip_unchecked(y, layout.m(level)))
}

#[inline]
pub(crate) fn strip_unchecked(y: f64, m: u64) -> StripInfo {
    let j = ((y * m as f64).floor() as u64).min(m - 1);
    StripInfo {
        index: j,
        kind: if j.is_multiple_of(2) {
            StripKind::EvenCore
        } else {
            StripKind::OddBlend
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder() {
        let l = FrequencyLadder::geometric_super(1000).unwrap();
        assert_eq!(l.values, vec![1, 2, 8, 48, 384]);
        l.check().unwrap();
    }

    #[test]
    fn ladder_rejections() {
        assert!(FrequencyLadder::explicit(vec![2, 4]).is_err());
        assert!(FrequencyLadder::explicit(vec![1, 3, 3]).is_err());
        // ratios 3, 2: not increasing
        assert!(FrequencyLadder::explicit(vec![1, 3, 6]).is_err());
        assert!(FrequencyLadder::explicit(vec![1, 3, 10, 40]).is_ok());
    }

    #[test]
    fn strip_examples() {
        let l = StripLayout::new(vec![4, 6], 0.25).unwrap();
        let s = strip_of(0.0, 0, &l).unwrap();
        assert_eq!((s.index, s.kind, s.frequency_index(4)), (0, StripKind::EvenCore, Some(0)));
        let s = strip_of(0.3, 0, &l).unwrap();
        assert_eq!((s.index, s.kind), (1, StripKind::OddBlend));
        assert_eq!(l.m(1), 24);
        let s = strip_of(0.13, 1, &l).unwrap();
        assert_eq!((s.index, s.kind), (3, StripKind::OddBlend));
        assert_eq!(strip_of(1.0, 1, &l).unwrap().index, 23);
    }

    #[test]
    fn strip_domain_errors() {
        let l = StripLayout::new(vec![4], 0.25).unwrap();
        assert!(matches!(strip_of(-0.1, 0, &l), Err(Error::Domain(_))));
        assert!(matches!(strip_of(1.5, 0, &l), Err(Error::Domain(_))));
    }

    #[test]
    fn layout_rejections() {
        assert!(StripLayout::new(vec![3], 0.25).is_err());
        assert!(StripLayout::new(vec![0], 0.25).is_err());
        assert!(StripLayout::new(vec![4], 0.5).is_err());
        assert!(StripLayout::new(vec![], 0.25).is_err());
    }
}
