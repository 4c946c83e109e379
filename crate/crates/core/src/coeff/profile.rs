use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `lower + (upper - lower) * bump(x mod 1)`, all derivatives zero at integers.
    FlatPointBump,
    /// `lower + (upper - lower) * (1 - cos 2 pi x) / 2`.
    RaisedCosine,
    /// Periodic cubic interpolation of uniform samples on `[0, 1)`.
    CustomTable,
    /// Probe profile equal to `upper` everywhere.
    Constant,
}

/// Smooth function of period 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicProfile {
    pub kind: ProfileKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

/// `exp(4 - 1/(s(1-s)))` on `(0,1)`, zero at the endpoints; peaks at 1 for s = 1/2.
#[inline]
pub fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    (4.0 - 1.0 / (s * (1.0 - s))).exp()
}

impl PeriodicProfile {
    /// Flat-point profile with range `[lower, upper]` inside `[1/2, 1]`.
    pub fn flat_point_bump(lower: f64, upper: f64) -> Result<Self> {
        check_conformant(lower, upper)?;
        Ok(Self::unchecked(ProfileKind::FlatPointBump, lower, upper))
    }

    /// `3/4 - cos(2 pi x)/4` for the default bounds.
    pub fn raised_cosine(lower: f64, upper: f64) -> Result<Self> {
        check_conformant(lower, upper)?;
        Ok(Self::unchecked(ProfileKind::RaisedCosine, lower, upper))
    }

    /// Profile from uniform samples `f(i/n)`, `i = 0..n`.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::param("custom table needs at least 4 samples"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("custom table contains non-finite samples"));
        }
        let lower = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kind: ProfileKind::CustomTable,
            lower,
            upper,
            samples: Some(samples),
        })
    }

    /// Constant probe profile `H = c`.
    pub fn constant(c: f64) -> Self {
        Self::unchecked(ProfileKind::Constant, c, c)
    }

    /// Builds a profile without the `[1/2, 1]` range check. Used for probing
    /// tools and for angle profiles; `validate_field` reports any violation.
    pub fn unchecked(kind: ProfileKind, lower: f64, upper: f64) -> Self {
        Self {
            kind,
            lower,
            upper,
            samples: None,
        }
    }

    /// Structural checks that every kind must pass before evaluation.
    pub fn check(&self) -> Result<()> {
        let ordered = match self.kind {
            ProfileKind::Constant => self.lower <= self.upper,
            _ => self.lower < self.upper,
        };
        if !(self.lower.is_finite() && self.upper.is_finite()) || !ordered {
            return Err(Error::param(format!(
                "profile bounds must satisfy lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        match (&self.kind, &self.samples) {
            (ProfileKind::CustomTable, None) => {
                Err(Error::param("custom_table profile needs samples"))
            }
            (ProfileKind::CustomTable, Some(s)) if s.len() < 4 => {
                Err(Error::param("custom table needs at least 4 samples"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = x - x.floor();
        match self.kind {
            ProfileKind::FlatPointBump => self.lower + (self.upper - self.lower) * bump(s),
            ProfileKind::RaisedCosine => {
                self.lower + (self.upper - self.lower) * 0.5 * (1.0 - (TAU * s).cos())
            }
            ProfileKind::CustomTable => {
                catmull_rom_periodic(self.samples.as_deref().unwrap_or(&[0.0; 4]), s)
            }
            ProfileKind::Constant => self.upper,
        }
    }

    /// Whether the range lies in `[1/2, 1]`.
    pub fn in_unit_band(&self) -> bool {
        self.lower >= 0.5 && self.upper <= 1.0
    }

    pub fn is_constant(&self) -> bool {
        self.kind == ProfileKind::Constant
    }
}

fn check_conformant(lower: f64, upper: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&lower) || !(0.5..=1.0).contains(&upper) || lower >= upper {
        return Err(Error::param(format!(
            "profile range must satisfy 1/2 <= lower < upper <= 1, got [{lower}, {upper}]"
        )));
    }
    Ok(())
}

fn catmull_rom_periodic(samples: &[f64], s: f64) -> f64 {
    let n = samples.len();
    let pos = s * n as f64;
    let i = (pos.floor() as usize) % n;
    let t = pos - pos.floor();
    let p0 = samples[(i + n - 1) % n];
    let p1 = samples[i];
    let p2 = samples[(i + 1) % n];
    let p3 = samples[(i + 2) % n];
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
}

const STEP_CELLS: usize = 512;
const CELL_PANELS: usize = 32;

/// Simpson rule with `CELL_PANELS` panels for the bump on `[a, b]`.
fn bump_integral(a: f64, b: f64) -> f64 {
    let k = (b - a) / CELL_PANELS as f64;
    let mut s = bump(a) + bump(b);
    for j in 1..CELL_PANELS {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        s += w * bump(a + j as f64 * k);
    }
    s * k / 3.0
}

fn step_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 1.0 / STEP_CELLS as f64;
        let mut cumulative = Vec::with_capacity(STEP_CELLS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for c in 0..STEP_CELLS {
            acc += bump_integral(c as f64 * h, (c + 1) as f64 * h);
            cumulative.push(acc);
        }
        cumulative
    })
}

/// Smooth monotone step from 0 (w <= 0) to 1 (w >= 1): the normalized running
/// integral of [`bump`], tabulated per cell and completed by Simpson on the
/// partial cell.
pub fn smooth_step(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w >= 1.0 {
        return 1.0;
    }
    let table = step_table();
    let h = 1.0 / STEP_CELLS as f64;
    let c = ((w / h).floor() as usize).min(STEP_CELLS - 1);
    let a = c as f64 * h;
    let v = (table[c] + bump_integral(a, w)).clamp(table[c], table[c + 1]);
    v / table[STEP_CELLS]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_point_values() {
        let h = PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap();
        assert_eq!(h.eval(0.0), 0.5);
        assert_eq!(h.eval(0.5), 1.0);
        // exp(4 - 16/3) computed independently: 4 - 1/(0.25*0.75) = -4/3
        let expected = 0.5 + 0.5 * (-4.0f64 / 3.0).exp();
        assert!((h.eval(0.25) - expected).abs() < 1e-15);
        assert!((expected - 0.631_798_569_057_863_4).abs() < 1e-15);
    }

    #[test]
    fn flat_point_derivatives_vanish() {
        let h = PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap();
        let d = 1e-3;
        let first = (h.eval(d) - h.eval(-d)) / (2.0 * d);
        let second = (h.eval(d) - 2.0 * h.eval(0.0) + h.eval(-d)) / (d * d);
        assert!(first.abs() < 1e-8 && second.abs() < 1e-8);
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(PeriodicProfile::flat_point_bump(0.4, 1.0).is_err());
        assert!(PeriodicProfile::flat_point_bump(0.7, 0.6).is_err());
        assert!(PeriodicProfile::flat_point_bump(0.5, 1.2).is_err());
        assert!(PeriodicProfile::flat_point_bump(0.8, 0.8).is_err());
    }

    #[test]
    fn raised_cosine_default() {
        let h = PeriodicProfile::raised_cosine(0.5, 1.0).unwrap();
        for i in 0..50 {
            let x = i as f64 / 37.0;
            let want = 0.75 - 0.25 * (TAU * x).cos();
            assert!((h.eval(x) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn custom_table_interpolates_nodes() {
        let samples: Vec<f64> = (0..16)
            .map(|i| 0.75 - 0.25 * (TAU * i as f64 / 16.0).cos())
            .collect();
        let h = PeriodicProfile::from_samples(samples.clone()).unwrap();
        for (i, v) in samples.iter().enumerate() {
            assert!((h.eval(i as f64 / 16.0) - v).abs() < 1e-14);
        }
        assert!((h.eval(0.3) - (0.75 - 0.25 * (TAU * 0.3).cos())).abs() < 5e-3);
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 1..1000 {
            let w = i as f64 / 1000.0;
            let v = smooth_step(w);
            assert!(v >= prev, "w={w} v={v:e} prev={prev:e}");
            assert!((v + smooth_step(1.0 - w) - 1.0).abs() < 1e-12);
            prev = v;
        }
    }
}
