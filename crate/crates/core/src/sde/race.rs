//! Level race: restart every even strip of the current interval at `x = n`
//! and wait for the first one to reach `n + 1`.

use serde::{Deserialize, Serialize};

use super::brownian::{BrownianPath, Noise};
use super::integrate::required_dt;
use crate::coeff::{Coefficient, CoefficientField, LineCoefficient};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaceLevel {
    /// `n + 1` for the crossing of `n + 1`.
    pub level: usize,
    pub tau: f64,
    /// Index of `I_{n+1}` among the `M_n` strips of level `n`.
    pub strip_index: u64,
    pub lo: f64,
    pub hi: f64,
    pub winner_frequency: u64,
    pub racers: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceTranscript {
    pub levels: Vec<RaceLevel>,
    pub complete: bool,
    pub level_max: usize,
    pub horizon: f64,
}

impl RaceTranscript {
    /// `tau_{n+1} - tau_n` for every completed level, starting at `n = 0`.
    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.levels
            .iter()
            .map(|l| {
                let g = l.tau - prev;
                prev = l.tau;
                g
            })
            .collect()
    }

    /// Time at which level `n` was entered (`tau_0 = 0`).
    pub fn tau(&self, n: usize) -> Option<f64> {
        if n == 0 {
            Some(0.0)
        } else {
            self.levels.get(n - 1).map(|l| l.tau)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaceOptions {
    pub rho: f64,
    pub grid_per_strip: usize,
}

impl Default for RaceOptions {
    fn default() -> Self {
        Self {
            rho: super::DEFAULT_RHO,
            grid_per_strip: 1,
        }
    }
}

/// Largest frequency reachable by racers of `level` (including lower levels).
pub fn active_frequency(field: &CoefficientField, level: usize) -> f64 {
    if field.drivers.base().is_constant() {
        return 0.0;
    }
    (0..=level.min(field.layout.levels() - 1))
        .map(|m| field.ladder.values[field.layout.frequencies_at(m) - 1] as f64)
        .fold(1.0, f64::max)
}

/// Number of halvings of `dt` needed to satisfy the step policy at `frequency`.
pub fn refinement_for(dt: f64, frequency: f64, rho: f64) -> u32 {
    let need = required_dt(frequency, rho);
    let mut r = 0;
    let mut d = dt;
    while d > need * (1.0 + 1e-12) {
        d *= 0.5;
        r += 1;
    }
    r
}

struct Racer {
    line: LineCoefficient,
    strip: u64,
    frequency: u64,
}

/// Runs the race for levels `0..=level_max` on `path`. Each level uses the
/// coarsest dyadic refinement of `path.dt()` that satisfies the step policy
/// for the frequencies in play; the underlying Brownian motion is the same at
/// every refinement.
pub fn race_stopping_times(
    field: &CoefficientField,
    level_max: usize,
    path: &BrownianPath,
    opts: &RaceOptions,
) -> Result<RaceTranscript> {
    if level_max >= field.layout.levels() {
        return Err(Error::param(format!(
            "layout defines {} levels, race needs {}",
            field.layout.levels(),
            level_max + 1
        )));
    }
    if opts.grid_per_strip == 0 {
        return Err(Error::param("grid_per_strip must be positive"));
    }
    let mut transcript = RaceTranscript {
        levels: Vec::with_capacity(level_max + 1),
        complete: false,
        level_max,
        horizon: path.horizon(),
    };
    let (mut tau, mut interval) = (0.0f64, 0u64);

    for n in 0..=level_max {
        let n_level = field.layout.n[n];
        let m = field.layout.m(n);
        let fine = path.refined(refinement_for(path.dt(), active_frequency(field, n), opts.rho))?;
        let dt = fine.dt();

        let g = opts.grid_per_strip;
        let mut racers = Vec::new();
        for j in (0..n_level).step_by(2) {
            let strip = interval * n_level + j;
            for r in 0..g {
                let y = (strip as f64 + (r as f64 + 0.5) / g as f64) / m as f64;
                racers.push(Racer {
                    line: field.line(y),
                    strip,
                    frequency: field.strip_frequency(n, strip),
                });
            }
        }

        let start = (tau / dt - 1e-9).ceil().max(0.0) as usize;
        let target = (n + 1) as f64;
        let mut xs = vec![n as f64; racers.len()];
        let mut winner: Option<(f64, usize)> = None;
        for (k, dw) in Noise::new(&fine, start).enumerate() {
            for (i, racer) in racers.iter().enumerate() {
                let x = xs[i];
                let s = racer.line.sigma(x);
                let next = x + s[0] * dw[0] + s[1] * dw[1];
                if next >= target && x < target {
                    let frac = (target - x) / (next - x);
                    if winner.is_none_or(|(f, _)| frac < f) {
                        winner = Some((frac, i));
                    }
                }
                xs[i] = next;
            }
            if let Some((frac, i)) = winner {
                let racer = &racers[i];
                tau = (start + k) as f64 * dt + frac * dt;
                interval = racer.strip;
                transcript.levels.push(RaceLevel {
                    level: n + 1,
                    tau,
                    strip_index: racer.strip,
                    lo: racer.strip as f64 / m as f64,
                    hi: (racer.strip + 1) as f64 / m as f64,
                    winner_frequency: racer.frequency,
                    racers: racers.len() / g,
                    dt,
                });
                break;
            }
        }
        if winner.is_none() {
            return Ok(transcript);
        }
    }
    transcript.complete = true;
    Ok(transcript)
}
