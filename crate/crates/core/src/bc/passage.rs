use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::rng::{substream, CounterRng};
use crate::sde::par_map;

const PASSAGE_TAG: u64 = 0x7061_7373;

/// `2 (1 - Phi(a / sqrt(alpha t)))`: lower bound on `P(sup_{[0,t]} M >= a)`
/// for a martingale with quadratic-variation rate at least `alpha`.
/// Returns NaN outside `a >= 0, t > 0, alpha > 0`.
pub fn p0(a: f64, t: f64, alpha: f64) -> f64 {
    if !(a >= 0.0 && t > 0.0 && alpha > 0.0) {
        return f64::NAN;
    }
    (2.0 * gauss::upper_tail(a / (alpha * t).sqrt())).min(1.0)
}

/// `2 Phi(a / sqrt(beta t)) - 1`: lower bound on `P(inf_{[0,t]} M >= -a)`
/// for a martingale with quadratic-variation rate at most `beta`.
/// Returns NaN outside `a >= 0, t > 0, beta > 0`.
pub fn q0(a: f64, t: f64, beta: f64) -> f64 {
    if !(a >= 0.0 && t > 0.0 && beta > 0.0) {
        return f64::NAN;
    }
    // 1 - 2 upper_tail keeps precision when the result is close to 1
    (1.0 - 2.0 * gauss::upper_tail(a / (beta * t).sqrt())).max(0.0)
}

/// Monte Carlo frequencies of `sup_{[0,t]} W(rate s) >= a` and
/// `inf_{[0,t]} W(rate s) >= -a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageEstimate {
    pub a: f64,
    pub t: f64,
    pub rate: f64,
    pub n_paths: usize,
    pub p_sup: f64,
    pub se_sup: f64,
    pub q_inf: f64,
    pub se_inf: f64,
}

/// Simulates `n_paths` Brownian paths of variance rate `rate` on `steps`
/// equal steps and samples the exact extremum of the Brownian bridge on each
/// step, so the frequencies carry no discrete-monitoring bias. The maximum
/// and minimum use independent bridge draws: each frequency is exact in law
/// on its own, joint events are not supported.
pub fn passage_mc(a: f64, t: f64, rate: f64, n_paths: usize, steps: usize, seed: u64) -> Result<PassageEstimate> {
    if !(a >= 0.0 && t > 0.0 && rate > 0.0) || n_paths < 2 || steps == 0 {
        return Err(Error::param(format!(
            "passage_mc needs a >= 0, t > 0, rate > 0, n_paths >= 2, steps >= 1 (got {a}, {t}, {rate}, {n_paths}, {steps})"
        )));
    }
    let var = rate * t / steps as f64;
    let sd = var.sqrt();
    let hits = par_map(n_paths, |i| {
        let mut rng = CounterRng::new(substream(seed, PASSAGE_TAG, i as u64));
        let (mut x, mut hit, mut stayed) = (0.0f64, false, true);
        for _ in 0..steps {
            let y = x + sd * rng.normal();
            let d2 = (y - x) * (y - x);
            let up = 0.5 * (x + y + (d2 - 2.0 * var * rng.uniform().ln()).sqrt());
            let down = 0.5 * (x + y - (d2 - 2.0 * var * rng.uniform().ln()).sqrt());
            hit |= up >= a;
            stayed &= down >= -a;
            x = y;
        }
        (hit, stayed)
    });
    let n = n_paths as f64;
    let p = hits.iter().filter(|h| h.0).count() as f64 / n;
    let q = hits.iter().filter(|h| h.1).count() as f64 / n;
    Ok(PassageEstimate {
        a,
        t,
        rate,
        n_paths,
        p_sup: p,
        se_sup: (p * (1.0 - p) / n).sqrt(),
        q_inf: q,
        se_inf: (q * (1.0 - q) / n).sqrt(),
    })
}
