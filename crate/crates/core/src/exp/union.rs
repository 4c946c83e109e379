//! Probability that at least one of `A_1, ..., A_n` occurs, where
//! `A_i = {sup_{[0,S]} X_i >= a} ∩ {inf_{[0,T]} X_i >= -delta}` and
//! `X_i = alpha_hat W + beta_hat B_i` share the Brownian motion `W`.

use serde::{Deserialize, Serialize};

use super::config::UnionConfig;
use crate::error::{Error, Result};
use crate::rng::{key, substream, uniform_open, CounterRng};
use crate::sde::par_map;

const UNION_TAG: u64 = 0x756e_696f;
const BRIDGE_TAG: u64 = 0x6272_6467;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionCurve {
    /// `p[n-1]` estimates `P(A_1 ∪ ... ∪ A_n)`.
    pub p: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Smallest `n` with estimate at least `target`.
    pub n_star: Option<usize>,
    pub target: f64,
    pub n_mc: usize,
    pub dt: f64,
}

impl UnionCurve {
    /// Largest decrease between consecutive estimates, in standard errors.
    pub fn max_drop_in_se(&self) -> f64 {
        self.p
            .windows(2)
            .zip(self.std_error.windows(2))
            .map(|(p, s)| (p[0] - p[1]) / s[0].max(s[1]).max(1e-300))
            .fold(0.0, f64::max)
    }
}

/// Index (1-based) of the first `A_i` occurring in one replica, if any.
///
/// The grid extremes are corrected by Brownian-bridge crossing draws with
/// variance `(alpha_hat^2 + beta_hat^2) dt`, which is the exact conditional law
/// of each `X_i` between grid points. The uniforms are shared across `i`, so
/// `beta_hat = 0` yields identical events.
fn first_success(cfg: &UnionConfig, seed: u64, replica: u64, steps: usize, dt: f64) -> Option<usize> {
    let mut rng = CounterRng::new(key(&[seed, UNION_TAG, replica]));
    let sd = dt.sqrt();
    let mut w = Vec::with_capacity(steps + 1);
    w.push(0.0);
    for _ in 0..steps {
        let last = *w.last().unwrap();
        w.push(last + cfg.alpha_hat * sd * rng.normal());
    }
    let var = (cfg.alpha_hat.powi(2) + cfg.beta_hat.powi(2)) * dt;
    let bridge = |k: usize, which: u64| uniform_open(key(&[seed, BRIDGE_TAG, replica, k as u64, which]));
    let s_end = (cfg.s / dt).round() as usize;
    let t_end = (cfg.t / dt).round() as usize;
    for i in 1..=cfg.n_max {
        let mut b = CounterRng::new(key(&[seed, UNION_TAG, replica, i as u64]));
        let (mut x, mut bi) = (0.0f64, 0.0f64);
        let mut high = cfg.a <= 0.0;
        let mut alive = true;
        for k in 0..steps {
            if (high && k >= t_end) || (!high && k >= s_end) {
                break;
            }
            bi += cfg.beta_hat * sd * b.normal();
            let next = w[k + 1] + bi;
            if k < t_end {
                let lo = -cfg.delta;
                let crossed = next < lo
                    || (var > 0.0 && bridge(k, 0) < (-2.0 * (x - lo) * (next - lo) / var).exp());
                if crossed {
                    alive = false;
                    break;
                }
            }
            if !high && k < s_end {
                high = next >= cfg.a
                    || (var > 0.0 && bridge(k, 1) < (-2.0 * (cfg.a - x) * (cfg.a - next) / var).exp());
            }
            x = next;
        }
        if alive && high {
            return Some(i);
        }
    }
    None
}

/// Estimates the union curve over `n_mc` replicas; each replica draws `W`
/// once and the `B_i` lazily, stopping at the first occurring event.
pub fn run_union_experiment(cfg: &UnionConfig, seed: u64) -> Result<UnionCurve> {
    if !(cfg.alpha_hat > 0.0 && cfg.beta_hat >= 0.0 && cfg.delta > 0.0 && cfg.s > 0.0 && cfg.t > 0.0) {
        return Err(Error::param("union experiment needs alpha_hat, delta, S, T > 0 and beta_hat >= 0"));
    }
    if cfg.n_max == 0 || cfg.n_mc == 0 || cfg.steps_per_unit == 0 {
        return Err(Error::param("n_max, n_mc and steps_per_unit must be positive"));
    }
    let horizon = cfg.s.max(cfg.t);
    let steps = (horizon * cfg.steps_per_unit as f64).ceil() as usize;
    let dt = horizon / steps as f64;
    let base = substream(seed, UNION_TAG, 0);
    let firsts = par_map(cfg.n_mc, |r| first_success(cfg, base, r as u64, steps, dt));
    let mut counts = vec![0usize; cfg.n_max + 1];
    for f in firsts.into_iter().flatten() {
        counts[f] += 1;
    }
    let n = cfg.n_mc as f64;
    let mut acc = 0usize;
    let mut p = Vec::with_capacity(cfg.n_max);
    let mut std_error = Vec::with_capacity(cfg.n_max);
    for c in &counts[1..] {
        acc += c;
        let v = acc as f64 / n;
        p.push(v);
        std_error.push((v * (1.0 - v) / n).sqrt());
    }
    let n_star = p.iter().position(|&v| v >= cfg.target).map(|i| i + 1);
    Ok(UnionCurve {
        p,
        std_error,
        n_star,
        target: cfg.target,
        n_mc: cfg.n_mc,
        dt,
    })
}
