use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `N` handled by full `2^N` enumeration.
pub const ENUMERATION_LIMIT: usize = 24;
/// Largest `N` handled by the `O(N^2)` Poisson-binomial recursion.
pub const RECURSION_LIMIT: usize = 100_000;

/// Probabilities `p_1..p_N` and a threshold `1 <= M <= N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventProfile {
    p: Vec<f64>,
    m: usize,
}

impl EventProfile {
    pub fn new(p: Vec<f64>, m: usize) -> Result<Self> {
        if let Some((i, x)) = p.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::param(format!("p[{i}] = {x} is not a probability")));
        }
        if m == 0 || m > p.len() {
            return Err(Error::param(format!(
                "threshold M = {m} must lie in 1..={}",
                p.len()
            )));
        }
        Ok(Self { p, m })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// `sum p_i / M`, unclamped.
pub fn bc_upper(profile: &EventProfile) -> f64 {
    profile.p.iter().sum::<f64>() / profile.m as f64
}

/// `(sum p_i - M + 1) / (N - M + 1)`, unclamped.
pub fn bc_lower(profile: &EventProfile) -> f64 {
    let n = profile.n() as f64;
    let m = profile.m as f64;
    (profile.p.iter().sum::<f64>() - m + 1.0) / (n - m + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    /// Sum over all `2^N` outcomes.
    Enumeration,
    /// Poisson-binomial convolution.
    Recursion,
    /// Enumeration up to [`ENUMERATION_LIMIT`], recursion beyond.
    Auto,
}

fn enumerate(p: &[f64], i: usize, prob: f64, count: usize, dist: &mut [f64]) {
    if i == p.len() {
        dist[count] += prob;
        return;
    }
    enumerate(p, i + 1, prob * p[i], count + 1, dist);
    enumerate(p, i + 1, prob * (1.0 - p[i]), count, dist);
}

/// Law of the number of occurring independent events.
pub fn count_distribution(p: &[f64], method: ExactMethod) -> Result<Vec<f64>> {
    let n = p.len();
    let method = match method {
        ExactMethod::Auto if n <= ENUMERATION_LIMIT => ExactMethod::Enumeration,
        ExactMethod::Auto => ExactMethod::Recursion,
        m => m,
    };
    let mut dist = vec![0.0; n + 1];
    match method {
        ExactMethod::Enumeration => {
            if n > ENUMERATION_LIMIT {
                return Err(Error::Capacity(format!(
                    "enumeration needs 2^{n} outcomes; limit is N = {ENUMERATION_LIMIT}"
                )));
            }
            enumerate(p, 0, 1.0, 0, &mut dist);
        }
        _ => {
            if n > RECURSION_LIMIT {
                return Err(Error::Capacity(format!(
                    "recursion limited to N = {RECURSION_LIMIT}, got {n}"
                )));
            }
            dist[0] = 1.0;
            for (i, &q) in p.iter().enumerate() {
                for c in (1..=i + 1).rev() {
                    dist[c] = dist[c] * (1.0 - q) + dist[c - 1] * q;
                }
                dist[0] *= 1.0 - q;
            }
        }
    }
    Ok(dist)
}

/// `P(at least m of the independent events occur)`; `m = 0` gives 1.
pub fn at_least(p: &[f64], m: usize, method: ExactMethod) -> Result<f64> {
    if m == 0 {
        return Ok(1.0);
    }
    if m > p.len() {
        return Ok(0.0);
    }
    let dist = count_distribution(p, method)?;
    Ok(dist[m..].iter().sum::<f64>().min(1.0))
}

/// Exact `P(at least M of N)` under independence.
pub fn exact_at_least(profile: &EventProfile, method: ExactMethod) -> Result<f64> {
    at_least(&profile.p, profile.m, method)
}
