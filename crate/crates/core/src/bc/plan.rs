use serde::{Deserialize, Serialize};

use super::passage::{p0, q0};
use crate::error::{Error, Result};
use crate::gauss::Z99;
use crate::rng::{substream, CounterRng};
use crate::sde::par_map;

const VALIDATE_TAG: u64 = 0x636f_726f;

/// Search grids: `delta` ranges over `i * delta_max / 2^delta_bits`,
/// `u` over `2^-1, ..., 2^-u_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanGrid {
    pub delta_max: f64,
    pub delta_bits: u32,
    pub u_bits: u32,
}

impl Default for PlanGrid {
    fn default() -> Self {
        Self {
            delta_max: 1.0,
            delta_bits: 12,
            u_bits: 40,
        }
    }
}

/// Constants `(delta, u, k, N)` such that `N` martingales with rate in
/// `[alpha, beta]` put at least `m` of them above `delta` at a common time
/// before `T` with probability at least `1 - eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassagePlan {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub eps: f64,
    pub m: u64,
    pub delta: f64,
    pub u: f64,
    pub k: u64,
    #[serde(rename = "N")]
    pub n_out: u64,
}

impl PassagePlan {
    /// `q0(delta, u T; beta) * p0(2 delta, T/2; alpha)`.
    pub fn product(&self) -> f64 {
        plan_product(self.alpha, self.beta, self.t, self.delta, self.u)
    }

    /// Re-evaluates both defining relations.
    pub fn satisfies_invariants(&self) -> bool {
        let k = ((self.m as f64) / self.u).ceil() as u64;
        self.product() >= 1.0 - self.eps / 2.0 && self.k == k.max(2) && self.n_out == 2 * self.k - 2
    }
}

pub fn plan_product(alpha: f64, beta: f64, t: f64, delta: f64, u: f64) -> f64 {
    q0(delta, u * t, beta) * p0(2.0 * delta, t / 2.0, alpha)
}

fn check_rates(alpha: f64, beta: f64, t: f64, eps: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        return Err(Error::param(format!("need 0 < alpha <= beta, got {alpha}, {beta}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param(format!("need T > 0, got {t}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("need eps in (0, 1), got {eps}")));
    }
    Ok(())
}

fn delta_grid(grid: &PlanGrid) -> impl Iterator<Item = f64> + '_ {
    let n = 1u64 << grid.delta_bits;
    (1..=n).map(move |i| grid.delta_max * i as f64 / n as f64)
}

/// Grid values of `delta` with product at least `1 - eps/2` at this `u`.
pub fn feasible_deltas(alpha: f64, beta: f64, t: f64, eps: f64, u: f64, grid: &PlanGrid) -> Result<Vec<f64>> {
    check_rates(alpha, beta, t, eps)?;
    Ok(delta_grid(grid)
        .filter(|&d| plan_product(alpha, beta, t, d, u) >= 1.0 - eps / 2.0)
        .collect())
}

/// Takes the largest dyadic `u <= 1/2` admitting a feasible `delta`, and the
/// `delta` maximizing the product at that `u` (smallest on ties). Then
/// `k = ceil(m/u)` (at least 2) and `N = 2k - 2`.
pub fn plan_corollary(alpha: f64, beta: f64, t: f64, eps: f64, m: u64, grid: &PlanGrid) -> Result<PassagePlan> {
    check_rates(alpha, beta, t, eps)?;
    if m == 0 {
        return Err(Error::param("m must be at least 1"));
    }
    if !(grid.delta_max > 0.0) || grid.delta_bits > 30 || grid.u_bits == 0 || grid.u_bits > 62 {
        return Err(Error::param("search grid out of range"));
    }
    let target = 1.0 - eps / 2.0;
    let mut best_seen = (0.0, 0.0, 0.0);
    for j in 1..=grid.u_bits {
        let u = (0.5f64).powi(j as i32);
        let (mut bd, mut bp) = (f64::NAN, f64::NEG_INFINITY);
        for d in delta_grid(grid) {
            let p = plan_product(alpha, beta, t, d, u);
            if p > bp {
                bp = p;
                bd = d;
            }
        }
        if bp > best_seen.2 {
            best_seen = (u, bd, bp);
        }
        if bp >= target {
            let k = m
                .checked_shl(j)
                .filter(|k| k >> j == m)
                .ok_or_else(|| Error::Capacity(format!("k = m * 2^{j} overflows")))?
                .max(2);
            return Ok(PassagePlan {
                alpha,
                beta,
                t,
                eps,
                m,
                delta: bd,
                u,
                k,
                n_out: 2 * k - 2,
            });
        }
    }
    Err(Error::Infeasible(format!(
        "no (delta, u) reaches q0*p0 >= {target}: best product {:.6} at u = {:e}, delta = {:e} (grid delta_max {}, 2^{} cells, u down to 2^-{})",
        best_seen.2, best_seen.0, best_seen.1, grid.delta_max, grid.delta_bits, grid.u_bits
    )))
}

/// Quadratic-variation rate assigned to each simulated martingale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Rate `alpha` throughout.
    Constant,
    /// Fresh uniform draw in `[alpha, beta]` on every step.
    Uniform,
    /// `alpha` below `delta`, `beta` at or above it.
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    pub n_mc: usize,
    pub seed: u64,
    pub steps: usize,
    pub rate_mode: RateMode,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            n_mc: 10_000,
            seed: 0,
            steps: 1024,
            rate_mode: RateMode::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryValidation {
    pub estimate: f64,
    /// 99% normal-approximation radius.
    pub ci_radius: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub n_mc: usize,
    pub target: f64,
    pub passed: bool,
    pub rate_mode: RateMode,
}

fn wilson(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Estimates `P{tau <= T}` for `plan.n_out` martingales, `tau` the first grid
/// time at which at least `m` of them sit at or above `delta`. Monitoring on
/// the grid only can miss crossings, so the estimate is biased low.
pub fn validate_corollary(plan: &PassagePlan, opts: &ValidateOptions) -> Result<CorollaryValidation> {
    if opts.n_mc < 2 || opts.steps == 0 {
        return Err(Error::param("validation needs n_mc >= 2 and steps >= 1"));
    }
    let n = usize::try_from(plan.n_out)
        .ok()
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| Error::Capacity(format!("N = {} martingales is too many to simulate", plan.n_out)))?;
    let m = plan.m as usize;
    let dt = plan.t / opts.steps as f64;
    let (alpha, beta, delta) = (plan.alpha, plan.beta, plan.delta);
    let hits = par_map(opts.n_mc, |r| {
        let mut rng = CounterRng::new(substream(opts.seed, VALIDATE_TAG, r as u64));
        let mut state = vec![0.0f64; n];
        for _ in 0..opts.steps {
            let mut above = 0usize;
            for x in state.iter_mut() {
                let rate = match opts.rate_mode {
                    RateMode::Constant => alpha,
                    RateMode::Uniform => alpha + (beta - alpha) * rng.uniform(),
                    RateMode::Adversarial if *x >= delta => beta,
                    RateMode::Adversarial => alpha,
                };
                *x += (rate * dt).sqrt() * rng.normal();
                above += (*x >= delta) as usize;
            }
            if above >= m {
                return true;
            }
        }
        false
    });
    let successes = hits.iter().filter(|&&h| h).count();
    let nf = opts.n_mc as f64;
    let estimate = successes as f64 / nf;
    let ci_radius = Z99 * (estimate * (1.0 - estimate) / nf).sqrt();
    let (wilson_lo, wilson_hi) = wilson(successes, opts.n_mc, Z99);
    let target = 1.0 - plan.eps;
    Ok(CorollaryValidation {
        estimate,
        ci_radius,
        wilson_lo,
        wilson_hi,
        n_mc: opts.n_mc,
        target,
        passed: estimate + ci_radius >= target,
        rate_mode: opts.rate_mode,
    })
}
