use serde::{Deserialize, Serialize};

use super::brownian::{BrownianPath, Noise};
use crate::coeff::{Coefficient, CoefficientField};
use crate::error::{Error, Result};
use crate::rng::{key, uniform_open};

const BRIDGE_TAG: u64 = 0x6272_6964_6765;

/// Default resolution constant: `dt <= (rho / a)^2`.
pub const DEFAULT_RHO: f64 = 0.1;

/// Largest admissible step for oscillation frequency `frequency`.
pub fn required_dt(frequency: f64, rho: f64) -> f64 {
    if frequency <= 0.0 {
        f64::INFINITY
    } else {
        (rho / frequency).powi(2)
    }
}

/// Refuses steps that do not resolve one oscillation period of `frequency`.
pub fn check_step(dt: f64, frequency: f64, rho: f64) -> Result<()> {
    let required = required_dt(frequency, rho);
    // relative slack so that dt computed as (rho/a)^2 passes
    if dt > required * (1.0 + 1e-12) {
        return Err(Error::StepPolicy {
            dt,
            required,
            frequency,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StopRule {
    Horizon,
    HitLevel { level: f64 },
    HitEither { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rho: f64,
    /// Add a Brownian-bridge crossing test between grid points.
    pub bridge_correction: bool,
    /// Grid step at which the solution starts.
    pub start_step: usize,
    /// Keep every `record_stride`-th state.
    pub record_stride: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            bridge_correction: false,
            start_step: 0,
            record_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exit {
    pub level: f64,
    /// First crossing time, linearly interpolated inside the step.
    pub time: f64,
    /// Grid step (relative to the path start) that ends at or after the crossing.
    pub step: usize,
}

/// States of one solution on a uniform grid; `y` never changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPath {
    pub y_level: f64,
    pub x0: f64,
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<f64>,
    pub exit: Option<Exit>,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|k| self.time(k)).collect()
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.states.len().saturating_sub(1))
    }

    pub fn last(&self) -> f64 {
        *self.states.last().expect("paths hold x0")
    }
}

#[derive(Debug, Clone, Copy)]
enum Crossing {
    Exact(f64),
    Bridge,
}

#[inline]
fn crossed(level: f64, a: f64, b: f64) -> Option<f64> {
    let (da, db) = (a - level, b - level);
    if da == 0.0 {
        return None;
    }
    if db == 0.0 || (da < 0.0) != (db < 0.0) {
        Some((level - a) / (b - a))
    } else {
        None
    }
}

/// Integrates `dX = sigma_1(X) dW_1 + sigma_2(X) dW_2` by Euler-Maruyama on
/// the grid of `path`.
pub fn integrate_line<C: Coefficient + ?Sized>(
    coef: &C,
    x0: f64,
    y_level: f64,
    path: &BrownianPath,
    stop: StopRule,
    opts: &IntegrateOptions,
) -> Result<SolutionPath> {
    if coef.drivers() > path.driver_count() {
        return Err(Error::param(format!(
            "coefficient needs {} drivers, path has {}",
            coef.drivers(),
            path.driver_count()
        )));
    }
    if opts.record_stride == 0 {
        return Err(Error::param("record_stride must be positive"));
    }
    check_step(path.dt(), coef.max_frequency(), opts.rho)?;
    let levels: Vec<f64> = match stop {
        StopRule::Horizon => vec![],
        StopRule::HitLevel { level } => vec![level],
        StopRule::HitEither { lower, upper } => {
            if !(lower < x0 && x0 < upper) {
                return Err(Error::param(format!(
                    "start {x0} must lie strictly between {lower} and {upper}"
                )));
            }
            vec![lower, upper]
        }
    };

    let dt = path.dt();
    let t0 = opts.start_step as f64 * dt;
    let mut out = SolutionPath {
        y_level,
        x0,
        t0,
        dt: dt * opts.record_stride as f64,
        states: vec![x0],
        exit: None,
    };
    if let Some(&l) = levels.iter().find(|&&l| l == x0) {
        out.exit = Some(Exit {
            level: l,
            time: t0,
            step: 0,
        });
        return Ok(out);
    }

    let stride = opts.record_stride;
    // state kept as x0 + displacement so that sigma = 1 reproduces x0 + W exactly
    let mut disp = 0.0;
    let mut x = x0;
    for (k, dw) in Noise::new(path, opts.start_step).enumerate() {
        let s = coef.sigma(x);
        disp += s[0] * dw[0] + s[1] * dw[1];
        let next = x0 + disp;
        let mut hit: Option<(f64, Crossing)> = None;
        for &l in &levels {
            if let Some(frac) = crossed(l, x, next) {
                if hit.is_none_or(|(_, c)| matches!(c, Crossing::Exact(f) if frac < f)) {
                    hit = Some((l, Crossing::Exact(frac)));
                }
            }
        }
        if hit.is_none() && opts.bridge_correction {
            let var = (s[0] * s[0] + s[1] * s[1]) * dt;
            for &l in &levels {
                let p = (-2.0 * (l - x) * (l - next) / var).exp();
                let u = uniform_open(key(&[
                    path.seed(),
                    BRIDGE_TAG,
                    (opts.start_step + k) as u64,
                    l.to_bits(),
                ]));
                if u < p {
                    hit = Some((l, Crossing::Bridge));
                    break;
                }
            }
        }
        x = next;
        let step = k + 1;
        if let Some((level, c)) = hit {
            let frac = match c {
                Crossing::Exact(f) => f,
                Crossing::Bridge => 0.5,
            };
            // the crossing state is kept even off-stride
            out.states.push(x);
            out.exit = Some(Exit {
                level,
                time: t0 + (k as f64 + frac) * dt,
                step,
            });
            return Ok(out);
        }
        if step % stride == 0 {
            out.states.push(x);
        }
    }
    Ok(out)
}

/// [`integrate_line`] on the line `y = y_level` of a strip field.
pub fn integrate(
    field: &CoefficientField,
    x0: f64,
    y_level: f64,
    path: &BrownianPath,
    stop: StopRule,
    opts: &IntegrateOptions,
) -> Result<SolutionPath> {
    integrate_line(&field.line(y_level), x0, y_level, path, stop, opts)
}

/// Solutions from many initial points, all driven by the same path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowBundle {
    pub path: BrownianPath,
    pub members: Vec<SolutionPath>,
}

impl FlowBundle {
    /// Fraction of (adjacent pair, recorded step) slots where two members on
    /// the same line have swapped order relative to their starting points.
    pub fn order_violation_rate(&self) -> f64 {
        let mut groups: Vec<Vec<&SolutionPath>> = Vec::new();
        for m in &self.members {
            match groups.iter_mut().find(|g| g[0].y_level == m.y_level) {
                Some(g) => g.push(m),
                None => groups.push(vec![m]),
            }
        }
        let (mut bad, mut total) = (0usize, 0usize);
        for mut g in groups {
            g.sort_by(|a, b| a.x0.total_cmp(&b.x0));
            for w in g.windows(2) {
                let n = w[0].states.len().min(w[1].states.len());
                for k in 0..n {
                    total += 1;
                    if w[0].states[k] > w[1].states[k] {
                        bad += 1;
                    }
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            bad as f64 / total as f64
        }
    }
}

/// Order-preserving map over `0..n`, parallel when the `parallel` feature is on.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Integrates every `(x0, y)` against the shared path. Each member regenerates
/// the increments from the path's seed, so the result does not depend on how
/// members are scheduled.
pub fn integrate_bundle(
    field: &CoefficientField,
    initial: &[(f64, f64)],
    path: &BrownianPath,
    stop: StopRule,
    opts: &IntegrateOptions,
) -> Result<FlowBundle> {
    if initial.is_empty() {
        return Err(Error::param("bundle needs at least one initial condition"));
    }
    let members = par_map(initial.len(), |i| {
        let (x0, y) = initial[i];
        integrate(field, x0, y, path, stop, opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(FlowBundle {
        path: *path,
        members,
    })
}
