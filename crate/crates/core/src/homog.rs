//! Homogenization constants of `dX = H_1(X/eps) dW_1 + H_2(X/eps) dW_2`
//! and realized (co)variation estimators.
//!
//! The cell process `X/eps mod 1` has invariant density proportional to
//! `1 / (H_1^2 + H_2^2)`. With `v = int_0^1 dy / (H_1^2 + H_2^2)` and
//! `f_bar = (1/v) int_0^1 f / (H_1^2 + H_2^2)`:
//!
//! - `beta_1 = v^{-1/2}` is the limiting volatility of `X^eps`,
//! - `alpha_hat = sqrt(H1_bar^2 + H2_bar^2)` is the limiting volatility of the
//!   component shared by `X^eps` and `X^eps~` when `eps~/eps -> 0`,
//! - `beta_hat = sqrt(beta_1^2 - alpha_hat^2)`, positive by Jensen when `H_1`
//!   is not constant.

use serde::{Deserialize, Serialize};

use crate::coeff::{Coefficient, Drivers, ScaledProfile};
use crate::error::{Error, Result};
use crate::quad::simpson;
use crate::rng::substream;
use crate::sde::{par_map, required_dt, BrownianPath, Noise, SolutionPath};

/// Simpson stopping tolerance; the reported error estimate is a fifteenth of it or less.
pub const QUAD_TOL: f64 = 1e-11;

const FAMILY_TAG: u64 = 0x6661_6d69;

/// The constant zero profile (single-driver case).
pub fn zero(_: f64) -> f64 {
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationSummary {
    pub v: f64,
    pub beta1: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    #[serde(rename = "quad_err")]
    pub quadrature_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QvEstimate {
    pub value: f64,
    pub t: f64,
    pub n_paths: usize,
    pub std_error: f64,
    pub epsilon: f64,
    pub epsilon_tilde: Option<f64>,
}

fn denominator_floor(h1: &dyn Fn(f64) -> f64, h2: &dyn Fn(f64) -> f64) -> Result<()> {
    let n = 8192;
    for i in 0..=n {
        let y = i as f64 / n as f64;
        let d = h1(y).powi(2) + h2(y).powi(2);
        if !(d > 1e-14) {
            return Err(Error::Domain(format!(
                "H_1^2 + H_2^2 vanishes (= {d:e}) near y = {y}"
            )));
        }
    }
    Ok(())
}

/// `v = int_0^1 dy / (H_1^2 + H_2^2)` and its Richardson error estimate.
pub fn invariant_normalizer(
    h1: &dyn Fn(f64) -> f64,
    h2: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    denominator_floor(h1, h2)?;
    let q = simpson(|y| 1.0 / (h1(y).powi(2) + h2(y).powi(2)), 0.0, 1.0, QUAD_TOL)?;
    Ok((q.value, q.error))
}

/// Average of a period-1 function `f` under the invariant measure.
pub fn mu_average(
    f: &dyn Fn(f64) -> f64,
    h1: &dyn Fn(f64) -> f64,
    h2: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    Ok(mu_average_with_error(f, h1, h2)?.0)
}

fn mu_average_with_error(
    f: &dyn Fn(f64) -> f64,
    h1: &dyn Fn(f64) -> f64,
    h2: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let (v, ev) = invariant_normalizer(h1, h2)?;
    let q = simpson(|y| f(y) / (h1(y).powi(2) + h2(y).powi(2)), 0.0, 1.0, QUAD_TOL)?;
    let value = q.value / v;
    // first-order propagation of both quadrature errors
    let err = q.error / v + value.abs() * ev / v;
    Ok((value, err))
}

fn spread(h: &dyn Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..4096 {
        let v = h(i as f64 / 4096.0);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// `v`, `beta_1`, `alpha_hat`, `beta_hat`. Requires a non-constant `H_1`
/// (spread at least 1e-3) unless `relaxed`.
pub fn effective_constants(
    h1: &dyn Fn(f64) -> f64,
    h2: &dyn Fn(f64) -> f64,
    relaxed: bool,
) -> Result<HomogenizationSummary> {
    if !relaxed && spread(h1) < 1e-3 {
        return Err(Error::Precondition(
            "H_1 must be non-constant (since H_1 is non-constant, beta_hat > 0; here beta_hat would be 0)"
                .into(),
        ));
    }
    let (v, ev) = invariant_normalizer(h1, h2)?;
    let (m1, e1) = mu_average_with_error(h1, h1, h2)?;
    let (m2, e2) = mu_average_with_error(h2, h1, h2)?;
    let beta1 = v.powf(-0.5);
    let alpha_sq = m1 * m1 + m2 * m2;
    let alpha_hat = alpha_sq.sqrt();
    let gap = beta1 * beta1 - alpha_sq;
    // differences at rounding level are a constant profile, not a small beta_hat
    let beta_hat = if gap <= 16.0 * f64::EPSILON * beta1 * beta1 {
        0.0
    } else {
        gap.sqrt()
    };
    let quadrature_error_estimate = ev / v + 2.0 * (m1.abs() * e1 + m2.abs() * e2);
    Ok(HomogenizationSummary {
        v,
        beta1,
        alpha_hat,
        beta_hat,
        quadrature_error_estimate,
    })
}

/// [`effective_constants`] for the profile(s) of a field.
pub fn effective_constants_for(drivers: &Drivers, relaxed: bool) -> Result<HomogenizationSummary> {
    let h1 = |x: f64| drivers.h1(x);
    let h2 = |x: f64| drivers.h2(x);
    effective_constants(&h1, &h2, relaxed)
}

fn steps_until(path: &SolutionPath, t: f64) -> Result<usize> {
    let span = t - path.t0;
    if span < -1e-12 * t.abs().max(1.0) {
        return Err(Error::param(format!("t = {t} precedes the path start {}", path.t0)));
    }
    let r = span / path.dt;
    let steps = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
        r.round()
    } else {
        r.ceil()
    } as usize;
    let available = path.states.len().saturating_sub(1);
    if steps > available {
        return Err(Error::param(format!(
            "t = {t} lies beyond the path end {}",
            path.end_time()
        )));
    }
    Ok(steps)
}

/// `sum_{t_k < t} (x_{k+1} - x_k)^2`.
pub fn realized_qv(path: &SolutionPath, t: f64) -> Result<f64> {
    let n = steps_until(path, t)?;
    Ok(path.states[..=n].windows(2).map(|w| (w[1] - w[0]).powi(2)).sum())
}

/// `sum_{t_k < t} (x^A_{k+1} - x^A_k)(x^B_{k+1} - x^B_k)` on a common grid.
pub fn realized_cross_qv(a: &SolutionPath, b: &SolutionPath, t: f64) -> Result<f64> {
    if a.dt != b.dt || a.t0 != b.t0 {
        return Err(Error::param(format!(
            "grid mismatch: (t0 {}, dt {}) vs (t0 {}, dt {})",
            a.t0, a.dt, b.t0, b.dt
        )));
    }
    let n = steps_until(a, t)?.max(steps_until(b, t)?);
    Ok(a.states[..=n]
        .windows(2)
        .zip(b.states[..=n].windows(2))
        .map(|(u, v)| (u[1] - u[0]) * (v[1] - v[0]))
        .sum())
}

/// `sum_{t_k < t} |sigma(x_k)|^2 dt`: the scheme's own quadratic variation
/// (exactly `t` when `sigma_1^2 + sigma_2^2 = 1`).
pub fn integrated_variance<C: Coefficient + ?Sized>(coef: &C, path: &SolutionPath, t: f64) -> Result<f64> {
    let n = steps_until(path, t)?;
    Ok(path.states[..n]
        .iter()
        .map(|&x| {
            let s = coef.sigma(x);
            (s[0] * s[0] + s[1] * s[1]) * path.dt
        })
        .sum())
}

/// Trapezoid approximation of `int_{t0}^t f(x_s / eps) ds`.
pub fn ergodic_average(path: &SolutionPath, f: &dyn Fn(f64) -> f64, epsilon: f64, t: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon must be positive"));
    }
    let n = steps_until(path, t)?;
    let vals: Vec<f64> = path.states[..=n].iter().map(|&x| f(x / epsilon)).collect();
    Ok(vals.windows(2).map(|w| 0.5 * (w[0] + w[1]) * path.dt).sum())
}

/// `z(t) = X(t eps^2) / eps` as a re-indexed view: times divided by `eps^2`,
/// states by `eps`.
pub fn rescale_path(path: &SolutionPath, epsilon: f64) -> Result<SolutionPath> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    let e2 = epsilon * epsilon;
    Ok(SolutionPath {
        y_level: path.y_level,
        x0: path.x0 / epsilon,
        t0: path.t0 / e2,
        dt: path.dt / e2,
        states: path.states.iter().map(|x| x / epsilon).collect(),
        exit: path.exit.map(|mut e| {
            e.level /= epsilon;
            e.time /= e2;
            e
        }),
    })
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = compensated_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Pearson correlation of two equally long samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_and_stderr(a);
    let (mb, _) = mean_and_stderr(b);
    let cov: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let va: Vec<f64> = a.iter().map(|x| (x - ma).powi(2)).collect();
    let vb: Vec<f64> = b.iter().map(|y| (y - mb).powi(2)).collect();
    compensated_sum(&cov) / (compensated_sum(&va) * compensated_sum(&vb)).sqrt()
}

/// Statistics of a family `X^{eps_1}, ..., X^{eps_r}` driven by one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySample {
    /// Realized QV of each member.
    pub qv: Vec<f64>,
    /// `sum |sigma(x_k)|^2 dt` of each member.
    pub iv: Vec<f64>,
    /// `X(t) - x0` of each member.
    pub inc: Vec<f64>,
    /// Realized cross-variation of every pair `(i, j)`, `i < j`, in
    /// lexicographic order.
    pub cross: Vec<f64>,
}

impl FamilySample {
    /// Position of pair `(i, j)` in [`FamilySample::cross`].
    pub fn pair_index(r: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < r);
        i * (2 * r - i - 1) / 2 + (j - i - 1)
    }
}

/// Streams Euler-Maruyama for every `X^{eps_i}` from `x0` over the whole
/// horizon of `path` without storing states.
pub fn sample_family(drivers: &Drivers, eps: &[f64], x0: f64, path: &BrownianPath) -> Result<FamilySample> {
    if eps.is_empty() {
        return Err(Error::param("need at least one epsilon"));
    }
    if drivers.count() > path.driver_count() {
        return Err(Error::param("path has fewer drivers than the profile"));
    }
    let coefs = eps
        .iter()
        .map(|&e| ScaledProfile::new(drivers.clone(), e))
        .collect::<Result<Vec<_>>>()?;
    let r = eps.len();
    let dt = path.dt();
    let mut x = vec![x0; r];
    let mut d = vec![0.0; r];
    let mut out = FamilySample {
        qv: vec![0.0; r],
        iv: vec![0.0; r],
        inc: vec![0.0; r],
        cross: vec![0.0; r * (r - 1) / 2],
    };
    for dw in Noise::new(path, 0) {
        for i in 0..r {
            let s = coefs[i].sigma(x[i]);
            d[i] = s[0] * dw[0] + s[1] * dw[1];
            out.qv[i] += d[i] * d[i];
            out.iv[i] += (s[0] * s[0] + s[1] * s[1]) * dt;
            out.inc[i] += d[i];
            x[i] = x0 + out.inc[i];
        }
        let mut c = 0;
        for i in 0..r {
            for j in i + 1..r {
                out.cross[c] += d[i] * d[j];
                c += 1;
            }
        }
    }
    Ok(out)
}

/// [`sample_family`] over `n_paths` seeds derived from `seed`, on horizon `t`
/// with step `(rho * min eps)^2`.
pub fn family_ensemble(
    drivers: &Drivers,
    eps: &[f64],
    x0: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
    rho: f64,
) -> Result<Vec<FamilySample>> {
    if n_paths == 0 {
        return Err(Error::param("need at least one path"));
    }
    let e_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    if !(e_min > 0.0) {
        return Err(Error::param("epsilons must be positive"));
    }
    let dt = required_dt(1.0 / e_min, rho).min(t);
    par_map(n_paths, |i| {
        let path = BrownianPath::new(substream(seed, FAMILY_TAG, i as u64), dt, t, drivers.count())?;
        sample_family(drivers, eps, x0, &path)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{ConstantCoefficient, PeriodicProfile};
    use crate::sde::{integrate_line, IntegrateOptions, StopRule};

    fn bump() -> PeriodicProfile {
        PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap()
    }

    /// Midpoint Riemann sum with 10^6 cells: independent of the Simpson path.
    fn riemann(f: impl Fn(f64) -> f64) -> f64 {
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let terms: Vec<f64> = (0..n).map(|i| f((i as f64 + 0.5) * h) * h).collect();
        compensated_sum(&terms)
    }

    #[test]
    fn normalizer_trivial_cases() {
        let (v, _) = invariant_normalizer(&|_| 1.0, &zero).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        let pair = Drivers::default_pair();
        let (v, _) = invariant_normalizer(&|x| pair.h1(x), &|x| pair.h2(x)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalizer_vs_riemann_oracle() {
        let h = bump();
        let (v, err) = invariant_normalizer(&|x| h.eval(x), &zero).unwrap();
        let oracle = riemann(|y| 1.0 / h.eval(y).powi(2));
        assert!((v - oracle).abs() < 1e-8, "v {v} oracle {oracle}");
        assert!(err <= 1e-10);
    }

    #[test]
    fn vanishing_denominator() {
        let r = invariant_normalizer(&|x: f64| (std::f64::consts::PI * x).sin(), &zero);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn mu_average_properties() {
        let h = bump();
        let h1 = |x: f64| h.eval(x);
        assert!((mu_average(&|_| 3.5, &h1, &zero).unwrap() - 3.5).abs() < 1e-12);
        let (v, _) = invariant_normalizer(&h1, &zero).unwrap();
        let m = mu_average(&|x| h.eval(x).powi(2), &h1, &zero).unwrap();
        assert!((m - 1.0 / v).abs() < 1e-12);
        let oracle = riemann(|y| 1.0 / h.eval(y)) / riemann(|y| 1.0 / h.eval(y).powi(2));
        assert!((mu_average(&h1, &h1, &zero).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn constants_for_bump() {
        let h = bump();
        let s = effective_constants(&|x| h.eval(x), &zero, false).unwrap();
        let v = riemann(|y| 1.0 / h.eval(y).powi(2));
        let hbar = riemann(|y| 1.0 / h.eval(y)) / v;
        assert!((s.beta1 - v.powf(-0.5)).abs() < 1e-8);
        assert!((s.alpha_hat - hbar).abs() < 1e-8);
        assert!(((s.alpha_hat.powi(2) + s.beta_hat.powi(2)) - s.beta1.powi(2)).abs() < 1e-9);
        assert!(s.beta_hat > 0.0 && s.beta1 > s.alpha_hat);
    }

    #[test]
    fn constant_profile_needs_relaxed_flag() {
        let r = effective_constants(&|_| 0.7, &zero, false);
        assert!(matches!(r, Err(Error::Precondition(_))));
        let s = effective_constants(&|_| 0.7, &zero, true).unwrap();
        assert!((s.beta1 - 0.7).abs() < 1e-12 && (s.alpha_hat - 0.7).abs() < 1e-12);
        assert_eq!(s.beta_hat, 0.0);
    }

    #[test]
    fn pair_has_unit_beta1() {
        let s = effective_constants_for(&Drivers::default_pair(), false).unwrap();
        assert!((s.beta1 - 1.0).abs() < 1e-10);
        assert!((s.alpha_hat.powi(2) + s.beta_hat.powi(2) - 1.0).abs() < 1e-10);
    }

    fn linear_path(dt: f64, n: usize) -> SolutionPath {
        SolutionPath {
            y_level: 0.0,
            x0: 0.0,
            t0: 0.0,
            dt,
            states: (0..=n).map(|k| k as f64 * dt).collect(),
            exit: None,
        }
    }

    #[test]
    fn qv_of_linear_path_vanishes() {
        let p = linear_path(1e-4, 10_000);
        let q = realized_qv(&p, 1.0).unwrap();
        assert!((q - 1e-4).abs() < 1e-12);
        assert!(realized_qv(&p, 1.5).is_err());
    }

    #[test]
    fn qv_of_brownian_path() {
        let dt = 1e-4;
        let path = BrownianPath::new(77, dt, 1.0, 1).unwrap();
        let sol = integrate_line(&ConstantCoefficient::one(1.0), 0.0, 0.0, &path, StopRule::Horizon, &IntegrateOptions::default()).unwrap();
        let q = realized_qv(&sol, 1.0).unwrap();
        assert!((q - 1.0).abs() <= 4.0 * (2.0 * dt).sqrt(), "qv {q}");
        assert_eq!(realized_cross_qv(&sol, &sol, 1.0).unwrap(), q);
        let shifted = SolutionPath {
            states: sol.states.iter().map(|x| x + 3.0).collect(),
            ..sol.clone()
        };
        assert!((realized_qv(&shifted, 1.0).unwrap() - q).abs() < 1e-9);
    }

    #[test]
    fn cross_qv_of_independent_paths() {
        let dt = 1e-4;
        let c = ConstantCoefficient::one(1.0);
        let o = IntegrateOptions::default();
        let a = integrate_line(&c, 0.0, 0.0, &BrownianPath::new(1, dt, 1.0, 1).unwrap(), StopRule::Horizon, &o).unwrap();
        let b = integrate_line(&c, 0.0, 0.0, &BrownianPath::new(2, dt, 1.0, 1).unwrap(), StopRule::Horizon, &o).unwrap();
        let x = realized_cross_qv(&a, &b, 1.0).unwrap();
        assert!(x.abs() <= 4.0 * dt.sqrt(), "cross {x}");
        let mut c2 = b.clone();
        c2.dt *= 2.0;
        assert!(realized_cross_qv(&a, &c2, 0.5).is_err());
    }

    #[test]
    fn ergodic_average_of_one() {
        let p = linear_path(1e-3, 1000);
        assert!((ergodic_average(&p, &|_| 1.0, 0.1, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rescale_roundtrip() {
        let p = linear_path(1e-3, 100);
        assert_eq!(rescale_path(&p, 1.0).unwrap(), p);
        let back = rescale_path(&rescale_path(&p, 0.2).unwrap(), 5.0).unwrap();
        for (a, b) in back.states.iter().zip(&p.states) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((back.dt - p.dt).abs() < 1e-18);
        assert!(rescale_path(&p, 0.0).is_err());
    }

    #[test]
    fn pair_two_driver_variance_is_exact() {
        let d = Drivers::default_pair();
        let path = BrownianPath::new(5, 5e-5, 1.0, 2).unwrap();
        let coef = ScaledProfile::new(d.clone(), 0.1).unwrap();
        let sol = integrate_line(&coef, 0.0, 0.0, &path, StopRule::Horizon, &IntegrateOptions::default()).unwrap();
        let iv = integrated_variance(&coef, &sol, 1.0).unwrap();
        assert!((iv - 1.0).abs() < 1e-9);
    }
}

#[cfg(test)]
mod family_tests {
    use super::*;
    use crate::coeff::PeriodicProfile;

    #[test]
    fn pair_index_is_lexicographic() {
        let r = 4;
        let mut c = 0;
        for i in 0..r {
            for j in i + 1..r {
                assert_eq!(FamilySample::pair_index(r, i, j), c);
                c += 1;
            }
        }
    }

    #[test]
    fn equal_eps_cross_equals_qv() {
        let d = Drivers::one(PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap());
        let path = BrownianPath::new(9, 1e-4, 0.5, 1).unwrap();
        let f = sample_family(&d, &[0.1, 0.1], 0.0, &path).unwrap();
        assert_eq!(f.cross[0], f.qv[0]);
        assert_eq!(f.qv[0], f.qv[1]);
    }

    #[test]
    fn two_driver_iv_is_t() {
        let path = BrownianPath::new(4, 1e-4, 1.0, 2).unwrap();
        let f = sample_family(&Drivers::default_pair(), &[0.2, 0.1], 0.0, &path).unwrap();
        for iv in &f.iv {
            assert!((iv - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ensemble_is_deterministic() {
        let d = Drivers::default_pair();
        let a = family_ensemble(&d, &[0.5, 0.25], 0.0, 0.2, 4, 11, 0.1).unwrap();
        let b = family_ensemble(&d, &[0.5, 0.25], 0.0, 0.2, 4, 11, 0.1).unwrap();
        assert_eq!(a, b);
        assert!(family_ensemble(&d, &[], 0.0, 0.2, 4, 11, 0.1).is_err());
    }
}
