//! Composite Simpson quadrature with dyadic refinement.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Richardson estimate |S_2n - S_n| / 15 at the accepted level.
    pub error: f64,
    pub intervals: usize,
}

const MAX_LEVEL: u32 = 24;

/// Integrates `f` over `[a, b]`, doubling the number of panels until two
/// successive Simpson sums agree to `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::param(format!("bad interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    let width = b - a;
    // trapezoid state: endpoints and interior sums
    let ends = 0.5 * (f(a) + f(b));
    let mut interior = 0.0;
    let mut n = 1usize;
    let mut trap = ends * width;
    let mut prev_simpson: Option<f64> = None;

    for level in 1..=MAX_LEVEL {
        let h = width / (2 * n) as f64;
        let mut mids = 0.0;
        for i in 0..n {
            mids += f(a + (2 * i + 1) as f64 * h);
        }
        interior += mids;
        n *= 2;
        let next_trap = (ends + interior) * (width / n as f64);
        let simpson = (4.0 * next_trap - trap) / 3.0;
        trap = next_trap;
        if !simpson.is_finite() {
            return Err(Error::Domain("integrand is not finite".into()));
        }
        if let Some(prev) = prev_simpson {
            let diff = (simpson - prev).abs();
            if level >= 4 && diff <= tol {
                return Ok(Quadrature {
                    value: simpson,
                    error: diff / 15.0,
                    intervals: n,
                });
            }
        }
        prev_simpson = Some(simpson);
    }
    Err(Error::Capacity(format!(
        "Simpson refinement did not reach tol {tol:e} with 2^{MAX_LEVEL} panels"
    )))
}
