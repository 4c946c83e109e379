//! Standard normal distribution helpers.
//!
//! The CDF is evaluated through `erfc` from the `libm` crate (the FreeBSD /
//! musl rational approximations, error below one ulp on the tested range).

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Standard normal CDF.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - cdf(x)`, accurate for large `x`.
#[inline]
pub fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse CDF by Newton iteration on `cdf`, bracketed to keep it stable.
pub fn quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    let mut x = 0.0;
    for _ in 0..200 {
        let f = cdf(x) - p;
        if f == 0.0 {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = pdf(x);
        let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of erf, summed until terms vanish; good for |x| <= 3.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x * x / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    /// Continued fraction for erfc (modified Lentz), good for x >= 3.
    fn erfc_cf(x: f64) -> f64 {
        // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / std::f64::consts::PI.sqrt() / f
    }

    fn cdf_oracle(z: f64) -> f64 {
        let x = z / std::f64::consts::SQRT_2;
        if x.abs() <= 3.0 {
            0.5 * (1.0 + erf_series(x))
        } else if x > 0.0 {
            1.0 - 0.5 * erfc_cf(x)
        } else {
            0.5 * erfc_cf(-x)
        }
    }

    #[test]
    fn cdf_matches_series_oracle() {
        let mut worst: f64 = 0.0;
        for i in -800..=800 {
            let z = i as f64 / 100.0;
            worst = worst.max((cdf(z) - cdf_oracle(z)).abs());
        }
        assert!(worst <= 1e-12, "max abs error {worst:e}");
    }

    #[test]
    fn tail_relative_accuracy() {
        for &z in &[5.0, 7.0, 9.0, 12.0] {
            let oracle = 0.5 * erfc_cf(z / std::f64::consts::SQRT_2);
            let rel = (upper_tail(z) - oracle).abs() / oracle;
            assert!(rel < 1e-12, "z={z} rel {rel:e}");
        }
    }

    #[test]
    fn known_quantiles() {
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((quantile(0.995) - Z99).abs() < 1e-12);
        assert_eq!(quantile(0.5), 0.0);
    }
}
