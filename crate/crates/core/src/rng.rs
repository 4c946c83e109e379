//! Counter-based random numbers.
//!
//! Every variate is a pure function of a 64-bit key, so any draw can be
//! regenerated independently of evaluation order or worker count. Keys are
//! built by folding integer coordinates (seed, driver, block, node, ...)
//! through the SplitMix64 finalizer.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of coordinates into a single key.
#[inline]
pub fn key(parts: &[u64]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for &p in parts {
        h = mix64(h.wrapping_add(GOLDEN) ^ p);
    }
    h
}

/// Seed of an independent substream, e.g. one Monte Carlo replica.
#[inline]
pub fn substream(seed: u64, tag: u64, index: u64) -> u64 {
    key(&[seed, tag, index])
}

/// Uniform in the open interval (0, 1).
#[inline]
pub fn uniform_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// Standard normal variate attached to `k` (Box-Muller, cosine branch).
#[inline]
pub fn normal_at(k: u64) -> f64 {
    let u1 = uniform_open(mix64(k));
    let u2 = uniform_open(mix64(k ^ GOLDEN));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sequential stream over a counter: draw `i` is `f(key(seed, i))`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.seed ^ mix64(self.counter.wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        uniform_open(self.next_u64())
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        let k = self.next_u64();
        normal_at(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_order_sensitive() {
        assert_ne!(key(&[1, 2]), key(&[2, 1]));
        assert_eq!(key(&[7, 8, 9]), key(&[7, 8, 9]));
    }

    #[test]
    fn uniform_stays_open() {
        assert!(uniform_open(0) > 0.0);
        assert!(uniform_open(u64::MAX) < 1.0);
    }

    #[test]
    fn normal_moments() {
        let n = 200_000;
        let mut rng = CounterRng::new(42);
        let xs: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let kurt = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64 / (var * var);
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "var {var}");
        assert!((kurt - 3.0).abs() < 0.1, "kurtosis {kurt}");
    }

    #[test]
    fn uniform_bins_are_flat() {
        let mut rng = CounterRng::new(3);
        let mut bins = [0usize; 16];
        let n = 160_000;
        for _ in 0..n {
            bins[(rng.uniform() * 16.0) as usize] += 1;
        }
        // chi-square with 15 dof; 99.9% quantile is about 37.7
        let expected = n as f64 / 16.0;
        let chi2: f64 = bins
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 37.7, "chi2 {chi2}");
    }
}
