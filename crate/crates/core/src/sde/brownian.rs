//! Reproducible Brownian increments built by dyadic Brownian-bridge
//! refinement.
//!
//! Time is cut into blocks of length `b = dt * 2^depth` (with `b` in `[1, 2)`
//! for `dt < 1`). The increment over block `j` is `sqrt(b) Z_{j,0}`; an
//! interval node `k` of the binary refinement tree splits its increment
//! `D` into `D/2 + sqrt(h)/2 Z_{j,k}` and the remainder. Every `Z` is a
//! counter-based normal keyed by `(seed, driver, block, node)`, so
//!
//! - any step can be generated without generating its predecessors,
//! - halving `dt` (one more tree level) leaves every coarse increment equal
//!   to the sum of its two refined halves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{key, mix64, normal_at};

const NODE_GAMMA: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    seed: u64,
    dt: f64,
    horizon: f64,
    drivers: usize,
    block: f64,
    depth: u32,
}

fn block_and_depth(dt: f64) -> (f64, u32) {
    // dt = m * 2^e with m in [1, 2)
    let e = dt.log2().floor() as i32;
    let mut e = e;
    // guard against log2 rounding at exact powers of two
    if dt / 2f64.powi(e) >= 2.0 {
        e += 1;
    } else if dt / 2f64.powi(e) < 1.0 {
        e -= 1;
    }
    if e <= 0 {
        (dt * 2f64.powi(-e), (-e) as u32)
    } else {
        (dt, 0)
    }
}

impl BrownianPath {
    pub fn new(seed: u64, dt: f64, horizon: f64, drivers: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param(format!("dt must be positive, got {dt}")));
        }
        if !(horizon >= dt && horizon.is_finite()) {
            return Err(Error::param(format!(
                "horizon {horizon} must be finite and at least dt = {dt}"
            )));
        }
        if !(1..=2).contains(&drivers) {
            return Err(Error::param(format!("driver count must be 1 or 2, got {drivers}")));
        }
        let (block, depth) = block_and_depth(dt);
        if depth > 48 {
            return Err(Error::param(format!("dt = {dt:e} is below the supported resolution")));
        }
        Ok(Self {
            seed,
            dt,
            horizon,
            drivers,
            block,
            depth,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn driver_count(&self) -> usize {
        self.drivers
    }

    /// Number of grid steps covering the horizon.
    pub fn steps(&self) -> usize {
        let r = self.horizon / self.dt;
        let nearest = r.round();
        if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            r.ceil() as usize
        }
    }

    /// Same Brownian motion on a grid `2^levels` times finer.
    pub fn refined(&self, levels: u32) -> Result<Self> {
        Self::new(
            self.seed,
            self.dt / 2f64.powi(levels as i32),
            self.horizon,
            self.drivers,
        )
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.seed, self.dt, horizon, self.drivers)
    }

    /// Increments of `driver` in time order starting at step 0.
    pub fn increments(&self, driver: usize) -> Increments {
        self.increments_from(driver, 0)
    }

    /// Increments of `driver` in time order starting at step `start`; the
    /// iterator ends at the horizon.
    pub fn increments_from(&self, driver: usize, start: usize) -> Increments {
        assert!(driver < self.drivers, "driver {driver} out of range");
        let total = self.steps();
        let mut it = Increments {
            seed: self.seed,
            driver: driver as u64,
            depth: self.depth,
            block_scale: self.block.sqrt(),
            half_scales: (0..self.depth)
                .map(|l| 0.5 * (self.block / 2f64.powi(l as i32)).sqrt())
                .collect(),
            block: 0,
            block_key: 0,
            stack: Vec::with_capacity(self.depth as usize + 1),
            remaining: total.saturating_sub(start),
        };
        if it.remaining > 0 {
            let per_block = 1u64 << self.depth;
            it.enter(start as u64 / per_block, start as u64 % per_block);
        }
        it
    }

    /// Materialized increments of `driver` over the whole horizon.
    pub fn increment_vec(&self, driver: usize) -> Vec<f64> {
        self.increments(driver).collect()
    }

    /// `W(t_k)` for `k = 0..=steps` (starting at 0).
    pub fn values(&self, driver: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.steps() + 1);
        let mut w = 0.0;
        out.push(w);
        for d in self.increments(driver) {
            w += d;
            out.push(w);
        }
        out
    }
}

/// Streaming generator of one driver's increments.
#[derive(Debug, Clone)]
pub struct Increments {
    seed: u64,
    driver: u64,
    depth: u32,
    block_scale: f64,
    half_scales: Vec<f64>,
    block: u64,
    block_key: u64,
    /// pending right siblings: (node, level, increment)
    stack: Vec<(u64, u32, f64)>,
    remaining: usize,
}

impl Increments {
    #[inline]
    fn node_normal(&self, node: u64) -> f64 {
        normal_at(mix64(self.block_key.wrapping_add(node.wrapping_mul(NODE_GAMMA))))
    }

    /// Positions the generator on `leaf` of `block`, leaving the path from the
    /// root to that leaf on the stack.
    fn enter(&mut self, block: u64, leaf: u64) {
        self.block = block;
        self.block_key = key(&[self.seed, self.driver, block]);
        self.stack.clear();
        let total = self.block_scale * self.node_normal(0);
        let (mut node, mut level, mut incr) = (1u64, 0u32, total);
        while level < self.depth {
            let left = 0.5 * incr + self.half_scales[level as usize] * self.node_normal(node);
            let right = incr - left;
            let bit = (leaf >> (self.depth - 1 - level)) & 1;
            if bit == 0 {
                self.stack.push((2 * node + 1, level + 1, right));
                node *= 2;
                incr = left;
            } else {
                node = 2 * node + 1;
                incr = right;
            }
            level += 1;
        }
        self.stack.push((node, level, incr));
    }

    fn descend(&mut self, mut node: u64, mut level: u32, mut incr: f64) -> f64 {
        while level < self.depth {
            let left = 0.5 * incr + self.half_scales[level as usize] * self.node_normal(node);
            self.stack.push((2 * node + 1, level + 1, incr - left));
            node *= 2;
            incr = left;
            level += 1;
        }
        incr
    }
}

impl Iterator for Increments {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        if self.stack.is_empty() {
            self.enter(self.block + 1, 0);
        }
        let (node, level, incr) = self.stack.pop().expect("stack refilled");
        Some(self.descend(node, level, incr))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Increments {}

/// Lock-step increments of all drivers of a path.
#[derive(Debug, Clone)]
pub struct Noise {
    first: Increments,
    second: Option<Increments>,
}

impl Noise {
    pub fn new(path: &BrownianPath, start: usize) -> Self {
        Self {
            first: path.increments_from(0, start),
            second: (path.driver_count() > 1).then(|| path.increments_from(1, start)),
        }
    }
}

impl Iterator for Noise {
    type Item = [f64; 2];

    #[inline]
    fn next(&mut self) -> Option<[f64; 2]> {
        let a = self.first.next()?;
        let b = match &mut self.second {
            Some(s) => s.next()?,
            None => 0.0,
        };
        Some([a, b])
    }
}
