use super::brownian::BrownianPath;
use super::integrate::{integrate_line, IntegrateOptions, SolutionPath, StopRule};
use crate::coeff::{Coefficient, CoefficientField, Drivers, LineCoefficient};
use crate::error::{Error, Result};

/// `xi(z) = sigma(z, y_hat)` for `z <= level` and `H(a_j z)` for `z >= level`:
/// the coefficient one strip sees after a restart at `x = level`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenCoefficient {
    level: usize,
    index: usize,
    frequency: f64,
    below: LineCoefficient,
    drivers: Drivers,
    max_frequency: f64,
}

impl FrozenCoefficient {
    /// Frozen coefficient at `level` with frequency index `index`; `y_hat` is
    /// any point of the current interval and only matters below `level`.
    pub fn new(field: &CoefficientField, level: usize, index: usize, y_hat: f64) -> Result<Self> {
        let a = field.ladder.get(index).ok_or_else(|| {
            Error::param(format!(
                "frequency index {index} outside ladder of length {}",
                field.ladder.len()
            ))
        })? as f64;
        let below = field.line(y_hat);
        let constant = field.drivers.base().is_constant();
        let max_frequency = if constant {
            0.0
        } else {
            below.max_frequency_below(level).max(a)
        };
        Ok(Self {
            level,
            index,
            frequency: a,
            drivers: field.drivers.clone(),
            below,
            max_frequency,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn y_hat(&self) -> f64 {
        self.below.y()
    }
}

impl Coefficient for FrozenCoefficient {
    fn drivers(&self) -> usize {
        self.drivers.count()
    }

    #[inline]
    fn sigma(&self, z: f64) -> [f64; 2] {
        if z <= self.level as f64 {
            self.below.sigma(z)
        } else {
            self.drivers.eval(self.frequency * z)
        }
    }

    fn max_frequency(&self) -> f64 {
        self.max_frequency
    }
}

/// Solves `dM = xi(M) dW` from `start`.
pub fn frozen_integrate(
    frozen: &FrozenCoefficient,
    start: f64,
    path: &BrownianPath,
    stop: StopRule,
    opts: &IntegrateOptions,
) -> Result<SolutionPath> {
    integrate_line(frozen, start, frozen.y_hat(), path, stop, opts)
}
