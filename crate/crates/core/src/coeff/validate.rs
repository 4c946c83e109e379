use serde::{Deserialize, Serialize};

use super::field::{CoefficientField, Drivers};
use crate::error::{Error, Result};

const MAX_LISTED: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointFinding {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Findings of a grid scan of a coefficient field. Lists are truncated to
/// the first 64 entries; the counts are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub range_violations: Vec<PointFinding>,
    pub range_violation_count: usize,
    pub glue_violations: Vec<PointFinding>,
    pub glue_violation_count: usize,
    /// Largest |d sigma / dx| seen on the grid.
    pub max_slope: f64,
    /// Largest |d sigma / dx| per unit x-cell, starting with the cell [-1, 0].
    pub slope_per_cell: Vec<f64>,
    /// Cells whose slope exceeds frequency times the profile Lipschitz constant.
    pub continuity_violations: Vec<usize>,
    /// `max |sigma_1^2 + sigma_2^2 - 1|` for two-driver fields.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_unit_defect: Option<f64>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.range_violation_count == 0
            && self.glue_violation_count == 0
            && self.continuity_violations.is_empty()
            && self.max_unit_defect.is_none_or(|d| d <= 1e-12)
    }
}

fn profile_lipschitz(drivers: &Drivers) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let x = i as f64 * h;
        let [a0, b0] = drivers.eval(x);
        let [a1, b1] = drivers.eval(x + h);
        worst = worst.max(((a1 - a0) / h).abs()).max(((b1 - b0) / h).abs());
    }
    worst
}

/// Scans `sigma` on a grid with `resolution` points per unit in x (covering
/// `[-1, levels]`) and `resolution + 1` rows in y.
pub fn validate_field(field: &CoefficientField, resolution: usize) -> Result<ValidationReport> {
    if resolution < 10 {
        return Err(Error::param("grid resolution must be at least 10"));
    }
    let levels = field.layout.levels();
    let two = field.drivers.count() == 2;
    let lip = profile_lipschitz(&field.drivers) * 1.05 + 1e-9;
    let glue = field.glue_value();

    let mut report = ValidationReport {
        range_violations: Vec::new(),
        range_violation_count: 0,
        glue_violations: Vec::new(),
        glue_violation_count: 0,
        max_slope: 0.0,
        slope_per_cell: vec![0.0; levels + 1],
        continuity_violations: Vec::new(),
        max_unit_defect: two.then_some(0.0),
    };

    for iy in 0..=resolution {
        let y = iy as f64 / resolution as f64;
        let line = field.line(y);
        for cell in 0..=levels {
            let x0 = cell as f64 - 1.0;
            let cell_freq = if cell == 0 {
                1.0
            } else {
                (0..field.layout.frequencies_at(cell - 1))
                    .map(|i| field.ladder.values[i] as f64)
                    .fold(1.0, f64::max)
            };
            let dh = 1e-4 / cell_freq;
            for ix in 0..resolution {
                let x = x0 + ix as f64 / resolution as f64;
                let s = field.eval(x, y);
                for (d, &v) in s.iter().enumerate().take(field.drivers.count()) {
                    if !(0.5 - 1e-12..=1.0 + 1e-12).contains(&v) {
                        report.range_violation_count += 1;
                        if report.range_violations.len() < MAX_LISTED {
                            report.range_violations.push(PointFinding { x, y, value: v });
                        }
                    }
                    let _ = d;
                }
                if two {
                    let defect = (s[0] * s[0] + s[1] * s[1] - 1.0).abs();
                    let m = report.max_unit_defect.get_or_insert(0.0);
                    *m = m.max(defect);
                }
                // central difference inside the cell (the line is smooth there)
                let xa = (x - dh).max(x0);
                let xb = (x + dh).min(x0 + 1.0);
                use crate::coeff::Coefficient;
                let (sa, sb) = (line.sigma(xa), line.sigma(xb));
                let slope = ((sb[0] - sa[0]) / (xb - xa))
                    .abs()
                    .max(((sb[1] - sa[1]) / (xb - xa)).abs());
                let cell_max = &mut report.slope_per_cell[cell];
                *cell_max = cell_max.max(slope);
            }
            if report.slope_per_cell[cell] > lip * cell_freq
                && !report.continuity_violations.contains(&cell)
            {
                report.continuity_violations.push(cell);
            }
        }
        for n in 0..=levels {
            let s = field.eval(n as f64, y);
            let err = (s[0] - glue[0]).abs().max((s[1] - glue[1]).abs());
            if err > 1e-12 {
                report.glue_violation_count += 1;
                if report.glue_violations.len() < MAX_LISTED {
                    report.glue_violations.push(PointFinding {
                        x: n as f64,
                        y,
                        value: s[0],
                    });
                }
            }
        }
    }
    report.max_slope = report.slope_per_cell.iter().copied().fold(0.0, f64::max);
    report.continuity_violations.sort_unstable();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{FrequencyLadder, PeriodicProfile, ProfileKind, StripLayout};

    fn field_with(drivers: Drivers) -> CoefficientField {
        CoefficientField::new(
            drivers,
            FrequencyLadder::geometric_super(1000).unwrap(),
            StripLayout::new(vec![4, 6], 0.25).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn conformant_field_is_clean() {
        let f = field_with(Drivers::one(PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap()));
        let r = validate_field(&f, 100).unwrap();
        assert!(r.is_clean(), "{r:?}");
        assert!(r.max_slope > 0.0);
    }

    #[test]
    fn out_of_range_profile_is_reported() {
        let bad = PeriodicProfile::unchecked(ProfileKind::FlatPointBump, 0.5, 1.2);
        let f = field_with(Drivers::one(bad));
        let r = validate_field(&f, 20).unwrap();
        assert!(r.range_violation_count > 0);
        assert!(r.range_violations.iter().all(|p| p.value > 1.0));
    }

    #[test]
    fn pair_keeps_unit_norm() {
        let f = field_with(Drivers::default_pair());
        let r = validate_field(&f, 50).unwrap();
        assert!(r.max_unit_defect.unwrap() <= 1e-12);
        assert!(r.is_clean(), "{r:?}");
    }

    #[test]
    fn low_resolution_refused() {
        let f = field_with(Drivers::default_pair());
        assert!(validate_field(&f, 5).is_err());
    }
}
