use serde::{Deserialize, Serialize};

/// Block or term ratios below this count as a summable trend.
pub const TREND_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `sum a_n = inf`, `sum b_n < inf`, `P{gap <= a_n} <= b_n`: no explosion.
    Forward,
    /// Both sequences summable, `P{T_n >= a_n} <= b_n`: explosion. Diagnostic
    /// only; the random-time hypotheses are not checked.
    Converse,
}

/// Sequences `a_n`, `b_n` (indexed from `n = 1`) and optional empirical
/// probabilities with confidence radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessCriterion {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub empirical_p: Option<Vec<(f64, f64)>>,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Divergent,
    Summable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub horizon: usize,
    pub partial_a: Vec<f64>,
    pub partial_b: Vec<f64>,
    pub a_trend: Option<Trend>,
    pub b_trend: Option<Trend>,
    pub a_ratio: f64,
    pub b_ratio: f64,
    /// Per index: `p_n - radius_n <= b_n`.
    pub p_within: Vec<bool>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

fn prefix_sums(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect()
}

/// Smaller of the last dyadic block-sum ratio (Cauchy condensation) and the
/// last term ratio.
fn trend_ratio(x: &[f64]) -> f64 {
    let blocks: Vec<f64> = (0..)
        .map(|k| ((1usize << k) - 1, (1usize << (k + 1)) - 1))
        .take_while(|&(_, hi)| hi <= x.len())
        .map(|(lo, hi)| x[lo..hi].iter().sum())
        .collect();
    let block = match blocks.len() {
        0 | 1 => f64::INFINITY,
        l => blocks[l - 1] / blocks[l - 2],
    };
    let n = x.len();
    let term = if n < 2 { f64::INFINITY } else { x[n - 1] / x[n - 2] };
    block.min(term)
}

fn trend(x: &[f64]) -> (Trend, f64) {
    let r = trend_ratio(x);
    let t = if r < TREND_THRESHOLD {
        Trend::Summable
    } else {
        Trend::Divergent
    };
    (t, r)
}

/// Finite-horizon diagnostic: trends of `sum a_n` and `sum b_n` over the first
/// `horizon` terms and, when present, whether each empirical probability is
/// below `b_n` within its radius. Never a proof.
pub fn check_criterion(criterion: &CompletenessCriterion, horizon: usize) -> CriterionReport {
    let mut notes = Vec::new();
    let h = horizon.min(criterion.a.len()).min(criterion.b.len());
    let a = &criterion.a[..h];
    let b = &criterion.b[..h];
    let positive = a.iter().chain(b).all(|v| *v > 0.0 && v.is_finite());
    let p_within: Vec<bool> = criterion
        .empirical_p
        .as_ref()
        .map(|ps| {
            ps.iter()
                .zip(b)
                .map(|(&(p, r), &bn)| p - r <= bn)
                .collect()
        })
        .unwrap_or_default();
    let mut report = CriterionReport {
        horizon: h,
        partial_a: prefix_sums(a),
        partial_b: prefix_sums(b),
        a_trend: None,
        b_trend: None,
        a_ratio: f64::NAN,
        b_ratio: f64::NAN,
        p_within,
        verdict: Verdict::InsufficientData,
        notes: Vec::new(),
    };
    if h < horizon {
        notes.push(format!("sequences shorter than horizon {horizon}"));
    }
    if !positive {
        notes.push("entries must be positive and finite".into());
    }
    if h < 4 || h < horizon || !positive {
        report.notes = notes;
        return report;
    }
    let (ta, ra) = trend(a);
    let (tb, rb) = trend(b);
    report.a_trend = Some(ta);
    report.b_trend = Some(tb);
    report.a_ratio = ra;
    report.b_ratio = rb;
    let want_a = match criterion.direction {
        Direction::Forward => Trend::Divergent,
        Direction::Converse => {
            notes.push("converse direction: diagnostic only".into());
            Trend::Summable
        }
    };
    let mut ok = true;
    if ta != want_a {
        notes.push(format!("sum a_n trend is {ta:?}, expected {want_a:?}"));
        ok = false;
    }
    if tb != Trend::Summable {
        notes.push("sum b_n does not look summable".into());
        ok = false;
    }
    for (i, w) in report.p_within.iter().enumerate() {
        if !w {
            notes.push(format!("empirical p at n = {} exceeds b_n", i + 1));
            ok = false;
        }
    }
    report.verdict = if ok {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    report.notes = notes;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
        (1..=n).map(|k| f(k as f64)).collect()
    }

    #[test]
    fn harmonic_and_geometric() {
        let c = CompletenessCriterion {
            a: seq(|n| 1.0 / n, 32),
            b: seq(|n| 0.5f64.powf(n), 32),
            empirical_p: Some(vec![(0.0, 0.0); 32]),
            direction: Direction::Forward,
        };
        let r = check_criterion(&c, 32);
        assert_eq!(r.verdict, Verdict::Consistent, "{:?}", r.notes);
        assert!((r.partial_a[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn harmonic_b_flagged() {
        let c = CompletenessCriterion {
            a: seq(|n| 1.0 / n, 32),
            b: seq(|n| 1.0 / n, 32),
            empirical_p: None,
            direction: Direction::Forward,
        };
        let r = check_criterion(&c, 32);
        assert_eq!(r.b_trend, Some(Trend::Divergent));
        assert_eq!(r.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn inverse_square_is_summable() {
        assert_eq!(trend(&seq(|n| 1.0 / (n * n), 64)).0, Trend::Summable);
        assert_eq!(trend(&seq(|n| 1.0 / n, 4)).0, Trend::Divergent);
        assert_eq!(trend(&seq(|n| 0.5f64.powf(n), 4)).0, Trend::Summable);
    }

    #[test]
    fn empirical_violation_and_short_horizon() {
        let mut c = CompletenessCriterion {
            a: seq(|n| 0.5f64.powf(n), 4),
            b: seq(|n| 0.5f64.powf(n), 4),
            empirical_p: Some(vec![(0.1, 0.01), (0.9, 0.01), (0.0, 0.0), (0.0, 0.0)]),
            direction: Direction::Converse,
        };
        let r = check_criterion(&c, 4);
        assert_eq!(r.p_within, vec![true, false, true, true]);
        assert_eq!(r.verdict, Verdict::Inconsistent);
        assert_eq!(check_criterion(&c, 3).verdict, Verdict::InsufficientData);
        assert_eq!(check_criterion(&c, 8).verdict, Verdict::InsufficientData);
        c.empirical_p = None;
        assert_eq!(check_criterion(&c, 4).verdict, Verdict::Consistent);
    }
}
