//! Acceptance run: one line per criterion. Criteria that cannot be met at
//! desk scale are reported as FAIL with the measured values; the process
//! exits non-zero only when a criterion expected to hold does not, or when a
//! documented shortfall stops showing its expected partial behaviour.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use flowlab::bc::ENUMERATION_LIMIT;
use flowlab::coeff::{CoefficientField, Drivers, FrequencyLadder, PeriodicProfile, StripLayout};
use flowlab::exp::{emit_report, run, ExperimentConfig, ExperimentKind, ExperimentReport};
use flowlab::homog::{effective_constants_for, realized_qv};
use flowlab::sde::{integrate, BrownianPath, IntegrateOptions, StopRule};

#[derive(PartialEq)]
enum Outcome {
    Pass,
    /// The criterion does not hold at feasible scale; the partial checks did.
    Shortfall,
    Fail,
}

struct Line {
    id: usize,
    name: &'static str,
    outcome: Outcome,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn check<'a>(r: &'a ExperimentReport, name: &str) -> &'a flowlab::exp::Check {
    r.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("report {} has no check {name}", r.experiment))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn sandwich_and_passage() -> (Line, Line) {
    let cfg = ExperimentConfig::default();
    assert!(cfg.bc.n_max <= ENUMERATION_LIMIT);
    let (r, el) = timed(|| run(ExperimentKind::BcSuite, &cfg).unwrap());
    let s = check(&r, "sandwich");
    let p = check(&r, "passage");
    let e = check(&r, "enumeration_vs_recursion");
    (
        Line {
            id: 1,
            name: "BC sandwich",
            outcome: if s.passed && e.passed { Outcome::Pass } else { Outcome::Fail },
            detail: format!("{}; {}", s.detail, e.detail),
            elapsed: el,
            limit: Duration::from_secs(30),
        },
        Line {
            id: 2,
            name: "Gaussian first passage",
            outcome: if p.passed { Outcome::Pass } else { Outcome::Fail },
            detail: format!("{} ({} paths, rates {:?})", p.detail, cfg.bc.passage_paths, cfg.bc.rates),
            elapsed: el,
            limit: Duration::from_secs(60),
        },
    )
}

fn effective() -> Line {
    let (res, el) = timed(|| {
        let pair = effective_constants_for(&Drivers::default_pair(), false).unwrap();
        let bump = effective_constants_for(
            &Drivers::one(PeriodicProfile::flat_point_bump(0.5, 1.0).unwrap()),
            false,
        )
        .unwrap();
        (pair, bump)
    });
    let (pair, bump) = res;
    let d_pair = (pair.beta1 - 1.0).abs();
    let d_bump = (bump.alpha_hat.powi(2) + bump.beta_hat.powi(2) - bump.beta1.powi(2)).abs();
    let ok = d_pair <= 1e-10 && d_bump <= 1e-9 && bump.beta_hat > 0.0;
    Line {
        id: 3,
        name: "Effective constants",
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        detail: format!(
            "pair |beta1 - 1| = {d_pair:e}; bump beta1 = {:.6}, alpha_hat = {:.6}, beta_hat = {:.6}, defect {d_bump:e}",
            bump.beta1, bump.alpha_hat, bump.beta_hat
        ),
        elapsed: el,
        limit: Duration::from_secs(1),
    }
}

fn homog() -> Line {
    let mut cfg = ExperimentConfig::default();
    // at rho = 0.1 the Euler scheme's O(dt) bias (about 1.2%) hides the trend
    cfg.rho = 0.05;
    let (r, el) = timed(|| run(ExperimentKind::HomogSweep, &cfg).unwrap());
    let f = check(&r, "qv_final");
    let t = check(&r, "qv_trend");
    Line {
        id: 4,
        name: "Homogenization QV",
        outcome: if f.passed && t.passed { Outcome::Pass } else { Outcome::Fail },
        detail: format!("rho = {}: {}; {}", cfg.rho, f.detail, t.detail),
        elapsed: el,
        limit: Duration::from_secs(300),
    }
}

fn cross() -> Line {
    let cfg = ExperimentConfig::default();
    let (r, el) = timed(|| run(ExperimentKind::CrossQv, &cfg).unwrap());
    Line {
        id: 5,
        name: "Cross-QV decorrelation",
        outcome: if r.all_passed() { Outcome::Pass } else { Outcome::Fail },
        detail: r.checks.iter().map(|c| c.detail.clone()).collect::<Vec<_>>().join("; "),
        elapsed: el,
        limit: Duration::from_secs(300),
    }
}

fn corollary() -> Line {
    let cfg = ExperimentConfig::default();
    let (r, el) = timed(|| run(ExperimentKind::CorollaryPlan, &cfg).unwrap());
    let c = check(&r, "corollary");
    let plan = &r.summary["plan"];
    Line {
        id: 6,
        name: "Corollary validation",
        outcome: if r.all_passed() { Outcome::Pass } else { Outcome::Fail },
        detail: format!(
            "delta = {}, u = {}, k = {}, N = {}; {}",
            plan["delta"], plan["u"], plan["k"], plan["N"], c.detail
        ),
        elapsed: el,
        limit: Duration::from_secs(120),
    }
}

fn union() -> Line {
    let cfg = ExperimentConfig::default();
    let (res, el) = timed(|| {
        let r = run(ExperimentKind::UnionProb, &cfg).unwrap();
        let mut wide = cfg.clone();
        wide.union.n_max = 20_000;
        wide.union.n_mc = 2000;
        let w = run(ExperimentKind::UnionProb, &wide).unwrap();
        (r, w)
    });
    let (r, wide) = res;
    let mono = check(&r, "monotone").passed;
    let reach = check(&r, "reaches_target");
    let wide_reach = check(&wide, "reaches_target");
    let outcome = match (mono, reach.passed, wide_reach.passed) {
        (true, true, _) => Outcome::Pass,
        (true, false, true) => Outcome::Shortfall,
        _ => Outcome::Fail,
    };
    Line {
        id: 7,
        name: "Union experiment",
        outcome,
        detail: format!(
            "monotone: {mono}; n <= 200: {}; extended to n = 20000 with 2000 runs: {}",
            reach.detail, wide_reach.detail
        ),
        elapsed: el,
        limit: Duration::from_secs(180),
    }
}

fn race() -> Line {
    let cfg = ExperimentConfig::default();
    let (r, el) = timed(|| run(ExperimentKind::Race, &cfg).unwrap());
    let med = check(&r, "median_gap_decreasing");
    let exc = check(&r, "exceedance_decreasing");
    let tr = check(&r, "transcripts");
    let outcome = match (med.passed && tr.passed, exc.passed) {
        (true, true) => Outcome::Pass,
        (true, false) => Outcome::Shortfall,
        _ => Outcome::Fail,
    };
    Line {
        id: 8,
        name: "Race qualitative check",
        outcome,
        detail: format!(
            "{} seeds, a_max = {}: {}; {}; transcripts ok: {}; {}",
            cfg.race.seeds,
            cfg.race.a_max,
            med.detail,
            exc.detail,
            tr.passed,
            r.notes.join("; ")
        ),
        elapsed: el,
        limit: Duration::from_secs(900),
    }
}

fn scheme() -> (Line, Line) {
    let layout = || StripLayout::new(vec![2, 4, 6, 8], 0.25).unwrap();
    let ((exact, iv_worst, literal_ok, z_mean, paths), el) = timed(|| {
        let probe = CoefficientField::new(
            Drivers::one(PeriodicProfile::constant(1.0)),
            FrequencyLadder::geometric_super(1000).unwrap(),
            layout(),
        )
        .unwrap();
        let path = BrownianPath::new(11, 1.0 / 4096.0, 2.0, 1).unwrap();
        let sol = integrate(&probe, 0.3, 0.4, &path, StopRule::Horizon, &IntegrateOptions::default()).unwrap();
        let w = path.values(0);
        let exact = sol.states.len() == w.len()
            && sol.states.iter().zip(&w).all(|(x, w)| x.to_bits() == (0.3 + w).to_bits());

        let field = CoefficientField::new(Drivers::default_pair(), FrequencyLadder::geometric_super(48).unwrap(), layout())
            .unwrap();
        let dt = flowlab::sde::required_dt(48.0, flowlab::sde::DEFAULT_RHO);
        let t = 0.25;
        let paths = 20;
        let (mut iv_worst, mut literal_ok, mut z_sum) = (0.0f64, 0usize, 0.0);
        for s in 0..paths {
            let path = BrownianPath::new(100 + s, dt, t, 2).unwrap();
            let y = (s as f64 + 0.5) / paths as f64;
            let sol = integrate(&field, 0.5, y, &path, StopRule::Horizon, &IntegrateOptions::default()).unwrap();
            let qv = realized_qv(&sol, t).unwrap();
            let line = field.line(y);
            let iv: f64 = sol.states[..sol.states.len() - 1]
                .iter()
                .map(|&x| {
                    let s = flowlab::coeff::Coefficient::sigma(&line, x);
                    (s[0] * s[0] + s[1] * s[1]) * dt
                })
                .sum();
            iv_worst = iv_worst.max((iv - t).abs() / t);
            let steps = sol.states.len() - 1;
            let max_inc = sol.states.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
            literal_ok += ((qv - t).abs() <= 2.0 * dt * steps as f64 * max_inc * max_inc) as usize;
            z_sum += (qv - t) / (2.0 * t * dt).sqrt();
        }
        (exact, iv_worst, literal_ok, z_sum / (paths as f64).sqrt(), paths)
    });
    let a = Line {
        id: 9,
        name: "Scheme exactness",
        outcome: if exact && iv_worst <= 1e-9 { Outcome::Pass } else { Outcome::Fail },
        detail: format!(
            "sigma = 1 bit-for-bit: {exact}; two-driver sum |sigma|^2 dt = t within {iv_worst:e} (relative) on every path"
        ),
        elapsed: el,
        limit: Duration::from_secs(10),
    };
    let b = Line {
        id: 9,
        name: "Scheme exactness, sum of squared increments",
        outcome: if literal_ok == paths as usize {
            Outcome::Pass
        } else if z_mean.abs() <= 3.0 {
            Outcome::Shortfall
        } else {
            Outcome::Fail
        },
        detail: format!(
            "|sum dX^2 - t| <= 2 dt steps max|dX|^2 on {literal_ok}/{paths} paths; pooled z of (sum dX^2 - t) / sqrt(2 t dt) = {z_mean:.3}"
        ),
        elapsed: el,
        limit: Duration::from_secs(10),
    };
    (a, b)
}

fn emitted(r: &ExperimentReport, cfg: &ExperimentConfig, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = emit_report(r, &cfg.to_toml(), dir)
        .unwrap()
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Line {
    let mut cfg = ExperimentConfig::default();
    cfg.homog.epsilons = vec![0.2, 0.1];
    cfg.homog.n_paths = 16;
    cfg.union.n_mc = 500;
    cfg.bc.n_max = 6;
    cfg.bc.vectors = 50;
    cfg.bc.passage_paths = 5000;
    cfg.plan.n_mc = 500;
    cfg.plan.steps = 128;
    cfg.race.seeds = 6;
    cfg.race.horizon = 20.0;
    cfg.race.union_mc = 200;
    cfg.race.k_paths = 16;
    let kinds = [
        ExperimentKind::CoeffProbe,
        ExperimentKind::HomogSweep,
        ExperimentKind::UnionProb,
        ExperimentKind::BcSuite,
        ExperimentKind::CorollaryPlan,
        ExperimentKind::Race,
    ];
    let (mismatch, el) = timed(|| {
        let tmp = tempfile::tempdir().unwrap();
        let mut mismatch = Vec::new();
        for kind in kinds {
            let outputs: Vec<_> = [1usize, 3]
                .iter()
                .map(|&n| {
                    let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
                    let r = pool.install(|| run(kind, &cfg).unwrap());
                    emitted(&r, &cfg, &tmp.path().join(format!("{}-{n}", kind.name())))
                })
                .collect();
            if outputs[0] != outputs[1] {
                mismatch.push(kind.name());
            }
        }
        mismatch
    });
    Line {
        id: 10,
        name: "Determinism",
        outcome: if mismatch.is_empty() { Outcome::Pass } else { Outcome::Fail },
        detail: format!(
            "{} experiments on 1 and 3 threads; differing outputs: {mismatch:?}",
            kinds.len()
        ),
        elapsed: el,
        limit: Duration::from_secs(120),
    }
}

fn main() {
    let mut lines = Vec::new();
    let (a, b) = sandwich_and_passage();
    lines.push(a);
    lines.push(b);
    lines.push(effective());
    lines.push(homog());
    lines.push(cross());
    lines.push(corollary());
    lines.push(union());
    lines.push(race());
    let (a, b) = scheme();
    lines.push(a);
    lines.push(b);
    lines.push(determinism());

    let mut bad = 0;
    for l in &lines {
        let slow = l.elapsed > l.limit;
        let tag = match (&l.outcome, slow) {
            (Outcome::Pass, false) => "PASS",
            (Outcome::Pass, true) => "FAIL (runtime)",
            (Outcome::Shortfall, _) => "FAIL (documented shortfall)",
            (Outcome::Fail, _) => "FAIL",
        };
        if l.outcome == Outcome::Fail || (l.outcome == Outcome::Pass && slow) {
            bad += 1;
        }
        println!(
            "criterion {:>2} {:<45} {tag} [{:.1}s / {}s] {}",
            l.id,
            l.name,
            l.elapsed.as_secs_f64(),
            l.limit.as_secs(),
            l.detail
        );
    }
    if bad > 0 {
        eprintln!("{bad} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
