use std::fs;

use flowlab::exp::{emit_report, run, ExperimentConfig, ExperimentKind, Table};

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
seed = 5
[union]
n_mc = 300
n_max = 30
[bc]
n_max = 6
vectors = 40
passage_paths = 4000
"#,
    )
    .unwrap()
}

#[test]
fn emitted_tables_parse_back() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    for kind in [ExperimentKind::UnionProb, ExperimentKind::BcSuite] {
        let r = run(kind, &cfg).unwrap();
        emit_report(&r, &cfg.to_toml(), dir.path()).unwrap();
        for t in &r.tables {
            let text = fs::read_to_string(dir.path().join(format!("{}.csv", t.name))).unwrap();
            let back = Table::from_csv(&t.name, &text).unwrap();
            assert_eq!(back.columns, t.columns);
            assert_eq!(back.rows.len(), t.rows.len());
            for (a, b) in back.rows.iter().zip(&t.rows) {
                for (x, y) in a.iter().zip(b) {
                    match (x.as_f64(), y.as_f64()) {
                        (Some(u), Some(v)) => assert!(u == v || (u.is_nan() && v.is_nan()), "{u} vs {v}"),
                        _ => assert_eq!(x, y),
                    }
                }
            }
        }
    }
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let cfg = small();
    let read = |seed: u64, sub: &str, root: &std::path::Path| {
        let mut c = cfg.clone();
        c.seed = seed;
        let r = run(ExperimentKind::UnionProb, &c).unwrap();
        let d = root.join(sub);
        emit_report(&r, &c.to_toml(), &d).unwrap();
        (
            fs::read(d.join("union_curve.csv")).unwrap(),
            fs::read(d.join("report.json")).unwrap(),
        )
    };
    let dir = tempfile::tempdir().unwrap();
    let a = read(5, "a", dir.path());
    let b = read(5, "b", dir.path());
    let c = read(6, "c", dir.path());
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn report_echoes_config_and_hash() {
    let cfg = small();
    let r = run(ExperimentKind::CorollaryPlan, &ExperimentConfig {
        plan: flowlab::exp::PlanConfig {
            n_mc: 100,
            steps: 32,
            ..Default::default()
        },
        ..cfg.clone()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&r, "echo", dir.path()).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("config.echo")).unwrap(), "echo");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(json["experiment"], "corollary_plan");
    assert!(json["summary"]["plan"]["N"].as_u64().unwrap() >= 2);
}

#[test]
fn race_on_small_budget_is_consistent() {
    let mut cfg = ExperimentConfig::default();
    cfg.race.levels = 2;
    cfg.race.seeds = 8;
    cfg.race.horizon = 30.0;
    cfg.race.union_mc = 200;
    cfg.race.k_paths = 16;
    cfg.race.a_max = 8;
    let r = run(ExperimentKind::Race, &cfg).unwrap();
    assert!(r.checks.iter().any(|c| c.name == "transcripts" && c.passed));
    let planner = r.table("race_planner").unwrap();
    let used = planner.values("N_used");
    assert_eq!(used.len(), 2);
    for v in used {
        let v = v.unwrap() as u64;
        assert!(v >= 2 && v % 2 == 0);
    }
    let delta = planner.values("delta_n");
    assert!(delta.iter().all(|d| d.is_some_and(|d| d > 0.0 && d < 1.0)));
}
