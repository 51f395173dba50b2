//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with `cargo test --test acceptance` (or as part of
//! `cargo test --workspace`).

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qmap::channels::{depolarizing, identity_channel, paper_counterexample, LinearMap};
use qmap::distances::{contraction_ratio, lindblad_check, square, DistanceKind};
use qmap::entanglement::{
    check_e1, check_e2, estimate_entanglement, random_local_unitaries, EstimatorConfig,
};
use qmap::linalg::{ComplexMatrix, Dims};
use qmap::search::{exact_max_ratio, search_violations, SearchConfig};
use qmap::states::{random_density, standard_state, StandardState};
use qmap::suites::{reproduce, run_suite, sample_unital, Suite, SuiteConfig};
use qmap::Error;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Check {
    ensure(
        elapsed < Duration::from_secs(limit_secs),
        format!("{:.2}s of {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn counterexample() -> Check {
    let start = Instant::now();
    let r = reproduce().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let tol = 1e-12;
    let close = |x: f64, y: f64| (x - y).abs() <= tol;
    ensure(
        close(r.d_hs_before, 1.0)
            && close(r.d_hs_after, 2.0)
            && close(r.channel_norm, 2.0)
            && close(r.ratio, 2.0)
            && r.passed,
        format!(
            "D_HS {} -> {}, norm {}, ratio {}",
            r.d_hs_before, r.d_hs_after, r.channel_norm, r.ratio
        ),
    )?;
    let out = Command::new(env!("CARGO_BIN_EXE_qmap"))
        .args(["reproduce", "--out", &tmp_path("reproduce.json")])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(
        out.status.code() == Some(0) && text.contains("ratio = 2\n"),
        format!("cli exit {:?}", out.status.code()),
    )?;
    within(elapsed, 1).map(|t| format!("values match within 1e-12, {t}"))
}

fn kadison() -> Check {
    let start = Instant::now();
    let mut cfg = SuiteConfig::new(Suite::Kadison, 7);
    cfg.n = 500;
    let r = run_suite(&cfg).map_err(|e| e.to_string())?;
    let t = within(start.elapsed(), 30)?;
    let m = &r.metrics[0];
    ensure(
        r.passed && m.count == 1500,
        format!(
            "{} triples, worst relative excess {:.2e}, {t}",
            m.count, m.worst
        ),
    )
}

fn contractive_distances() -> Check {
    let mut cfg = SuiteConfig::new(Suite::D2, 7);
    cfg.n = 500;
    let r = run_suite(&cfg).map_err(|e| e.to_string())?;
    let worst: Vec<String> = r
        .metrics
        .iter()
        .map(|m| format!("{} {:.2e}", m.check, m.worst))
        .collect();
    ensure(
        r.passed && r.metrics.len() == 3,
        format!(
            "{} violations; {}; {} skipped",
            r.failures.len(),
            worst.join(", "),
            r.skipped
        ),
    )
}

fn exact_ratio() -> Check {
    let (example, _, _) = paper_counterexample();
    let p = exact_max_ratio(&example);
    let id = exact_max_ratio(&identity_channel(4));
    let dep = exact_max_ratio(&depolarizing(4, 0.5).map_err(|e| e.to_string())?);
    ensure(
        (p - 2.0).abs() <= 1e-9 && (id - 1.0).abs() <= 1e-12 && (dep - 0.25).abs() <= 1e-9,
        format!("example {p}, identity {id}, depolarizing(0.5) {dep}"),
    )
}

fn unital_contraction() -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for d in 2..=4 {
        for i in 0..1000 {
            let (ch, s, r) = sample_unital(11, d, i);
            let ratio = contraction_ratio(DistanceKind::HilbertSchmidt, &ch, &s, &r)
                .map_err(|e| e.to_string())?;
            worst = worst.max(ratio);
            count += 1;
        }
    }
    ensure(
        worst <= 1.0 + 1e-8,
        format!("{count} channels, max ratio {worst}"),
    )
}

fn qubit_search() -> Check {
    let start = Instant::now();
    let r = search_violations(&SearchConfig {
        dim: 2,
        kraus_count: 2,
        budget: 2000,
        seed: 0,
        warm_start: None,
    })
    .map_err(|e| e.to_string())?;
    let t = within(start.elapsed(), 60)?;
    ensure(
        r.best_ratio <= 1.0 + 1e-8,
        format!(
            "best ratio {} over {} samples, {t}",
            r.best_ratio, r.samples_evaluated
        ),
    )
}

fn entanglement_estimator() -> Check {
    let start = Instant::now();
    let cfg = EstimatorConfig::default();
    let bell = standard_state(StandardState::Bell).map_err(|e| e.to_string())?;
    let est = estimate_entanglement(&bell, DistanceKind::HilbertSchmidt, &cfg)
        .map_err(|e| e.to_string())?;
    let lower = est.lower.unwrap_or(f64::NAN);
    ensure(
        (est.upper - 1.0 / 3.0).abs() <= 5e-3 && (lower - 1.0 / 3.0).abs() <= 5e-3,
        format!("bell upper {} lower {lower}", est.upper),
    )?;

    let two = Dims { d1: 2, d2: 2 };
    let e1 = check_e1(DistanceKind::HilbertSchmidt, two, 50, 0, &cfg).map_err(|e| e.to_string())?;
    ensure(
        e1.max_upper <= 1e-5,
        format!("separable max {:.2e}", e1.max_upper),
    )?;

    let mut max_gap = f64::NEG_INFINITY;
    for seed in 0..20 {
        let s = random_density(4, 4, seed)
            .and_then(|s| s.with_dims(Some(two)))
            .map_err(|e| e.to_string())?;
        let est = estimate_entanglement(&s, DistanceKind::HilbertSchmidt, &cfg)
            .map_err(|e| e.to_string())?;
        max_gap = max_gap.max(est.upper - est.lower.unwrap_or(f64::NAN));
    }
    ensure(max_gap <= 1e-3, format!("random-state gap {max_gap:.2e}"))?;
    let t = within(start.elapsed(), 300)?;
    Ok(format!(
        "bell upper {:.6} lower {:.6}, separable max {:.2e}, max gap {:.2e}, {t}",
        est.upper, lower, e1.max_upper, max_gap
    ))
}

fn invariance() -> Check {
    let mut e3 = SuiteConfig::new(Suite::E3, 5);
    e3.n = 200;
    let r3 = run_suite(&e3).map_err(|e| e.to_string())?;
    let mut d1 = SuiteConfig::new(Suite::D1, 5);
    d1.n = 200;
    let r1 = run_suite(&d1).map_err(|e| e.to_string())?;
    let worst = |r: &qmap::suites::SuiteReport, pat: &str| {
        r.metrics
            .iter()
            .filter(|m| m.check.ends_with(pat))
            .map(|m| m.worst)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    ensure(
        r3.passed && r1.passed,
        format!(
            "local unitary gap {:.2e}, self distance {:.2e}, min distance {:.2e}",
            worst(&r3, "local unitary gap"),
            worst(&r1, "self distance"),
            -worst(&r1, "negative part")
        ),
    )
}

fn lindblad() -> Check {
    let mut cfg = SuiteConfig::new(Suite::Lindblad, 9);
    cfg.n = 200;
    let r = run_suite(&cfg).map_err(|e| e.to_string())?;
    let (example, sigma, _) = paper_counterexample();
    let rejected = matches!(
        lindblad_check(&example as &dyn LinearMap, sigma.matrix(), square),
        Err(Error::NormExceedsOne { norm }) if norm == 2.0
    );
    let worst = r
        .metrics
        .iter()
        .filter(|m| m.check.ends_with("excess"))
        .map(|m| m.worst)
        .fold(f64::NEG_INFINITY, f64::max);
    ensure(
        r.passed && rejected,
        format!("worst excess {worst:.2e}, norm-2 channel rejected: {rejected}"),
    )
}

fn tmp_path(name: &str) -> String {
    let dir = std::env::temp_dir().join(format!("qmap-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir.join(name).to_string_lossy().into_owned()
}

/// Report text with the timestamp line removed.
fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| {
            !l.trim_start().starts_with("\"timestamp\"") && !l.starts_with("metadata.timestamp,")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Check {
    let runs: [&[&str]; 6] = [
        &["reproduce"],
        &["properties", "kadison", "--n", "40", "--seed", "3"],
        &["properties", "d2", "--n", "20", "--format", "csv"],
        &[
            "search", "--dim", "3", "--kraus", "3", "--budget", "5000", "--seed", "5",
        ],
        &[
            "search",
            "--warm-start",
            "counterexample",
            "--budget",
            "200",
        ],
        &["estimate", "werner:0.8", "--restarts", "4", "--seed", "2"],
    ];
    for args in runs {
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let path = tmp_path(&format!("det-{attempt}.out"));
            let status = Command::new(env!("CARGO_BIN_EXE_qmap"))
                .args(args)
                .args(["--out", &path])
                .env_remove("QMAP_SEED")
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if status.code() != Some(0) {
                return Err(format!("{args:?} exited with {:?}", status.code()));
            }
            outputs.push(std::fs::read_to_string(&path).map_err(|e| e.to_string())?);
        }
        let (a, b) = (strip_timestamp(&outputs[0]), strip_timestamp(&outputs[1]));
        if a != b {
            return Err(format!("{args:?} differs between runs"));
        }
        if a.lines().count() + 1 != outputs[0].lines().count() {
            return Err(format!("{args:?}: expected exactly one timestamp line"));
        }
    }
    Ok(format!(
        "{} commands byte-identical apart from the timestamp",
        runs.len()
    ))
}

fn e2_reports() -> Check {
    let cfg = EstimatorConfig::default();
    let two = Dims { d1: 2, d2: 2 };
    let w = standard_state(StandardState::Werner(0.8)).map_err(|e| e.to_string())?;
    let id = ComplexMatrix::identity(2);

    let r = check_e2(
        DistanceKind::HilbertSchmidt,
        &[(id.clone(), id.clone())],
        &w,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (r.total_after - r.before).abs() <= 2e-3 && (r.average_after - r.before).abs() <= 2e-3,
        format!(
            "identity family {} -> {} / {}",
            r.before, r.total_after, r.average_after
        ),
    )?;

    let (u1, u2) = random_local_unitaries(two, 4);
    let r =
        check_e2(DistanceKind::HilbertSchmidt, &[(u1, u2)], &w, &cfg).map_err(|e| e.to_string())?;
    ensure(
        (r.total_after - r.before).abs() <= 2e-3,
        format!("local unitary family {} -> {}", r.before, r.total_after),
    )?;

    let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
    let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
    let bell = standard_state(StandardState::Bell).map_err(|e| e.to_string())?;
    let r = check_e2(
        DistanceKind::HilbertSchmidt,
        &[(p0, id.clone()), (p1, id)],
        &bell,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let finite = r
        .branches
        .iter()
        .all(|b| b.value.is_some_and(f64::is_finite));
    let weights: f64 = r.branches.iter().map(|b| b.probability).sum();
    ensure(
        finite && (weights - 1.0).abs() <= 1e-12 && r.total_after.is_finite(),
        format!(
            "bell measured: before {:.4}, total {:.4}, average {:.4}",
            r.before, r.total_after, r.average_after
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("1 counterexample reproduction", counterexample),
        ("2 Kadison bound suite", kadison),
        ("3 contractive distances", contractive_distances),
        ("4 exact worst-case ratio", exact_ratio),
        ("5 unital contraction", unital_contraction),
        ("6 qubit non-violation", qubit_search),
        ("7 entanglement estimator", entanglement_estimator),
        ("8 invariance suites", invariance),
        ("9 Lindblad check", lindblad),
        ("10 determinism", determinism),
        ("E2 reports", e2_reports),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
