//! One line per acceptance criterion; exits nonzero if any fails.
//!
//! Runtime budgets apply to the check itself and are enforced as part of
//! the pass condition.

use std::time::{Duration, Instant};

use rfhlab::selftest::{self, Criterion, DEFAULT_SEED};

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Criterion) -> Criterion {
    let t = Instant::now();
    let mut c = f();
    let dt = t.elapsed();
    if let Some(b) = budget {
        let within = dt <= b;
        c.detail = format!("{}; {:.2}s (budget {}s)", c.detail, dt.as_secs_f64(), b.as_secs());
        c.passed &= within;
    }
    c
}

fn main() {
    let seed = DEFAULT_SEED;
    let secs = |s: u64| Some(Duration::from_secs(s));
    let results = vec![
        timed(secs(1), selftest::theta_anchor),
        timed(secs(1), selftest::perturbation_shift),
        timed(secs(10), || selftest::block_additivity(seed, 200)),
        timed(None, selftest::grading_relations),
        timed(None, || selftest::dimension_calculus(seed, 100)),
        timed(None, || selftest::hybrid_branches(seed, 100)),
        timed(secs(120), || selftest::flow_structure(&selftest::flow_runs(seed, 20))),
        timed(secs(60), || selftest::hybrid_stationary(seed, 50)),
        timed(secs(10), || selftest::algebra(seed)),
        timed(None, || {
            let dirs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
            let reports: Vec<_> = dirs
                .iter()
                .map(|d| {
                    let r = selftest::run(seed);
                    r.write(d.path()).expect("write artifacts");
                    r
                })
                .collect();
            let mut c = selftest::determinism(&reports[0], &reports[1]);
            match selftest::compare_dirs(dirs[0].path(), dirs[1].path()) {
                Ok(diff) if diff.is_empty() => c.detail.push_str(", directories identical"),
                Ok(diff) => {
                    c.passed = false;
                    c.detail.push_str(&format!(", differing files: {}", diff.join(", ")));
                }
                Err(e) => {
                    c.passed = false;
                    c.detail.push_str(&format!(", {e}"));
                }
            }
            c
        }),
    ];
    for c in &results {
        println!("{}", c.line());
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
