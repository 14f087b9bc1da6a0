//! The acceptance criteria as callable checks, plus the deterministic
//! artifact set written by `rfhlab selftest`.
//!
//! Every check draws its randomness from a ChaCha stream derived from the
//! seed and the criterion number, so results do not depend on the order
//! or thread count in which they run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gradflow::{constants_stable_seed, integrate, FlowControls, FlowDiagnostics, RabinowitzLoop, Scheme, Side};
use crate::grading::{
    cross_identity_defect, fredholm_index, model_components, model_generators, mu_k, mu_lambda,
    components_csv, generators_csv, ComponentKind, CriticalComponent, FredholmData, GradedGenerator,
    HybridIndexData, Mode, Sign,
};
use crate::hybrid::{auto_transversality_check, hessian_agreement, hybrid_relax, random_probes, HybridControls, HybridState};
use crate::model::{norm, ModelSystem};
use crate::rsindex::{self, rs_index, HalfInteger, SymplecticPath, DEFAULT_TOL};
use crate::symlin::{standard_structure, Mat};
use crate::z2complex::{
    conjugate, export_instance, phi_invert, random_complex, random_generators, random_unit_triangular,
    verify_chain_map, GeneratorSet, Z2Matrix,
};

pub const DEFAULT_SEED: u64 = 20140917;

/// Pinned tolerances.
pub const FLOW_ENERGY_TOL: f64 = 1e-6;
pub const FLOW_ETA_TOL: f64 = 1e-6;
pub const FLOW_ZETA_TOL: f64 = 1e-10;
pub const FLOW_GRAD_STOP: f64 = 1e-7;
/// Per-step action increase tolerated as rounding.
pub const FLOW_MONOTONE_TOL: f64 = 1e-14;
pub const HESSIAN_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `rs_index(theta_path) = 0` on the 3 x 3 x 2 parameter grid.
pub fn theta_anchor() -> Criterion {
    let mut bad = Vec::new();
    let mut total = 0;
    for tau in [-2.0, 1.0, 5.0] {
        for hp in [0.5, 1.0, 2.0] {
            for hpp in [-1.0, 1.0] {
                total += 1;
                let r = rsindex::theta_path(tau, hp, hpp).and_then(|p| rs_index(&p, DEFAULT_TOL));
                if r != Ok(HalfInteger::ZERO) {
                    bad.push(format!("({tau},{hp},{hpp}) -> {r:?}"));
                }
            }
        }
    }
    Criterion::new(
        1,
        "theta index anchor",
        bad.is_empty(),
        format!("{}/{total} zero (exact){}", total - bad.len(), fmt_bad(&bad)),
    )
}

fn fmt_bad(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failures: {}", bad.join("; "))
    }
}

/// `rs_index(Gamma_delta) - rs_index(Gamma) = -sgn(delta)` for the n = 1
/// orbit path.
pub fn perturbation_shift() -> Criterion {
    let sys = ModelSystem::with_n(1).expect("n = 1");
    let mut parts = Vec::new();
    let mut ok = true;
    match sys.orbit_path(1, rsindex::DEFAULT_SAMPLES) {
        Ok(path) => {
            let base = rs_index(&path, DEFAULT_TOL);
            for delta in [1e-3, -1e-3] {
                let shifted = rsindex::perturbed_path(&path, delta).and_then(|p| rs_index(&p, DEFAULT_TOL));
                match (&base, shifted) {
                    (Ok(b), Ok(s)) => {
                        let want = HalfInteger::from_int(if delta > 0.0 { -1 } else { 1 });
                        ok &= s - *b == want;
                        parts.push(format!("delta={delta:e}: {b} -> {s}"));
                    }
                    (b, s) => {
                        ok = false;
                        parts.push(format!("delta={delta:e}: {b:?} / {s:?}"));
                    }
                }
            }
        }
        Err(e) => {
            ok = false;
            parts.push(e.to_string());
        }
    }
    Criterion::new(2, "perturbation shift", ok, format!("{} (exact)", parts.join(", ")))
}

fn random_path(rng: &mut ChaCha8Rng) -> SymplecticPath {
    let m = rng.random_range(1..=2usize);
    let d = 2 * m;
    let a = Mat::from_fn(d, d, |_, _| rng.random_range(-2.0..2.0));
    SymplecticPath::constant_generator(standard_structure(m).expect("m >= 1"), (&a + a.transpose()) * 0.5, 129)
}

/// Additivity of the index under direct sums, on `pairs` random pairs.
pub fn block_additivity(seed: u64, pairs: usize) -> Criterion {
    let mut rng = rng_for(seed, 3);
    let inputs: Vec<(SymplecticPath, SymplecticPath)> =
        (0..pairs).map(|_| (random_path(&mut rng), random_path(&mut rng))).collect();
    let bad: Vec<String> = inputs
        .par_iter()
        .enumerate()
        .filter_map(|(i, (p, q))| {
            let a = rs_index(p, DEFAULT_TOL);
            let b = rs_index(q, DEFAULT_TOL);
            let c = rs_index(&rsindex::block_diag(p, q), DEFAULT_TOL);
            match (a, b, c) {
                (Ok(a), Ok(b), Ok(c)) if a + b == c => None,
                r => Some(format!("pair {i}: {r:?}")),
            }
        })
        .collect();
    Criterion::new(
        3,
        "block additivity",
        bad.is_empty(),
        format!("{}/{pairs} additive (exact){}", pairs - bad.len(), fmt_bad(&bad)),
    )
}

/// `mu(Sigma x 0) = 1 - n`, `mu(Lambda) = mu(K) - 1`, `mu_f = mu_f^RF`.
pub fn grading_relations() -> Criterion {
    let mut bad = Vec::new();
    let mut checked = 0;
    for n in 1..=3usize {
        let sys = ModelSystem::with_n(n).expect("n in range");
        let comps = match model_components(&sys, 3) {
            Ok(c) => c,
            Err(e) => {
                bad.push(format!("n={n}: {e}"));
                continue;
            }
        };
        let mk0 = mu_k(&comps[0]);
        if mk0 != Ok(1 - n as i64) {
            bad.push(format!("n={n}: mu(K) of constants {mk0:?}"));
        }
        if comps[0].mu_rs != HalfInteger::ZERO {
            bad.push(format!("n={n}: mu_rs of constants {}", comps[0].mu_rs));
        }
        for c in &comps {
            checked += 1;
            match (mu_lambda(c), mu_k(c)) {
                (Ok(l), Ok(k)) if l == k - 1 => {}
                r => bad.push(format!("n={n} component {}: {r:?}", c.id)),
            }
        }
        match model_generators(&comps) {
            Ok(gs) => {
                for g in gs.iter().filter(|g| g.mu_f != g.mu_f_rf) {
                    bad.push(format!("n={n} generator {g:?}"));
                }
            }
            Err(e) => bad.push(e.to_string()),
        }
    }
    Criterion::new(
        4,
        "grading relations",
        bad.is_empty(),
        format!("{checked} components, n = 1..3 (exact){}", fmt_bad(&bad)),
    )
}

fn random_component(rng: &mut ChaCha8Rng, id: usize) -> CriticalComponent {
    let n = rng.random_range(1..=4usize);
    let (kind, dim_k) = if rng.random_bool(0.3) {
        (ComponentKind::Constants, 2 * n - 1)
    } else {
        (ComponentKind::Orbit, rng.random_range(1..=2 * n))
    };
    // mu_rs must have the parity of dim Lambda.
    let twice = 2 * rng.random_range(-6..=6i64) + (dim_k as i64 + 1) % 2;
    CriticalComponent::new(id, kind, rng.random_range(0.0..10.0), dim_k, HalfInteger::from_twice(twice), n)
        .expect("consistent by construction")
}

/// Cross identity for all three families of dimension formulas.
pub fn dimension_calculus(seed: u64, cases: usize) -> Criterion {
    let mut rng = rng_for(seed, 5);
    let mut bad = Vec::new();
    for i in 0..cases {
        let (a, b) = (random_component(&mut rng, 0), random_component(&mut rng, 1));
        let x = GradedGenerator::new(&a, rng.random_range(0..=a.dim_k)).expect("ind in range");
        let y = GradedGenerator::new(&b, rng.random_range(0..=b.dim_k)).expect("ind in range");
        for m in [Mode::Extended, Mode::Rabinowitz, Mode::Hybrid] {
            match cross_identity_defect(m, &a, &b, &x, &y) {
                Ok(0) => {}
                r => bad.push(format!("case {i} {m:?}: {r:?}")),
            }
        }
    }
    Criterion::new(
        5,
        "dimension calculus",
        bad.is_empty(),
        format!("{cases} cases x 3 modes, defect 0 (exact){}", fmt_bad(&bad)),
    )
}

/// Both signs of `lambda` give the same hybrid Fredholm index.
pub fn hybrid_branches(seed: u64, cases: usize) -> Criterion {
    let mut rng = rng_for(seed, 6);
    let mut bad = Vec::new();
    for i in 0..cases {
        let dim_lambda = rng.random_range(1..=8usize);
        let data = HybridIndexData {
            mu_rs_w1: HalfInteger::from_twice(2 * rng.random_range(-8..=8i64) + 1),
            nu_w1: 1,
            mu_rs_w2: HalfInteger::from_twice(2 * rng.random_range(-8..=8i64) + dim_lambda as i64 % 2),
            nu_w2: dim_lambda,
            sign_lambda: Some(if rng.random_bool(0.5) { Sign::Positive } else { Sign::Negative }),
        };
        let sign = data.sign_lambda.expect("set");
        let other = if sign == Sign::Positive { Sign::Negative } else { Sign::Positive };
        let res = (|| {
            let total = fredholm_index(&FredholmData::Hybrid(data.clone()))?;
            let (mk, ml) = (data.mu_k(sign)?, data.mu_lambda()?);
            let alt = HybridIndexData::reconstruct(mk, ml, dim_lambda, other);
            let total2 = fredholm_index(&FredholmData::Hybrid(alt))?;
            Ok::<_, crate::grading::GradingError>((total, total2, mk - ml - dim_lambda as i64))
        })();
        match res {
            Ok((a, b, c)) if a == b && b == c => {}
            r => bad.push(format!("case {i}: {r:?}")),
        }
    }
    Criterion::new(
        6,
        "hybrid index branches",
        bad.is_empty(),
        format!("{}/{cases} equal (exact){}", cases - bad.len(), fmt_bad(&bad)),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRun {
    pub run: usize,
    pub side: Side,
    pub amplitude: f64,
    pub zeta0: f64,
    pub phase: f64,
    pub diagnostics: FlowDiagnostics,
    pub final_radius: f64,
    pub monotone: bool,
    pub error: Option<String>,
}

impl FlowRun {
    pub fn passed(&self) -> bool {
        let d = &self.diagnostics;
        self.error.is_none()
            && d.converged
            && self.monotone
            && d.energy_residual <= FLOW_ENERGY_TOL
            && d.max_eta_residual <= FLOW_ETA_TOL
            && d.max_zeta_drift <= FLOW_ZETA_TOL
            && d.threshold_ok
            && d.containment_ok
    }
}

pub const FLOW_NT: usize = 64;
pub const FLOW_STEP: f64 = 0.05;

/// Randomized starts on the stable set of the constant component, then
/// the forward discrete-gradient flow.
pub fn flow_runs(seed: u64, runs: usize) -> Vec<FlowRun> {
    let sys = ModelSystem::with_n(1).expect("n = 1");
    let mut rng = rng_for(seed, 7);
    let params: Vec<(Side, f64, f64, f64)> = (0..runs)
        .map(|_| {
            let side = if rng.random_bool(0.5) { Side::Outside } else { Side::Inside };
            (side, rng.random_range(0.02..0.1), rng.random_range(-5.0..5.0), rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    params
        .par_iter()
        .enumerate()
        .map(|(run, &(side, amplitude, zeta0, phase))| {
            let dir = [phase.cos(), phase.sin()];
            let controls = FlowControls {
                scheme: Scheme::DiscreteGradient,
                step: FLOW_STEP,
                max_steps: 20_000,
                grad_stop: FLOW_GRAD_STOP,
                action_tol: f64::INFINITY,
                ..FlowControls::default()
            };
            let res = constants_stable_seed(&sys, &dir, zeta0, side, amplitude, FLOW_NT, FLOW_STEP, 1e-9)
                .and_then(|s| integrate(&sys, &s, &controls));
            match res {
                Ok((end, d)) => {
                    let monotone = d
                        .rows
                        .windows(2)
                        .all(|w| w[1].action <= w[0].action + FLOW_MONOTONE_TOL);
                    FlowRun {
                        run,
                        side,
                        amplitude,
                        zeta0,
                        phase,
                        final_radius: norm(end.point(0)),
                        monotone,
                        diagnostics: d,
                        error: None,
                    }
                }
                Err(e) => FlowRun {
                    run,
                    side,
                    amplitude,
                    zeta0,
                    phase,
                    final_radius: f64::NAN,
                    monotone: false,
                    diagnostics: FlowDiagnostics {
                        rows: Vec::new(),
                        converged: false,
                        action_start: f64::NAN,
                        action_end: f64::NAN,
                        energy: f64::NAN,
                        energy_residual: f64::NAN,
                        max_action_increase: f64::NAN,
                        max_eta_residual: f64::NAN,
                        max_zeta_drift: f64::NAN,
                        threshold_ok: false,
                        containment_ok: false,
                        spread_ok: false,
                        rejected_steps: 0,
                    },
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub fn flow_structure(runs: &[FlowRun]) -> Criterion {
    let passed = runs.iter().filter(|r| r.passed()).count();
    let worst = |f: fn(&FlowDiagnostics) -> f64| runs.iter().map(|r| f(&r.diagnostics)).fold(0.0, f64::max);
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("run {}: {}", r.run, r.error.clone().unwrap_or_else(|| "check failed".into())))
        .collect();
    Criterion::new(
        7,
        "flow structure",
        !runs.is_empty() && passed == runs.len(),
        format!(
            "{passed}/{} converged with all checks; max energy residual {:.2e} (tol {FLOW_ENERGY_TOL:e}), \
             max eta residual {:.2e} (tol {FLOW_ETA_TOL:e}), max zeta drift {:.2e} (tol {FLOW_ZETA_TOL:e}), \
             monotone within {FLOW_MONOTONE_TOL:e}{}",
            runs.len(),
            worst(|d| d.energy_residual),
            worst(|d| d.max_eta_residual),
            worst(|d| d.max_zeta_drift),
            fmt_bad(&bad)
        ),
    )
}

pub const LINEAR_NT: usize = 25;

/// Stationary fixed points, Hessian agreement and the neutral directions.
pub fn hybrid_stationary(seed: u64, probes: usize) -> Criterion {
    let sys = ModelSystem::with_n(1).expect("n = 1");
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, xhat) in [
        ("orbit", RabinowitzLoop::grid_critical(&sys, &[0.6, 0.8], 1, FLOW_NT)),
        ("constant", RabinowitzLoop::constant(&[0.0, 1.0], FLOW_NT, 0.0)),
    ] {
        let st = HybridState::stationary(&xhat, 0.7);
        match hybrid_relax(&sys, &st, &HybridControls::default()) {
            Ok((out, d)) => {
                let fixed = out.v_end() == &xhat && out.u_end() == &xhat.lift(0.7);
                ok &= fixed && d.energy == 0.0;
                parts.push(format!("{label} fixed={fixed} energy={:e}", d.energy));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{label}: {e}"));
            }
        }
    }
    let pr = random_probes(1, LINEAR_NT, probes, seed ^ 8);
    let orbit = RabinowitzLoop::grid_critical(&sys, &[1.0, 0.0], 1, LINEAR_NT);
    let konst = RabinowitzLoop::constant(&[0.6, -0.8], LINEAR_NT, 0.0);
    let mut worst = 0.0f64;
    for x in [&orbit, &konst] {
        match hessian_agreement(&sys, x, 0.3, &pr) {
            Ok(v) => worst = worst.max(v),
            Err(e) => {
                ok = false;
                parts.push(e.to_string());
            }
        }
    }
    ok &= worst <= HESSIAN_TOL;
    parts.push(format!("hessian discrepancy {worst:.2e} over {probes} probes x 2 (tol {HESSIAN_TOL:e})"));
    for (label, x) in [("orbit", &orbit), ("constant", &konst)] {
        let r = auto_transversality_check(&sys, x, 0.3, 4, seed ^ 9);
        ok &= r.only_r_star && r.phi_decreasing && r.phi_convex;
        parts.push(format!(
            "{label}: bounded coupled dim {} = ker {} + {} neutral (R* only: {})",
            r.coupled_dim, r.kernel_minus, r.extra_neutral, r.only_r_star
        ));
    }
    Criterion::new(8, "hybrid stationary", ok, parts.join("; "))
}

/// d^2 = 0, triangular inverses, and conjugation-built chain maps.
pub fn algebra(seed: u64) -> Criterion {
    let mut rng = rng_for(seed, 9);
    let mut bad = Vec::new();
    for i in 0..50 {
        let size = rng.random_range(1..=64usize);
        let c = random_complex(&mut rng, size, 5);
        if let Some(w) = c.verify_d_squared() {
            bad.push(format!("complex {i}: d^2 != 0 at {w}"));
        }
    }
    for i in 0..100 {
        let size = rng.random_range(1..=64usize);
        let gens = GeneratorSet::new(random_generators(&mut rng, size, 3)).expect("distinct ids");
        let m = random_unit_triangular(&mut rng, &gens, 0.4);
        match phi_invert(&m) {
            Ok(inv) => {
                let id = Z2Matrix::identity(size);
                if m.compose(&inv).matrix() != &id || inv.compose(&m).matrix() != &id {
                    bad.push(format!("matrix {i}: inverse fails"));
                }
            }
            Err(e) => bad.push(format!("matrix {i}: {e}")),
        }
    }
    for i in 0..50 {
        let size = rng.random_range(1..=64usize);
        let s = random_complex(&mut rng, size, 5);
        let phi = random_unit_triangular(&mut rng, s.generators(), 0.4);
        match conjugate(&s, &phi).and_then(|t| verify_chain_map(&phi, &s, &t)) {
            Ok(None) => {}
            r => bad.push(format!("triple {i}: {r:?}")),
        }
    }
    Criterion::new(
        9,
        "algebra",
        bad.is_empty(),
        format!("50 complexes, 100 inverses, 50 chain maps (exact){}", fmt_bad(&bad)),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    /// File name to contents.
    pub artifacts: BTreeMap<String, String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.artifacts {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

pub fn criteria_csv(cs: &[Criterion]) -> String {
    let mut out = String::from("id,name,passed,detail\n");
    for c in cs {
        let _ = writeln!(out, "{},{},{},\"{}\"", c.id, c.name, c.passed, c.detail.replace('"', "'"));
    }
    out
}

fn flow_summary_csv(runs: &[FlowRun]) -> String {
    let mut out = String::from(
        "run,side,amplitude,zeta0,phase,steps,action_start,action_end,energy,energy_residual,\
         max_eta_residual,max_zeta_drift,monotone,threshold,containment,converged,final_radius\n",
    );
    for r in runs {
        let d = &r.diagnostics;
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{},{},{:e}",
            r.run,
            match r.side {
                Side::Outside => "outside",
                Side::Inside => "inside",
            },
            r.amplitude,
            r.zeta0,
            r.phase,
            d.rows.len().saturating_sub(1),
            d.action_start,
            d.action_end,
            d.energy,
            d.energy_residual,
            d.max_eta_residual,
            d.max_zeta_drift,
            r.monotone,
            d.threshold_ok,
            d.containment_ok,
            d.converged,
            r.final_radius
        );
    }
    out
}

/// Criteria 1-9 and their artifacts.
pub fn run(seed: u64) -> Report {
    let runs = flow_runs(seed, 20);
    let criteria = vec![
        theta_anchor(),
        perturbation_shift(),
        block_additivity(seed, 200),
        grading_relations(),
        dimension_calculus(seed, 100),
        hybrid_branches(seed, 100),
        flow_structure(&runs),
        hybrid_stationary(seed, 50),
        algebra(seed),
    ];
    let mut artifacts = BTreeMap::new();
    artifacts.insert(
        "config.json".to_string(),
        serde_json::to_string_pretty(&serde_json::json!({
            "seed": seed,
            "model": ModelSystem::with_n(1).expect("n = 1").config(),
            "flow": {"nt": FLOW_NT, "step": FLOW_STEP, "grad_stop": FLOW_GRAD_STOP, "runs": runs.len()},
            "linear_nt": LINEAR_NT,
        }))
        .expect("serializable")
            + "\n",
    );
    artifacts.insert("criteria.csv".into(), criteria_csv(&criteria));
    artifacts.insert("flow_runs.csv".into(), flow_summary_csv(&runs));
    if let Some(r) = runs.first() {
        artifacts.insert("flow_run_0.csv".into(), r.diagnostics.to_csv());
    }
    for n in 1..=3 {
        let sys = ModelSystem::with_n(n).expect("n in range");
        if let Ok(comps) = model_components(&sys, 3) {
            artifacts.insert(format!("components_n{n}.csv"), components_csv(&comps).unwrap_or_default());
            if let Ok(gs) = model_generators(&comps) {
                artifacts.insert(format!("generators_n{n}.csv"), generators_csv(&gs));
            }
        }
    }
    let sys = ModelSystem::with_n(1).expect("n = 1");
    if let Ok(seedloop) = constants_stable_seed(&sys, &[0.0, 1.0], 0.0, Side::Outside, 0.05, 16, FLOW_STEP, 1e-9) {
        let start = RabinowitzLoop {
            n: 1,
            x: seedloop.x.clone(),
            tau: seedloop.eta[0],
        };
        if let Ok(st) = HybridState::new(start, vec![1.0; 16], 1.0) {
            let c = HybridControls {
                horizon: 10.0,
                ..HybridControls::default()
            };
            if let Ok((_, d)) = hybrid_relax(&sys, &st, &c) {
                artifacts.insert("hybrid_relax.csv".into(), d.to_csv());
            }
        }
    }
    let mut rng = rng_for(seed, 11);
    let c = random_complex(&mut rng, 12, 4);
    let phi = random_unit_triangular(&mut rng, c.generators(), 0.4);
    artifacts.insert("complex_instance.txt".into(), export_instance(&c, Some(&phi)));
    Report {
        seed,
        criteria,
        artifacts,
    }
}

/// Criterion 10 from two reports of the same seed.
pub fn determinism(a: &Report, b: &Report) -> Criterion {
    let differing: Vec<String> = a
        .artifacts
        .keys()
        .chain(b.artifacts.keys())
        .filter(|k| a.artifacts.get(*k) != b.artifacts.get(*k))
        .cloned()
        .collect();
    Criterion::new(
        10,
        "determinism",
        differing.is_empty() && a.criteria == b.criteria,
        format!("{} artifacts byte-identical{}", a.artifacts.len(), fmt_bad(&differing)),
    )
}

/// Byte comparison of two artifact directories.
pub fn compare_dirs(a: &Path, b: &Path) -> std::io::Result<Vec<String>> {
    let list = |d: &Path| -> std::io::Result<Vec<String>> {
        let mut v: Vec<String> = std::fs::read_dir(d)?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        v.sort();
        Ok(v)
    };
    let (la, lb) = (list(a)?, list(b)?);
    let mut diff: Vec<String> = la.iter().filter(|n| !lb.contains(n)).cloned().collect();
    diff.extend(lb.iter().filter(|n| !la.contains(n)).cloned());
    for n in la.iter().filter(|n| lb.contains(n)) {
        if std::fs::read(a.join(n))? != std::fs::read(b.join(n))? {
            diff.push(n.clone());
        }
    }
    Ok(diff)
}
