use std::process::{Command, Output};

fn rfhlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfhlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn theta_index_prints_zero() {
    let o = rfhlab(&["index", "--theta", "tau=1", "hp=1", "hpp=1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "mu_rs = 0");
}

#[test]
fn constants_grading_for_n2() {
    let o = rfhlab(&["grade", "--constants", "n=2"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "mu(K) = -1"));
}

#[test]
fn orbit_perturbation_shift() {
    let o = rfhlab(&["index", "--orbit", "1", "--perturb", "-1e-3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("shift = 1"));
}

#[test]
fn config_errors_exit_2() {
    let o = rfhlab(&["grade", "--constants", "n=9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rfhlab(&["--tol", "-1", "index", "--constants"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rfhlab(&["--model", "n=1,bogus=3", "index", "--constants"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invariant_violation_exits_4_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    std::fs::write(&p, "gen a degree 1 action 2\ngen b degree 0 action 1\ngen c degree -1 action 0\nbnd a b\nbnd b c\n")
        .unwrap();
    let o = rfhlab(&["complex", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("d^2 = 0"));
}

#[test]
fn complex_reports_homology_and_chain_map() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sq.txt");
    std::fs::write(
        &p,
        "gen a degree 1 action 3\ngen b degree 0 action 2\ngen c degree 0 action 1\n\
         bnd a b\nbnd a c\nphi a a\nphi b b\nphi c c\nphi b c\n",
    )
    .unwrap();
    let out = dir.path().join("canon.txt");
    let o = rfhlab(&["complex", p.to_str().unwrap(), "--conjugate", "--export", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("homology rank = 1"));
    assert!(s.contains("chain map = true"));
    let again = rfhlab(&["complex", out.to_str().unwrap()]);
    assert!(again.status.success());
}

#[test]
fn flow_writes_seeded_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = rfhlab(&["--seed", "7", "--out", d, "--format", "json", "flow", "--side", "inside"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["converged"], true);
    assert_eq!(v["seed"], 7);
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["seed"], 7);
    let csv = std::fs::read_to_string(dir.path().join("flow.csv")).unwrap();
    assert!(csv.starts_with("step,s,action"));
}

#[test]
fn hybrid_runs() {
    let o = rfhlab(&["hybrid", "--horizon", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("side,step"));
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = rfhlab(&["selftest", "--out", a.path().to_str().unwrap()]);
    assert!(oa.status.success(), "{}", stdout(&oa));
    assert_eq!(stdout(&oa).lines().filter(|l| l.starts_with("[PASS]")).count(), 10);
    let ob = Command::new(env!("CARGO_BIN_EXE_rfhlab"))
        .args(["selftest", "--out", b.path().to_str().unwrap()])
        .env("RFHLAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(ob.status.success());
    for e in std::fs::read_dir(a.path()).unwrap() {
        let name = e.unwrap().file_name();
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}
