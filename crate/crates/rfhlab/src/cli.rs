//! Command-line front end.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::gradflow::{
    constants_stable_seed, integrate, ExtendedLoop, FlowControls, FlowDiagnostics, RabinowitzLoop, Scheme, Side,
};
use crate::grading::{components_csv, components_from_json, generators_csv, model_components, model_generators, mu_k, mu_lambda};
use crate::hybrid::{hybrid_relax, HybridControls, HybridState};
use crate::model::{ModelConfig, ModelSystem};
use crate::rsindex::{self, rs_index, SymplecticPath};
use crate::selftest;
use crate::z2complex::{conjugate, export_instance, parse_instance, phi_invert, verify_chain_map};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "rfhlab", version, about = "Index, flow and Z2 complex experiments on the sphere model")]
pub struct Cli {
    /// Model parameters as `n=2,r_quad=1.2,r_plateau=1.5,h_thr=0.2`, or a JSON file.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Loop grid size.
    #[arg(long, global = true)]
    pub nt: Option<usize>,
    /// Numerical tolerance (index kernel test, flow gradient stop).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Step cap for flows, sample count for index paths.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true, default_value_t = selftest::DEFAULT_SEED)]
    pub seed: u64,
    /// Directory for artifacts; `config.json` with the seed is always written there.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robbin-Salamon index of a symplectic path.
    Index(IndexArgs),
    /// Gradings and dimensions of critical components.
    Grade(GradeArgs),
    /// Negative gradient flow from a loop.
    Flow(FlowArgs),
    /// Coupled half-cylinder relaxation.
    Hybrid(HybridArgs),
    /// Homology and chain-map checks for an instance file.
    Complex(ComplexArgs),
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Nilpotent path, e.g. `--theta tau=1 hp=1 hpp=1`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE", group = "source")]
    pub theta: Option<Vec<String>>,
    /// Linearized flow along the k-fold orbit.
    #[arg(long, group = "source")]
    pub orbit: Option<i64>,
    /// Linearized flow at a constant loop.
    #[arg(long, group = "source")]
    pub constants: bool,
    /// Sampled path in CSV form (`t,m11,m12,...`).
    #[arg(long, group = "source")]
    pub path: Option<PathBuf>,
    /// Also report the index after the small rotation perturbation by delta.
    #[arg(long, allow_hyphen_values = true)]
    pub perturb: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GradeArgs {
    /// Report mu(K) for the constant component, e.g. `--constants n=2`.
    #[arg(long, num_args = 0..=1, default_missing_value = "", value_name = "n=N")]
    pub constants: Option<String>,
    /// Tabulate model components up to this multiplicity.
    #[arg(long)]
    pub kmax: Option<i64>,
    /// JSON array of components to grade instead of the model table.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Functional {
    Rabinowitz,
    Extended,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// JSON loop: `{"n","x","tau"}` or `{"n","x","eta","zeta"}`.
    #[arg(long)]
    pub start: Option<PathBuf>,
    /// Functional for generated starts.
    #[arg(long, value_enum, default_value_t = Functional::Extended)]
    pub functional: Functional,
    #[arg(long, value_enum, default_value_t = CliScheme::Dg)]
    pub scheme: CliScheme,
    #[arg(long, default_value_t = selftest::FLOW_STEP)]
    pub step: f64,
    /// Radial offset of a generated start from the sphere.
    #[arg(long, default_value_t = 0.05)]
    pub amplitude: f64,
    #[arg(long, value_enum, default_value_t = CliSide::Outside)]
    pub side: CliSide,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub zeta0: f64,
    /// Direction of a generated start as a fraction of a full turn in the first plane.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliScheme {
    Explicit,
    Dg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliSide {
    Outside,
    Inside,
}

#[derive(Debug, Args)]
pub struct HybridArgs {
    /// JSON `HybridState`; otherwise a stable-set start is generated.
    #[arg(long)]
    pub start: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.05)]
    pub amplitude: f64,
    #[arg(long, value_enum, default_value_t = CliSide::Outside)]
    pub side: CliSide,
    /// Constant value of the coupling function.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub zeta: f64,
}

#[derive(Debug, Args)]
pub struct ComplexArgs {
    pub instance: PathBuf,
    /// Second instance; its boundary is the target of `phi` from the first.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Conjugate the boundary by `phi` and use the result as target.
    #[arg(long)]
    pub conjugate: bool,
    /// Write the canonical form of the instance here.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

fn parse_pairs(items: &[String]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for item in items.iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{item}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value `{v}` for {key}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn model_config(arg: Option<&str>) -> Result<ModelConfig> {
    let mut c = ModelConfig::default();
    let Some(arg) = arg else { return Ok(c) };
    if !arg.contains('=') && Path::new(arg).exists() {
        return serde_json::from_str(&read(Path::new(arg))?).map_err(|e| Error::Config(format!("model file: {e}")));
    }
    for (k, v) in parse_pairs(&[arg.to_string()])? {
        match k.as_str() {
            "n" => c.n = num(&k, &v)?,
            "r_quad" => c.r_quad = num(&k, &v)?,
            "r_plateau" => c.r_plateau = num(&k, &v)?,
            "h_thr" => c.h_thr = num(&k, &v)?,
            _ => return Err(Error::Config(format!("unknown model key `{k}`"))),
        }
    }
    Ok(c)
}

struct Ctx<'a> {
    cli: &'a Cli,
    sys: ModelSystem,
    stdout: String,
    files: BTreeMap<String, String>,
    record: serde_json::Map<String, serde_json::Value>,
}

impl Ctx<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        self.stdout.push('\n');
    }

    fn tol(&self, default: f64) -> Result<f64> {
        match self.cli.tol {
            Some(t) if !(t > 0.0 && t.is_finite()) => Err(Error::Config(format!("tolerance must be positive, got {t}"))),
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }

    fn nt(&self, default: usize) -> Result<usize> {
        match self.cli.nt {
            Some(n) if n < 3 => Err(Error::Config(format!("grid size must be at least 3, got {n}"))),
            Some(n) => Ok(n),
            None => Ok(default),
        }
    }
}

/// Outcome of a run: text for stdout, and the exit status.
pub struct Outcome {
    pub stdout: String,
    pub error: Option<Error>,
}

pub fn run(cli: &Cli) -> Outcome {
    let mut ctx = match model_config(cli.model.as_deref()).and_then(|c| Ok(ModelSystem::new(c)?)) {
        Ok(sys) => Ctx {
            cli,
            sys,
            stdout: String::new(),
            files: BTreeMap::new(),
            record: serde_json::Map::new(),
        },
        Err(e) => {
            return Outcome {
                stdout: String::new(),
                error: Some(e),
            }
        }
    };
    let res = match &cli.command {
        Command::Index(a) => index(&mut ctx, a),
        Command::Grade(a) => grade(&mut ctx, a),
        Command::Flow(a) => flow(&mut ctx, a),
        Command::Hybrid(a) => hybrid(&mut ctx, a),
        Command::Complex(a) => complex(&mut ctx, a),
        Command::Selftest => selftest_cmd(&mut ctx),
    };
    let res = res.and_then(|()| write_out(&mut ctx));
    Outcome {
        stdout: ctx.stdout,
        error: res.err(),
    }
}

fn write_out(ctx: &mut Ctx) -> Result<()> {
    let Some(dir) = &ctx.cli.out else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    let config = json!({
        "seed": ctx.cli.seed,
        "command": command_name(&ctx.cli.command),
        "model": ctx.sys.config(),
        "nt": ctx.cli.nt,
        "tol": ctx.cli.tol,
        "steps": ctx.cli.steps,
    });
    ctx.files
        .entry("config.json".into())
        .or_insert_with(|| serde_json::to_string_pretty(&config).expect("serializable") + "\n");
    for (name, body) in &ctx.files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Index(_) => "index",
        Command::Grade(_) => "grade",
        Command::Flow(_) => "flow",
        Command::Hybrid(_) => "hybrid",
        Command::Complex(_) => "complex",
        Command::Selftest => "selftest",
    }
}

fn emit_record(ctx: &mut Ctx, name: &str) {
    if ctx.cli.format == Format::Json {
        ctx.record.insert("seed".into(), json!(ctx.cli.seed));
        let body = serde_json::to_string_pretty(&ctx.record).expect("serializable");
        ctx.say(&body);
        ctx.files.insert(format!("{name}.json"), body + "\n");
    }
}

fn index(ctx: &mut Ctx, a: &IndexArgs) -> Result<()> {
    let samples = ctx.cli.steps.unwrap_or(rsindex::DEFAULT_SAMPLES);
    let tol = ctx.tol(rsindex::DEFAULT_TOL)?;
    let (label, path) = if let Some(items) = &a.theta {
        let kv = parse_pairs(items)?;
        let get = |k: &str| -> Result<f64> {
            kv.get(k)
                .ok_or_else(|| Error::Config(format!("--theta needs {k}=")))
                .and_then(|v| num(k, v))
        };
        if let Some(k) = kv.keys().find(|k| !["tau", "hp", "hpp"].contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown --theta key `{k}`")));
        }
        let (tau, hp, hpp) = (get("tau")?, get("hp")?, get("hpp")?);
        ("theta".to_string(), rsindex::theta_path_sampled(tau, hp, hpp, samples)?)
    } else if let Some(k) = a.orbit {
        (format!("orbit k={k}"), ctx.sys.orbit_path(k, samples)?)
    } else if a.constants {
        let mut x0 = vec![0.0; ctx.sys.dim()];
        x0[0] = 1.0;
        ("constants".to_string(), ctx.sys.constants_path(&x0, samples))
    } else if let Some(p) = &a.path {
        (p.display().to_string(), SymplecticPath::from_csv(&read(p)?, None, tol)?)
    } else {
        return Err(Error::Config("index needs one of --theta, --orbit, --constants, --path".into()));
    };
    let mu = rs_index(&path, tol)?;
    ctx.record.insert("path".into(), json!(label));
    ctx.record.insert("mu_rs".into(), json!(mu));
    if ctx.cli.format == Format::Csv {
        ctx.say(format!("mu_rs = {mu}"));
    }
    let mut csv = format!("path,delta,mu_rs\n{label},0,{mu}\n");
    if let Some(delta) = a.perturb {
        let mp = rs_index(&rsindex::perturbed_path(&path, delta)?, tol)?;
        ctx.record.insert("delta".into(), json!(delta));
        ctx.record.insert("mu_rs_perturbed".into(), json!(mp));
        ctx.record.insert("shift".into(), json!(mp - mu));
        if ctx.cli.format == Format::Csv {
            ctx.say(format!("mu_rs(delta = {delta:e}) = {mp}"));
            ctx.say(format!("shift = {}", mp - mu));
        }
        csv.push_str(&format!("{label},{delta:e},{mp}\n"));
    }
    ctx.files.insert("index.csv".into(), csv);
    emit_record(ctx, "index");
    Ok(())
}

fn grade(ctx: &mut Ctx, a: &GradeArgs) -> Result<()> {
    if let Some(arg) = &a.constants {
        let n: usize = if arg.is_empty() {
            ctx.sys.n
        } else if let Some(v) = arg.strip_prefix("n=") {
            num("n", v)?
        } else {
            num("n", arg)?
        };
        let sys = ModelSystem::new(ModelConfig { n, ..ctx.sys.config() })?;
        let comps = model_components(&sys, 0)?;
        let c = &comps[0];
        let (mk, ml) = (mu_k(c)?, mu_lambda(c)?);
        if ctx.cli.format == Format::Csv {
            ctx.say(format!("mu(K) = {mk}"));
            ctx.say(format!("mu(Lambda) = {ml}"));
        }
        ctx.record.insert("n".into(), json!(n));
        ctx.record.insert("mu_K".into(), json!(mk));
        ctx.record.insert("mu_Lambda".into(), json!(ml));
        ctx.files.insert("components.csv".into(), components_csv(&comps)?);
        emit_record(ctx, "grade");
        return Ok(());
    }
    let comps = match &a.table {
        Some(p) => components_from_json(&read(p)?)?,
        None => model_components(&ctx.sys, a.kmax.unwrap_or(3))?,
    };
    let gens = model_generators(&comps)?;
    let (cc, gc) = (components_csv(&comps)?, generators_csv(&gens));
    match ctx.cli.format {
        Format::Csv => {
            let s = cc.clone();
            ctx.say(s.trim_end());
        }
        Format::Json => {
            let rows: Vec<_> = comps
                .iter()
                .map(|c| {
                    json!({
                        "component": c,
                        "dim_Lambda": c.dim_lambda(),
                        "mu_K": mu_k(c).ok(),
                        "mu_Lambda": mu_lambda(c).ok(),
                    })
                })
                .collect();
            ctx.record.insert("components".into(), json!(rows));
            ctx.record.insert("generators".into(), json!(gens));
        }
    }
    ctx.files.insert("components.csv".into(), cc);
    ctx.files.insert("generators.csv".into(), gc);
    emit_record(ctx, "grade");
    Ok(())
}

fn side(s: CliSide) -> Side {
    match s {
        CliSide::Outside => Side::Outside,
        CliSide::Inside => Side::Inside,
    }
}

fn generated_seed(ctx: &Ctx, angle: f64, s: CliSide, amplitude: f64, zeta0: f64, nt: usize, step: f64) -> Result<ExtendedLoop> {
    let mut dir = vec![0.0; ctx.sys.dim()];
    dir[0] = (2.0 * PI * angle).cos();
    dir[1] = (2.0 * PI * angle).sin();
    Ok(constants_stable_seed(&ctx.sys, &dir, zeta0, side(s), amplitude, nt, step, 1e-9)?)
}

fn report_flow(ctx: &mut Ctx, d: &FlowDiagnostics) {
    ctx.record.insert("converged".into(), json!(d.converged));
    ctx.record.insert("steps".into(), json!(d.rows.len().saturating_sub(1)));
    ctx.record.insert("action_start".into(), json!(d.action_start));
    ctx.record.insert("action_end".into(), json!(d.action_end));
    ctx.record.insert("energy".into(), json!(d.energy));
    ctx.record.insert("energy_residual".into(), json!(d.energy_residual));
    ctx.record.insert("max_eta_residual".into(), json!(d.max_eta_residual));
    ctx.record.insert("max_zeta_drift".into(), json!(d.max_zeta_drift));
    ctx.record.insert("threshold".into(), json!(d.threshold_ok));
    ctx.record.insert("containment".into(), json!(d.containment_ok));
    ctx.files.insert("flow.csv".into(), d.to_csv());
    match ctx.cli.format {
        Format::Csv => {
            let s = d.to_csv();
            ctx.say(s.trim_end());
        }
        Format::Json => {
            ctx.record.insert("rows".into(), json!(d.rows));
            emit_record(ctx, "flow");
        }
    }
}

fn flow(ctx: &mut Ctx, a: &FlowArgs) -> Result<()> {
    if !(a.step > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {}", a.step)));
    }
    let controls = FlowControls {
        scheme: match a.scheme {
            CliScheme::Explicit => Scheme::Explicit,
            CliScheme::Dg => Scheme::DiscreteGradient,
        },
        step: a.step,
        max_steps: ctx.cli.steps.unwrap_or(20_000),
        grad_stop: ctx.tol(selftest::FLOW_GRAD_STOP)?,
        action_tol: f64::INFINITY,
        ..FlowControls::default()
    };
    let d = if let Some(p) = &a.start {
        let text = read(p)?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("start loop: {e}")))?;
        let bad = |e: serde_json::Error| Error::Config(format!("start loop: {e}"));
        if v.get("tau").is_some() {
            let l: RabinowitzLoop = serde_json::from_value(v).map_err(bad)?;
            integrate(&ctx.sys, &l, &controls)?.1
        } else {
            let l: ExtendedLoop = serde_json::from_value(v).map_err(bad)?;
            integrate(&ctx.sys, &l, &controls)?.1
        }
    } else {
        let nt = ctx.nt(selftest::FLOW_NT)?;
        let s = generated_seed(ctx, a.angle, a.side, a.amplitude, a.zeta0, nt, a.step)?;
        match a.functional {
            Functional::Extended => integrate(&ctx.sys, &s, &controls)?.1,
            Functional::Rabinowitz => {
                let l = RabinowitzLoop {
                    n: s.n,
                    x: s.x.clone(),
                    tau: s.eta[0],
                };
                integrate(&ctx.sys, &l, &controls)?.1
            }
        }
    };
    report_flow(ctx, &d);
    if let Some(step) = d.rows.windows(2).position(|w| w[1].action > w[0].action + selftest::FLOW_MONOTONE_TOL) {
        return Err(Error::invariant("action monotonicity", format!("action rose at step {}", step + 1)));
    }
    Ok(())
}

fn hybrid(ctx: &mut Ctx, a: &HybridArgs) -> Result<()> {
    let state = match &a.start {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::Config(format!("hybrid state: {e}")))?,
        None => {
            let nt = ctx.nt(16)?;
            let s = generated_seed(ctx, 0.25, a.side, a.amplitude, 0.0, nt, selftest::FLOW_STEP)?;
            let start = RabinowitzLoop {
                n: s.n,
                x: s.x.clone(),
                tau: s.eta[0],
            };
            HybridState::new(start, vec![a.zeta; nt], a.kappa)?
        }
    };
    let c = HybridControls {
        horizon: a.horizon,
        end_grad: ctx.tol(HybridControls::default().end_grad)?,
        ..HybridControls::default()
    };
    let (_, d) = hybrid_relax(&ctx.sys, &state, &c)?;
    ctx.files.insert("hybrid.csv".into(), d.to_csv());
    ctx.record.insert("converged".into(), json!(d.converged));
    ctx.record.insert("horizon".into(), json!(d.horizon));
    ctx.record.insert("energy".into(), json!(d.energy));
    ctx.record.insert("energy_residual".into(), json!(d.energy_residual));
    ctx.record.insert("coupling_loop".into(), json!(d.coupling_loop));
    ctx.record.insert("coupling_eta".into(), json!(d.coupling_eta));
    ctx.record.insert("action_chain".into(), json!(d.action_chain_ok));
    match ctx.cli.format {
        Format::Csv => {
            let s = d.to_csv();
            ctx.say(s.trim_end());
        }
        Format::Json => emit_record(ctx, "hybrid"),
    }
    if !d.action_chain_ok {
        return Err(Error::invariant("action chain", "endpoint actions out of order"));
    }
    Ok(())
}

fn complex(ctx: &mut Ctx, a: &ComplexArgs) -> Result<()> {
    let inst = parse_instance(&read(&a.instance)?)?;
    let c = inst.complex()?;
    if let Some(w) = c.verify_d_squared() {
        return Err(Error::invariant("d^2 = 0", w.to_string()));
    }
    let h = c.homology()?;
    let phi = inst.chain_map()?;
    let mut lines = vec![format!("generators = {}", c.generators().len()), format!("homology rank = {}", h.total)];
    for (k, r) in &h.by_degree {
        lines.push(format!("homology degree {k} = {r}"));
    }
    ctx.record.insert("generators".into(), json!(c.generators().len()));
    ctx.record.insert("homology".into(), json!(h));
    let mut violation = None;
    if let Some(phi) = &phi {
        let inv = phi_invert(phi)?;
        ctx.files.insert("phi_inverse.txt".into(), export_instance(&c, Some(&inv)));
        lines.push("phi invertible = true".into());
        ctx.record.insert("phi_invertible".into(), json!(true));
        let target = if a.conjugate {
            Some(conjugate(&c, phi)?)
        } else if let Some(t) = &a.target {
            Some(parse_instance(&read(t)?)?.complex()?)
        } else {
            None
        };
        if let Some(t) = target {
            let w = verify_chain_map(phi, &c, &t)?;
            lines.push(format!("chain map = {}", w.is_none()));
            ctx.record.insert("chain_map".into(), json!(w.is_none()));
            if let Some(w) = w {
                ctx.record.insert("witness".into(), json!(w));
                violation = Some(Error::invariant("chain map", w.to_string()));
            }
            if a.conjugate {
                ctx.files.insert("conjugate.txt".into(), export_instance(&t, None));
            }
        }
    } else if a.conjugate || a.target.is_some() {
        return Err(Error::Config("instance has no phi lines".into()));
    }
    if let Some(p) = &a.export {
        std::fs::write(p, export_instance(&c, phi.as_ref()))?;
    }
    match ctx.cli.format {
        Format::Csv => {
            for l in lines {
                ctx.say(l);
            }
        }
        Format::Json => emit_record(ctx, "complex"),
    }
    violation.map_or(Ok(()), Err)
}

fn selftest_cmd(ctx: &mut Ctx) -> Result<()> {
    let mut report = selftest::run(ctx.cli.seed);
    let again = selftest::run(ctx.cli.seed);
    report.criteria.push(selftest::determinism(&report, &again));
    report
        .artifacts
        .insert("criteria.csv".into(), selftest::criteria_csv(&report.criteria));
    for c in &report.criteria {
        ctx.say(c.line());
    }
    ctx.files.extend(report.artifacts.clone());
    if ctx.cli.format == Format::Json {
        ctx.files
            .insert("criteria.json".into(), serde_json::to_string_pretty(&report.criteria).expect("serializable") + "\n");
    }
    match report.criteria.iter().find(|c| !c.passed) {
        Some(c) => Err(Error::invariant(&c.name, c.detail.clone())),
        None => Ok(()),
    }
}

/// Sizes the global rayon pool from `RFHLAB_THREADS`.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RFHLAB_THREADS") {
        let n: usize = num("RFHLAB_THREADS", &v)?;
        if n == 0 {
            return Err(Error::Config("RFHLAB_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}
