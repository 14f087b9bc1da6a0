//! Method-of-lines negative gradient flows on loop space.
//!
//! Loops live on the uniform grid `t_l = l / nt`, `∂_t` is the centred
//! difference `D`, and integrals are grid means. `D` is skew, so the
//! formulas below are the exact gradients of the discrete actions for the
//! inner product `<a, b> = mean(a . b)` (plus the plain product on `tau`):
//!
//! * Rabinowitz: `-J(Dx - tau X_H)`, `-mean H(x)`.
//! * Extended:   `-J(Dx - eta X_H)`, `D zeta - H(x)`, `-D eta`.
//!
//! With the interleaved `J = diag([[0,-1],[1,0]])` and
//! `lambda = 1/2 sum (x dy - y dx)` the `x`-component carries a minus sign
//! relative to `J(x' - tau X_H)`; either way it is the `L^2` gradient.
//!
//! Both flows are strongly indefinite: the Hessian of either action has
//! infinitely many negative directions, so generic initial loops leave
//! every neighbourhood of the critical set. Converging runs start on the
//! stable set of a critical component; see [`constants_stable_seed`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{norm, ModelSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("step size fell below {min:e} at s = {s}")]
    StepSize { min: f64, s: f64 },
    #[error("action increased by {increase:e} at step {step}")]
    ActionIncrease { step: usize, increase: f64 },
    #[error("flow diverged (non-finite state) at step {0}")]
    Divergence(usize),
    #[error("base point is not critical (gradient norm {0:e})")]
    NotCritical(f64),
    #[error("{0}")]
    Config(String),
}

fn centred_diff(v: &[f64], comps: usize) -> Vec<f64> {
    let nt = v.len() / comps;
    let half_inv_dt = 0.5 * nt as f64;
    let mut out = vec![0.0; v.len()];
    for l in 0..nt {
        let (p, m) = ((l + 1) % nt, (l + nt - 1) % nt);
        for c in 0..comps {
            out[l * comps + c] = (v[p * comps + c] - v[m * comps + c]) * half_inv_dt;
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_loop(n: usize, x: &[f64], extra: &[&[f64]]) -> Result<usize, FlowError> {
    if n == 0 || x.is_empty() || x.len() % (2 * n) != 0 {
        return Err(FlowError::InvalidLoop(format!(
            "{} coordinates do not form loops in R^{}",
            x.len(),
            2 * n
        )));
    }
    let nt = x.len() / (2 * n);
    if nt < 3 {
        return Err(FlowError::InvalidLoop("need at least 3 grid points".into()));
    }
    for e in extra {
        if e.len() != nt {
            return Err(FlowError::InvalidLoop("component lengths disagree".into()));
        }
    }
    if x.iter().chain(extra.iter().flat_map(|e| e.iter())).any(|v| !v.is_finite()) {
        return Err(FlowError::InvalidLoop("non-finite entry".into()));
    }
    Ok(nt)
}

/// `lambda`-term `mean lambda_x(Dx)`.
fn lambda_term(sys: &ModelSystem, x: &[f64]) -> f64 {
    let d = 2 * sys.n;
    let dx = centred_diff(x, d);
    let s: f64 = x
        .chunks_exact(d)
        .zip(dx.chunks_exact(d))
        .map(|(p, v)| sys.lambda(p, v))
        .sum();
    s / (x.len() / d) as f64
}

/// `-J(Dx - mult_l X_H(x_l))`.
fn x_gradient(sys: &ModelSystem, x: &[f64], mult: impl Fn(usize) -> f64) -> Vec<f64> {
    let d = 2 * sys.n;
    let dx = centred_diff(x, d);
    let mut g = vec![0.0; x.len()];
    let mut xh = vec![0.0; d];
    for (l, (p, out)) in x.chunks_exact(d).zip(g.chunks_exact_mut(d)).enumerate() {
        sys.x_h(p, &mut xh);
        let m = mult(l);
        for c in 0..sys.n {
            let (a, b) = (dx[l * d + 2 * c] - m * xh[2 * c], dx[l * d + 2 * c + 1] - m * xh[2 * c + 1]);
            // -J (a, b) = (b, -a)
            out[2 * c] = b;
            out[2 * c + 1] = -a;
        }
    }
    g
}

/// Loop `(x, tau)` for the free-period functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabinowitzLoop {
    pub n: usize,
    pub x: Vec<f64>,
    pub tau: f64,
}

/// Loop `(x, eta, zeta)` for the extended-phase-space functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedLoop {
    pub n: usize,
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl RabinowitzLoop {
    pub fn new(n: usize, x: Vec<f64>, tau: f64) -> Result<Self, FlowError> {
        check_loop(n, &x, &[])?;
        if !tau.is_finite() {
            return Err(FlowError::InvalidLoop("non-finite tau".into()));
        }
        Ok(Self { n, x, tau })
    }

    pub fn nt(&self) -> usize {
        self.x.len() / (2 * self.n)
    }

    pub fn point(&self, l: usize) -> &[f64] {
        let d = 2 * self.n;
        &self.x[l * d..(l + 1) * d]
    }

    pub fn constant(x0: &[f64], nt: usize, tau: f64) -> Self {
        Self {
            n: x0.len() / 2,
            x: x0.iter().copied().cycle().take(nt * x0.len()).collect(),
            tau,
        }
    }

    /// `x_l = exp(2 pi k l / nt J) x0` with the given `tau`.
    pub fn circle(x0: &[f64], k: i64, nt: usize, tau: f64) -> Self {
        let x = (0..nt)
            .flat_map(|l| {
                crate::model::rotate(x0, 2.0 * std::f64::consts::PI * k as f64 * l as f64 / nt as f64)
            })
            .collect();
        Self {
            n: x0.len() / 2,
            x,
            tau,
        }
    }

    /// Critical loop of the discrete functional with multiplicity `k`.
    pub fn grid_critical(sys: &ModelSystem, x0: &[f64], k: i64, nt: usize) -> Self {
        Self::circle(x0, k, nt, sys.grid_tau(k, nt))
    }

    /// `(x, tau, sigma)` with constant `eta = tau`, `zeta = sigma`.
    pub fn lift(&self, sigma: f64) -> ExtendedLoop {
        let nt = self.nt();
        ExtendedLoop {
            n: self.n,
            x: self.x.clone(),
            eta: vec![self.tau; nt],
            zeta: vec![sigma; nt],
        }
    }
}

impl ExtendedLoop {
    pub fn new(n: usize, x: Vec<f64>, eta: Vec<f64>, zeta: Vec<f64>) -> Result<Self, FlowError> {
        check_loop(n, &x, &[&eta, &zeta])?;
        Ok(Self { n, x, eta, zeta })
    }

    pub fn nt(&self) -> usize {
        self.eta.len()
    }

    pub fn point(&self, l: usize) -> &[f64] {
        let d = 2 * self.n;
        &self.x[l * d..(l + 1) * d]
    }

    /// Recomputed on every call.
    pub fn zeta_mean(&self) -> f64 {
        mean(&self.zeta)
    }

    pub fn eta_mean(&self) -> f64 {
        mean(&self.eta)
    }

    /// The `R`-action `zeta -> zeta + c`.
    pub fn shift_zeta(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.zeta.iter_mut().for_each(|z| *z += c);
        out
    }

    /// `L^2` spread `|zeta - mean zeta|`.
    pub fn zeta_spread(&self) -> f64 {
        let m = self.zeta_mean();
        (self.zeta.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / self.nt() as f64).sqrt()
    }
}

pub fn action_rabinowitz(sys: &ModelSystem, l: &RabinowitzLoop) -> f64 {
    let d = 2 * sys.n;
    let hbar = mean(&l.x.chunks_exact(d).map(|p| sys.hamiltonian(p)).collect::<Vec<_>>());
    lambda_term(sys, &l.x) - l.tau * hbar
}

pub fn action_extended(sys: &ModelSystem, l: &ExtendedLoop) -> f64 {
    let d = 2 * sys.n;
    let deta = centred_diff(&l.eta, 1);
    let nt = l.nt() as f64;
    let zeta_term: f64 = l.zeta.iter().zip(&deta).map(|(z, e)| z * e).sum::<f64>() / nt;
    let h_term: f64 = l
        .x
        .chunks_exact(d)
        .zip(&l.eta)
        .map(|(p, e)| e * sys.hamiltonian(p))
        .sum::<f64>()
        / nt;
    lambda_term(sys, &l.x) - zeta_term - h_term
}

/// `(x-component, tau-component)` packed as a loop.
pub fn gradient_rabinowitz(sys: &ModelSystem, l: &RabinowitzLoop) -> RabinowitzLoop {
    let d = 2 * sys.n;
    let hbar = mean(&l.x.chunks_exact(d).map(|p| sys.hamiltonian(p)).collect::<Vec<_>>());
    RabinowitzLoop {
        n: l.n,
        x: x_gradient(sys, &l.x, |_| l.tau),
        tau: -hbar,
    }
}

pub fn gradient_extended(sys: &ModelSystem, l: &ExtendedLoop) -> ExtendedLoop {
    let d = 2 * sys.n;
    let dz = centred_diff(&l.zeta, 1);
    let de = centred_diff(&l.eta, 1);
    let eta: Vec<f64> = l
        .x
        .chunks_exact(d)
        .zip(&dz)
        .map(|(p, z)| z - sys.hamiltonian(p))
        .collect();
    ExtendedLoop {
        n: l.n,
        x: x_gradient(sys, &l.x, |i| l.eta[i]),
        eta,
        zeta: de.iter().map(|v| -v).collect(),
    }
}

/// Common interface of the two loop types, used by the integrators.
pub trait LoopState: Clone + Send + Sync {
    fn action(&self, sys: &ModelSystem) -> f64;
    fn gradient(&self, sys: &ModelSystem) -> Self;
    /// `self += a g`.
    fn axpy(&mut self, a: f64, g: &Self);
    fn inner(&self, other: &Self) -> f64;
    /// `tau`, or the mean of `eta`.
    fn multiplier_mean(&self) -> f64;
    fn zeta_mean(&self) -> f64 {
        0.0
    }
    fn zeta_spread(&self) -> f64 {
        0.0
    }
    fn xs(&self) -> &[f64];
    fn dim(&self) -> usize;
    fn is_finite(&self) -> bool;

    fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    fn h_mean(&self, sys: &ModelSystem) -> f64 {
        let d = self.dim();
        let xs = self.xs();
        xs.chunks_exact(d).map(|p| sys.hamiltonian(p)).sum::<f64>() / (xs.len() / d) as f64
    }

    fn max_abs_h(&self, sys: &ModelSystem) -> f64 {
        self.xs()
            .chunks_exact(self.dim())
            .map(|p| sys.hamiltonian(p).abs())
            .fold(0.0, f64::max)
    }

    fn max_radius(&self) -> f64 {
        self.xs().chunks_exact(self.dim()).map(norm).fold(0.0, f64::max)
    }
}

impl LoopState for RabinowitzLoop {
    fn action(&self, sys: &ModelSystem) -> f64 {
        action_rabinowitz(sys, self)
    }
    fn gradient(&self, sys: &ModelSystem) -> Self {
        gradient_rabinowitz(sys, self)
    }
    fn axpy(&mut self, a: f64, g: &Self) {
        self.x.iter_mut().zip(&g.x).for_each(|(u, v)| *u += a * v);
        self.tau += a * g.tau;
    }
    fn inner(&self, o: &Self) -> f64 {
        self.x.iter().zip(&o.x).map(|(a, b)| a * b).sum::<f64>() / self.nt() as f64 + self.tau * o.tau
    }
    fn multiplier_mean(&self) -> f64 {
        self.tau
    }
    fn xs(&self) -> &[f64] {
        &self.x
    }
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn is_finite(&self) -> bool {
        self.tau.is_finite() && self.x.iter().all(|v| v.is_finite())
    }
}

impl LoopState for ExtendedLoop {
    fn action(&self, sys: &ModelSystem) -> f64 {
        action_extended(sys, self)
    }
    fn gradient(&self, sys: &ModelSystem) -> Self {
        gradient_extended(sys, self)
    }
    fn axpy(&mut self, a: f64, g: &Self) {
        self.x.iter_mut().zip(&g.x).for_each(|(u, v)| *u += a * v);
        self.eta.iter_mut().zip(&g.eta).for_each(|(u, v)| *u += a * v);
        self.zeta.iter_mut().zip(&g.zeta).for_each(|(u, v)| *u += a * v);
    }
    fn inner(&self, o: &Self) -> f64 {
        let s: f64 = self.x.iter().zip(&o.x).map(|(a, b)| a * b).sum::<f64>()
            + self.eta.iter().zip(&o.eta).map(|(a, b)| a * b).sum::<f64>()
            + self.zeta.iter().zip(&o.zeta).map(|(a, b)| a * b).sum::<f64>();
        s / self.nt() as f64
    }
    fn multiplier_mean(&self) -> f64 {
        self.eta_mean()
    }
    fn zeta_mean(&self) -> f64 {
        ExtendedLoop::zeta_mean(self)
    }
    fn zeta_spread(&self) -> f64 {
        ExtendedLoop::zeta_spread(self)
    }
    fn xs(&self) -> &[f64] {
        &self.x
    }
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.eta).chain(&self.zeta).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Forward Euler with Armijo backtracking on the action.
    Explicit,
    /// Average-vector-field discrete gradient: implicit, with
    /// `A(u_{k+1}) - A(u_k) = -h |g_k|^2` exactly, so the discrete energy
    /// identity holds to solver precision.
    DiscreteGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowControls {
    pub scheme: Scheme,
    pub step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub s_max: f64,
    pub grad_stop: f64,
    pub armijo: f64,
    /// Allowed action increase per step (rounding).
    pub action_tol: f64,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self {
            scheme: Scheme::Explicit,
            step: 1e-3,
            min_step: 1e-12,
            max_steps: 1_000_000,
            s_max: f64::INFINITY,
            grad_stop: 1e-7,
            armijo: 1e-4,
            action_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub step: usize,
    pub s: f64,
    pub action: f64,
    pub grad_norm: f64,
    pub energy_cum: f64,
    pub eta_avg_residual: f64,
    pub zeta_drift: f64,
    pub max_abs_h: f64,
    pub containment: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub rows: Vec<DiagRow>,
    pub converged: bool,
    pub action_start: f64,
    pub action_end: f64,
    pub energy: f64,
    pub energy_residual: f64,
    pub max_action_increase: f64,
    pub max_eta_residual: f64,
    pub max_zeta_drift: f64,
    /// Gradient below the threshold bound always came with `|H| < h_thr`.
    pub threshold_ok: bool,
    pub containment_ok: bool,
    /// `|zeta - mean zeta| <= 2 sqrt(E) + sup|H|` at every step.
    pub spread_ok: bool,
    pub rejected_steps: usize,
}

pub const CSV_HEADER: &str =
    "step,s,action,grad_norm,energy_cum,eta_avg_residual,zeta_drift,max_abs_H,containment";

impl DiagRow {
    pub fn csv_fields(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.step,
            self.s,
            self.action,
            self.grad_norm,
            self.energy_cum,
            self.eta_avg_residual,
            self.zeta_drift,
            self.max_abs_h,
            u8::from(self.containment)
        )
    }
}

impl FlowDiagnostics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_fields());
            out.push('\n');
        }
        out
    }

    pub fn monotone(&self) -> bool {
        self.max_action_increase <= 0.0
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
const GL3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// One step; returns the new state, the applied discrete gradient, and the
/// `H`-mean consistent with the update of the multiplier mean.
fn dg_step<L: LoopState>(sys: &ModelSystem, u: &L, g: &L, h: f64) -> Option<(L, L, f64)> {
    let mut v = u.clone();
    v.axpy(-h, g);
    let scale = 1.0 + u.norm();
    for _ in 0..200 {
        let mut gbar = g.clone();
        gbar.axpy(-1.0, g);
        let mut hbar = 0.0;
        for &(xi, w) in &GL3 {
            let mut p = u.clone();
            let mut d = v.clone();
            d.axpy(-1.0, u);
            p.axpy(xi, &d);
            gbar.axpy(w, &p.gradient(sys));
            hbar += w * p.h_mean(sys);
        }
        let mut next = u.clone();
        next.axpy(-h, &gbar);
        let mut diff = next.clone();
        diff.axpy(-1.0, &v);
        let change = diff.norm();
        v = next;
        if !v.is_finite() {
            return None;
        }
        if change <= 1e-15 * scale {
            return Some((v, gbar, hbar));
        }
    }
    None
}

/// Negative gradient flow `du/ds = -grad A(u)` until the gradient norm
/// drops below `grad_stop`, the step budget runs out, or `s_max` is reached.
pub fn integrate<L: LoopState>(
    sys: &ModelSystem,
    l0: &L,
    c: &FlowControls,
) -> Result<(L, FlowDiagnostics), FlowError> {
    integrate_observed(sys, l0, c, |_, _, _| {})
}

/// [`integrate`], calling `observe(step, s, state)` on every recorded state.
pub fn integrate_observed<L: LoopState>(
    sys: &ModelSystem,
    l0: &L,
    c: &FlowControls,
    mut observe: impl FnMut(usize, f64, &L),
) -> Result<(L, FlowDiagnostics), FlowError> {
    if !(c.step.is_finite() && c.step != 0.0 && c.min_step > 0.0) {
        return Err(FlowError::Config("step sizes must be finite and positive".into()));
    }
    let backward = c.step < 0.0;
    let grad_bound = sys.threshold_bound();
    let h_sup = sys.profile().h(sys.r_plateau()).abs().max(0.5);
    let mut u = l0.clone();
    let a0 = u.action(sys);
    let zeta0 = u.zeta_mean();
    let mut s = 0.0;
    let mut energy = 0.0f64;
    let mut rows = Vec::new();
    let mut eta_res = 0.0;
    let mut max_eta = 0.0f64;
    let mut max_zeta = 0.0f64;
    let mut max_inc = f64::NEG_INFINITY;
    let (mut threshold_ok, mut contain_ok, mut spread_ok) = (true, true, true);
    let mut rejected = 0;
    let mut converged = false;
    let mut a = a0;
    for step in 0..=c.max_steps {
        if !u.is_finite() {
            return Err(FlowError::Divergence(step));
        }
        let g = u.gradient(sys);
        let gn = g.norm();
        let max_h = u.max_abs_h(sys);
        let containment = u.max_radius() <= sys.r_plateau();
        let drift = (u.zeta_mean() - zeta0).abs();
        max_zeta = max_zeta.max(drift);
        contain_ok &= containment;
        if gn < grad_bound && max_h >= sys.h_thr {
            threshold_ok = false;
        }
        if u.zeta_spread() > 2.0 * energy.abs().sqrt() + h_sup {
            spread_ok = false;
        }
        observe(step, s, &u);
        rows.push(DiagRow {
            step,
            s,
            action: a,
            grad_norm: gn,
            energy_cum: energy,
            eta_avg_residual: eta_res,
            zeta_drift: drift,
            max_abs_h: max_h,
            containment,
        });
        if !backward && gn < c.grad_stop {
            converged = true;
            break;
        }
        if step == c.max_steps || s.abs() >= c.s_max {
            break;
        }
        let mut h = c.step;
        loop {
            if h.abs() < c.min_step {
                return Err(FlowError::StepSize { min: c.min_step, s });
            }
            let m0 = u.multiplier_mean();
            match c.scheme {
                Scheme::Explicit => {
                    let mut v = u.clone();
                    v.axpy(-h, &g);
                    let av = v.action(sys);
                    let ok = v.is_finite() && (backward || av <= a - c.armijo * h * gn * gn);
                    if ok {
                        eta_res = (v.multiplier_mean() - m0) / h - u.h_mean(sys);
                        energy += h * gn * gn;
                        max_inc = max_inc.max(av - a);
                        u = v;
                        a = av;
                        break;
                    }
                }
                Scheme::DiscreteGradient => {
                    if let Some((v, gbar, hbar)) = dg_step(sys, &u, &g, h) {
                        let av = v.action(sys);
                        eta_res = (v.multiplier_mean() - m0) / h - hbar;
                        energy += h * gbar.inner(&gbar);
                        max_inc = max_inc.max(av - a);
                        u = v;
                        a = av;
                        break;
                    }
                }
            }
            rejected += 1;
            h *= 0.5;
        }
        if !backward && max_inc > c.action_tol {
            return Err(FlowError::ActionIncrease {
                step,
                increase: max_inc,
            });
        }
        s += h;
        max_eta = max_eta.max(eta_res.abs());
    }
    let diag = FlowDiagnostics {
        rows,
        converged,
        action_start: a0,
        action_end: a,
        energy,
        energy_residual: (energy - (a0 - a)).abs(),
        max_action_increase: if max_inc.is_finite() { max_inc } else { 0.0 },
        max_eta_residual: max_eta,
        max_zeta_drift: max_zeta,
        threshold_ok,
        containment_ok: contain_ok,
        spread_ok,
        rejected_steps: rejected,
    };
    Ok((u, diag))
}

/// Which side of the constant component a stable seed approaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Outside,
    Inside,
}

/// A `t`-independent loop on the stable set of the constant component
/// `Sigma x {0} x R`, at radial distance about `amplitude` from `Sigma`.
///
/// On `t`-independent loops the extended flow reduces to `r' = eta r`,
/// `eta' = (r^2 - 1)/2`, a saddle at `(1, 0)` with stable direction
/// `(1, -1)`. The seed is found by running the discrete-gradient map
/// backwards from a point `offset` along that direction, so that the
/// forward run with the same step retraces it.
pub fn constants_stable_seed(
    sys: &ModelSystem,
    direction: &[f64],
    zeta0: f64,
    side: Side,
    amplitude: f64,
    nt: usize,
    step: f64,
    offset: f64,
) -> Result<ExtendedLoop, FlowError> {
    let r = norm(direction);
    if direction.len() != 2 * sys.n || r == 0.0 {
        return Err(FlowError::Config("direction must be a nonzero vector in R^{2n}".into()));
    }
    if !(amplitude > offset && amplitude < 0.2) {
        return Err(FlowError::Config("need offset < amplitude < 0.2".into()));
    }
    let sgn = match side {
        Side::Outside => 1.0,
        Side::Inside => -1.0,
    };
    let x0: Vec<f64> = direction.iter().map(|v| v / r * (1.0 + sgn * offset)).collect();
    let mut seed = RabinowitzLoop::constant(&x0, nt, 0.0).lift(zeta0);
    seed.eta.iter_mut().for_each(|e| *e = -sgn * offset);
    let c = FlowControls {
        scheme: Scheme::DiscreteGradient,
        step: -step.abs(),
        max_steps: 1,
        ..FlowControls::default()
    };
    for _ in 0..100_000 {
        if (norm(seed.point(0)) - 1.0).abs() >= amplitude {
            return Ok(seed);
        }
        seed = integrate(sys, &seed, &c)?.0;
    }
    Err(FlowError::Config("stable seed did not reach the requested amplitude".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> ModelSystem {
        ModelSystem::default()
    }

    fn wobbly(nt: usize) -> ExtendedLoop {
        let mut x = Vec::new();
        let (mut eta, mut zeta) = (Vec::new(), Vec::new());
        for l in 0..nt {
            let t = l as f64 / nt as f64;
            let a = 2.0 * std::f64::consts::PI * t;
            x.push((1.0 + 0.1 * (3.0 * a).sin()) * a.cos());
            x.push((1.0 + 0.05 * (2.0 * a).cos()) * a.sin());
            eta.push(6.0 + 0.3 * (2.0 * a).sin());
            zeta.push(0.7 * a.cos() + 0.2);
        }
        ExtendedLoop::new(1, x, eta, zeta).unwrap()
    }

    #[test]
    fn constant_loop_on_sigma_has_zero_action() {
        let s = sys();
        let l = RabinowitzLoop::constant(&[0.6, 0.8], 16, 0.0);
        assert!(action_rabinowitz(&s, &l).abs() < 1e-15);
    }

    #[test]
    fn circle_action_approaches_enclosed_area() {
        let s = sys();
        let mut prev = f64::INFINITY;
        for nt in [64, 128, 256, 512] {
            let l = RabinowitzLoop::circle(&[1.0, 0.0], 1, nt, s.t_min());
            let err = (action_rabinowitz(&s, &l) - std::f64::consts::PI).abs();
            assert!(err < prev / 3.5, "second order: {err} vs {prev}");
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn lift_preserves_action() {
        let s = sys();
        let mut l = RabinowitzLoop::circle(&[0.9, 0.3], 2, 64, 11.0);
        l.x[5] += 0.1;
        let a = action_rabinowitz(&s, &l);
        let e = l.lift(-3.0);
        assert!((action_extended(&s, &e) - a).abs() < 1e-13);
    }

    #[test]
    fn zeta_shift_leaves_action_and_gradient_unchanged() {
        let s = sys();
        let l = wobbly(64);
        let m = l.shift_zeta(5.0);
        assert!((action_extended(&s, &l) - action_extended(&s, &m)).abs() < 1e-12);
        let (g, h) = (gradient_extended(&s, &l), gradient_extended(&s, &m));
        let mut d = g.clone();
        d.axpy(-1.0, &h);
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn extended_action_refines_at_second_order() {
        // Richardson oracle on a smooth nonconstant loop.
        let s = sys();
        let vals: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&nt| action_extended(&s, &wobbly(nt)))
            .collect();
        let exact = vals[3] + (vals[3] - vals[2]) / 3.0;
        let e1 = (vals[1] - exact).abs();
        let e2 = (vals[2] - exact).abs();
        assert!(e2 < e1 / 3.5 && e2 < 1e-3);
    }

    fn fd_check<L: LoopState>(sys: &ModelSystem, l: &L, dir: &L) {
        let g = l.gradient(sys);
        let eps = 1e-6;
        let mut p = l.clone();
        p.axpy(eps, dir);
        let mut m = l.clone();
        m.axpy(-eps, dir);
        let fd = (p.action(sys) - m.action(sys)) / (2.0 * eps);
        assert!((fd - g.inner(dir)).abs() < 1e-7 * (1.0 + fd.abs()), "{fd} vs {}", g.inner(dir));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = ModelSystem::with_n(2).unwrap();
        let nt = 24;
        let mk = |seed: f64, len: usize| -> Vec<f64> { (0..len).map(|i| ((i as f64 + 1.0) * seed).sin() * 0.6).collect() };
        let rl = RabinowitzLoop::new(2, mk(1.3, 4 * nt), 2.5).unwrap();
        let rd = RabinowitzLoop::new(2, mk(0.7, 4 * nt), -0.4).unwrap();
        fd_check(&s, &rl, &rd);
        let el = ExtendedLoop::new(2, mk(1.1, 4 * nt), mk(0.3, nt), mk(2.1, nt)).unwrap();
        let ed = ExtendedLoop::new(2, mk(0.9, 4 * nt), mk(1.7, nt), mk(0.2, nt)).unwrap();
        fd_check(&s, &el, &ed);
    }

    #[test]
    fn critical_points_have_vanishing_gradient() {
        let s = sys();
        let l = RabinowitzLoop::grid_critical(&s, &[0.6, 0.8], 1, 256);
        let g = gradient_rabinowitz(&s, &l);
        assert!(g.norm() < 1e-8);
        assert!(gradient_extended(&s, &l.lift(0.3)).norm() < 1e-8);
        // The continuum orbit is critical only up to the O(nt^-2) grid error.
        let c = RabinowitzLoop::circle(&[1.0, 0.0], 1, 256, s.t_min());
        assert!(gradient_rabinowitz(&s, &c).norm() < 1e-3);
    }

    #[test]
    fn constant_loop_off_sigma() {
        let s = sys();
        let l = RabinowitzLoop::constant(&[1.1, 0.0], 8, 0.0);
        let g = gradient_rabinowitz(&s, &l);
        assert!(g.x.iter().all(|v| v.abs() < 1e-15));
        assert!((g.tau + s.hamiltonian(&[1.1, 0.0])).abs() < 1e-15);
    }

    #[test]
    fn extended_gradient_termwise() {
        let s = sys();
        let nt = 32;
        let mut l = RabinowitzLoop::constant(&[0.0, 1.0], nt, 4.0).lift(0.0);
        for i in 0..nt {
            l.zeta[i] = (2.0 * std::f64::consts::PI * i as f64 / nt as f64).sin();
        }
        let g = gradient_extended(&s, &l);
        let dz = centred_diff(&l.zeta, 1);
        // x on Sigma and constant, eta constant: the x-part is -J(-eta X_H) = eta J X_H = -eta x.
        for i in 0..nt {
            assert!((g.x[2 * i + 1] + 4.0).abs() < 1e-14 && g.x[2 * i].abs() < 1e-14);
            assert!((g.eta[i] - dz[i]).abs() < 1e-14);
            assert!(g.zeta[i].abs() < 1e-14);
        }
    }

    #[test]
    fn descent_direction() {
        let s = sys();
        let l = wobbly(32);
        let g = gradient_extended(&s, &l);
        let mut neg = g.clone();
        neg.axpy(-2.0, &g);
        assert!((neg.inner(&g) + g.inner(&g)).abs() < 1e-12);
        assert!(neg.inner(&g) < 0.0);
    }

    #[test]
    fn critical_start_converges_immediately() {
        let s = sys();
        let l = RabinowitzLoop::grid_critical(&s, &[1.0, 0.0], 1, 128).lift(0.0);
        let (out, d) = integrate(&s, &l, &FlowControls::default()).unwrap();
        assert!(d.converged && d.rows.len() == 1 && d.energy == 0.0);
        assert_eq!(out, l);
    }

    #[test]
    fn explicit_flow_decreases_action() {
        let s = sys();
        let l = wobbly(32);
        let c = FlowControls {
            step: 1e-3,
            max_steps: 200,
            ..FlowControls::default()
        };
        let (_, d) = integrate(&s, &l, &c).unwrap();
        assert!(d.rows.windows(2).all(|w| w[1].action <= w[0].action));
        assert!(d.max_eta_residual < 1e-10);
        assert!(d.max_zeta_drift < 1e-12);
        assert!(d.energy_residual < 5e-2 * d.energy);
    }

    #[test]
    fn discrete_gradient_energy_identity_is_exact() {
        let s = sys();
        let l = wobbly(16);
        let c = FlowControls {
            scheme: Scheme::DiscreteGradient,
            step: 2e-3,
            max_steps: 10,
            ..FlowControls::default()
        };
        let (_, d) = integrate(&s, &l, &c).unwrap();
        assert!(d.energy > 0.0);
        assert!(d.energy_residual < 1e-13, "{}", d.energy_residual);
        assert!(d.max_eta_residual < 1e-9);
        assert!(d.monotone());
    }

    #[test]
    fn stable_seed_converges_back() {
        let s = sys();
        for side in [Side::Outside, Side::Inside] {
            let seed = constants_stable_seed(&s, &[0.3, -0.4], 1.5, side, 0.08, 64, 0.05, 1e-9).unwrap();
            let c = FlowControls {
                scheme: Scheme::DiscreteGradient,
                step: 0.05,
                max_steps: 5000,
                ..FlowControls::default()
            };
            let (end, d) = integrate(&s, &seed, &c).unwrap();
            assert!(d.converged, "{side:?}");
            assert!((norm(end.point(0)) - 1.0).abs() < 1e-7);
            assert!(d.energy_residual < 1e-6 && d.max_eta_residual < 1e-6);
            assert!(d.max_zeta_drift <= 1e-10 && d.threshold_ok && d.containment_ok && d.monotone());
        }
    }

    #[test]
    fn flow_commutes_with_zeta_shift() {
        let s = sys();
        let l = wobbly(16);
        let c = FlowControls {
            max_steps: 20,
            ..FlowControls::default()
        };
        let (a, _) = integrate(&s, &l, &c).unwrap();
        let (b, _) = integrate(&s, &l.shift_zeta(3.0), &c).unwrap();
        let mut d = a.shift_zeta(3.0);
        d.axpy(-1.0, &b);
        assert!(d.norm() < 1e-12);
    }
}
