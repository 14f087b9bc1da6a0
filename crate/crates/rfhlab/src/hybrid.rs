//! The coupled half-cylinder problem.
//!
//! A Rabinowitz half-trajectory `v` on `[-S, 0]` and an extended
//! half-trajectory `u` on `[0, S]` are glued at `s = 0` by
//! `u(0, t) = v(0, t)` and `eta(0, t) = kappa tau(0)`; `zeta(0, .)` is free.
//! Relaxation is by shooting: flow `v` forward from `v(-S)`, impose the
//! coupling (an affine projection, exact), then flow `u` forward.
//!
//! The linear checks build both discrete Hessians explicitly, so they are
//! meant for coarse grids (`nt` of a few dozen).

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gradflow::{
    integrate_observed, ExtendedLoop, FlowControls, FlowDiagnostics, FlowError, LoopState,
    RabinowitzLoop, Scheme, CSV_HEADER,
};
use crate::model::ModelSystem;
use crate::symlin::{Mat, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HybridError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("coupling violated at s = 0 (residual {0:e})")]
    Coupling(f64),
    #[error("action chain violated by {0:e}")]
    ActionChain(f64),
    #[error("invalid hybrid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    /// Snapshots of `v` on `[-S, 0]`; the last one is `v(0)`.
    pub minus: Vec<RabinowitzLoop>,
    /// Snapshots of `u` on `[0, S]`; the first one is `u(0)`.
    pub plus: Vec<ExtendedLoop>,
    pub horizon: f64,
    pub kappa: f64,
}

/// `(x, kappa tau, zeta)`.
pub fn couple(v: &RabinowitzLoop, zeta: &[f64], kappa: f64) -> ExtendedLoop {
    ExtendedLoop {
        n: v.n,
        x: v.x.clone(),
        eta: vec![kappa * v.tau; v.nt()],
        zeta: zeta.to_vec(),
    }
}

impl HybridState {
    pub fn new(start: RabinowitzLoop, zeta: Vec<f64>, kappa: f64) -> Result<Self, HybridError> {
        if zeta.len() != start.nt() {
            return Err(HybridError::Invalid("zeta length differs from the grid".into()));
        }
        if !kappa.is_finite() {
            return Err(HybridError::Invalid("kappa must be finite".into()));
        }
        let plus = couple(&start, &zeta, kappa);
        Ok(Self {
            minus: vec![start],
            plus: vec![plus],
            horizon: 0.0,
            kappa,
        })
    }

    /// `(xhat, xhat lifted with constant sigma)`.
    pub fn stationary(xhat: &RabinowitzLoop, sigma: f64) -> Self {
        Self {
            minus: vec![xhat.clone()],
            plus: vec![xhat.lift(sigma)],
            horizon: 0.0,
            kappa: 1.0,
        }
    }

    pub fn v_start(&self) -> &RabinowitzLoop {
        &self.minus[0]
    }

    pub fn v_end(&self) -> &RabinowitzLoop {
        self.minus.last().expect("nonempty")
    }

    pub fn u_start(&self) -> &ExtendedLoop {
        &self.plus[0]
    }

    pub fn u_end(&self) -> &ExtendedLoop {
        self.plus.last().expect("nonempty")
    }

    /// `(max |u(0) - v(0)|, max |eta(0) - kappa tau(0)|)`.
    pub fn coupling_residual(&self) -> (f64, f64) {
        let (v, u) = (self.v_end(), self.u_start());
        let dx = v.x.iter().zip(&u.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let de = u
            .eta
            .iter()
            .map(|e| (e - self.kappa * v.tau).abs())
            .fold(0.0, f64::max);
        (dx, de)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridControls {
    pub flow: FlowControls,
    pub horizon: f64,
    pub max_doublings: usize,
    /// End gradient above which the horizon is doubled.
    pub end_grad: f64,
    pub snapshot_every: usize,
    pub tol: f64,
}

impl Default for HybridControls {
    fn default() -> Self {
        Self {
            flow: FlowControls {
                scheme: Scheme::DiscreteGradient,
                step: 0.05,
                grad_stop: 1e-9,
                ..FlowControls::default()
            },
            horizon: 20.0,
            max_doublings: 3,
            end_grad: 1e-6,
            snapshot_every: 10,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridDiagnostics {
    pub minus: FlowDiagnostics,
    pub plus: FlowDiagnostics,
    pub horizon: f64,
    pub doublings: usize,
    pub coupling_loop: f64,
    pub coupling_eta: f64,
    /// `A(v(0)) - AA(u(0))`; zero for `kappa = 1`.
    pub middle_gap: f64,
    pub action_chain_ok: bool,
    pub energy: f64,
    pub energy_residual: f64,
    pub start_grad: f64,
    pub end_grad: f64,
    pub converged: bool,
    pub tau_minus_max: f64,
    pub eta_plus_max: f64,
    pub zeta_spread_max: f64,
    pub contained: bool,
}

impl HybridDiagnostics {
    pub fn to_csv(&self) -> String {
        let mut out = format!("side,{CSV_HEADER},coupling_loop,coupling_eta\n");
        let s_minus = self.minus.rows.last().map_or(0.0, |r| r.s);
        let tail = format!("{:e},{:e}", self.coupling_loop, self.coupling_eta);
        for r in &self.minus.rows {
            let mut r = r.clone();
            r.s -= s_minus;
            out.push_str(&format!("minus,{},{tail}\n", r.csv_fields()));
        }
        for r in &self.plus.rows {
            out.push_str(&format!("plus,{},{tail}\n", r.csv_fields()));
        }
        out
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Relaxes both halves and re-imposes the coupling at `s = 0`.
pub fn hybrid_relax(
    sys: &ModelSystem,
    initial: &HybridState,
    c: &HybridControls,
) -> Result<(HybridState, HybridDiagnostics), HybridError> {
    let (cl, ce) = initial.coupling_residual();
    if initial.kappa == 1.0 && (cl > c.tol || ce > c.tol) {
        return Err(HybridError::Coupling(cl.max(ce)));
    }
    if !(c.horizon > 0.0) || c.snapshot_every == 0 {
        return Err(HybridError::Invalid("horizon and snapshot interval must be positive".into()));
    }
    let v0 = initial.v_start().clone();
    let zeta = initial.u_start().zeta.clone();
    let mut horizon = c.horizon;
    let mut doublings = 0;
    loop {
        let every = c.snapshot_every;
        let fc = FlowControls {
            s_max: horizon,
            ..c.flow.clone()
        };
        let mut minus = Vec::new();
        let mut tau_max = 0.0f64;
        let (v_end, dm) = integrate_observed(sys, &v0, &fc, |k, _, l: &RabinowitzLoop| {
            tau_max = tau_max.max(l.tau.abs());
            if k % every == 0 {
                minus.push(l.clone());
            }
        })?;
        if minus.last() != Some(&v_end) {
            minus.push(v_end.clone());
        }
        let u0 = couple(&v_end, &zeta, initial.kappa);
        let mut plus = Vec::new();
        let (mut eta_max, mut spread_max) = (0.0f64, 0.0f64);
        let (u_end, dp) = integrate_observed(sys, &u0, &fc, |k, _, l: &ExtendedLoop| {
            eta_max = eta_max.max(sup(&l.eta));
            let m = l.zeta_mean();
            spread_max = spread_max.max(l.zeta.iter().fold(0.0, |a, z| a.max((z - m).abs())));
            if k % every == 0 {
                plus.push(l.clone());
            }
        })?;
        if plus.last() != Some(&u_end) {
            plus.push(u_end.clone());
        }
        let state = HybridState {
            minus,
            plus,
            horizon,
            kappa: initial.kappa,
        };
        let (coupling_loop, coupling_eta) = state.coupling_residual();
        if coupling_loop > c.tol || coupling_eta > c.tol {
            return Err(HybridError::Coupling(coupling_loop.max(coupling_eta)));
        }
        let middle_gap = dm.action_end - dp.action_start;
        let scale = 1.0 + dm.action_start.abs();
        let chain_tol = c.tol * scale;
        let action_chain_ok = dm.max_action_increase <= chain_tol
            && dp.max_action_increase <= chain_tol
            && (initial.kappa != 1.0 || middle_gap.abs() <= chain_tol);
        if !action_chain_ok && initial.kappa == 1.0 {
            let worst = dm.max_action_increase.max(dp.max_action_increase).max(middle_gap.abs());
            return Err(HybridError::ActionChain(worst));
        }
        let energy = dm.energy + dp.energy;
        let end_grad = dp.rows.last().map_or(f64::INFINITY, |r| r.grad_norm);
        let diag = HybridDiagnostics {
            horizon,
            doublings,
            coupling_loop,
            coupling_eta,
            middle_gap,
            action_chain_ok,
            energy,
            energy_residual: (energy - (dm.action_start - dp.action_end) + middle_gap).abs(),
            start_grad: dm.rows[0].grad_norm,
            end_grad,
            converged: end_grad <= c.end_grad,
            tau_minus_max: tau_max,
            eta_plus_max: eta_max,
            zeta_spread_max: spread_max,
            contained: dm.containment_ok && dp.containment_ok,
            minus: dm,
            plus: dp,
        };
        if diag.converged || doublings >= c.max_doublings {
            return Ok((state, diag));
        }
        horizon *= 2.0;
        doublings += 1;
    }
}

/// Second central difference of `f` at `0`.
fn second_variation(f: impl Fn(f64) -> f64, eps: f64) -> f64 {
    (f(eps) - 2.0 * f(0.0) + f(-eps)) / (eps * eps)
}

/// A tangent `(v, rho)` at a Rabinowitz loop and a `zeta`-component `xi`
/// of its lift `(v, rho, xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianProbe {
    pub v: Vec<f64>,
    pub rho: f64,
    pub xi: Vec<f64>,
}

pub fn random_probes(n: usize, nt: usize, count: usize, seed: u64) -> Vec<HessianProbe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| HessianProbe {
            v: (0..2 * n * nt).map(|_| rng.random_range(-1.0..1.0)).collect(),
            rho: rng.random_range(-1.0..1.0),
            xi: (0..nt).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect()
}

/// Largest `|d^2 A(xhat)[(v, rho)] - d^2 AA(xhat, sigma)[(v, rho, xi)]|`.
pub fn hessian_agreement(
    sys: &ModelSystem,
    xhat: &RabinowitzLoop,
    sigma: f64,
    probes: &[HessianProbe],
) -> Result<f64, HybridError> {
    let g = xhat.gradient(sys).norm();
    if g > 1e-6 {
        return Err(FlowError::NotCritical(g).into());
    }
    let lifted = xhat.lift(sigma);
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for p in probes {
        if p.v.len() != xhat.x.len() || p.xi.len() != xhat.nt() {
            return Err(HybridError::Invalid("probe does not match the grid".into()));
        }
        let dr = RabinowitzLoop {
            n: xhat.n,
            x: p.v.clone(),
            tau: p.rho,
        };
        let de = ExtendedLoop {
            n: xhat.n,
            x: p.v.clone(),
            eta: vec![p.rho; xhat.nt()],
            zeta: p.xi.clone(),
        };
        let a = second_variation(
            |e| {
                let mut l = xhat.clone();
                l.axpy(e, &dr);
                l.action(sys)
            },
            eps,
        );
        let b = second_variation(
            |e| {
                let mut l = lifted.clone();
                l.axpy(e, &de);
                l.action(sys)
            },
            eps,
        );
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Flat orthonormal coordinates for the weighted inner product.
trait Coords: LoopState {
    fn weights(&self) -> Vec<f64>;
    fn flat(&self) -> Vec<f64>;
    fn set_flat(&mut self, v: &[f64]);
}

impl Coords for RabinowitzLoop {
    fn weights(&self) -> Vec<f64> {
        let mut w = vec![1.0 / self.nt() as f64; self.x.len()];
        w.push(1.0);
        w
    }
    fn flat(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push(self.tau);
        v
    }
    fn set_flat(&mut self, v: &[f64]) {
        let m = self.x.len();
        self.x.copy_from_slice(&v[..m]);
        self.tau = v[m];
    }
}

impl Coords for ExtendedLoop {
    fn weights(&self) -> Vec<f64> {
        vec![1.0 / self.nt() as f64; self.x.len() + 2 * self.nt()]
    }
    fn flat(&self) -> Vec<f64> {
        [&self.x[..], &self.eta, &self.zeta].concat()
    }
    fn set_flat(&mut self, v: &[f64]) {
        let (m, nt) = (self.x.len(), self.nt());
        self.x.copy_from_slice(&v[..m]);
        self.eta.copy_from_slice(&v[m..m + nt]);
        self.zeta.copy_from_slice(&v[m + nt..]);
    }
}

/// Hessian as a symmetric matrix in orthonormal coordinates
/// `y_i = sqrt(w_i) x_i`, from central differences of the gradient.
fn hessian<L: Coords>(sys: &ModelSystem, base: &L) -> Mat {
    let w = base.weights();
    let x0 = base.flat();
    let dim = x0.len();
    let eps = 1e-5;
    let mut h = Mat::zeros(dim, dim);
    for j in 0..dim {
        let mut p = base.clone();
        let mut m = base.clone();
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        let step = eps / w[j].sqrt();
        xp[j] += step;
        xm[j] -= step;
        p.set_flat(&xp);
        m.set_flat(&xm);
        let (gp, gm) = (p.gradient(sys).flat(), m.gradient(sys).flat());
        for i in 0..dim {
            h[(i, j)] = w[i].sqrt() * (gp[i] - gm[i]) / (2.0 * eps);
        }
    }
    (&h + h.transpose()) * 0.5
}

struct Split {
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
    tol: f64,
}

impl Split {
    fn new(h: Mat) -> Self {
        let tol = 1e-6 * h.amax().max(1.0);
        Self {
            eig: SymmetricEigen::new(h),
            tol,
        }
    }

    fn basis(&self, pick: impl Fn(f64) -> bool) -> Vec<Vector> {
        self.eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| pick(l))
            .map(|(i, _)| self.eig.eigenvectors.column(i).into_owned())
            .collect()
    }

    fn kernel_dim(&self) -> usize {
        self.eig.eigenvalues.iter().filter(|l| l.abs() <= self.tol).count()
    }

    fn min_positive(&self) -> f64 {
        self.eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|&l| l > self.tol)
            .fold(f64::INFINITY, f64::min)
    }

    fn max_negative(&self) -> f64 {
        self.eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|&l| l < -self.tol)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub kernel_minus: usize,
    pub kernel_plus: usize,
    /// Dimension of the space of bounded coupled linear solutions.
    pub coupled_dim: usize,
    /// `coupled_dim - kernel_minus`: neutral directions beyond the
    /// tangent space of the critical manifold.
    pub extra_neutral: usize,
    /// The constant `zeta` shift is a bounded coupled solution.
    pub r_star_bounded: bool,
    pub only_r_star: bool,
    pub gap_minus: f64,
    pub gap_plus: f64,
    /// Fitted `-log(phi(S)/phi(0)) / S` for random decaying seeds.
    pub decay_rates: Vec<f64>,
    pub phi_decreasing: bool,
    pub phi_convex: bool,
}

/// `phi(s) = |exp(-s H) w|^2` for `w = sum c_i e_i` in the eigenbasis.
fn phi_profile(modes: &[(f64, f64)], times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&s| modes.iter().map(|(l, c)| c * c * (-2.0 * l * s).exp()).sum())
        .collect()
}

/// Linearized coupled problem at the stationary solution `(xhat, sigma)`.
///
/// Bounded solutions are pairs `(w-, zeta)` with `w-` free of positive
/// Hessian modes of the Rabinowitz side and the coupled lift free of
/// negative modes of the extended side.
pub fn auto_transversality_check(
    sys: &ModelSystem,
    xhat: &RabinowitzLoop,
    sigma: f64,
    seeds: usize,
    seed: u64,
) -> TransversalityReport {
    let nt = xhat.nt();
    let m = xhat.x.len();
    let hr = Split::new(hessian(sys, xhat));
    let he = Split::new(hessian(sys, &xhat.lift(sigma)));
    let pos_r = hr.basis(|l| l > hr.tol);
    let neg_e = he.basis(|l| l < -he.tol);
    let (dr, de) = (m + 1, m + 2 * nt);
    // Coupling map (w-, zeta) -> w+ in orthonormal coordinates.
    let unknowns = dr + nt;
    let mut lift = Mat::zeros(de, unknowns);
    for i in 0..m {
        lift[(i, i)] = 1.0;
    }
    let sq = (nt as f64).sqrt();
    for l in 0..nt {
        lift[(m + l, m)] = 1.0 / sq;
        lift[(m + nt + l, dr + l)] = 1.0;
    }
    let rows = pos_r.len() + neg_e.len();
    let mut c = Mat::zeros(rows, unknowns);
    for (r, b) in pos_r.iter().enumerate() {
        for i in 0..dr {
            c[(r, i)] = b[i];
        }
    }
    for (r, b) in neg_e.iter().enumerate() {
        let row = b.transpose() * &lift;
        c.row_mut(pos_r.len() + r).copy_from(&row);
    }
    let gram = SymmetricEigen::new(c.transpose() * &c);
    let null: Vec<Vector> = gram
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l.abs() <= 1e-10)
        .map(|(i, _)| gram.eigenvectors.column(i).into_owned())
        .collect();
    let coupled_dim = null.len();
    let mut r_star = Vector::zeros(unknowns);
    for l in 0..nt {
        r_star[dr + l] = 1.0 / sq;
    }
    let proj: f64 = null.iter().map(|b| b.dot(&r_star).powi(2)).sum();
    let r_star_bounded = (1.0 - proj).abs() < 1e-8;
    let kernel_minus = hr.kernel_dim();
    let extra_neutral = coupled_dim.saturating_sub(kernel_minus);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = 5.0;
    let times: Vec<f64> = (0..=20).map(|i| horizon * i as f64 / 20.0).collect();
    let mut decay_rates = Vec::new();
    let (mut dec, mut conv) = (true, true);
    for k in 0..seeds {
        // Minus seeds decay as s -> -infinity, plus seeds as s -> +infinity.
        let (split, sign) = if k % 2 == 0 { (&hr, -1.0) } else { (&he, 1.0) };
        let modes: Vec<(f64, f64)> = split
            .eig
            .eigenvalues
            .iter()
            .filter(|&&l| sign * l > split.tol)
            .map(|&l| (l, rng.random_range(-1.0..1.0)))
            .collect();
        if modes.is_empty() {
            continue;
        }
        let scaled: Vec<f64> = times.iter().map(|t| sign * t).collect();
        let phi = phi_profile(&modes, &scaled);
        decay_rates.push(-(phi[20] / phi[0]).ln() / horizon);
        dec &= phi.windows(2).all(|p| p[1] < p[0]);
        conv &= phi.windows(3).all(|p| p[0] + p[2] - 2.0 * p[1] >= -1e-12 * p[0]);
    }
    TransversalityReport {
        kernel_minus,
        kernel_plus: he.kernel_dim(),
        coupled_dim,
        extra_neutral,
        r_star_bounded,
        only_r_star: r_star_bounded && extra_neutral == 1,
        gap_minus: hr.min_positive().min(-hr.max_negative()),
        gap_plus: he.min_positive().min(-he.max_negative()),
        decay_rates,
        phi_decreasing: dec,
        phi_convex: conv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradflow::{constants_stable_seed, Side};

    fn sys() -> ModelSystem {
        ModelSystem::default()
    }

    #[test]
    fn stationary_input_is_a_fixed_point() {
        let s = sys();
        let xhat = RabinowitzLoop::grid_critical(&s, &[0.6, 0.8], 1, 64);
        let st = HybridState::stationary(&xhat, 0.4);
        let (out, d) = hybrid_relax(&s, &st, &HybridControls::default()).unwrap();
        assert_eq!(d.energy, 0.0);
        assert_eq!(out.v_end(), &xhat);
        assert_eq!(out.u_end(), &xhat.lift(0.4));
        assert!(d.converged && d.middle_gap.abs() < 1e-13);
    }

    #[test]
    fn coupling_is_checked() {
        let s = sys();
        let xhat = RabinowitzLoop::grid_critical(&s, &[1.0, 0.0], 1, 16);
        let mut st = HybridState::stationary(&xhat, 0.0);
        st.plus[0].eta[3] += 1e-3;
        assert!(matches!(
            hybrid_relax(&s, &st, &HybridControls::default()),
            Err(HybridError::Coupling(_))
        ));
    }

    #[test]
    fn perturbed_constant_relaxes_back() {
        let s = sys();
        let seed = constants_stable_seed(&s, &[0.0, 1.0], 0.0, Side::Outside, 0.05, 16, 0.05, 1e-9)
            .unwrap();
        let start = RabinowitzLoop {
            n: 1,
            x: seed.x.clone(),
            tau: seed.eta[0],
        };
        let zeta = vec![2.5; 16];
        let st = HybridState::new(start, zeta, 1.0).unwrap();
        let c = HybridControls {
            horizon: 10.0,
            ..HybridControls::default()
        };
        let (out, d) = hybrid_relax(&s, &st, &c).unwrap();
        assert!(d.converged && d.action_chain_ok && d.contained);
        assert!(d.energy > 0.0 && d.energy_residual < 1e-10, "{}", d.energy_residual);
        assert!(d.coupling_loop == 0.0 && d.coupling_eta == 0.0);
        let end = out.u_end();
        assert!((crate::model::norm(end.point(0)) - 1.0).abs() < 1e-7);
        assert!((end.zeta_mean() - 2.5).abs() < 1e-12);
        let csv = d.to_csv();
        assert!(csv.lines().nth(1).unwrap().starts_with("minus,0,-"));
        assert!(csv.lines().last().unwrap().starts_with("plus,"));
    }

    #[test]
    fn hessians_agree_at_orbit_and_constant() {
        let s = sys();
        let probes = random_probes(1, 32, 20, 7);
        let orbit = RabinowitzLoop::grid_critical(&s, &[0.0, 1.0], 1, 32);
        assert!(hessian_agreement(&s, &orbit, 0.3, &probes).unwrap() < 1e-5);
        let konst = RabinowitzLoop::constant(&[0.6, -0.8], 32, 0.0);
        assert!(hessian_agreement(&s, &konst, -1.0, &probes).unwrap() < 1e-5);
    }

    #[test]
    fn hessian_needs_critical_point() {
        let s = sys();
        let l = RabinowitzLoop::constant(&[1.1, 0.0], 8, 0.0);
        assert!(matches!(
            hessian_agreement(&s, &l, 0.0, &[]),
            Err(HybridError::Flow(FlowError::NotCritical(_)))
        ));
    }

    #[test]
    fn zero_and_tangent_probes_vanish() {
        let s = sys();
        let nt = 16;
        let orbit = RabinowitzLoop::grid_critical(&s, &[1.0, 0.0], 1, nt);
        let xi: Vec<f64> = (0..nt).map(|l| (l as f64).cos()).collect();
        let zero = HessianProbe {
            v: vec![0.0; 2 * nt],
            rho: 0.0,
            xi,
        };
        // Rotating the phase moves along the critical manifold.
        let mut tangent = vec![0.0; 2 * nt];
        let mut jx = [0.0; 2];
        for l in 0..nt {
            s.structure().apply(orbit.point(l), &mut jx);
            tangent[2 * l..2 * l + 2].copy_from_slice(&jx);
        }
        let tangent = HessianProbe {
            v: tangent,
            rho: 0.0,
            xi: vec![0.0; nt],
        };
        let lifted = orbit.lift(0.0);
        for p in [zero, tangent] {
            let mut d = orbit.clone();
            d.x.iter_mut().zip(&p.v).for_each(|(a, b)| *a += 1e-4 * b);
            let a = (d.action(&s) - orbit.action(&s)) / 1e-8;
            assert!(a.abs() < 1e-5);
            assert!(hessian_agreement(&s, &orbit, 0.0, &[p.clone()]).unwrap() < 1e-6);
            let _ = &lifted;
        }
    }

    #[test]
    fn only_the_zeta_shift_is_neutral() {
        let s = sys();
        for xhat in [
            RabinowitzLoop::grid_critical(&s, &[1.0, 0.0], 1, 25),
            RabinowitzLoop::constant(&[0.0, 1.0], 25, 0.0),
        ] {
            let r = auto_transversality_check(&s, &xhat, 0.5, 6, 3);
            assert_eq!(r.kernel_minus, 1, "{r:?}");
            assert!(r.r_star_bounded && r.only_r_star, "{r:?}");
            assert!(r.phi_decreasing && r.phi_convex, "{r:?}");
            assert!(r.decay_rates.iter().all(|&d| d > 0.0));
        }
    }

    #[test]
    fn n2_constants_kernel_is_tangent_to_sigma() {
        let s = ModelSystem::with_n(2).unwrap();
        let xhat = RabinowitzLoop::constant(&[0.5, 0.5, 0.5, 0.5], 9, 0.0);
        let r = auto_transversality_check(&s, &xhat, 0.0, 2, 1);
        assert_eq!(r.kernel_minus, 3);
        assert!(r.only_r_star, "{r:?}");
    }
}
