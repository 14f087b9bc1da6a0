//! The sphere model on `R^{2n}`.
//!
//! `H(x) = h(|x|)` with `h(r) = (r^2 - 1)/2` up to `r_quad`, a quartic
//! cap on `[r_quad, r_plateau]` matching value, slope and curvature at
//! `r_quad` and flattening to second order at `r_plateau`, and a positive
//! constant beyond. Near the unit sphere `X_H = J x`, so every orbit of
//! the Hamiltonian flow on `Sigma = {|x| = 1}` is a Hopf circle of period
//! `2 pi / h'(1)`.
//!
//! `X_H = J grad H` with the interleaved standard `J`, and
//! `lambda = 1/2 sum (x_i dy_i - y_i dx_i)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rsindex::{self, IndexError, MatFn, SymplecticPath};
use crate::symlin::{self, Mat, Structure, SymmetricForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub r_quad: f64,
    pub r_plateau: f64,
    pub h_thr: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n: 1,
            r_quad: 1.2,
            r_plateau: 1.5,
            h_thr: 0.2,
        }
    }
}

/// Radial profile `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    r_quad: f64,
    r_plateau: f64,
    /// Quartic in `u = r - r_quad` on the cap.
    cap: [f64; 5],
}

impl Profile {
    pub fn new(r_quad: f64, r_plateau: f64) -> Result<Self, ModelError> {
        if !(r_quad > 1.0 && r_plateau > r_quad) || !r_plateau.is_finite() {
            return Err(ModelError::Invalid(format!(
                "need 1 < r_quad < r_plateau, got {r_quad}, {r_plateau}"
            )));
        }
        let l = r_plateau - r_quad;
        let (a0, a1, a2) = (0.5 * (r_quad * r_quad - 1.0), r_quad, 0.5);
        // p'(L) = 0 and p''(L) = 0 for the two top coefficients.
        let (m11, m12, b1) = (3.0 * l * l, 4.0 * l.powi(3), -(a1 + 2.0 * a2 * l));
        let (m21, m22, b2) = (6.0 * l, 12.0 * l * l, -2.0 * a2);
        let det = m11 * m22 - m12 * m21;
        let a3 = (b1 * m22 - m12 * b2) / det;
        let a4 = (m11 * b2 - m21 * b1) / det;
        let p = Self {
            r_quad,
            r_plateau,
            cap: [a0, a1, a2, a3, a4],
        };
        for i in 0..=400 {
            let r = r_quad + l * i as f64 / 400.0;
            if p.dh(r) < -1e-12 {
                return Err(ModelError::Invalid(format!(
                    "cap is not monotone on [{r_quad}, {r_plateau}]"
                )));
            }
        }
        if p.h(r_plateau) <= 0.0 {
            return Err(ModelError::Invalid("plateau value must be positive".into()));
        }
        Ok(p)
    }

    pub fn r_quad(&self) -> f64 {
        self.r_quad
    }

    pub fn r_plateau(&self) -> f64 {
        self.r_plateau
    }

    pub fn h(&self, r: f64) -> f64 {
        if r <= self.r_quad {
            0.5 * (r * r - 1.0)
        } else {
            let u = (r.min(self.r_plateau)) - self.r_quad;
            let c = &self.cap;
            c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * c[4])))
        }
    }

    pub fn dh(&self, r: f64) -> f64 {
        if r <= self.r_quad {
            r
        } else if r >= self.r_plateau {
            0.0
        } else {
            let u = r - self.r_quad;
            let c = &self.cap;
            c[1] + u * (2.0 * c[2] + u * (3.0 * c[3] + u * 4.0 * c[4]))
        }
    }

    pub fn d2h(&self, r: f64) -> f64 {
        if r <= self.r_quad {
            1.0
        } else if r >= self.r_plateau {
            0.0
        } else {
            let u = r - self.r_quad;
            let c = &self.cap;
            2.0 * c[2] + u * (6.0 * c[3] + u * 12.0 * c[4])
        }
    }

    /// `h'(r) / r`, the angular speed of the flow on the sphere of radius `r`.
    pub fn speed(&self, r: f64) -> f64 {
        if r <= self.r_quad {
            1.0
        } else {
            self.dh(r) / r
        }
    }
}

/// Point `(x, tau, sigma)` of the extended phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPoint {
    pub x: Vec<f64>,
    pub tau: f64,
    pub sigma: f64,
}

/// `(x', tau', sigma')` of the extended Hamiltonian vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedVector {
    pub x: Vec<f64>,
    pub tau: f64,
    pub sigma: f64,
}

/// Closed orbits of `tau X_H` on `Sigma` parametrized by `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebOrbitFamily {
    pub n: usize,
    pub tau: f64,
    pub multiplicity: i64,
    /// Period `|tau|` of the unparametrized orbit of `X_H`.
    pub period: f64,
    pub action: f64,
    angular_speed: f64,
}

impl ReebOrbitFamily {
    /// `t -> exp(tau h'(1) t J) x0` for `x0` on `Sigma`.
    pub fn point(&self, x0: &[f64], t: f64) -> Vec<f64> {
        rotate(x0, self.tau * self.angular_speed * t)
    }

    pub fn sample(&self, x0: &[f64], nt: usize) -> Vec<f64> {
        (0..nt)
            .flat_map(|l| self.point(x0, l as f64 / nt as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrbitSet {
    /// `Sigma x {0} x R`, of dimension `2n` in the extended space.
    Constants { dim: usize },
    Orbits(ReebOrbitFamily),
    Empty,
}

/// Rotates every complex coordinate by `angle`.
pub fn rotate(x: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    x.chunks_exact(2)
        .flat_map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct ModelSystem {
    pub n: usize,
    profile: Profile,
    pub h_thr: f64,
    pub alpha0: f64,
    xh_sup: f64,
}

impl TryFrom<ModelConfig> for ModelSystem {
    type Error = ModelError;
    fn try_from(c: ModelConfig) -> Result<Self, ModelError> {
        Self::new(c)
    }
}

impl From<ModelSystem> for ModelConfig {
    fn from(m: ModelSystem) -> Self {
        m.config()
    }
}

impl Default for ModelSystem {
    fn default() -> Self {
        Self::new(ModelConfig::default()).expect("default model is valid")
    }
}

impl ModelSystem {
    pub fn new(c: ModelConfig) -> Result<Self, ModelError> {
        if c.n == 0 || c.n > 3 {
            return Err(ModelError::Invalid(format!("n must be 1, 2 or 3, got {}", c.n)));
        }
        let profile = Profile::new(c.r_quad, c.r_plateau)?;
        let h_edge = 0.5 * (c.r_quad * c.r_quad - 1.0);
        if !(c.h_thr > 0.0 && c.h_thr < 0.5 && c.h_thr < h_edge) {
            return Err(ModelError::Invalid(format!(
                "h_thr must lie in (0, min(1/2, {h_edge})), got {}",
                c.h_thr
            )));
        }
        let xh_sup = (0..=2000)
            .map(|i| profile.dh(c.r_plateau * i as f64 / 2000.0))
            .fold(0.0, f64::max);
        Ok(Self {
            n: c.n,
            profile,
            h_thr: c.h_thr,
            // lambda(X_H) = r h'(r) / 2 = r^2 / 2 on the quadratic region.
            alpha0: 0.5 * (1.0 - 2.0 * c.h_thr),
            xh_sup,
        })
    }

    pub fn with_n(n: usize) -> Result<Self, ModelError> {
        Self::new(ModelConfig {
            n,
            ..ModelConfig::default()
        })
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            n: self.n,
            r_quad: self.profile.r_quad,
            r_plateau: self.profile.r_plateau,
            h_thr: self.h_thr,
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn r_plateau(&self) -> f64 {
        self.profile.r_plateau
    }

    pub fn structure(&self) -> Structure {
        symlin::standard_structure(self.n).expect("n >= 1")
    }

    pub fn hamiltonian(&self, x: &[f64]) -> f64 {
        self.profile.h(norm(x))
    }

    pub fn grad_h(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let f = if r > 0.0 { self.profile.dh(r) / r } else { 1.0 };
        for (o, xi) in out.iter_mut().zip(x) {
            *o = f * xi;
        }
    }

    /// `X_H = J grad H`.
    pub fn x_h(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let f = if r > 0.0 { self.profile.dh(r) / r } else { 1.0 };
        for (o, p) in out.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
            o[0] = -f * p[1];
            o[1] = f * p[0];
        }
    }

    /// `sup |X_H|`.
    pub fn x_h_sup(&self) -> f64 {
        self.xh_sup
    }

    /// `lambda_x(v)`.
    pub fn lambda(&self, x: &[f64], v: &[f64]) -> f64 {
        0.5 * x
            .chunks_exact(2)
            .zip(v.chunks_exact(2))
            .map(|(p, w)| p[0] * w[1] - p[1] * w[0])
            .sum::<f64>()
    }

    /// Gradient bound below which `|H| < h_thr` along the whole loop.
    pub fn threshold_bound(&self) -> f64 {
        0.5 * self.h_thr * (1.0 / self.xh_sup).min(1.0)
    }

    /// Flow of `X_H` for time `t`, exact: radii are preserved and each
    /// sphere rotates at speed `h'(r)/r`.
    pub fn flow(&self, x: &[f64], t: f64) -> Vec<f64> {
        let r = norm(x);
        rotate(x, self.profile.speed(r) * t)
    }

    pub fn hamiltonian_data(&self, p: &ExtendedPoint) -> (f64, ExtendedVector) {
        let h = self.hamiltonian(&p.x);
        let mut xh = vec![0.0; p.x.len()];
        self.x_h(&p.x, &mut xh);
        xh.iter_mut().for_each(|v| *v *= p.tau);
        (
            p.tau * h,
            ExtendedVector {
                x: xh,
                tau: 0.0,
                sigma: h,
            },
        )
    }

    /// Flow of the extended field: `(phi^{tau t}(x), tau, sigma + t H(x))`.
    pub fn extended_flow(&self, p: &ExtendedPoint, t: f64) -> ExtendedPoint {
        ExtendedPoint {
            x: self.flow(&p.x, p.tau * t),
            tau: p.tau,
            sigma: p.sigma + t * self.hamiltonian(&p.x),
        }
    }

    /// Minimal period of the flow on `Sigma`.
    pub fn t_min(&self) -> f64 {
        2.0 * PI / self.profile.dh(1.0)
    }

    /// One-periodic orbits of the extended field with time dilation `tau`.
    pub fn reeb_orbits(&self, tau: f64) -> OrbitSet {
        if tau == 0.0 {
            return OrbitSet::Constants { dim: 2 * self.n };
        }
        let speed = self.profile.dh(1.0);
        let k = tau * speed / (2.0 * PI);
        let kr = k.round();
        if (k - kr).abs() > 1e-9 || kr == 0.0 {
            return OrbitSet::Empty;
        }
        OrbitSet::Orbits(ReebOrbitFamily {
            n: self.n,
            tau,
            multiplicity: kr as i64,
            period: tau.abs(),
            // lambda(x') = tau h'(1) / 2 on the unit sphere.
            action: 0.5 * tau * speed,
            angular_speed: speed,
        })
    }

    pub fn orbit_tau(&self, k: i64) -> f64 {
        k as f64 * self.t_min()
    }

    /// Time dilation of the grid critical loop of multiplicity `k`: centred
    /// differences see the frequency `nt sin(2 pi k / nt)` instead of `2 pi k`.
    pub fn grid_tau(&self, k: i64, nt: usize) -> f64 {
        let n = nt as f64;
        n * (2.0 * PI * k as f64 / n).sin() / self.profile.dh(1.0)
    }

    /// Linearized return path of the extended flow along a constant orbit at
    /// `x0 in Sigma`, coordinates `(x, tau, sigma)`, structure `diag(J_n, J1)`.
    pub fn constants_path(&self, x0: &[f64], nsamples: usize) -> SymplecticPath {
        let d = self.dim() + 2;
        let mut nmat = Mat::zeros(d, d);
        let mut xh = vec![0.0; self.dim()];
        let mut gh = vec![0.0; self.dim()];
        self.x_h(x0, &mut xh);
        self.grad_h(x0, &mut gh);
        for i in 0..self.dim() {
            nmat[(i, d - 2)] = xh[i];
            nmat[(d - 1, i)] = gh[i];
        }
        let structure = self.structure().direct_sum(&symlin::standard_structure(1).unwrap());
        let s = SymmetricForm::new(-(structure.matrix() * &nmat)).entries().clone();
        let nn = nmat.clone();
        let f: MatFn = Arc::new(move |t| Mat::identity(d, d) + &nn * t);
        let g: MatFn = Arc::new(move |_| s.clone());
        SymplecticPath::from_fn(structure, f, nsamples).with_generator(g)
    }

    /// `diag(Gamma_bar, Theta)` for the orbit family of multiplicity `k`:
    /// the flow on the contact planes rotates by `2 pi k`, and `Theta`
    /// carries the period direction.
    pub fn orbit_path(&self, k: i64, nsamples: usize) -> Result<SymplecticPath, ModelError> {
        let tau = self.orbit_tau(k);
        let theta = rsindex::theta_path_sampled(tau, self.profile.dh(1.0), self.profile.d2h(1.0), nsamples)?;
        if self.n == 1 {
            return Ok(theta);
        }
        let m = self.n - 1;
        let s = symlin::standard_structure(m).expect("m >= 1");
        let angle = tau * self.profile.dh(1.0);
        let bar = SymplecticPath::constant_generator(s, Mat::identity(2 * m, 2 * m) * angle, nsamples);
        Ok(rsindex::block_diag(&bar, &theta))
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsindex::{rs_index, HalfInteger, DEFAULT_TOL};

    fn model() -> ModelSystem {
        ModelSystem::default()
    }

    #[test]
    fn profile_is_c2_and_capped() {
        let p = model().profile().clone();
        let (a, e) = (p.r_quad(), 1e-7);
        assert!((p.h(a - e) - p.h(a + e)).abs() < 1e-6);
        assert!((p.dh(a - e) - p.dh(a + e)).abs() < 1e-6);
        assert!((p.d2h(a - e) - p.d2h(a + e)).abs() < 1e-5);
        let b = p.r_plateau();
        assert!(p.dh(b - e).abs() < 1e-10 && p.d2h(b - e).abs() < 1e-5);
        assert!(p.h(b) > 0.0 && p.h(10.0) == p.h(b));
        assert_eq!(p.h(1.0), 0.0);
        assert_eq!(p.dh(1.0), 1.0);
        assert_eq!(p.d2h(1.0), 1.0);
    }

    #[test]
    fn sigma_gives_zero_extended_hamiltonian() {
        let m = model();
        let p = ExtendedPoint {
            x: vec![0.6, 0.8],
            tau: 3.0,
            sigma: -2.0,
        };
        let (h, v) = m.hamiltonian_data(&p);
        assert!(h.abs() < 1e-15 && v.sigma.abs() < 1e-15);
    }

    #[test]
    fn zero_tau_freezes_x() {
        let m = model();
        let p = ExtendedPoint {
            x: vec![1.1, 0.0],
            tau: 0.0,
            sigma: 0.5,
        };
        let (_, v) = m.hamiltonian_data(&p);
        assert_eq!(v.x, vec![0.0, 0.0]);
        assert_eq!(v.tau, 0.0);
        assert!((v.sigma - m.hamiltonian(&p.x)).abs() < 1e-15);
        let q = m.extended_flow(&p, 2.0);
        assert_eq!(q.x, p.x);
        assert!((q.sigma - (0.5 + 2.0 * m.hamiltonian(&p.x))).abs() < 1e-15);
    }

    #[test]
    fn extended_flow_matches_rk4() {
        let m = ModelSystem::with_n(2).unwrap();
        let p0 = ExtendedPoint {
            x: vec![0.5, 0.3, -0.7, 0.9],
            tau: 1.7,
            sigma: 0.2,
        };
        let f = |p: &ExtendedPoint| m.hamiltonian_data(p).1;
        let add = |p: &ExtendedPoint, v: &ExtendedVector, h: f64| ExtendedPoint {
            x: p.x.iter().zip(&v.x).map(|(a, b)| a + h * b).collect(),
            tau: p.tau + h * v.tau,
            sigma: p.sigma + h * v.sigma,
        };
        let (steps, t) = (4000, 1.3);
        let h = t / steps as f64;
        let mut p = p0.clone();
        for _ in 0..steps {
            let k1 = f(&p);
            let k2 = f(&add(&p, &k1, h / 2.0));
            let k3 = f(&add(&p, &k2, h / 2.0));
            let k4 = f(&add(&p, &k3, h));
            p.x = (0..p.x.len())
                .map(|i| p.x[i] + h / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]))
                .collect();
            p.sigma += h / 6.0 * (k1.sigma + 2.0 * k2.sigma + 2.0 * k3.sigma + k4.sigma);
        }
        let q = m.extended_flow(&p0, t);
        for (a, b) in p.x.iter().zip(&q.x) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((p.sigma - q.sigma).abs() < 1e-10);
        assert!((m.hamiltonian(&p.x) - m.hamiltonian(&p0.x)).abs() < 1e-8 * t);
    }

    #[test]
    fn orbit_classification() {
        let m = model();
        assert_eq!(m.reeb_orbits(0.0), OrbitSet::Constants { dim: 2 });
        assert_eq!(ModelSystem::with_n(3).unwrap().reeb_orbits(0.0), OrbitSet::Constants { dim: 6 });
        assert_eq!(m.reeb_orbits(0.5 * m.t_min()), OrbitSet::Empty);
        assert_eq!(m.reeb_orbits(1.5 * m.t_min()), OrbitSet::Empty);
        match m.reeb_orbits(m.t_min()) {
            OrbitSet::Orbits(f) => {
                assert_eq!(f.multiplicity, 1);
                // Area enclosed by the unit circle, by quadrature of x^* lambda.
                let nt = 4096;
                let pts = f.sample(&[1.0, 0.0], nt);
                let mut area = 0.0;
                for l in 0..nt {
                    let a = &pts[2 * l..2 * l + 2];
                    let b = &pts[2 * ((l + 1) % nt)..2 * ((l + 1) % nt) + 2];
                    area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
                }
                assert!((area - f.action).abs() < 1e-5);
                assert!((f.action - PI).abs() < 1e-12);
            }
            other => panic!("expected orbits, got {other:?}"),
        }
    }

    #[test]
    fn orbits_are_fixed_points_of_the_extended_flow() {
        let m = ModelSystem::with_n(2).unwrap();
        for k in [-2i64, -1, 1, 3] {
            let OrbitSet::Orbits(f) = m.reeb_orbits(m.orbit_tau(k)) else {
                panic!("k = {k}");
            };
            let x0 = [0.6, 0.0, 0.0, 0.8];
            for (i, xi) in f.point(&x0, 0.37).iter().enumerate() {
                let p = ExtendedPoint { x: f.point(&x0, 0.0), tau: f.tau, sigma: 0.0 };
                assert!((m.extended_flow(&p, 0.37).x[i] - xi).abs() < 1e-12);
            }
            for sigma in [0.0, 2.5] {
                let p = ExtendedPoint { x: x0.to_vec(), tau: f.tau, sigma };
                let q = m.extended_flow(&p, 1.0);
                assert!(q.x.iter().zip(&x0).all(|(a, b)| (a - b).abs() < 1e-12));
                assert!((q.sigma - sigma).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn contact_bound_on_neighbourhood() {
        let m = ModelSystem::with_n(2).unwrap();
        let lo = (1.0 - 2.0 * m.h_thr).sqrt();
        let hi = (1.0 + 2.0 * m.h_thr).sqrt();
        for i in 0..=50 {
            let r = lo + (hi - lo) * i as f64 / 50.0;
            let x = [r * 0.6, 0.0, 0.0, r * 0.8];
            let mut xh = [0.0; 4];
            m.x_h(&x, &mut xh);
            assert!(m.lambda(&x, &xh) >= m.alpha0 - 1e-12);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let m = ModelSystem::with_n(3).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: ModelSystem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ModelSystem>(r#"{"n":1,"r_quad":0.9,"r_plateau":1.5,"h_thr":0.2}"#).is_err());
    }

    #[test]
    fn linearized_paths_are_symplectic_with_expected_indices() {
        for n in 1..=3 {
            let m = ModelSystem::with_n(n).unwrap();
            let mut x0 = vec![0.0; 2 * n];
            x0[0] = 1.0;
            let c = m.constants_path(&x0, 65);
            for (_, s) in c.samples() {
                assert!(symlin::symplectic_residual(s, c.structure()).unwrap() < 1e-12);
            }
            assert!(c.generator_mismatch().unwrap() < 1e-12);
            assert_eq!(rs_index(&c, DEFAULT_TOL).unwrap(), HalfInteger::ZERO);
            for k in [-2i64, 1, 2] {
                let p = m.orbit_path(k, 257).unwrap();
                let expect = HalfInteger::from_int(2 * k * (n as i64 - 1));
                assert_eq!(rs_index(&p, DEFAULT_TOL).unwrap(), expect, "n {n} k {k}");
            }
        }
    }
}
