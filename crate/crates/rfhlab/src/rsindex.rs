//! Robbin–Salamon index of sampled symplectic paths.
//!
//! Two evaluators are provided. [`rs_index`] works chart by chart: on each
//! stretch of the path where the graph of `Psi(t)` is transverse to the
//! graph of a fixed rotation `R`, the index is the jump of half the
//! signature of the induced quadratic form. This needs no regularity of
//! crossings, so unipotent paths such as [`theta_path`] are handled exactly.
//! [`crossing_sum`] is the textbook sum of crossing-form signatures and
//! refuses irregular interior crossings; the two agree on regular paths.
//! Strongly hyperbolic stretches that no chart covers are handled by the
//! spectral flow of the unitary attached to `Gr(Psi)` (see
//! [`rs_index_between`]).
//!
//! Sign convention: the crossing form at a crossing `t` is `v . S(t) v` on
//! `ker(Psi(t) - I)`, where `Psi' = J S Psi`. With it the full rotation
//! `exp(2 pi t J1)` has index 2.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, SVD};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::symlin::{self, Mat, Structure, SymlinError, SymmetricForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error(transparent)]
    Linear(#[from] SymlinError),
    #[error("path samples invalid: {0}")]
    BadSamples(String),
    #[error("irregular crossing at t = {t:.10}: crossing form on a {dim}-dimensional kernel is degenerate; perturb the path")]
    IrregularCrossing { t: f64, dim: usize },
    #[error("could not resolve the path near t = {0:.6}; sample more densely")]
    Resolution(f64),
    #[error("path has no generator")]
    MissingGenerator,
    #[error("integration lost symplecticity (residual {0:e}); reduce the step")]
    StepSize(f64),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("bad path csv: {0}")]
    Csv(String),
}

/// Exact half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInteger {
    pub twice_value: i64,
}

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger { twice_value: 0 };

    pub fn from_twice(twice_value: i64) -> Self {
        Self { twice_value }
    }

    pub fn from_int(v: i64) -> Self {
        Self { twice_value: 2 * v }
    }

    /// `k / 2`.
    pub fn half(k: i64) -> Self {
        Self { twice_value: k }
    }

    pub fn is_integer(self) -> bool {
        self.twice_value % 2 == 0
    }

    pub fn to_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.twice_value / 2)
    }

    pub fn to_f64(self) -> f64 {
        self.twice_value as f64 / 2.0
    }
}

impl std::ops::Add for HalfInteger {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_twice(self.twice_value + o.twice_value)
    }
}

impl std::ops::Sub for HalfInteger {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_twice(self.twice_value - o.twice_value)
    }
}

impl std::ops::Neg for HalfInteger {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_twice(-self.twice_value)
    }
}

impl std::iter::Sum for HalfInteger {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice_value / 2)
        } else {
            write!(f, "{}/2", self.twice_value)
        }
    }
}

impl FromStr for HalfInteger {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(num) = s.strip_suffix("/2") {
            num.trim()
                .parse::<i64>()
                .map(Self::from_twice)
                .map_err(|e| format!("bad half-integer {s:?}: {e}"))
        } else if let Ok(v) = s.parse::<i64>() {
            Ok(Self::from_int(v))
        } else {
            let v: f64 = s.parse().map_err(|_| format!("bad half-integer {s:?}"))?;
            let t = 2.0 * v;
            if t.fract() != 0.0 {
                return Err(format!("{s:?} is not a half-integer"));
            }
            Ok(Self::from_twice(t as i64))
        }
    }
}

impl Serialize for HalfInteger {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HalfInteger {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            S(String),
            I(i64),
            F(f64),
        }
        match Repr::deserialize(d)? {
            Repr::S(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::I(i) => Ok(Self::from_int(i)),
            Repr::F(f) => f.to_string().parse().map_err(serde::de::Error::custom),
        }
    }
}

pub type MatFn = Arc<dyn Fn(f64) -> Mat + Send + Sync>;

/// Ordered samples `(t_i, Psi(t_i))` on `[0, 1]`, with optional exact
/// evaluator and optional generator `S(t)`, `Psi' = J S Psi`.
#[derive(Clone)]
pub struct SymplecticPath {
    structure: Structure,
    samples: Vec<(f64, Mat)>,
    eval: Option<MatFn>,
    generator: Option<MatFn>,
}

impl fmt::Debug for SymplecticPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymplecticPath")
            .field("dim", &self.dim())
            .field("signs", &self.structure.signs())
            .field("samples", &self.samples.len())
            .field("generator", &self.generator.is_some())
            .finish()
    }
}

pub const DEFAULT_SAMPLES: usize = 257;
pub const DEFAULT_TOL: f64 = 1e-9;

fn uniform_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

impl SymplecticPath {
    pub fn from_samples(
        structure: Structure,
        samples: Vec<(f64, Mat)>,
        tol: f64,
    ) -> Result<Self, IndexError> {
        let d = structure.dim();
        if samples.len() < 2 {
            return Err(IndexError::BadSamples("need at least two samples".into()));
        }
        if samples[0].0 != 0.0 || samples[samples.len() - 1].0 != 1.0 {
            return Err(IndexError::BadSamples("times must run from 0 to 1".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(IndexError::BadSamples("times must increase strictly".into()));
        }
        if (&samples[0].1 - Mat::identity(d, d)).amax() > tol {
            return Err(IndexError::BadSamples("path must start at the identity".into()));
        }
        for (t, m) in &samples {
            let r = symlin::symplectic_residual(m, &structure)?;
            if r > tol.max(1e-8) {
                return Err(IndexError::BadSamples(format!(
                    "sample at t = {t} not symplectic (residual {r:e})"
                )));
            }
        }
        Ok(Self {
            structure,
            samples,
            eval: None,
            generator: None,
        })
    }

    /// Samples an exact evaluator on a uniform grid.
    pub fn from_fn(structure: Structure, f: MatFn, nsamples: usize) -> Self {
        let samples = uniform_grid(nsamples).into_iter().map(|t| (t, f(t))).collect();
        Self {
            structure,
            samples,
            eval: Some(f),
            generator: None,
        }
    }

    pub fn with_generator(mut self, g: MatFn) -> Self {
        self.generator = Some(g);
        self
    }

    /// `t -> exp(t J S)` for a constant symmetric `S`.
    pub fn constant_generator(structure: Structure, s: Mat, nsamples: usize) -> Self {
        let s = SymmetricForm::new(s).entries().clone();
        let js = structure.matrix() * &s;
        let f: MatFn = Arc::new(move |t| (&js * t).exp());
        let g: MatFn = Arc::new(move |_| s.clone());
        Self::from_fn(structure, f, nsamples).with_generator(g)
    }

    pub fn identity(structure: Structure, nsamples: usize) -> Self {
        let d = structure.dim();
        Self::constant_generator(structure, Mat::zeros(d, d), nsamples)
    }

    /// `exp(2 pi turns t J_m)`.
    pub fn rotation(m: usize, turns: f64, nsamples: usize) -> Result<Self, IndexError> {
        let s = symlin::standard_structure(m)?;
        let d = s.dim();
        Ok(Self::constant_generator(
            s,
            Mat::identity(d, d) * (2.0 * std::f64::consts::PI * turns),
            nsamples,
        ))
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn samples(&self) -> &[(f64, Mat)] {
        &self.samples
    }

    pub fn has_generator(&self) -> bool {
        self.generator.is_some()
    }

    pub fn generator_at(&self, t: f64) -> Option<Mat> {
        self.generator.as_ref().map(|g| g(t))
    }

    pub fn end(&self) -> &Mat {
        &self.samples[self.samples.len() - 1].1
    }

    /// Exact value if an evaluator is known, else the nearest sample.
    pub fn at(&self, t: f64) -> Mat {
        if let Some(f) = &self.eval {
            return f(t);
        }
        let i = self
            .samples
            .partition_point(|(s, _)| *s < t)
            .min(self.samples.len() - 1);
        if i > 0 && (t - self.samples[i - 1].0) < (self.samples[i].0 - t) {
            self.samples[i - 1].1.clone()
        } else {
            self.samples[i].1.clone()
        }
    }

    fn derivative(&self, t: f64) -> Mat {
        if let Some(g) = &self.generator {
            return self.structure.matrix() * g(t) * self.at(t);
        }
        let h = 1e-6;
        let (a, b) = ((t - h).max(0.0), (t + h).min(1.0));
        (self.at(b) - self.at(a)) / (b - a)
    }

    /// Max over consecutive samples of `|(Psi_{i+1} - Psi_i)/dt - J S Psi_mid|`,
    /// relative to the size of the derivative.
    pub fn generator_mismatch(&self) -> Option<f64> {
        let g = self.generator.as_ref()?;
        let j = self.structure.matrix();
        let mut worst: f64 = 0.0;
        for w in self.samples.windows(2) {
            let (t0, t1) = (w[0].0, w[1].0);
            let fd = (&w[1].1 - &w[0].1) / (t1 - t0);
            let mid = (&w[1].1 + &w[0].1) * 0.5;
            let d = &j * g(0.5 * (t0 + t1)) * mid;
            worst = worst.max((&fd - &d).amax() / (1.0 + d.amax()));
        }
        Some(worst)
    }

    /// Pointwise `Psi X Psi^{-1}` conjugation.
    pub fn conjugate(&self, psi: &Mat) -> Result<Self, IndexError> {
        let inv = psi
            .clone()
            .try_inverse()
            .ok_or_else(|| IndexError::InvalidParameter("conjugator not invertible".into()))?;
        let samples = self
            .samples
            .iter()
            .map(|(t, m)| (*t, psi * m * &inv))
            .collect();
        let eval = self.eval.clone().map(|f| {
            let (p, q) = (psi.clone(), inv.clone());
            Arc::new(move |t| &p * f(t) * &q) as MatFn
        });
        let generator = self.generator.clone().map(|g| {
            // J S' = Psi J S Psi^{-1}  =>  S' = -J Psi J S Psi^{-1}.
            let j = self.structure.matrix();
            let (p, q) = (psi.clone(), inv.clone());
            Arc::new(move |t| {
                let s = -&j * &p * &j * g(t) * &q;
                SymmetricForm::new(s).entries().clone()
            }) as MatFn
        });
        Ok(Self {
            structure: self.structure.clone(),
            samples,
            eval,
            generator,
        })
    }

    /// One row per sample: `t`, then row-major entries.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::from("t");
        for i in 0..d {
            for j in 0..d {
                out.push_str(&format!(",m{i}{j}"));
            }
        }
        out.push('\n');
        for (t, m) in &self.samples {
            out.push_str(&format!("{t:e}"));
            for i in 0..d {
                for j in 0..d {
                    out.push_str(&format!(",{:e}", m[(i, j)]));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, structure: Option<Structure>, tol: f64) -> Result<Self, IndexError> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| IndexError::Csv(format!("line {}: {e}", ln + 1)))?;
            rows.push(vals);
        }
        let first = rows.first().ok_or_else(|| IndexError::Csv("no rows".into()))?;
        let k = first.len() - 1;
        let d = (k as f64).sqrt().round() as usize;
        if d * d != k || d % 2 != 0 || d == 0 {
            return Err(IndexError::Csv(format!("{k} entries is not an even square")));
        }
        let structure = match structure {
            Some(s) if s.dim() != d => {
                return Err(IndexError::Csv(format!(
                    "structure has dimension {}, samples {d}",
                    s.dim()
                )))
            }
            Some(s) => s,
            None => symlin::standard_structure(d / 2)?,
        };
        let mut samples = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != k + 1 {
                return Err(IndexError::Csv("ragged rows".into()));
            }
            samples.push((r[0], Mat::from_row_slice(d, d, &r[1..])));
        }
        Self::from_samples(structure, samples, tol)
    }
}

/// Kernel of `M - I` by singular-value thresholding at `tol * max(1, sigma_max)`.
pub fn kernel_of(m: &Mat, tol: f64) -> Mat {
    let d = m.nrows();
    let a = m - Mat::identity(d, d);
    let svd = SVD::new(a, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max();
    let thr = tol * smax.max(1.0);
    let cols: Vec<_> = (0..d)
        .filter(|&i| svd.singular_values[i] <= thr)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Mat::zeros(d, 0)
    } else {
        Mat::from_columns(&cols)
    }
}

fn min_singular(a: &Mat) -> f64 {
    a.singular_values().min()
}

const CHART_ANGLES: [f64; 12] = [
    1.0, 0.5, -0.5, 0.75, -0.75, 2.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0, 0.25, -0.25, 5.0 / 6.0,
];
const CHART_MARGIN: f64 = 0.05;

type CMat = DMatrix<Complex<f64>>;
// Orientation of the relabelled form relative to `omega`, fixed by the
// rotation normalization.
const SPECTRAL_SIGN: i64 = -1;

/// Quadratic form of `Gr(Psi)` as a graph over the diagonal, valued in `Gr(R)`.
fn chart_form(j: &Mat, r: &Mat, psi: &Mat) -> Option<SymmetricForm> {
    let d = psi.nrows();
    let id = Mat::identity(d, d);
    let inv = (r - psi).try_inverse()?;
    Some(SymmetricForm::new(j * (psi - &id) * inv * (r - &id)))
}

fn chart_signature(j: &Mat, r: &Mat, psi: &Mat, tol: f64) -> Result<i64, IndexError> {
    let f = chart_form(j, r, psi).ok_or(IndexError::Resolution(f64::NAN))?;
    let scale = f.entries().amax().max(1.0);
    Ok(symlin::signature(&f, tol * scale))
}

/// Index of the sampled stretch `mats` (any starting matrix).
fn chart_index(structure: &Structure, times: &[f64], mats: &[&Mat], tol: f64) -> Result<HalfInteger, IndexError> {
    let j = structure.matrix();
    let d = structure.dim();
    let id = Mat::identity(d, d);
    let charts: Vec<Mat> = CHART_ANGLES
        .iter()
        .map(|a| structure.rotation(a * std::f64::consts::PI))
        .collect();
    let margin = |r: &Mat, psi: &Mat| min_singular(&(r - psi)) / (1.0 + psi.norm());
    let last = mats.len() - 1;
    let mut twice = 0i64;
    let mut i = 0usize;
    while i < last {
        let mut best: Option<(usize, usize)> = None;
        for (c, r) in charts.iter().enumerate() {
            let mut k = i;
            while k <= last && margin(r, mats[k]) >= CHART_MARGIN {
                k += 1;
            }
            if k > i + 1 {
                let reach = k - 1;
                if best.is_none_or(|(_, b)| reach > b) {
                    best = Some((c, reach));
                }
            }
            if best.is_some_and(|(_, b)| b == last) {
                break;
            }
        }
        let (c, reach) = best.ok_or(IndexError::Resolution(times[i]))?;
        // End the stretch where Psi - I is best conditioned, unless it reaches the end.
        let end = if reach == last {
            last
        } else {
            let lo = i + 1 + (reach - i - 1) / 2;
            (lo..=reach)
                .max_by(|&a, &b| {
                    let sa = min_singular(&(mats[a] - &id)) / (1.0 + mats[a].norm());
                    let sb = min_singular(&(mats[b] - &id)) / (1.0 + mats[b].norm());
                    sa.total_cmp(&sb).then(a.cmp(&b))
                })
                .unwrap_or(reach)
        };
        let r = &charts[c];
        twice += chart_signature(&j, r, mats[i], tol)? - chart_signature(&j, r, mats[end], tol)?;
        i = end;
    }
    Ok(HalfInteger::from_twice(twice))
}

/// Robbin–Salamon index of the whole path.
pub fn rs_index(path: &SymplecticPath, tol: f64) -> Result<HalfInteger, IndexError> {
    rs_index_between(path, 0, path.samples.len() - 1, tol)
}

/// Index of the restriction to samples `i0..=i1`. The restriction need not
/// start at the identity.
pub fn rs_index_between(path: &SymplecticPath, i0: usize, i1: usize, tol: f64) -> Result<HalfInteger, IndexError> {
    if i0 >= i1 || i1 >= path.samples.len() {
        return Err(IndexError::InvalidParameter(format!("bad sample range {i0}..={i1}")));
    }
    let times: Vec<f64> = path.samples[i0..=i1].iter().map(|s| s.0).collect();
    let mats: Vec<&Mat> = path.samples[i0..=i1].iter().map(|s| &s.1).collect();
    match chart_index(&path.structure, &times, &mats, tol) {
        Err(IndexError::Resolution(_)) => {
            // The index is invariant under symplectic conjugation; a
            // diagonal rescaling tames large nilpotent parts.
            let p = balancing_scaling(&mats);
            let balanced: Vec<Mat> = mats
                .iter()
                .map(|m| Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * p[r] / p[c]))
                .collect();
            let refs: Vec<&Mat> = balanced.iter().collect();
            match chart_index(&path.structure, &times, &refs, tol) {
                Err(IndexError::Resolution(_)) => spectral_index(&path.structure, &times, &refs, tol),
                other => other,
            }
        }
        other => other,
    }
}

/// Unitary `U U^T` of the graph of `psi` in `(-omega) + omega`, after
/// relabelling coordinates so that the form is `sum dx ^ dy`.
fn graph_souriau(structure: &Structure, psi: &Mat) -> CMat {
    let d = structure.dim();
    let big = 2 * d;
    let mut frame = Mat::zeros(big, d);
    frame.view_mut((0, 0), (d, d)).copy_from(&Mat::identity(d, d));
    frame.view_mut((d, 0), (d, d)).copy_from(psi);
    let q = frame.qr().q();
    let m = d;
    let mut u = CMat::zeros(m, d);
    for (b, &sg) in structure.signs().iter().chain(structure.signs()).enumerate() {
        // Coefficient of dx ^ dy on the block, with (x, y) in storage order.
        let eps = if b < structure.half_dim() { sg } else { -sg };
        let (ix, iy) = if eps > 0 { (2 * b, 2 * b + 1) } else { (2 * b + 1, 2 * b) };
        for c in 0..d {
            u[(b, c)] = Complex::new(q[(ix, c)], q[(iy, c)]);
        }
    }
    &u * u.transpose()
}

/// Spectral flow through 1 of the Souriau unitary of `Gr(Psi)` relative to
/// the diagonal. Used when no chart covers a stretch: it needs only that
/// `arg det` moves by less than a quarter turn between samples.
fn spectral_index(structure: &Structure, times: &[f64], mats: &[&Mat], tol: f64) -> Result<HalfInteger, IndexError> {
    let d = structure.dim();
    let sigma0_inv = graph_souriau(structure, &Mat::identity(d, d)).map(|z| z.conj());
    let w: Vec<CMat> = mats.iter().map(|m| graph_souriau(structure, m) * &sigma0_inv).collect();
    let mut lift = 0.0;
    let mut prev = w[0].determinant();
    for (k, wk) in w.iter().enumerate().skip(1) {
        let det = wk.determinant();
        let step = (det * prev.conj()).arg();
        if step.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(IndexError::Resolution(times[k - 1]));
        }
        lift += step;
        prev = det;
    }
    // Eigen-angles in (0, 2 pi) shifted by pi; an eigenvalue at 1 counts as 0.
    let angle_sum = |m: &CMat| -> Result<f64, IndexError> {
        let ev = nalgebra::Schur::try_new(m.clone(), 1e-15, 10_000)
            .and_then(|s| s.eigenvalues())
            .ok_or(IndexError::Resolution(f64::NAN))?;
        Ok(ev
            .iter()
            .map(|z| {
                let a = z.arg();
                if a.abs() <= tol {
                    0.0
                } else if a < 0.0 {
                    a + std::f64::consts::PI
                } else {
                    a - std::f64::consts::PI
                }
            })
            .sum())
    };
    let spectral = angle_sum(&w[w.len() - 1])? - angle_sum(&w[0])?;
    // Each unit of spectral flow is a quarter turn of the doubled angle sum.
    let twice = (lift - spectral) / std::f64::consts::PI;
    let r = twice.round();
    if (twice - r).abs() > 1e-3 {
        return Err(IndexError::Resolution(times[times.len() - 1]));
    }
    Ok(HalfInteger::from_twice(SPECTRAL_SIGN * r as i64))
}

/// Diagonal `P = diag(a1, 1/a1, a2, 1/a2, ...)`, symplectic for every
/// block sign, roughly minimizing `sum |P Psi P^-1|_F^2` over the samples.
fn balancing_scaling(mats: &[&Mat]) -> Vec<f64> {
    let d = mats[0].nrows();
    let m = d / 2;
    let mut x = vec![0.0f64; m];
    let logp = |x: &[f64], r: usize| if r % 2 == 0 { x[r / 2] } else { -x[r / 2] };
    for _ in 0..30 {
        for i in 0..m {
            // F(y) = sum_e A_e exp(2 e y) with e in -2..=2.
            let mut a = [0.0f64; 5];
            for psi in mats {
                for r in 0..d {
                    for c in 0..d {
                        let v = psi[(r, c)];
                        if v == 0.0 {
                            continue;
                        }
                        let er = if r / 2 == i { if r % 2 == 0 { 1 } else { -1 } } else { 0 };
                        let ec = if c / 2 == i { if c % 2 == 0 { 1 } else { -1 } } else { 0 };
                        let mut rest = logp(&x, r) - logp(&x, c);
                        rest -= f64::from(er - ec) * x[i];
                        a[(er - ec + 2) as usize] += v * v * (2.0 * rest).exp();
                    }
                }
            }
            let f = |y: f64| (0..5).map(|k| a[k] * (2.0 * (k as f64 - 2.0) * y).exp()).sum::<f64>();
            let (mut lo, mut hi) = (-15.0f64, 15.0f64);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let (p1, p2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if f(p1) <= f(p2) {
                    hi = p2;
                } else {
                    lo = p1;
                }
            }
            x[i] = 0.5 * (lo + hi);
        }
    }
    (0..d).map(|r| logp(&x, r).exp()).collect()
}

/// A crossing time with its crossing form on `ker(Psi(t) - I)`.
#[derive(Debug, Clone)]
pub struct Crossing {
    pub t: f64,
    pub kernel_basis: Mat,
    pub form: SymmetricForm,
    pub sig: i64,
}

impl Crossing {
    pub fn is_regular(&self, tol: f64) -> bool {
        let scale = self.form.entries().amax().max(1.0);
        self.form
            .eigenvalues()
            .iter()
            .all(|e| e.abs() > tol.sqrt() * scale)
    }
}

fn crossing_at(path: &SymplecticPath, t: f64, tol: f64) -> Crossing {
    let m = path.at(t);
    let kernel_basis = kernel_of(&m, tol.sqrt());
    let j = path.structure.matrix();
    let dpsi = path.derivative(t);
    let form = SymmetricForm::new(kernel_basis.transpose() * (-(&j * dpsi)) * &kernel_basis);
    let scale = form.entries().amax().max(1.0);
    let sig = symlin::signature(&form, tol.sqrt() * scale);
    Crossing {
        t,
        kernel_basis,
        form,
        sig,
    }
}

/// Locates crossings: local minima of `sigma_min(Psi - I)` that are
/// numerically zero, refined by golden-section search to `1e-10` in `t`.
pub fn crossings(path: &SymplecticPath, tol: f64) -> Result<Vec<Crossing>, IndexError> {
    let kt = tol.sqrt();
    let g = |t: f64| {
        let m = path.at(t);
        min_singular(&(&m - Mat::identity(m.nrows(), m.nrows()))) / (1.0 + m.norm())
    };
    let ts: Vec<f64> = path.samples.iter().map(|s| s.0).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let n = ts.len();
    let mut out = vec![crossing_at(path, 0.0, tol)];
    let mut k = 1;
    while k < n {
        let is_min = vals[k] <= vals[k - 1] && (k == n - 1 || vals[k] <= vals[k + 1]);
        if !is_min {
            k += 1;
            continue;
        }
        if k == n - 1 {
            if vals[k] <= kt {
                out.push(crossing_at(path, 1.0, tol));
            }
            break;
        }
        // Plateau: neighbours also numerically singular.
        if vals[k] <= kt && (vals[k - 1] <= kt || vals[k + 1] <= kt) {
            let t = ts[k];
            let c = crossing_at(path, t, tol);
            return Err(IndexError::IrregularCrossing {
                t,
                dim: c.kernel_basis.ncols(),
            });
        }
        let (mut a, mut b) = (ts[k - 1], ts[k + 1]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        while b - a > 1e-10 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if g(c) <= g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let t = 0.5 * (a + b);
        if g(t) <= kt {
            out.push(crossing_at(path, t, tol));
        }
        k += 1;
    }
    Ok(out)
}

/// Crossing-form evaluation: half signatures at crossing endpoints, full
/// signatures at interior crossings. Irregular interior crossings are errors.
pub fn crossing_sum(path: &SymplecticPath, tol: f64) -> Result<HalfInteger, IndexError> {
    let cs = crossings(path, tol)?;
    let mut twice = 0i64;
    for c in &cs {
        let endpoint = c.t <= 0.0 || c.t >= 1.0;
        if endpoint {
            twice += c.sig;
        } else {
            if !c.is_regular(tol) {
                return Err(IndexError::IrregularCrossing {
                    t: c.t,
                    dim: c.kernel_basis.ncols(),
                });
            }
            twice += 2 * c.sig;
        }
    }
    Ok(HalfInteger::from_twice(twice))
}

/// The unipotent path in `Sp(4)` attached to the period direction: rows
/// `[1, tau*hpp*t, hp*t, 0; 0,1,0,0; 0,0,1,0; 0, hp*t, 0, 1]`, symplectic
/// for `diag(-J1, J1)`.
pub fn theta_path(tau: f64, hp: f64, hpp: f64) -> Result<SymplecticPath, IndexError> {
    theta_path_sampled(tau, hp, hpp, DEFAULT_SAMPLES)
}

pub fn theta_nilpotent(tau: f64, hp: f64, hpp: f64) -> Mat {
    let mut n = Mat::zeros(4, 4);
    n[(0, 1)] = tau * hpp;
    n[(0, 2)] = hp;
    n[(3, 1)] = hp;
    n
}

pub fn theta_structure() -> Structure {
    Structure::with_signs(vec![-1, 1]).expect("valid signs")
}

pub fn theta_path_sampled(tau: f64, hp: f64, hpp: f64, nsamples: usize) -> Result<SymplecticPath, IndexError> {
    if !(hp > 0.0) || !hp.is_finite() {
        return Err(IndexError::InvalidParameter(format!("hp must be positive, got {hp}")));
    }
    if hpp == 0.0 || !hpp.is_finite() || !tau.is_finite() {
        return Err(IndexError::InvalidParameter("hpp must be nonzero and finite".into()));
    }
    let structure = theta_structure();
    let n = theta_nilpotent(tau, hp, hpp);
    // Theta' = N = J C Theta with C = -J N (N^2 = 0).
    let c = SymmetricForm::new(-(structure.matrix() * &n)).entries().clone();
    let nn = n.clone();
    let f: MatFn = Arc::new(move |t| Mat::identity(4, 4) + &nn * t);
    let g: MatFn = Arc::new(move |_| c.clone());
    Ok(SymplecticPath::from_fn(structure, f, nsamples).with_generator(g))
}

/// Solves `Gamma' = J (S - delta I) Gamma`, `Gamma(0) = I`, by the
/// exponential midpoint rule on the sample grid with `substeps` per interval.
pub fn perturbed_path(path: &SymplecticPath, delta: f64) -> Result<SymplecticPath, IndexError> {
    perturbed_path_with(path, delta, 8, 1e-8)
}

pub fn perturbed_path_with(
    path: &SymplecticPath,
    delta: f64,
    substeps: usize,
    tol: f64,
) -> Result<SymplecticPath, IndexError> {
    let g = path.generator.clone().ok_or(IndexError::MissingGenerator)?;
    let structure = path.structure.clone();
    let j = structure.matrix();
    let d = structure.dim();
    let id = Mat::identity(d, d);
    let shifted: MatFn = {
        let g = g.clone();
        let id = id.clone();
        Arc::new(move |t| g(t) - &id * delta)
    };
    let step = |m: &Mat, t0: f64, h: f64| -> Mat { (&j * shifted(t0 + 0.5 * h) * h).exp() * m };
    let mut samples = Vec::with_capacity(path.samples.len());
    let mut cur = id.clone();
    samples.push((0.0, cur.clone()));
    for w in path.samples.windows(2) {
        let (t0, t1) = (w[0].0, w[1].0);
        let h = (t1 - t0) / substeps.max(1) as f64;
        for k in 0..substeps.max(1) {
            cur = step(&cur, t0 + k as f64 * h, h);
        }
        let r = symlin::symplectic_residual(&cur, &structure)?;
        if r > tol {
            return Err(IndexError::StepSize(r));
        }
        samples.push((t1, cur.clone()));
    }
    let grid: Arc<Vec<(f64, Mat)>> = Arc::new(samples.clone());
    let jj = j.clone();
    let sh = shifted.clone();
    let eval: MatFn = Arc::new(move |t| {
        let i = grid.partition_point(|(s, _)| *s <= t).saturating_sub(1);
        let (t0, m0) = &grid[i];
        let h = t - t0;
        if h == 0.0 {
            return m0.clone();
        }
        (&jj * sh(t0 + 0.5 * h) * h).exp() * m0
    });
    Ok(SymplecticPath {
        structure,
        samples,
        eval: Some(eval),
        generator: Some(shifted),
    })
}

/// Pointwise block-diagonal path on the union of both sample grids.
pub fn block_diag(p1: &SymplecticPath, p2: &SymplecticPath) -> SymplecticPath {
    let mut ts: Vec<f64> = p1
        .samples
        .iter()
        .chain(&p2.samples)
        .map(|s| s.0)
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let structure = p1.structure.direct_sum(&p2.structure);
    let samples = ts
        .iter()
        .map(|&t| (t, symlin::block_diag(&p1.at(t), &p2.at(t))))
        .collect();
    let eval = match (&p1.eval, &p2.eval) {
        (Some(a), Some(b)) => {
            let (a, b) = (a.clone(), b.clone());
            Some(Arc::new(move |t| symlin::block_diag(&a(t), &b(t))) as MatFn)
        }
        _ => None,
    };
    let generator = match (&p1.generator, &p2.generator) {
        (Some(a), Some(b)) => {
            let (a, b) = (a.clone(), b.clone());
            Some(Arc::new(move |t| symlin::block_diag(&a(t), &b(t))) as MatFn)
        }
        _ => None,
    };
    SymplecticPath {
        structure,
        samples,
        eval,
        generator,
    }
}
