//! Index and dimension arithmetic for critical components and generators.
//!
//! Everything here is exact: Robbin–Salamon data enter as [`HalfInteger`]s
//! and every derived grading must come out integral.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelSystem;
use crate::rsindex::{rs_index, HalfInteger, IndexError, DEFAULT_SAMPLES, DEFAULT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradingError {
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("endpoints do not fit mode {0}")]
    Mismatch(String),
    #[error("hybrid index needs the sign of lambda")]
    MissingSign,
    #[error("branches disagree: {0} vs {1}")]
    Branches(i64, i64),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Constants,
    Orbit,
}

/// A component `K` of the Rabinowitz critical set together with the
/// matching component `Lambda` of the extended one, `dim Lambda = dim K + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalComponent {
    pub id: usize,
    pub kind: ComponentKind,
    pub action: f64,
    pub dim_k: usize,
    /// `mu_rs(Lambda)`, equal to the reduced index of `K`.
    pub mu_rs: HalfInteger,
    pub n: usize,
}

impl CriticalComponent {
    pub fn new(
        id: usize,
        kind: ComponentKind,
        action: f64,
        dim_k: usize,
        mu_rs: HalfInteger,
        n: usize,
    ) -> Result<Self, GradingError> {
        let c = Self {
            id,
            kind,
            action,
            dim_k,
            mu_rs,
            n,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), GradingError> {
        if self.n == 0 {
            return Err(GradingError::Inconsistent("n must be positive".into()));
        }
        if self.kind == ComponentKind::Constants && self.dim_k != 2 * self.n - 1 {
            return Err(GradingError::Inconsistent(format!(
                "constants component has dim K = {}, expected {}",
                self.dim_k,
                2 * self.n - 1
            )));
        }
        mu_lambda(self)?;
        mu_k(self)?;
        Ok(())
    }

    pub fn dim_lambda(&self) -> usize {
        self.dim_k + 1
    }
}

fn integral(h: HalfInteger, what: &str) -> Result<i64, GradingError> {
    h.to_integer()
        .ok_or_else(|| GradingError::Inconsistent(format!("{what} = {h} is not an integer")))
}

/// `mu(Lambda) = mu_rs - dim Lambda / 2`.
pub fn mu_lambda(c: &CriticalComponent) -> Result<i64, GradingError> {
    integral(c.mu_rs - HalfInteger::half(c.dim_lambda() as i64), "mu(Lambda)")
}

/// `mu(K) = mu_rs - (dim K - 1) / 2`, and `1 - n` for the constants.
pub fn mu_k(c: &CriticalComponent) -> Result<i64, GradingError> {
    if c.kind == ComponentKind::Constants {
        return Ok(1 - c.n as i64);
    }
    integral(c.mu_rs - HalfInteger::half(c.dim_k as i64 - 1), "mu(K)")
}

/// A critical point of the auxiliary Morse function on a component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedGenerator {
    pub component: usize,
    pub ind_f: usize,
    pub mu_f: i64,
    pub mu_f_rf: i64,
}

impl GradedGenerator {
    pub fn new(c: &CriticalComponent, ind_f: usize) -> Result<Self, GradingError> {
        if ind_f > c.dim_k {
            return Err(GradingError::Inconsistent(format!(
                "Morse index {ind_f} exceeds dim K = {}",
                c.dim_k
            )));
        }
        Ok(Self {
            component: c.id,
            ind_f,
            mu_f: mu_lambda(c)? + ind_f as i64 + 1,
            mu_f_rf: mu_k(c)? + ind_f as i64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Extended,
    Rabinowitz,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Component(CriticalComponent),
    Generator(GradedGenerator),
}

fn comp_data(mode: Mode, c: &CriticalComponent) -> Result<(i64, i64), GradingError> {
    Ok(match mode {
        Mode::Rabinowitz => (mu_k(c)?, c.dim_k as i64),
        _ => (mu_lambda(c)?, c.dim_lambda() as i64),
    })
}

/// Dimension of the cascade space (or hybrid moduli space) between two
/// endpoints. Hybrid: `M(K; Lambda)` for components, `M(x-; x+) / R*`
/// for generators.
pub fn cascade_dims(mode: Mode, minus: &Endpoint, plus: &Endpoint) -> Result<i64, GradingError> {
    use Endpoint::{Component as C, Generator as G};
    match mode {
        Mode::Extended | Mode::Rabinowitz => {
            let rf = i64::from(mode == Mode::Rabinowitz);
            let gen = |g: &GradedGenerator| if rf == 1 { g.mu_f_rf } else { g.mu_f };
            Ok(match (minus, plus) {
                (C(a), C(b)) => {
                    let ((ma, da), (mb, _)) = (comp_data(mode, a)?, comp_data(mode, b)?);
                    ma + da - mb - 1
                }
                (G(x), C(b)) => gen(x) - comp_data(mode, b)?.0 - 1,
                (C(a), G(y)) => {
                    let (ma, da) = comp_data(mode, a)?;
                    ma + da - gen(y) - rf
                }
                (G(x), G(y)) => gen(x) - gen(y) - rf,
            })
        }
        Mode::Hybrid => match (minus, plus) {
            (C(k), C(l)) => Ok(mu_k(k)? + k.dim_k as i64 - mu_lambda(l)?),
            (G(x), G(y)) => Ok(x.mu_f_rf - y.mu_f),
            _ => Err(GradingError::Mismatch(
                "hybrid takes two components or two generators".into(),
            )),
        },
    }
}

/// `dim C(x-, x+) - [dim C(x-, L+) + dim C(L-, x+) - dim C(L-, L+)]`;
/// zero when the formulas are mutually consistent. For `Hybrid` the
/// generator space is compared with the fibred product of unstable
/// manifold, `M(K; Lambda)` and stable manifold, modulo `R*`.
pub fn cross_identity_defect(
    mode: Mode,
    cm: &CriticalComponent,
    cp: &CriticalComponent,
    xm: &GradedGenerator,
    xp: &GradedGenerator,
) -> Result<i64, GradingError> {
    let (ecm, ecp) = (Endpoint::Component(cm.clone()), Endpoint::Component(cp.clone()));
    let (exm, exp) = (Endpoint::Generator(xm.clone()), Endpoint::Generator(xp.clone()));
    let direct = cascade_dims(mode, &exm, &exp)?;
    let assembled = match mode {
        Mode::Hybrid => {
            let mid = cascade_dims(mode, &ecm, &ecp)?;
            let dl = cp.dim_lambda() as i64;
            xm.ind_f as i64 + mid + (dl - xp.ind_f as i64) - cm.dim_k as i64 - dl - 1
        }
        _ => {
            cascade_dims(mode, &exm, &ecp)? + cascade_dims(mode, &ecm, &exp)?
                - cascade_dims(mode, &ecm, &ecp)?
        }
    };
    Ok(direct - assembled)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    fn flip(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    fn is_negative(self) -> i64 {
        i64::from(self == Sign::Negative)
    }
}

/// Boundary data of the linearized hybrid operator: the two return paths
/// `W1`, `W2`, their nullities, and the sign of the regularity scalar
/// `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridIndexData {
    pub mu_rs_w1: HalfInteger,
    pub nu_w1: usize,
    pub mu_rs_w2: HalfInteger,
    /// Equals `dim Lambda`.
    pub nu_w2: usize,
    pub sign_lambda: Option<Sign>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FredholmData {
    /// `ind = mu(Lambda-) - mu(Lambda+) - dim Lambda+`.
    Cylinder {
        mu_lambda_minus: i64,
        mu_lambda_plus: i64,
        dim_lambda_plus: usize,
    },
    Hybrid(HybridIndexData),
}

impl HybridIndexData {
    /// `mu(K)` from `W1` and the sign of `lambda`.
    pub fn mu_k(&self, sign: Sign) -> Result<i64, GradingError> {
        let base = integral(self.mu_rs_w1 - HalfInteger::half(self.nu_w1 as i64), "mu(K)")?;
        Ok(base + sign.is_negative())
    }

    /// `mu(Lambda) = -(mu_rs(W2) + nu(W2) / 2)`.
    pub fn mu_lambda(&self) -> Result<i64, GradingError> {
        Ok(-integral(self.mu_rs_w2 + HalfInteger::half(self.nu_w2 as i64), "mu(Lambda)")?)
    }

    /// Data reproducing `(mu(K), mu(Lambda), dim Lambda)` for a given sign,
    /// with `nu(W1) = 1`.
    pub fn reconstruct(mu_k: i64, mu_lambda: i64, dim_lambda: usize, sign: Sign) -> Self {
        Self {
            mu_rs_w1: HalfInteger::from_int(mu_k - sign.is_negative()) + HalfInteger::half(1),
            nu_w1: 1,
            mu_rs_w2: HalfInteger::from_int(-mu_lambda) - HalfInteger::half(dim_lambda as i64),
            nu_w2: dim_lambda,
            sign_lambda: Some(sign),
        }
    }

    /// `ind D' + ind D''` with vanishing correction term; `sgn c(1)` equals
    /// the sign of `lambda`.
    fn assembled(&self, sign: Sign) -> Result<i64, GradingError> {
        let d1 = integral(
            self.mu_rs_w1 - HalfInteger::half(self.nu_w1 as i64) + self.mu_rs_w2
                - HalfInteger::half(self.nu_w2 as i64),
            "ind D'",
        )?;
        Ok(d1 + sign.is_negative())
    }
}

pub fn fredholm_index(data: &FredholmData) -> Result<i64, GradingError> {
    match data {
        FredholmData::Cylinder {
            mu_lambda_minus,
            mu_lambda_plus,
            dim_lambda_plus,
        } => Ok(mu_lambda_minus - mu_lambda_plus - *dim_lambda_plus as i64),
        FredholmData::Hybrid(d) => {
            let sign = d.sign_lambda.ok_or(GradingError::MissingSign)?;
            let total = d.assembled(sign)?;
            let (mk, ml) = (d.mu_k(sign)?, d.mu_lambda()?);
            let closed = mk - ml - d.nu_w2 as i64;
            if total != closed {
                return Err(GradingError::Branches(total, closed));
            }
            let other = HybridIndexData::reconstruct(mk, ml, d.nu_w2, sign.flip());
            let alt = other.assembled(sign.flip())?;
            if alt != total {
                return Err(GradingError::Branches(total, alt));
            }
            Ok(total)
        }
    }
}

/// Constants and orbit components of multiplicity `1..=max_k`, with
/// `mu_rs` computed by the index engine.
pub fn model_components(sys: &ModelSystem, max_k: i64) -> Result<Vec<CriticalComponent>, GradingError> {
    let n = sys.n;
    let mut x0 = vec![0.0; 2 * n];
    x0[0] = 1.0;
    let cpath = sys.constants_path(&x0, DEFAULT_SAMPLES);
    let mut out = vec![CriticalComponent::new(
        0,
        ComponentKind::Constants,
        0.0,
        2 * n - 1,
        rs_index(&cpath, DEFAULT_TOL)?,
        n,
    )?];
    for k in 1..=max_k {
        let path = sys.orbit_path(k, DEFAULT_SAMPLES).map_err(|e| GradingError::Inconsistent(e.to_string()))?;
        out.push(CriticalComponent::new(
            k as usize,
            ComponentKind::Orbit,
            sys.orbit_tau(k) / 2.0,
            2 * n - 1,
            rs_index(&path, DEFAULT_TOL)?,
            n,
        )?);
    }
    Ok(out)
}

/// Generators of a perfect Morse function on each `K = S^{2n-1}`.
pub fn model_generators(components: &[CriticalComponent]) -> Result<Vec<GradedGenerator>, GradingError> {
    let mut out = Vec::new();
    for c in components {
        out.push(GradedGenerator::new(c, 0)?);
        out.push(GradedGenerator::new(c, c.dim_k)?);
    }
    Ok(out)
}

pub fn components_from_json(text: &str) -> Result<Vec<CriticalComponent>, GradingError> {
    let comps: Vec<CriticalComponent> =
        serde_json::from_str(text).map_err(|e| GradingError::Inconsistent(e.to_string()))?;
    for c in &comps {
        c.validate()?;
    }
    Ok(comps)
}

pub fn components_csv(components: &[CriticalComponent]) -> Result<String, GradingError> {
    let mut out = String::from("id,kind,action,dim_K,dim_Lambda,mu_rs,mu_K,mu_Lambda\n");
    for c in components {
        let kind = match c.kind {
            ComponentKind::Constants => "constants",
            ComponentKind::Orbit => "orbit",
        };
        out.push_str(&format!(
            "{},{kind},{:e},{},{},{},{},{}\n",
            c.id,
            c.action,
            c.dim_k,
            c.dim_lambda(),
            c.mu_rs,
            mu_k(c)?,
            mu_lambda(c)?
        ));
    }
    Ok(out)
}

pub fn generators_csv(generators: &[GradedGenerator]) -> String {
    let mut out = String::from("component,ind_f,mu_f,mu_f_RF\n");
    for g in generators {
        out.push_str(&format!("{},{},{},{}\n", g.component, g.ind_f, g.mu_f, g.mu_f_rf));
    }
    out
}
