//! Action-filtered chain complexes over `Z/2` and triangular chain maps.
//!
//! Generators are kept in canonical order: decreasing action, ties broken
//! by id. A matrix stores one bit row per target, so entry `[x+][x-]` is
//! the count `n(x-, x+)`; filtered maps are then lower triangular.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate generator id {0}")]
    DuplicateId(String),
    #[error("unknown generator id {0}")]
    UnknownId(String),
    #[error("{from} -> {to} raises the action")]
    Filtration { from: String, to: String },
    #[error("{from} -> {to} has the wrong degree shift")]
    Grading { from: String, to: String },
    #[error("diagonal entry at {0} vanishes; map is not invertible")]
    NotInvertible(String),
    #[error("boundary does not square to zero: {0}")]
    DSquared(Witness),
    #[error("{0}")]
    Mismatch(String),
}

/// A nonzero entry `source -> target` of a map that should vanish, with
/// the intermediate generators contributing to it (for compositions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub source: String,
    pub target: String,
    pub via: Vec<String>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)?;
        if !self.via.is_empty() {
            write!(f, " via {}", self.via.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub degree: Option<i64>,
    pub action: f64,
}

/// Square matrix over `Z/2`, bit rows indexed by target.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Z2Matrix {
    n: usize,
    rows: Vec<Vec<u64>>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

fn bit(v: &[u64], i: usize) -> bool {
    (v[i / 64] >> (i % 64)) & 1 == 1
}

fn flip(v: &mut [u64], i: usize) {
    v[i / 64] ^= 1 << (i % 64);
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a ^= b);
}

impl Z2Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            rows: vec![vec![0; words(n)]; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.toggle(i, i);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, target: usize, source: usize) -> bool {
        bit(&self.rows[target], source)
    }

    pub fn toggle(&mut self, target: usize, source: usize) {
        flip(&mut self.rows[target], source);
    }

    pub fn set(&mut self, target: usize, source: usize, v: bool) {
        if self.get(target, source) != v {
            self.toggle(target, source);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|w| *w == 0))
    }

    /// `self o other`: apply `other` first.
    pub fn compose(&self, other: &Z2Matrix) -> Z2Matrix {
        let mut out = Z2Matrix::zeros(self.n);
        for (r, row) in self.rows.iter().enumerate() {
            for k in 0..self.n {
                if bit(row, k) {
                    xor_into(&mut out.rows[r], &other.rows[k]);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Z2Matrix) -> Z2Matrix {
        let mut out = self.clone();
        for (a, b) in out.rows.iter_mut().zip(&other.rows) {
            xor_into(a, b);
        }
        out
    }

    /// Image of a chain given as a bit vector over sources.
    pub fn apply(&self, eps: &[bool]) -> Vec<bool> {
        self.rows
            .iter()
            .map(|row| eps.iter().enumerate().filter(|(i, &e)| e && bit(row, *i)).count() % 2 == 1)
            .collect()
    }

    /// `(source, target)` pairs of nonzero entries, by target then source.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for t in 0..self.n {
            for s in 0..self.n {
                if self.get(t, s) {
                    out.push((s, t));
                }
            }
        }
        out
    }

    /// Rank of the block with the given target rows and source columns.
    pub fn rank_of(&self, targets: &[usize], sources: &[usize]) -> usize {
        let mut rows: Vec<Vec<u64>> = targets
            .iter()
            .map(|&t| {
                let mut r = vec![0u64; words(sources.len())];
                for (j, &s) in sources.iter().enumerate() {
                    if self.get(t, s) {
                        flip(&mut r, j);
                    }
                }
                r
            })
            .collect();
        gf2_rank(&mut rows, sources.len())
    }

    pub fn rank(&self) -> usize {
        let all: Vec<usize> = (0..self.n).collect();
        self.rank_of(&all, &all)
    }
}

fn gf2_rank(rows: &mut [Vec<u64>], cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| bit(&rows[r], c)) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && bit(row, c) {
                xor_into(row, &pivot);
            }
        }
        rank += 1;
    }
    rank
}

/// Canonically ordered generators with an id lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    gens: Vec<Generator>,
    index: HashMap<String, usize>,
}

impl GeneratorSet {
    pub fn new(mut gens: Vec<Generator>) -> Result<Self, ComplexError> {
        gens.sort_by(|a, b| b.action.total_cmp(&a.action).then_with(|| a.id.cmp(&b.id)));
        let mut index = HashMap::new();
        for (i, g) in gens.iter().enumerate() {
            if !g.action.is_finite() {
                return Err(ComplexError::Mismatch(format!("generator {} has non-finite action", g.id)));
            }
            if index.insert(g.id.clone(), i).is_some() {
                return Err(ComplexError::DuplicateId(g.id.clone()));
            }
        }
        Ok(Self { gens, index })
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn gens(&self) -> &[Generator] {
        &self.gens
    }

    pub fn position(&self, id: &str) -> Result<usize, ComplexError> {
        self.index.get(id).copied().ok_or_else(|| ComplexError::UnknownId(id.to_string()))
    }

    fn id(&self, i: usize) -> String {
        self.gens[i].id.clone()
    }

    fn graded(&self) -> bool {
        self.gens.iter().all(|g| g.degree.is_some())
    }

    /// Builds a matrix from `(from, to)` id pairs, counts taken mod 2.
    fn matrix(&self, edges: &[(String, String)]) -> Result<Z2Matrix, ComplexError> {
        let mut m = Z2Matrix::zeros(self.len());
        for (a, b) in edges {
            m.toggle(self.position(b)?, self.position(a)?);
        }
        Ok(m)
    }
}

/// An action-filtered complex with boundary counts `n(x-, x+)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredZ2Complex {
    gens: GeneratorSet,
    d: Z2Matrix,
}

impl FilteredZ2Complex {
    pub fn new(gens: Vec<Generator>, edges: &[(String, String)]) -> Result<Self, ComplexError> {
        let gens = GeneratorSet::new(gens)?;
        let d = gens.matrix(edges)?;
        Self::from_matrix(gens, d)
    }

    pub fn from_matrix(gens: GeneratorSet, d: Z2Matrix) -> Result<Self, ComplexError> {
        for (s, t) in d.entries() {
            let (gs, gt) = (&gens.gens[s], &gens.gens[t]);
            if gt.action > gs.action {
                return Err(ComplexError::Filtration {
                    from: gs.id.clone(),
                    to: gt.id.clone(),
                });
            }
            if let (Some(a), Some(b)) = (gs.degree, gt.degree) {
                if b != a - 1 {
                    return Err(ComplexError::Grading {
                        from: gs.id.clone(),
                        to: gt.id.clone(),
                    });
                }
            }
        }
        Ok(Self { gens, d })
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn boundary(&self) -> &Z2Matrix {
        &self.d
    }

    /// `(d eps)(x+) = sum n(x-, x+) eps(x-)`.
    pub fn apply_boundary(&self, eps: &[bool]) -> Vec<bool> {
        self.d.apply(eps)
    }

    /// `None` when `d o d = 0`, else the first nonzero entry of `d o d`.
    pub fn verify_d_squared(&self) -> Option<Witness> {
        let dd = self.d.compose(&self.d);
        let (s, t) = *dd.entries().first()?;
        let via = (0..self.gens.len())
            .filter(|&k| self.d.get(k, s) && self.d.get(t, k))
            .map(|k| self.gens.id(k))
            .collect();
        Some(Witness {
            source: self.gens.id(s),
            target: self.gens.id(t),
            via,
        })
    }

    pub fn homology(&self) -> Result<HomologyRanks, ComplexError> {
        if let Some(w) = self.verify_d_squared() {
            return Err(ComplexError::DSquared(w));
        }
        let total = self.gens.len() - 2 * self.d.rank();
        let mut by_degree = BTreeMap::new();
        if self.gens.graded() {
            let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for (i, g) in self.gens.gens.iter().enumerate() {
                groups.entry(g.degree.expect("graded")).or_default().push(i);
            }
            let empty = Vec::new();
            let rank_from = |k: i64| {
                let src = groups.get(&k).unwrap_or(&empty);
                let dst = groups.get(&(k - 1)).unwrap_or(&empty);
                self.d.rank_of(dst, src)
            };
            for (&k, members) in &groups {
                by_degree.insert(k, members.len() - rank_from(k) - rank_from(k + 1));
            }
        }
        Ok(HomologyRanks { total, by_degree })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyRanks {
    pub total: usize,
    /// Empty for ungraded complexes.
    pub by_degree: BTreeMap<i64, usize>,
}

/// Counts `n_Phi(x-, x+)` of a filtered map between complexes on the
/// same generators.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMapMatrix {
    gens: GeneratorSet,
    m: Z2Matrix,
}

impl ChainMapMatrix {
    pub fn new(gens: Vec<Generator>, edges: &[(String, String)]) -> Result<Self, ComplexError> {
        let gens = GeneratorSet::new(gens)?;
        let m = gens.matrix(edges)?;
        Self::from_matrix(gens, m)
    }

    /// Requires lower triangularity in canonical order (so no entry raises
    /// the action) and degree preservation where degrees are known.
    pub fn from_matrix(gens: GeneratorSet, m: Z2Matrix) -> Result<Self, ComplexError> {
        for (s, t) in m.entries() {
            let (gs, gt) = (&gens.gens[s], &gens.gens[t]);
            if t < s {
                return Err(ComplexError::Filtration {
                    from: gs.id.clone(),
                    to: gt.id.clone(),
                });
            }
            if let (Some(a), Some(b)) = (gs.degree, gt.degree) {
                if a != b {
                    return Err(ComplexError::Grading {
                        from: gs.id.clone(),
                        to: gt.id.clone(),
                    });
                }
            }
        }
        Ok(Self { gens, m })
    }

    pub fn identity(gens: GeneratorSet) -> Self {
        let m = Z2Matrix::identity(gens.len());
        Self { gens, m }
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn matrix(&self) -> &Z2Matrix {
        &self.m
    }

    pub fn compose(&self, other: &ChainMapMatrix) -> ChainMapMatrix {
        Self {
            gens: self.gens.clone(),
            m: self.m.compose(&other.m),
        }
    }
}

/// `(Phi eps)(x+) = sum n_Phi(x-, x+) eps(x-)`.
pub fn phi_apply(phi: &ChainMapMatrix, eps: &[bool]) -> Vec<bool> {
    phi.m.apply(eps)
}

/// Inverse coefficients `m(x-, x+)`: zero for `x+` before `x-`, one on the
/// diagonal, and `sum over x != x+ of n_Phi(x, x+) m(x-, x)` otherwise,
/// filled in canonical order.
pub fn phi_invert(phi: &ChainMapMatrix) -> Result<ChainMapMatrix, ComplexError> {
    let n = phi.gens.len();
    if let Some(i) = (0..n).find(|&i| !phi.m.get(i, i)) {
        return Err(ComplexError::NotInvertible(phi.gens.id(i)));
    }
    let mut inv = Z2Matrix::zeros(n);
    for xm in 0..n {
        inv.toggle(xm, xm);
        for xp in xm + 1..n {
            let mut acc = false;
            for x in xm..xp {
                acc ^= phi.m.get(xp, x) && inv.get(x, xm);
            }
            inv.set(xp, xm, acc);
        }
    }
    Ok(ChainMapMatrix {
        gens: phi.gens.clone(),
        m: inv,
    })
}

/// `None` when `d_target o Phi = Phi o d_source`, else a nonzero entry of
/// the difference.
pub fn verify_chain_map(
    phi: &ChainMapMatrix,
    source: &FilteredZ2Complex,
    target: &FilteredZ2Complex,
) -> Result<Option<Witness>, ComplexError> {
    if phi.gens != source.gens || phi.gens != target.gens {
        return Err(ComplexError::Mismatch("chain map and complexes use different generators".into()));
    }
    let diff = target.d.compose(&phi.m).add(&phi.m.compose(&source.d));
    Ok(diff.entries().first().map(|&(s, t)| Witness {
        source: phi.gens.id(s),
        target: phi.gens.id(t),
        via: Vec::new(),
    }))
}

/// `d_target = Phi d_source Phi^-1`.
pub fn conjugate(source: &FilteredZ2Complex, phi: &ChainMapMatrix) -> Result<FilteredZ2Complex, ComplexError> {
    let inv = phi_invert(phi)?;
    let d = phi.m.compose(&source.d).compose(&inv.m);
    FilteredZ2Complex::from_matrix(source.gens.clone(), d)
}

/// `count` generators with distinct actions and degrees in `0..degrees`.
pub fn random_generators<R: Rng>(rng: &mut R, count: usize, degrees: i64) -> Vec<Generator> {
    let mut actions: Vec<f64> = (0..count).map(|i| i as f64 + rng.random_range(0.1..0.9)).collect();
    actions.shuffle(rng);
    actions
        .into_iter()
        .enumerate()
        .map(|(i, a)| Generator {
            id: format!("g{i}"),
            degree: Some(rng.random_range(0..degrees.max(1))),
            action: a,
        })
        .collect()
}

/// Random unit lower-triangular map; degree preserving where degrees are
/// known.
pub fn random_unit_triangular<R: Rng>(rng: &mut R, gens: &GeneratorSet, density: f64) -> ChainMapMatrix {
    let n = gens.len();
    let mut m = Z2Matrix::identity(n);
    for t in 0..n {
        for s in 0..t {
            let same = gens.gens[s].degree == gens.gens[t].degree;
            if same && rng.random_bool(density.clamp(0.0, 1.0)) {
                m.toggle(t, s);
            }
        }
    }
    ChainMapMatrix { gens: gens.clone(), m }
}

/// `P D P^-1` with `D` a random partial pairing `x -> y` (degree drop 1,
/// action drop) and `P` random unit triangular and degree preserving, so
/// the result is filtered, graded and squares to zero by construction.
pub fn random_complex<R: Rng>(rng: &mut R, count: usize, degrees: i64) -> FilteredZ2Complex {
    let gens = GeneratorSet::new(random_generators(rng, count, degrees)).expect("distinct ids");
    let n = gens.len();
    let mut paired = vec![false; n];
    let mut d = Z2Matrix::zeros(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for &s in &order {
        if paired[s] {
            continue;
        }
        let candidates: Vec<usize> = (s + 1..n)
            .filter(|&t| !paired[t] && gens.gens[t].degree.zip(gens.gens[s].degree).is_some_and(|(b, a)| b == a - 1))
            .collect();
        if let Some(&t) = candidates.choose(rng) {
            if rng.random_bool(0.7) {
                paired[s] = true;
                paired[t] = true;
                d.toggle(t, s);
            }
        }
    }
    let p = random_unit_triangular(rng, &gens, 0.3);
    let base = FilteredZ2Complex::from_matrix(gens, d).expect("pairing respects filtration");
    conjugate(&base, &p).expect("unit diagonal")
}

/// Parsed instance file.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub generators: Vec<Generator>,
    pub boundary: Vec<(String, String)>,
    pub phi: Vec<(String, String)>,
}

impl Instance {
    pub fn complex(&self) -> Result<FilteredZ2Complex, ComplexError> {
        FilteredZ2Complex::new(self.generators.clone(), &self.boundary)
    }

    /// `None` when the file has no `phi` lines.
    pub fn chain_map(&self) -> Result<Option<ChainMapMatrix>, ComplexError> {
        if self.phi.is_empty() {
            return Ok(None);
        }
        ChainMapMatrix::new(self.generators.clone(), &self.phi).map(Some)
    }
}

/// Lines `gen <id> [degree <k>] action <a>`, `bnd <from> <to>`,
/// `phi <from> <to>`; `#` starts a comment.
pub fn parse_instance(text: &str) -> Result<Instance, ComplexError> {
    let mut inst = Instance {
        generators: Vec::new(),
        boundary: Vec::new(),
        phi: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| ComplexError::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["gen", id, rest @ ..] => {
                let (mut degree, mut action) = (None, None);
                let mut it = rest.chunks(2);
                for kv in &mut it {
                    match kv {
                        ["degree", k] => degree = Some(k.parse::<i64>().map_err(|_| err("bad degree"))?),
                        ["action", a] => {
                            let a = a.parse::<f64>().map_err(|_| err("bad action"))?;
                            if !a.is_finite() {
                                return Err(err("action must be finite"));
                            }
                            action = Some(a);
                        }
                        _ => return Err(err("expected `degree <k>` or `action <a>`")),
                    }
                }
                inst.generators.push(Generator {
                    id: id.to_string(),
                    degree,
                    action: action.ok_or_else(|| err("missing action"))?,
                });
            }
            ["bnd", a, b] => inst.boundary.push((a.to_string(), b.to_string())),
            ["phi", a, b] => inst.phi.push((a.to_string(), b.to_string())),
            _ => return Err(err("unrecognized line")),
        }
    }
    Ok(inst)
}

fn write_gens(out: &mut String, gens: &GeneratorSet) {
    for g in gens.gens() {
        match g.degree {
            Some(k) => out.push_str(&format!("gen {} degree {k} action {}\n", g.id, g.action)),
            None => out.push_str(&format!("gen {} action {}\n", g.id, g.action)),
        }
    }
}

fn write_edges(out: &mut String, tag: &str, gens: &GeneratorSet, m: &Z2Matrix) {
    let mut e = m.entries();
    e.sort();
    for (s, t) in e {
        out.push_str(&format!("{tag} {} {}\n", gens.id(s), gens.id(t)));
    }
}

/// Canonical text: generators in canonical order, entries sorted by
/// `(from, to)` positions.
pub fn export_instance(complex: &FilteredZ2Complex, phi: Option<&ChainMapMatrix>) -> String {
    let mut out = String::new();
    write_gens(&mut out, &complex.gens);
    write_edges(&mut out, "bnd", &complex.gens, &complex.d);
    if let Some(p) = phi {
        write_edges(&mut out, "phi", &p.gens, &p.m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(id: &str, degree: i64, action: f64) -> Generator {
        Generator {
            id: id.into(),
            degree: Some(degree),
            action,
        }
    }

    fn e(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    /// A square with `a -> b, c -> d`: degrees 2, 1, 1, 0.
    fn square() -> FilteredZ2Complex {
        FilteredZ2Complex::new(
            vec![g("a", 2, 4.0), g("b", 1, 3.0), g("c", 1, 2.0), g("d", 0, 1.0)],
            &[e("a", "b"), e("a", "c"), e("b", "d"), e("c", "d")],
        )
        .unwrap()
    }

    #[test]
    fn zero_boundary_homology_is_everything() {
        let c = FilteredZ2Complex::new(vec![g("a", 0, 1.0), g("b", 1, 2.0), g("c", 1, 0.5)], &[]).unwrap();
        let h = c.homology().unwrap();
        assert_eq!(h.total, 3);
        assert_eq!(h.by_degree, BTreeMap::from([(0, 1), (1, 2)]));
    }

    #[test]
    fn two_generator_instance() {
        let c = FilteredZ2Complex::new(vec![g("x", 1, 2.0), g("y", 0, 1.0)], &[e("x", "y")]).unwrap();
        assert_eq!(c.boundary().rank(), 1);
        assert!(c.verify_d_squared().is_none());
        let h = c.homology().unwrap();
        assert_eq!(h.total, 0);
        assert_eq!(h.by_degree, BTreeMap::from([(0, 0), (1, 0)]));
    }

    #[test]
    fn square_by_hand() {
        let c = square();
        let d = c.boundary();
        // Brute-force square of the matrix.
        for t in 0..4 {
            for s in 0..4 {
                let v = (0..4).fold(false, |acc, k| acc ^ (d.get(t, k) && d.get(k, s)));
                assert!(!v);
            }
        }
        // ker d_1 = <b + c>, im d_2 = <b + c>; d_1 has rank 1; d_0 = 0.
        let h = c.homology().unwrap();
        assert_eq!(h.by_degree, BTreeMap::from([(0, 0), (1, 0), (2, 0)]));
        assert_eq!(c.apply_boundary(&[true, false, false, false]), vec![false, true, true, false]);
    }

    #[test]
    fn corrupted_square_is_caught() {
        let c = FilteredZ2Complex::new(
            vec![g("a", 2, 4.0), g("b", 1, 3.0), g("c", 1, 2.0), g("d", 0, 1.0)],
            &[e("a", "b"), e("a", "c"), e("b", "d")],
        )
        .unwrap();
        let w = c.verify_d_squared().unwrap();
        assert_eq!((w.source.as_str(), w.target.as_str()), ("a", "d"));
        assert_eq!(w.via, vec!["b".to_string()]);
        assert!(matches!(c.homology(), Err(ComplexError::DSquared(_))));
    }

    #[test]
    fn filtration_and_grading_are_enforced() {
        let r = FilteredZ2Complex::new(vec![g("x", 1, 1.0), g("y", 0, 2.0)], &[e("x", "y")]);
        assert!(matches!(r, Err(ComplexError::Filtration { .. })));
        let r = FilteredZ2Complex::new(vec![g("x", 2, 2.0), g("y", 0, 1.0)], &[e("x", "y")]);
        assert!(matches!(r, Err(ComplexError::Grading { .. })));
        let r = ChainMapMatrix::new(vec![g("x", 0, 1.0), g("y", 0, 2.0)], &[e("x", "y")]);
        assert!(matches!(r, Err(ComplexError::Filtration { .. })));
    }

    #[test]
    fn invert_identity_and_nilpotent() {
        let gens = vec![g("a", 0, 3.0), g("b", 0, 2.0), g("c", 0, 1.0)];
        let id = ChainMapMatrix::new(gens.clone(), &[e("a", "a"), e("b", "b"), e("c", "c")]).unwrap();
        assert_eq!(phi_invert(&id).unwrap(), id);
        // N = a -> c only, N^2 = 0.
        let m = ChainMapMatrix::new(gens, &[e("a", "a"), e("b", "b"), e("c", "c"), e("a", "c")]).unwrap();
        assert_eq!(phi_invert(&m).unwrap(), m);
    }

    #[test]
    fn zero_diagonal_is_not_invertible() {
        let m = ChainMapMatrix::new(vec![g("a", 0, 2.0), g("b", 0, 1.0)], &[e("a", "a")]).unwrap();
        assert_eq!(phi_invert(&m), Err(ComplexError::NotInvertible("b".into())));
    }

    #[test]
    fn random_inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for count in [1, 8, 40, 64, 100] {
            let gens = GeneratorSet::new(random_generators(&mut rng, count, 1)).unwrap();
            let m = random_unit_triangular(&mut rng, &gens, 0.5);
            let inv = phi_invert(&m).unwrap();
            assert_eq!(m.compose(&inv).matrix(), &Z2Matrix::identity(count));
            assert_eq!(inv.compose(&m).matrix(), &Z2Matrix::identity(count));
            assert_eq!(phi_invert(&inv).unwrap(), m);
        }
    }

    #[test]
    fn chain_maps() {
        let c = square();
        let id = ChainMapMatrix::identity(c.generators().clone());
        assert_eq!(verify_chain_map(&id, &c, &c).unwrap(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s = random_complex(&mut rng, 30, 4);
            assert!(s.verify_d_squared().is_none());
            let phi = random_unit_triangular(&mut rng, s.generators(), 0.4);
            let t = conjugate(&s, &phi).unwrap();
            assert!(t.verify_d_squared().is_none());
            assert_eq!(verify_chain_map(&phi, &s, &t).unwrap(), None);
            assert_eq!(s.homology().unwrap(), t.homology().unwrap());
        }
        // Identity with the entry b -> c flipped: d(a) = b + c but Phi(b + c) = b.
        let mut bad = id.matrix().clone();
        bad.toggle(2, 1);
        let bad = ChainMapMatrix::from_matrix(c.generators().clone(), bad).unwrap();
        let w = verify_chain_map(&bad, &c, &c).unwrap().unwrap();
        assert_eq!((w.source.as_str(), w.target.as_str()), ("a", "c"));
    }

    #[test]
    fn apply_matches_matrix() {
        let c = square();
        let phi = ChainMapMatrix::new(
            c.generators().gens().to_vec(),
            &[e("a", "a"), e("b", "b"), e("c", "c"), e("d", "d"), e("b", "c")],
        )
        .unwrap();
        assert_eq!(phi_apply(&phi, &[false, true, false, false]), vec![false, true, true, false]);
    }

    #[test]
    fn text_roundtrip() {
        let text = "# toy\ngen d degree 0 action 1\ngen a degree 2 action 4\ngen b degree 1 action 3\n\
                    gen c degree 1 action 2\nbnd c d\nbnd a b\nbnd a c\nbnd b d\nphi a a\nphi b b\nphi c c\nphi d d\n";
        let inst = parse_instance(text).unwrap();
        let c = inst.complex().unwrap();
        assert_eq!(c, square());
        let phi = inst.chain_map().unwrap().unwrap();
        let out = export_instance(&c, Some(&phi));
        assert_eq!(
            out,
            "gen a degree 2 action 4\ngen b degree 1 action 3\ngen c degree 1 action 2\ngen d degree 0 action 1\n\
             bnd a b\nbnd a c\nbnd b d\nbnd c d\nphi a a\nphi b b\nphi c c\nphi d d\n"
        );
        let again = parse_instance(&out).unwrap();
        assert_eq!(export_instance(&again.complex().unwrap(), again.chain_map().unwrap().as_ref()), out);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_instance("gen a action 1\nbogus\n"), Err(ComplexError::Parse { line: 2, .. })));
        assert!(matches!(parse_instance("gen a degree x action 1"), Err(ComplexError::Parse { line: 1, .. })));
        assert!(matches!(parse_instance("gen a degree 1"), Err(ComplexError::Parse { .. })));
        let inst = parse_instance("gen a action 1\nbnd a zz\n").unwrap();
        assert_eq!(inst.complex(), Err(ComplexError::UnknownId("zz".into())));
    }
}
