//! Exact-rational indexed polynomials in a metric perturbation `h` around
//! Minkowski space.
//!
//! A monomial is a product of factors `∂_{c…} h_{ab}` and background symbols
//! `η^{ab}`. Contractions through the background metric are implicit: a
//! dummy label occurring in two slots stands for an `η`-contraction of those
//! slots, so `η` factors are absorbed during canonicalization unless both of
//! their indices are free.
//!
//! Free indices carry a fixed position (`Up`/`Down`) recorded on the
//! expression; a free label occurring in an `h` slot or derivative slot of a
//! monomial is understood at that position (raised with `η` when `Up`).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

use super::TensorError;

pub type Coeff = Rational64;

pub const ALPHA: u8 = 0;
pub const BETA: u8 = 1;
pub const GAMMA: u8 = 2;
pub const DELTA: u8 = 3;
pub const LAMBDA: u8 = 4;
pub const MU: u8 = 5;
pub const NU: u8 = 6;
pub const SIGMA: u8 = 7;
pub const TAU: u8 = 8;

const FREE_NAMES: [&str; 9] = ["α", "β", "γ", "δ", "λ", "μ", "ν", "σ", "τ"];
const DUMMY_NAMES: [&str; 10] = ["λ", "δ", "μ", "ν", "σ", "τ", "ε", "ζ", "ξ", "χ"];

/// Space-time dimension used when a background trace `η^a_a` appears.
pub const DIMENSION: i64 = 4;

/// Largest number of dummy pairs a monomial may carry; canonicalization
/// enumerates all relabelings.
const MAX_DUMMIES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Free(u8),
    Dummy(u8),
}

impl Index {
    fn is_dummy(self) -> bool {
        matches!(self, Index::Dummy(_))
    }
}

pub fn free_name(label: u8) -> String {
    FREE_NAMES
        .get(label as usize)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("i{label}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pos {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    /// Background inverse metric `η^{ab}`.
    Eta([Index; 2]),
    /// `∂_{derivs} h_{slots}`.
    H { slots: [Index; 2], derivs: Vec<Index> },
}

impl Factor {
    pub fn is_h(&self) -> bool {
        matches!(self, Factor::H { .. })
    }

    pub fn derivs(&self) -> &[Index] {
        match self {
            Factor::H { derivs, .. } => derivs,
            Factor::Eta(_) => &[],
        }
    }

    pub fn slots(&self) -> [Index; 2] {
        match self {
            Factor::H { slots, .. } => *slots,
            Factor::Eta(s) => *s,
        }
    }

    /// A trace `h^a_a` (possibly differentiated).
    pub fn is_trace(&self) -> bool {
        matches!(self, Factor::H { slots: [a, b], .. } if a == b && a.is_dummy())
    }

    fn indices(&self) -> impl Iterator<Item = Index> + '_ {
        let s = self.slots();
        [s[0], s[1]].into_iter().chain(self.derivs().iter().copied())
    }

    fn map(&self, f: &impl Fn(Index) -> Index) -> Factor {
        match self {
            Factor::Eta([a, b]) => Factor::Eta([f(*a), f(*b)]),
            Factor::H { slots, derivs } => Factor::H {
                slots: [f(slots[0]), f(slots[1])],
                derivs: derivs.iter().map(|&i| f(i)).collect(),
            },
        }
    }

    fn normalized(mut self) -> Factor {
        match &mut self {
            Factor::Eta(s) => s.sort(),
            Factor::H { slots, derivs } => {
                slots.sort();
                derivs.sort();
            }
        }
        self
    }

    fn replace_first(&mut self, from: Index, to: Index) -> bool {
        let slots: &mut [Index] = match self {
            Factor::Eta(s) => s,
            Factor::H { slots, .. } => slots,
        };
        for i in slots.iter_mut() {
            if *i == from {
                *i = to;
                return true;
            }
        }
        if let Factor::H { derivs, .. } = self {
            for i in derivs.iter_mut() {
                if *i == from {
                    *i = to;
                    return true;
                }
            }
        }
        false
    }
}

/// A canonical product of factors (sorted, dummies numbered from zero).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub(crate) Vec<Factor>);

impl Monomial {
    pub fn factors(&self) -> &[Factor] {
        &self.0
    }

    /// Polynomial degree in `h`.
    pub fn degree(&self) -> usize {
        self.0.iter().filter(|f| f.is_h()).count()
    }

    pub fn has_trace(&self) -> bool {
        self.0.iter().any(Factor::is_trace)
    }

    pub fn max_derivs(&self) -> usize {
        self.0.iter().map(|f| f.derivs().len()).max().unwrap_or(0)
    }

    pub fn dummy_count(&self) -> usize {
        dummies(&self.0).len()
    }

    /// Canonical form of an arbitrary factor list together with the scalar
    /// produced by absorbed background traces.
    pub fn canonical(factors: Vec<Factor>) -> (Monomial, i64) {
        let (factors, mult) = absorb_etas(factors);
        let ds = dummies(&factors);
        assert!(
            ds.len() <= MAX_DUMMIES,
            "monomial with {} dummy pairs exceeds canonicalization limit",
            ds.len()
        );
        let mut best: Option<Vec<Factor>> = None;
        for perm in permutations(ds.len()) {
            let relabel = |i: Index| match i {
                Index::Dummy(d) => {
                    let k = ds.iter().position(|&x| x == d).expect("dummy present");
                    Index::Dummy(perm[k] as u8)
                }
                other => other,
            };
            let mut cand: Vec<Factor> =
                factors.iter().map(|f| f.map(&relabel).normalized()).collect();
            cand.sort();
            if best.as_ref().map_or(true, |b| cand < *b) {
                best = Some(cand);
            }
        }
        (Monomial(best.unwrap_or_default()), mult)
    }
}

fn dummies(factors: &[Factor]) -> Vec<u8> {
    let mut ds: Vec<u8> = factors
        .iter()
        .flat_map(|f| f.indices().collect::<Vec<_>>())
        .filter_map(|i| match i {
            Index::Dummy(d) => Some(d),
            Index::Free(_) => None,
        })
        .collect();
    ds.sort_unstable();
    ds.dedup();
    ds
}

fn absorb_etas(mut fs: Vec<Factor>) -> (Vec<Factor>, i64) {
    let mut mult = 1;
    loop {
        let pos = fs.iter().position(
            |f| matches!(f, Factor::Eta(s) if s[0].is_dummy() || s[1].is_dummy()),
        );
        let Some(k) = pos else { break };
        let Factor::Eta([a, b]) = fs.remove(k) else {
            unreachable!()
        };
        if a == b {
            mult *= DIMENSION;
            continue;
        }
        let (keep, gone) = if b.is_dummy() { (a, b) } else { (b, a) };
        let replaced = fs.iter_mut().any(|f| f.replace_first(gone, keep));
        debug_assert!(replaced, "dangling dummy index in eta contraction");
    }
    (fs, mult)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Sum of canonical monomials with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorExpr {
    free: Vec<(u8, Pos)>,
    terms: BTreeMap<Monomial, Coeff>,
}

impl TensorExpr {
    pub fn zero(free: &[(u8, Pos)]) -> Self {
        let mut free = free.to_vec();
        free.sort();
        TensorExpr {
            free,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(c: Coeff) -> Self {
        let mut e = TensorExpr::zero(&[]);
        e.push(Vec::new(), c);
        e
    }

    /// `h_{ab}` with the given free positions.
    pub fn h(a: (u8, Pos), b: (u8, Pos)) -> Self {
        let mut e = TensorExpr::zero(&[a, b]);
        e.push(
            vec![Factor::H {
                slots: [Index::Free(a.0), Index::Free(b.0)],
                derivs: vec![],
            }],
            Coeff::one(),
        );
        e
    }

    /// `h_{ab}` with both indices down.
    pub fn h_lower(a: u8, b: u8) -> Self {
        TensorExpr::h((a, Pos::Down), (b, Pos::Down))
    }

    /// `η^{ab}`.
    pub fn eta(a: u8, b: u8) -> Self {
        let mut e = TensorExpr::zero(&[(a, Pos::Up), (b, Pos::Up)]);
        e.push(
            vec![Factor::Eta([Index::Free(a), Index::Free(b)])],
            Coeff::one(),
        );
        e
    }

    pub fn free(&self) -> &[(u8, Pos)] {
        &self.free
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).copied().unwrap_or_else(Coeff::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position_of(&self, label: u8) -> Option<Pos> {
        self.free.iter().find(|(l, _)| *l == label).map(|(_, p)| *p)
    }

    fn push(&mut self, factors: Vec<Factor>, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let (m, mult) = Monomial::canonical(factors);
        self.add_term(m, c * Coeff::from_integer(mult));
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Expression with a single monomial term (canonicalized).
    pub fn from_factors(free: &[(u8, Pos)], factors: Vec<Factor>, c: Coeff) -> Self {
        let mut e = TensorExpr::zero(free);
        e.push(factors, c);
        e
    }

    fn same_free(&self, other: &Self) -> Result<(), TensorError> {
        if self.free != other.free {
            return Err(TensorError::IndexMismatch(format!(
                "free indices differ: {} vs {}",
                render_free(&self.free),
                render_free(&other.free)
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        self.same_free(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.add(&other.scale(-Coeff::one()))
    }

    pub fn scale(&self, c: Coeff) -> Self {
        if c.is_zero() {
            return TensorExpr::zero(&self.free);
        }
        TensorExpr {
            free: self.free.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), *v * c)).collect(),
        }
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(Coeff::from_integer(c))
    }

    /// Product; free labels shared by both operands are contracted and must
    /// sit at opposite positions.
    pub fn mul(&self, other: &Self) -> Result<Self, TensorError> {
        let mut shared = Vec::new();
        let mut free = Vec::new();
        for &(l, p) in &self.free {
            match other.position_of(l) {
                Some(q) if q == p => {
                    return Err(TensorError::IndexMismatch(format!(
                        "cannot contract {} with itself at the same position",
                        free_name(l)
                    )))
                }
                Some(_) => shared.push(l),
                None => free.push((l, p)),
            }
        }
        for &(l, p) in &other.free {
            if self.position_of(l).is_none() {
                free.push((l, p));
            }
        }
        let mut out = TensorExpr::zero(&free);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut fs = ma.0.clone();
                fs.extend(mb.0.iter().map(|f| {
                    f.map(&|i| match i {
                        Index::Dummy(d) => Index::Dummy(d + 64),
                        x => x,
                    })
                }));
                let fs = fs
                    .iter()
                    .map(|f| {
                        f.map(&|i| match i {
                            Index::Free(l) => match shared.iter().position(|&s| s == l) {
                                Some(j) => Index::Dummy(128 + j as u8),
                                None => i,
                            },
                            d => d,
                        })
                    })
                    .collect();
                out.push(fs, *ca * *cb);
            }
        }
        Ok(out)
    }

    /// Partial derivative `∂_c` (product rule); adds a free lower index `c`.
    pub fn deriv(&self, c: u8) -> Result<Self, TensorError> {
        if self.position_of(c).is_some() {
            return Err(TensorError::IndexMismatch(format!(
                "derivative index {} is already free",
                free_name(c)
            )));
        }
        let mut free = self.free.clone();
        free.push((c, Pos::Down));
        let mut out = TensorExpr::zero(&free);
        for (m, coeff) in &self.terms {
            for (k, f) in m.0.iter().enumerate() {
                if let Factor::H { slots, derivs } = f {
                    let mut fs = m.0.clone();
                    let mut d = derivs.clone();
                    d.push(Index::Free(c));
                    fs[k] = Factor::H {
                        slots: *slots,
                        derivs: d,
                    };
                    out.push(fs, *coeff);
                }
            }
        }
        Ok(out)
    }

    /// Contracts the free upper index `up` with the free lower index `down`.
    pub fn contract(&self, up: u8, down: u8) -> Result<Self, TensorError> {
        match (self.position_of(up), self.position_of(down)) {
            (Some(Pos::Up), Some(Pos::Down)) => {}
            _ => {
                return Err(TensorError::IndexMismatch(format!(
                    "contraction needs {} up and {} down",
                    free_name(up),
                    free_name(down)
                )))
            }
        }
        let free: Vec<_> = self
            .free
            .iter()
            .copied()
            .filter(|(l, _)| *l != up && *l != down)
            .collect();
        let mut out = TensorExpr::zero(&free);
        for (m, c) in &self.terms {
            let fs = m
                .0
                .iter()
                .map(|f| {
                    f.map(&|i| match i {
                        Index::Free(l) if l == up || l == down => Index::Dummy(200),
                        x => x,
                    })
                })
                .collect();
            out.push(fs, *c);
        }
        Ok(out)
    }

    /// Renames free index `from` to `to` (which must not be free already).
    pub fn relabel(&self, from: u8, to: u8) -> Result<Self, TensorError> {
        if from == to {
            return Ok(self.clone());
        }
        let p = self.position_of(from).ok_or_else(|| {
            TensorError::IndexMismatch(format!("{} is not a free index", free_name(from)))
        })?;
        if self.position_of(to).is_some() {
            return Err(TensorError::IndexMismatch(format!(
                "{} is already free",
                free_name(to)
            )));
        }
        let free: Vec<_> = self
            .free
            .iter()
            .map(|&(l, q)| if l == from { (to, p) } else { (l, q) })
            .collect();
        let mut out = TensorExpr::zero(&free);
        for (m, c) in &self.terms {
            let fs = m
                .0
                .iter()
                .map(|f| {
                    f.map(&|i| if i == Index::Free(from) { Index::Free(to) } else { i })
                })
                .collect();
            out.push(fs, *c);
        }
        Ok(out)
    }

    /// Exchanges the roles of two free indices of equal position.
    pub fn swap_free(&self, a: u8, b: u8) -> Result<Self, TensorError> {
        if self.position_of(a) != self.position_of(b) || self.position_of(a).is_none() {
            return Err(TensorError::IndexMismatch(format!(
                "cannot swap {} and {}",
                free_name(a),
                free_name(b)
            )));
        }
        let mut out = TensorExpr::zero(&self.free);
        for (m, c) in &self.terms {
            let fs = m
                .0
                .iter()
                .map(|f| {
                    f.map(&|i| match i {
                        Index::Free(l) if l == a => Index::Free(b),
                        Index::Free(l) if l == b => Index::Free(a),
                        x => x,
                    })
                })
                .collect();
            out.push(fs, *c);
        }
        Ok(out)
    }

    /// Drops every monomial of degree above `order` in `h`.
    pub fn truncate(&self, order: usize) -> Self {
        self.filter(|m| m.degree() <= order)
    }

    /// Homogeneous part of the given degree in `h`.
    pub fn degree_part(&self, degree: usize) -> Self {
        self.filter(|m| m.degree() == degree)
    }

    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        TensorExpr {
            free: self.free.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Recanonicalizes every monomial; the identity on well-formed values.
    pub fn canonicalized(&self) -> Self {
        let mut out = TensorExpr::zero(&self.free);
        for (m, c) in &self.terms {
            out.push(m.0.clone(), *c);
        }
        out
    }

    pub fn render_monomial(&self, m: &Monomial) -> String {
        render_monomial(&self.free, m)
    }
}

fn render_free(free: &[(u8, Pos)]) -> String {
    let ups: String = free
        .iter()
        .filter(|(_, p)| *p == Pos::Up)
        .map(|(l, _)| free_name(*l))
        .collect();
    let downs: String = free
        .iter()
        .filter(|(_, p)| *p == Pos::Down)
        .map(|(l, _)| free_name(*l))
        .collect();
    format!("^{{{ups}}}_{{{downs}}}")
}

/// Renders a monomial with every contraction written through an explicit
/// background metric, e.g. `η^{λλ'} η^{δδ'} ∂_α h_{λδ} ∂_β h_{λ'δ'}`.
pub fn render_monomial(free: &[(u8, Pos)], m: &Monomial) -> String {
    let taken: Vec<String> = free.iter().map(|(l, _)| free_name(*l)).collect();
    let pool: Vec<&str> = DUMMY_NAMES
        .iter()
        .copied()
        .filter(|n| !taken.iter().any(|t| t == n))
        .collect();
    let mut seen: BTreeMap<Index, usize> = BTreeMap::new();
    let mut etas: Vec<String> = Vec::new();
    let mut name_of = |i: Index, etas: &mut Vec<String>| -> String {
        match i {
            Index::Dummy(d) => {
                let base = pool
                    .get(d as usize)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("d{d}"));
                let n = seen.entry(i).or_insert(0);
                *n += 1;
                if *n == 1 {
                    etas.push(format!("η^{{{base}{base}'}}"));
                    base
                } else {
                    format!("{base}'")
                }
            }
            Index::Free(l) => {
                let name = free_name(l);
                if free.iter().any(|&(x, p)| x == l && p == Pos::Up) {
                    etas.push(format!("η^{{{name}{name}'}}"));
                    format!("{name}'")
                } else {
                    name
                }
            }
        }
    };
    let mut body = Vec::new();
    for f in &m.0 {
        match f {
            Factor::Eta([a, b]) => {
                let (a, b) = (index_plain(*a), index_plain(*b));
                body.push(format!("η^{{{a}{b}}}"));
            }
            Factor::H { slots, derivs } => {
                let mut s = String::new();
                if !derivs.is_empty() {
                    let ds: String = derivs.iter().map(|&i| name_of(i, &mut etas)).collect();
                    s.push_str(&format!("∂_{{{ds}}}"));
                }
                let a = name_of(slots[0], &mut etas);
                let b = name_of(slots[1], &mut etas);
                s.push_str(&format!("h_{{{a}{b}}}"));
                body.push(s);
            }
        }
    }
    let mut parts = etas;
    parts.extend(body);
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join(" ")
    }
}

fn index_plain(i: Index) -> String {
    match i {
        Index::Free(l) => free_name(l),
        Index::Dummy(d) => format!("d{d}"),
    }
}

pub fn render_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for TensorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.abs();
            if a.is_one() {
                write!(f, "{}", render_monomial(&self.free, m))?;
            } else {
                write!(f, "{} {}", render_coeff(&a), render_monomial(&self.free, m))?;
            }
        }
        Ok(())
    }
}
