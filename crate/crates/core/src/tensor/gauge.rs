//! Reduction modulo the wave-gauge generators.
//!
//! The ideal is generated by the truncated `G_γ`, their first derivatives
//! `∂_δ G_γ` and, at quadratic order, the products `G_γ · ∂h` with one
//! background contraction. Reduction runs in two passes:
//!
//! 1. Row reduction against `G_γ` / `∂_δ G_γ` with a fixed column order:
//!    linear monomials before nonlinear ones, and among linear monomials
//!    those containing a differentiated trace `∂…h^μ_μ` first.
//! 2. At quadratic order, multipliers for the products are solved so that
//!    every remaining `∂h·∂h` monomial either has its derivative indices
//!    contracted together, carries two distinct free derivative indices, or
//!    cancels against its derivative-swapped partner. Free parameters of the
//!    solution are set to zero.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::classify::{derivative_pair, is_self_classified, swapped};
use super::expr::{free_name, Coeff, Monomial, Pos, TensorExpr};
use super::metric::gauge_generator;
use super::TensorError;

const C0: u8 = 30;
const C1: u8 = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaugeIdeal {
    order: usize,
}

/// An element of the generating set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GaugeTerm {
    /// `G_{index}`.
    Generator { index: u8 },
    /// `∂_{deriv} G_{index}`.
    Derivative { deriv: u8, index: u8 },
    /// `G_{p0} ∂_{p1} h_{p2 p3}`; `None` marks the two contracted positions.
    Product { positions: [Option<u8>; 4] },
}

impl fmt::Display for GaugeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GaugeTerm::Generator { index } => write!(f, "G_{}", free_name(index)),
            GaugeTerm::Derivative { deriv, index } => {
                write!(f, "∂_{} G_{}", free_name(deriv), free_name(index))
            }
            GaugeTerm::Product { positions } => {
                let mut seen = 0;
                let names: Vec<String> = positions
                    .iter()
                    .map(|p| match p {
                        Some(l) => free_name(*l),
                        None => {
                            seen += 1;
                            if seen == 1 { "λ".into() } else { "λ'".into() }
                        }
                    })
                    .collect();
                write!(
                    f,
                    "η^{{λλ'}} G_{} ∂_{{{}}}h_{{{}{}}}",
                    names[0], names[1], names[2], names[3]
                )
            }
        }
    }
}

impl GaugeIdeal {
    pub fn new(order: usize) -> Result<Self, TensorError> {
        gauge_generator(order, 0)?;
        Ok(GaugeIdeal { order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn generator(&self, gamma: u8) -> TensorExpr {
        gauge_generator(self.order, gamma).expect("order validated at construction")
    }

    pub fn instance(&self, term: GaugeTerm) -> Result<TensorExpr, TensorError> {
        match term {
            GaugeTerm::Generator { index } => Ok(self.generator(index)),
            GaugeTerm::Derivative { deriv, index } => {
                Ok(self.generator(index).deriv(deriv)?.truncate(self.order))
            }
            GaugeTerm::Product { positions } => {
                let mut contracted = [C0, C1].into_iter();
                let labels: Vec<u8> = positions
                    .iter()
                    .map(|p| p.unwrap_or_else(|| contracted.next().expect("two contracted slots")))
                    .collect();
                let g = gauge_generator(1, labels[0])?;
                let dh = TensorExpr::h_lower(labels[2], labels[3]).deriv(labels[1])?;
                Ok(TensorExpr::eta(C0, C1)
                    .mul(&g)?
                    .mul(&dh)?
                    .truncate(self.order))
            }
        }
    }

    /// Generator placements compatible with the given free indices: `G_γ`
    /// for a single lower index, `∂_a G_b` and `∂_b G_a` for two.
    pub fn placements(&self, free: &[(u8, Pos)]) -> Vec<GaugeTerm> {
        if free.iter().any(|(_, p)| *p == Pos::Up) {
            return Vec::new();
        }
        match free {
            [(g, _)] => vec![GaugeTerm::Generator { index: *g }],
            [(a, _), (b, _)] => vec![
                GaugeTerm::Derivative { deriv: *a, index: *b },
                GaugeTerm::Derivative { deriv: *b, index: *a },
            ],
            _ => Vec::new(),
        }
    }

    /// Products `G·∂h` with two lower free indices, one per distinct
    /// expansion (up to sign).
    pub fn products(&self, free: &[(u8, Pos)]) -> Result<Vec<GaugeTerm>, TensorError> {
        if self.order < 2 {
            return Ok(Vec::new());
        }
        let [(a, Pos::Down), (b, Pos::Down)] = free else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        let mut seen: Vec<TensorExpr> = Vec::new();
        for p in 0..4 {
            for q in 0..4 {
                if p == q {
                    continue;
                }
                let mut positions = [None; 4];
                positions[p] = Some(*a);
                positions[q] = Some(*b);
                let term = GaugeTerm::Product { positions };
                let e = self.instance(term)?;
                if e.is_zero() || seen.iter().any(|s| *s == e || *s == e.scale_int(-1)) {
                    continue;
                }
                seen.push(e);
                out.push(term);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct GaugeReduction {
    pub reduced: TensorExpr,
    pub gauge_part: TensorExpr,
    /// `gauge_part = Σ coeff · term`.
    pub combination: Vec<(GaugeTerm, Coeff)>,
}

fn column_order(a: &Monomial, b: &Monomial) -> Ordering {
    let key = |m: &Monomial| (m.degree(), !m.has_trace(), std::cmp::Reverse(m.max_derivs()));
    key(a).cmp(&key(b)).then_with(|| a.cmp(b))
}

type Terms = BTreeMap<Monomial, Coeff>;

fn terms_of(e: &TensorExpr) -> Terms {
    e.terms().map(|(m, c)| (m.clone(), *c)).collect()
}

fn axpy(target: &mut Terms, f: Coeff, source: &Terms) {
    for (m, v) in source {
        *target.entry(m.clone()).or_insert_with(Coeff::zero) += f * *v;
    }
    target.retain(|_, v| !v.is_zero());
}

/// Reduced row echelon form of `rows` (each with an attached combination
/// vector) over the given column order; returns `(pivot column, row)` pairs.
fn rref(rows: &mut [(Terms, Vec<Coeff>)], columns: &[Monomial]) -> Vec<(Monomial, usize)> {
    let mut pivots = Vec::new();
    let mut used = vec![false; rows.len()];
    for col in columns {
        let Some(p) = (0..rows.len()).find(|&k| !used[k] && rows[k].0.contains_key(col)) else {
            continue;
        };
        used[p] = true;
        let inv = Coeff::one() / rows[p].0[col];
        for v in rows[p].0.values_mut() {
            *v *= inv;
        }
        for v in rows[p].1.iter_mut() {
            *v *= inv;
        }
        let (pe, pc) = rows[p].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k == p {
                continue;
            }
            if let Some(&f) = row.0.get(col) {
                axpy(&mut row.0, -f, &pe);
                for (a, b) in row.1.iter_mut().zip(&pc) {
                    *a -= f * *b;
                }
            }
        }
        pivots.push((col.clone(), p));
    }
    pivots
}

/// Linear functionals whose vanishing means "no partnerless non-null
/// monomial": for a monomial fixed by the derivative swap its coefficient,
/// otherwise the sum of the coefficients of the monomial and its partner.
fn pairing_defects(terms: &Terms) -> Terms {
    let mut out = Terms::new();
    for (m, c) in terms {
        if derivative_pair(m).is_none() || is_self_classified(m) {
            continue;
        }
        let p = swapped(m);
        let key = if p < *m { p } else { m.clone() };
        *out.entry(key).or_insert_with(Coeff::zero) += *c;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

pub fn reduce_mod_gauge(
    expr: &TensorExpr,
    ideal: &GaugeIdeal,
) -> Result<GaugeReduction, TensorError> {
    let labels = ideal.placements(expr.free());
    let gens: Vec<TensorExpr> = labels
        .iter()
        .map(|l| ideal.instance(*l))
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<(Terms, Vec<Coeff>)> = gens
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let mut combo = vec![Coeff::zero(); gens.len()];
            combo[k] = Coeff::one();
            (terms_of(g), combo)
        })
        .collect();
    let mut columns: Vec<Monomial> = rows.iter().flat_map(|r| r.0.keys().cloned()).collect();
    columns.sort_by(column_order);
    columns.dedup();
    let pivots = rref(&mut rows, &columns);

    let mut remainder = terms_of(expr);
    let mut weights = vec![Coeff::zero(); gens.len()];
    for (col, p) in &pivots {
        let c = remainder.get(col).copied().unwrap_or_else(Coeff::zero);
        if c.is_zero() {
            continue;
        }
        axpy(&mut remainder, -c, &rows[*p].0);
        for (w, t) in weights.iter_mut().zip(&rows[*p].1) {
            *w += c * *t;
        }
    }
    let mut combination: Vec<(GaugeTerm, Coeff)> = labels.into_iter().zip(weights).collect();
    let mut parts: Vec<TensorExpr> = gens;

    // quadratic pass
    let products = ideal.products(expr.free())?;
    if !products.is_empty() {
        let expansions: Vec<TensorExpr> = products
            .iter()
            .map(|t| ideal.instance(*t))
            .collect::<Result<_, _>>()?;
        let target = pairing_defects(&remainder);
        let defects: Vec<Terms> = expansions.iter().map(|e| pairing_defects(&terms_of(e))).collect();
        if let Some(x) = solve_multipliers(&defects, &target) {
            for ((t, e), w) in products.iter().zip(&expansions).zip(x) {
                if w.is_zero() {
                    continue;
                }
                axpy(&mut remainder, -w, &terms_of(e));
                combination.push((*t, w));
                parts.push(e.clone());
            }
        }
    }

    let mut reduced = TensorExpr::zero(expr.free());
    for (m, c) in remainder {
        reduced.add_term(m, c);
    }
    let mut gauge_part = TensorExpr::zero(expr.free());
    let mut kept = Vec::new();
    for ((t, w), e) in combination.into_iter().zip(&parts) {
        if !w.is_zero() {
            gauge_part = gauge_part.add(&e.scale(w))?;
            kept.push((t, w));
        }
    }
    Ok(GaugeReduction {
        reduced,
        gauge_part,
        combination: kept,
    })
}

/// Solves `Σ_k x_k · defects[k] = target` exactly; free parameters are set
/// to zero. Returns `None` when the system is inconsistent.
fn solve_multipliers(defects: &[Terms], target: &Terms) -> Option<Vec<Coeff>> {
    let n = defects.len();
    let mut keys: Vec<Monomial> = defects
        .iter()
        .flat_map(|d| d.keys().cloned())
        .chain(target.keys().cloned())
        .collect();
    keys.sort();
    keys.dedup();
    // one equation per key: coefficients in columns 0..n, right-hand side at n
    let mut eqs: Vec<Vec<Coeff>> = keys
        .iter()
        .map(|k| {
            let mut row: Vec<Coeff> = defects
                .iter()
                .map(|d| d.get(k).copied().unwrap_or_else(Coeff::zero))
                .collect();
            row.push(target.get(k).copied().unwrap_or_else(Coeff::zero));
            row
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..eqs.len()).find(|&i| !eqs[i][col].is_zero()) else {
            continue;
        };
        eqs.swap(r, p);
        let inv = Coeff::one() / eqs[r][col];
        for v in eqs[r].iter_mut() {
            *v *= inv;
        }
        let pivot = eqs[r].clone();
        for (i, row) in eqs.iter_mut().enumerate() {
            if i != r && !row[col].is_zero() {
                let f = row[col];
                for (a, b) in row.iter_mut().zip(&pivot) {
                    *a -= f * *b;
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    if eqs[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut x = vec![Coeff::zero(); n];
    for (i, &col) in pivot_cols.iter().enumerate() {
        x[col] = eqs[i][n];
    }
    Some(x)
}
