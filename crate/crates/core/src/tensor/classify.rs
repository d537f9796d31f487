//! Partition of quadratic `∂h·∂h` expressions into null, quasi-null and
//! remaining terms.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::expr::{Coeff, Factor, Index, Monomial, TensorExpr};
use super::TensorError;

#[derive(Clone, Debug)]
pub struct Classification {
    pub null: TensorExpr,
    pub quasi_null: TensorExpr,
    pub other: TensorExpr,
}

impl Classification {
    pub fn total(&self) -> Result<TensorExpr, TensorError> {
        self.null.add(&self.quasi_null)?.add(&self.other)
    }
}

pub(crate) fn derivative_pair(m: &Monomial) -> Option<(Index, Index)> {
    match m.factors() {
        [Factor::H { derivs: d1, .. }, Factor::H { derivs: d2, .. }]
            if d1.len() == 1 && d2.len() == 1 =>
        {
            Some((d1[0], d2[0]))
        }
        _ => None,
    }
}

/// Exchanges the derivative indices of the two factors of a checked
/// quadratic monomial.
pub(crate) fn swapped(m: &Monomial) -> Monomial {
    let f = m.factors();
    let (Factor::H { slots: s1, derivs: d1 }, Factor::H { slots: s2, derivs: d2 }) =
        (&f[0], &f[1])
    else {
        unreachable!("checked quadratic shape")
    };
    let fs = vec![
        Factor::H {
            slots: *s1,
            derivs: d2.clone(),
        },
        Factor::H {
            slots: *s2,
            derivs: d1.clone(),
        },
    ];
    Monomial::canonical(fs).0
}

/// True when the monomial needs no partner to count as null or quasi-null:
/// its derivative indices are contracted together or are distinct free
/// indices.
pub(crate) fn is_self_classified(m: &Monomial) -> bool {
    match derivative_pair(m) {
        Some((Index::Dummy(a), Index::Dummy(b))) => a == b,
        Some((Index::Free(a), Index::Free(b))) => a != b,
        _ => false,
    }
}

/// Assigns each monomial of a purely quadratic expression to a class.
///
/// Null: the two derivative indices are contracted with each other, or the
/// monomial cancels against its derivative-swapped partner with opposite
/// sign (matched greedily in canonical order). Quasi-null: both derivative
/// indices are free. Everything else lands in `other`.
pub fn classify_quadratic(expr: &TensorExpr) -> Result<Classification, TensorError> {
    for (m, _) in expr.terms() {
        if derivative_pair(m).is_none() {
            return Err(TensorError::NonQuadratic(expr.render_monomial(m)));
        }
    }
    let free = expr.free();
    let mut null = TensorExpr::zero(free);
    let mut quasi_null = TensorExpr::zero(free);
    let mut other = TensorExpr::zero(free);

    let mut remaining: BTreeMap<Monomial, Coeff> =
        expr.terms().map(|(m, c)| (m.clone(), *c)).collect();

    // Q0 pattern
    let keys: Vec<Monomial> = remaining.keys().cloned().collect();
    for m in &keys {
        let (a, b) = derivative_pair(m).expect("checked");
        if a == b && matches!(a, Index::Dummy(_)) {
            let c = remaining.remove(m).expect("present");
            null.add_term(m.clone(), c);
        }
    }

    // antisymmetric pairs ∂_δ u ∂_λ v − ∂_λ u ∂_δ v
    let keys: Vec<Monomial> = remaining.keys().cloned().collect();
    for m in &keys {
        let ca = remaining.get(m).copied().unwrap_or_else(Coeff::zero);
        if ca.is_zero() {
            continue;
        }
        let partner = swapped(m);
        if partner == *m {
            continue;
        }
        let cb = remaining.get(&partner).copied().unwrap_or_else(Coeff::zero);
        if cb.is_zero() || cb.signum() == ca.signum() {
            continue;
        }
        let amount = if ca.abs() < cb.abs() { ca.abs() } else { cb.abs() };
        let take_a = amount * ca.signum();
        let take_b = amount * cb.signum();
        null.add_term(m.clone(), take_a);
        null.add_term(partner.clone(), take_b);
        *remaining.get_mut(m).expect("present") -= take_a;
        *remaining.get_mut(&partner).expect("present") -= take_b;
    }

    for (m, c) in remaining {
        if c.is_zero() {
            continue;
        }
        let (a, b) = derivative_pair(&m).expect("checked");
        if matches!((a, b), (Index::Free(x), Index::Free(y)) if x != y) {
            quasi_null.add_term(m, c);
        } else {
            other.add_term(m, c);
        }
    }
    Ok(Classification {
        null,
        quasi_null,
        other,
    })
}
