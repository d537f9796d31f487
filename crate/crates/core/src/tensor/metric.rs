//! Perturbative expansions of the inverse metric, Christoffel symbols, the
//! Ricci tensor, the reduced wave operator and the wave-gauge generators.

use super::expr::{Coeff, Pos, TensorExpr, ALPHA, BETA};
use super::TensorError;

// Internal contraction labels; callers use labels below 20.
const T0: u8 = 20;
const T1: u8 = 21;
const T2: u8 = 22;
const T3: u8 = 23;
const T4: u8 = 24;
const T5: u8 = 25;

/// `g_{αβ} = η_{αβ} + h_{αβ}` truncated at a fixed order in `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerturbativeMetric {
    order: usize,
}

impl PerturbativeMetric {
    pub const MAX_ORDER: usize = 2;

    /// Order 0 is the flat metric; 1 and 2 are the supported expansions.
    pub fn new(order: usize) -> Result<Self, TensorError> {
        if order > Self::MAX_ORDER {
            return Err(TensorError::OrderOverflow {
                requested: order,
                available: Self::MAX_ORDER,
            });
        }
        Ok(PerturbativeMetric { order })
    }

    pub fn flat() -> Self {
        PerturbativeMetric { order: 0 }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn check(&self, order: usize) -> Result<(), TensorError> {
        if order > self.order {
            return Err(TensorError::OrderOverflow {
                requested: order,
                available: self.order,
            });
        }
        Ok(())
    }

    /// `g^{ab} = η^{ab} − h^{ab} + h^{aλ}h_λ^b − …` truncated at the metric order.
    pub fn inverse(&self, a: u8, b: u8) -> TensorExpr {
        let up = |l| (l, Pos::Up);
        let mut g = TensorExpr::eta(a, b);
        let linear = TensorExpr::h(up(a), up(b));
        let quadratic = TensorExpr::h(up(a), up(T5))
            .mul(&TensorExpr::h((T5, Pos::Down), up(b)))
            .expect("valid contraction");
        g = g.sub(&linear).expect("same indices");
        g = g.add(&quadratic).expect("same indices");
        g.truncate(self.order)
    }

    /// `∂_c g_{ab} = ∂_c h_{ab}`.
    pub fn d_lower(&self, a: u8, b: u8, c: u8) -> TensorExpr {
        TensorExpr::h_lower(a, b)
            .deriv(c)
            .expect("fresh derivative label")
            .truncate(self.order)
    }
}

/// `Γ^λ_{αβ} = ½ g^{λλ'}(∂_α g_{βλ'} + ∂_β g_{αλ'} − ∂_{λ'} g_{αβ})` with the
/// caller's labels `(λ; α, β)`, truncated at `order`.
pub fn christoffel(
    metric: &PerturbativeMetric,
    order: usize,
    (lambda, alpha, beta): (u8, u8, u8),
) -> Result<TensorExpr, TensorError> {
    metric.check(order)?;
    let m = PerturbativeMetric { order };
    let bracket = m
        .d_lower(beta, T4, alpha)
        .add(&m.d_lower(alpha, T4, beta))?
        .sub(&m.d_lower(alpha, beta, T4))?;
    let half = Coeff::new(1, 2);
    Ok(m.inverse(lambda, T4)
        .mul(&bracket)?
        .scale(half)
        .truncate(order))
}

/// `R_{αβ} = ∂_λΓ^λ_{αβ} − ∂_αΓ^λ_{βλ} + Γ^λ_{αβ}Γ^δ_{λδ} − Γ^λ_{αδ}Γ^δ_{βλ}`
/// with free indices `α, β` (both down).
pub fn ricci(metric: &PerturbativeMetric, order: usize) -> Result<TensorExpr, TensorError> {
    metric.check(order)?;
    let gamma = |l, a, b| christoffel(metric, order, (l, a, b));

    let div = gamma(T0, ALPHA, BETA)?.deriv(T2)?.contract(T0, T2)?;
    let trace_grad = gamma(T0, BETA, T2)?.contract(T0, T2)?.deriv(ALPHA)?;
    let trace = gamma(T1, T0, T3)?.contract(T1, T3)?;
    let quad_a = gamma(T0, ALPHA, BETA)?.mul(&trace)?;
    let quad_b = gamma(T0, ALPHA, T1)?.mul(&gamma(T1, BETA, T0)?)?;

    Ok(div
        .sub(&trace_grad)?
        .add(&quad_a)?
        .sub(&quad_b)?
        .truncate(order))
}

/// Reduced wave operator `□̃_g h_{ab} = g^{α'β'}∂_{α'}∂_{β'} h_{ab}`.
pub fn reduced_wave(
    metric: &PerturbativeMetric,
    order: usize,
    a: u8,
    b: u8,
) -> Result<TensorExpr, TensorError> {
    metric.check(order)?;
    let m = PerturbativeMetric { order };
    let ddh = TensorExpr::h_lower(a, b).deriv(T0)?.deriv(T1)?;
    Ok(m.inverse(T0, T1).mul(&ddh)?.truncate(order))
}

/// Flat d'Alembertian `η^{μν}∂_μ∂_ν h_{ab}`.
pub fn flat_wave(a: u8, b: u8) -> TensorExpr {
    let ddh = TensorExpr::h_lower(a, b)
        .deriv(T0)
        .and_then(|e| e.deriv(T1))
        .expect("fresh labels");
    TensorExpr::eta(T0, T1).mul(&ddh).expect("valid contraction")
}

/// Wave-gauge generator `G_γ = 2 g^{αβ}∂_β g_{αγ} − g^{αβ}∂_γ g_{αβ}`.
pub fn gauge_generator(order: usize, gamma: u8) -> Result<TensorExpr, TensorError> {
    let m = PerturbativeMetric::new(order)?;
    let inv = m.inverse(T0, T1);
    let first = inv.mul(&m.d_lower(T0, gamma, T1))?.scale_int(2);
    let second = inv.mul(&m.d_lower(T0, T1, gamma))?;
    Ok(first.sub(&second)?.truncate(order))
}

/// Builds `coeff · η^{a a'} η^{b b'} ∂_{d1} h_{x1 y1} ∂_{d2} h_{x2 y2}` from a
/// literal index pattern, used to state reference displays verbatim.
pub fn contracted_pair(
    coeff: Coeff,
    first: ((u8, u8), u8),
    second: ((u8, u8), u8),
    contractions: [(u8, u8); 2],
) -> Result<TensorExpr, TensorError> {
    let ((x1, y1), d1) = first;
    let ((x2, y2), d2) = second;
    let f1 = TensorExpr::h_lower(x1, y1).deriv(d1)?;
    let f2 = TensorExpr::h_lower(x2, y2).deriv(d2)?;
    let etas = TensorExpr::eta(contractions[0].0, contractions[0].1)
        .mul(&TensorExpr::eta(contractions[1].0, contractions[1].1))?;
    Ok(etas.mul(&f1.mul(&f2)?)?.scale(coeff))
}

#[cfg(test)]
mod tests {
    use super::super::expr::{LAMBDA, MU};
    use super::*;

    #[test]
    fn flat_metric_has_vanishing_connection_and_curvature() {
        let flat = PerturbativeMetric::flat();
        assert!(christoffel(&flat, 0, (LAMBDA, ALPHA, BETA)).unwrap().is_zero());
        assert!(ricci(&flat, 0).unwrap().is_zero());
    }

    #[test]
    fn order_overflow_is_reported() {
        let m = PerturbativeMetric::new(1).unwrap();
        assert!(matches!(
            ricci(&m, 2),
            Err(TensorError::OrderOverflow { requested: 2, available: 1 })
        ));
        assert!(PerturbativeMetric::new(3).is_err());
    }

    #[test]
    fn linear_christoffel_matches_substituted_formula() {
        let m = PerturbativeMetric::new(1).unwrap();
        let g = christoffel(&m, 1, (LAMBDA, ALPHA, BETA)).unwrap();
        // ½ η^{λμ}(∂_α h_{βμ} + ∂_β h_{αμ} − ∂_μ h_{αβ})
        let b = TensorExpr::h_lower(BETA, MU).deriv(ALPHA).unwrap();
        let c = TensorExpr::h_lower(ALPHA, MU).deriv(BETA).unwrap();
        let d = TensorExpr::h_lower(ALPHA, BETA).deriv(MU).unwrap();
        let expected = TensorExpr::eta(LAMBDA, MU)
            .mul(&b.add(&c).unwrap().sub(&d).unwrap())
            .unwrap()
            .scale(Coeff::new(1, 2));
        assert_eq!(g, expected);
    }

    #[test]
    fn second_order_christoffel_carries_minus_half_inverse_perturbation() {
        let m = PerturbativeMetric::new(2).unwrap();
        let g2 = christoffel(&m, 2, (LAMBDA, ALPHA, BETA)).unwrap().degree_part(2);
        // −½ h^{λμ}(∂_α h_{βμ} + ∂_β h_{αμ} − ∂_μ h_{αβ}), expanded by hand
        let hup = TensorExpr::h((LAMBDA, Pos::Up), (MU, Pos::Up));
        let b = TensorExpr::h_lower(BETA, MU).deriv(ALPHA).unwrap();
        let c = TensorExpr::h_lower(ALPHA, MU).deriv(BETA).unwrap();
        let d = TensorExpr::h_lower(ALPHA, BETA).deriv(MU).unwrap();
        let golden = hup.mul(&b.add(&c).unwrap().sub(&d).unwrap()).unwrap().scale(Coeff::new(-1, 2));
        assert_eq!(g2, golden);
        assert_eq!(g2.len(), 3);
        for (_, c) in g2.terms() {
            assert!(*c == Coeff::new(-1, 2) || *c == Coeff::new(1, 2));
        }
    }

    #[test]
    fn ricci_is_symmetric_at_each_order() {
        for order in 1..=2 {
            let m = PerturbativeMetric::new(order).unwrap();
            let r = ricci(&m, order).unwrap();
            let swapped = r.swap_free(ALPHA, BETA).unwrap();
            assert!(r.sub(&swapped).unwrap().is_zero(), "order {order}");
        }
    }
}
