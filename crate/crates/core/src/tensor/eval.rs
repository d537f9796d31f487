//! Component evaluation of expressions on a second-order jet of `h`, used
//! for spot checks against explicit index sums. Arithmetic stays exact.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::expr::{Factor, Index, Pos, TensorExpr};
use super::TensorError;

/// Diagonal of the Minkowski metric, signature (−,+,+,+).
pub fn eta_diag(k: usize) -> i64 {
    if k == 0 {
        -1
    } else {
        1
    }
}

/// Values of `h_{ab}`, `∂_c h_{ab}` and `∂_c∂_d h_{ab}` at one point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub h: [[BigRational; 4]; 4],
    pub dh: [[[BigRational; 4]; 4]; 4],
    pub ddh: [[[[BigRational; 4]; 4]; 4]; 4],
}

impl Jet {
    /// Builds a jet from integer data, symmetrizing every slot pair and
    /// the derivative pair.
    pub fn from_integers(
        h: impl Fn(usize, usize) -> i64,
        dh: impl Fn(usize, usize, usize) -> i64,
        ddh: impl Fn(usize, usize, usize, usize) -> i64,
    ) -> Jet {
        let q = |n: i64| BigRational::from_integer(BigInt::from(n));
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
        let sym2 = |a: usize, b: usize| &half * q(h(a, b) + h(b, a));
        let sym3 = |c: usize, a: usize, b: usize| &half * q(dh(c, a, b) + dh(c, b, a));
        let sym4 = |c: usize, d: usize, a: usize, b: usize| {
            &quarter * q(ddh(c, d, a, b) + ddh(d, c, a, b) + ddh(c, d, b, a) + ddh(d, c, b, a))
        };
        Jet {
            h: std::array::from_fn(|a| std::array::from_fn(|b| sym2(a, b))),
            dh: std::array::from_fn(|c| {
                std::array::from_fn(|a| std::array::from_fn(|b| sym3(c, a, b)))
            }),
            ddh: std::array::from_fn(|c| {
                std::array::from_fn(|d| {
                    std::array::from_fn(|a| std::array::from_fn(|b| sym4(c, d, a, b)))
                })
            }),
        }
    }

    fn value(&self, slots: [usize; 2], derivs: &[usize]) -> Result<BigRational, TensorError> {
        let [a, b] = slots;
        match derivs {
            [] => Ok(self.h[a][b].clone()),
            [c] => Ok(self.dh[*c][a][b].clone()),
            [c, d] => Ok(self.ddh[*c][*d][a][b].clone()),
            _ => Err(TensorError::OrderOverflow {
                requested: derivs.len(),
                available: 2,
            }),
        }
    }
}

/// Evaluates `expr` with the free indices fixed to the given components and
/// returns the contribution of each degree in `h` (index = degree).
pub fn evaluate(
    expr: &TensorExpr,
    jet: &Jet,
    components: &[(u8, usize)],
) -> Result<Vec<BigRational>, TensorError> {
    let mut fixed = BTreeMap::new();
    let mut sign = 1i64;
    for &(l, p) in expr.free() {
        let k = components
            .iter()
            .find(|(x, _)| *x == l)
            .map(|(_, k)| *k)
            .ok_or_else(|| TensorError::IndexMismatch(format!("no component for label {l}")))?;
        if k >= 4 {
            return Err(TensorError::IndexMismatch(format!("component {k} out of range")));
        }
        fixed.insert(l, k);
        if p == Pos::Up {
            // raising through the diagonal background
            sign *= eta_diag(k);
        }
    }
    let mut out = vec![BigRational::zero(); expr.max_degree() + 1];
    for (m, c) in expr.terms() {
        let mut ds: Vec<u8> = Vec::new();
        for f in m.factors() {
            for i in f.slots().into_iter().chain(f.derivs().iter().copied()) {
                if let Index::Dummy(d) = i {
                    if !ds.contains(&d) {
                        ds.push(d);
                    }
                }
            }
        }
        let coeff = BigRational::new(BigInt::from(*c.numer()), BigInt::from(*c.denom()));
        let mut total = BigRational::zero();
        let n = ds.len();
        for code in 0..4usize.pow(n as u32) {
            let assign: Vec<usize> = (0..n).map(|j| (code / 4usize.pow(j as u32)) % 4).collect();
            let comp = |i: Index| match i {
                Index::Free(l) => fixed[&l],
                Index::Dummy(d) => assign[ds.iter().position(|&x| x == d).expect("dummy")],
            };
            let mut term = BigRational::one();
            let mut s: i64 = assign.iter().map(|&k| eta_diag(k)).product();
            for f in m.factors() {
                match f {
                    Factor::Eta([a, b]) => {
                        let (ka, kb) = (comp(*a), comp(*b));
                        if ka != kb {
                            term = BigRational::zero();
                            break;
                        }
                        s *= eta_diag(ka);
                    }
                    Factor::H { slots, derivs } => {
                        let d: Vec<usize> = derivs.iter().map(|&i| comp(i)).collect();
                        term *= jet.value([comp(slots[0]), comp(slots[1])], &d)?;
                    }
                }
                if term.is_zero() {
                    break;
                }
            }
            if !term.is_zero() {
                total += term * BigRational::from_integer(BigInt::from(s));
            }
        }
        out[m.degree()] += coeff * total * BigRational::from_integer(BigInt::from(sign));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::expr::{ALPHA, BETA, MU, NU};
    use super::*;

    #[test]
    fn trace_sums_with_background_signs() {
        let jet = Jet::from_integers(|a, b| if a == b { a as i64 + 1 } else { 0 }, |_, _, _| 0, |_, _, _, _| 0);
        // h^μ_μ = −h_00 + h_11 + h_22 + h_33 = −1 + 2 + 3 + 4
        let tr = TensorExpr::eta(MU, NU)
            .mul(&TensorExpr::h_lower(MU, NU))
            .unwrap();
        let v = evaluate(&tr, &jet, &[]).unwrap();
        assert_eq!(v[1], BigRational::from_integer(BigInt::from(8)));
    }

    #[test]
    fn free_upper_index_is_raised() {
        let jet = Jet::from_integers(|a, b| (a * 4 + b) as i64 + (b * 4 + a) as i64, |_, _, _| 0, |_, _, _, _| 0);
        let e = TensorExpr::h((ALPHA, Pos::Up), (BETA, Pos::Down));
        let v = evaluate(&e, &jet, &[(ALPHA, 0), (BETA, 2)]).unwrap();
        assert_eq!(v[1], -jet.h[0][2].clone());
    }
}
