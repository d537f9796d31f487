//! Exact perturbative tensor calculus around Minkowski space.

pub mod classify;
pub mod eval;
pub mod expr;
pub mod gauge;
pub mod lemma;
pub mod metric;

pub use classify::{classify_quadratic, Classification};
pub use expr::{Coeff, Pos, TensorExpr};
pub use gauge::{reduce_mod_gauge, GaugeIdeal, GaugeReduction};
pub use lemma::{verify_lemma, LemmaReport};
pub use metric::{christoffel, reduced_wave, ricci, PerturbativeMetric};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TensorError {
    #[error("index mismatch: {0}")]
    IndexMismatch(String),
    #[error("requested order {requested} exceeds available order {available}")]
    OrderOverflow { requested: usize, available: usize },
    #[error("expression is not quadratic in first derivatives: {0}")]
    NonQuadratic(String),
}
