//! Mechanical check of the wave-gauge decomposition
//! `2R_{αβ} = −□̃_g h_{αβ} + (null) + (quasi-null) + (gauge)`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use super::classify::{classify_quadratic, Classification};
use super::expr::{render_coeff, Coeff, Factor, TensorExpr, ALPHA, BETA};
use super::gauge::{reduce_mod_gauge, GaugeIdeal, GaugeReduction};
use super::metric::{contracted_pair, reduced_wave, ricci, PerturbativeMetric};
use super::TensorError;

#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub order: usize,
    /// `2R_{αβ} + □̃_g h_{αβ}`.
    pub defect: TensorExpr,
    pub reduction: GaugeReduction,
    pub classes: Classification,
    /// Reduced monomials that are not of the form `∂h·∂h`.
    pub unreduced: TensorExpr,
    /// The expected quasi-null part (empty at linear order).
    pub expected_quasi_null: TensorExpr,
    /// `2R + □̃h − null − quasi-null − other − unreduced − gauge`.
    pub residual: TensorExpr,
    pub elapsed: Duration,
}

impl LemmaReport {
    pub fn quasi_null_matches(&self) -> bool {
        self.classes.quasi_null == self.expected_quasi_null
    }

    pub fn other_empty(&self) -> bool {
        self.classes.other.is_zero() && self.unreduced.is_zero()
    }

    pub fn identity_exact(&self) -> bool {
        self.residual.is_zero()
    }

    pub fn passed(&self) -> bool {
        self.quasi_null_matches() && self.other_empty() && self.identity_exact()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let verdict = |b: bool| if b { "ok" } else { "FAILED" };
        let _ = writeln!(out, "ricci decomposition check, order {}", self.order);
        let _ = writeln!(out, "elapsed_ms = {}", self.elapsed.as_millis());
        let _ = writeln!(out, "defect monomials (2R + wave) = {}", self.defect.len());
        let _ = writeln!(out);
        let _ = writeln!(out, "[gauge]");
        let _ = writeln!(out, "monomials = {}", self.reduction.gauge_part.len());
        for (label, w) in &self.reduction.combination {
            let _ = writeln!(out, "{}  {}", render_coeff(w), label);
        }
        section(&mut out, "null", &self.classes.null);
        section(&mut out, "quasi_null", &self.classes.quasi_null);
        section(&mut out, "other", &self.classes.other);
        if !self.unreduced.is_zero() {
            section(&mut out, "unreduced", &self.unreduced);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "[checks]");
        let _ = writeln!(
            out,
            "quasi_null_matches_expected = {}",
            verdict(self.quasi_null_matches())
        );
        if !self.quasi_null_matches() {
            let diff = self
                .classes
                .quasi_null
                .sub(&self.expected_quasi_null)
                .expect("same free indices");
            for (m, c) in diff.terms() {
                let _ = writeln!(out, "  mismatch {}  {}", render_coeff(c), diff.render_monomial(m));
            }
        }
        let _ = writeln!(out, "other_empty = {}", verdict(self.other_empty()));
        let _ = writeln!(out, "identity_exact = {}", verdict(self.identity_exact()));
        for (m, c) in self.residual.terms() {
            let _ = writeln!(out, "  residual {}  {}", render_coeff(c), self.residual.render_monomial(m));
        }
        let _ = writeln!(out, "result = {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

fn section(out: &mut String, name: &str, e: &TensorExpr) {
    let _ = writeln!(out);
    let _ = writeln!(out, "[{name}]");
    let _ = writeln!(out, "monomials = {}", e.len());
    for (m, c) in e.terms() {
        let _ = writeln!(out, "{}  {}", render_coeff(c), e.render_monomial(m));
    }
}

/// `−½ η^{λλ'}η^{δδ'}∂_α h_{δλ'}∂_β h_{λδ'} + ¼ η^{δδ'}η^{λλ'}∂_β h_{δδ'}∂_α h_{λλ'}`.
pub fn expected_quasi_null() -> TensorExpr {
    let (l, lp, d, dp) = (20, 21, 22, 23);
    let first = contracted_pair(
        Coeff::new(-1, 2),
        ((d, lp), ALPHA),
        ((l, dp), BETA),
        [(l, lp), (d, dp)],
    )
    .expect("well-formed contraction");
    let second = contracted_pair(
        Coeff::new(1, 4),
        ((d, dp), BETA),
        ((l, lp), ALPHA),
        [(d, dp), (l, lp)],
    )
    .expect("well-formed contraction");
    first.add(&second).expect("same free indices")
}

fn is_first_derivative_pair(fs: &[Factor]) -> bool {
    matches!(fs, [Factor::H { derivs: a, .. }, Factor::H { derivs: b, .. }] if a.len() == 1 && b.len() == 1)
}

/// Runs the decomposition at the given order (1 or 2).
pub fn verify_lemma(order: usize) -> Result<LemmaReport, TensorError> {
    let start = Instant::now();
    let metric = PerturbativeMetric::new(order)?;
    let two_r = ricci(&metric, order)?.scale_int(2);
    let wave = reduced_wave(&metric, order, ALPHA, BETA)?;
    let defect = two_r.add(&wave)?;

    let ideal = GaugeIdeal::new(order)?;
    let reduction = reduce_mod_gauge(&defect, &ideal)?;

    let quadratic = reduction
        .reduced
        .filter(|m| is_first_derivative_pair(m.factors()));
    let unreduced = reduction
        .reduced
        .filter(|m| !is_first_derivative_pair(m.factors()));
    let classes = classify_quadratic(&quadratic)?;

    let expected_quasi_null = if order >= 2 {
        expected_quasi_null()
    } else {
        TensorExpr::zero(defect.free())
    };

    let residual = two_r
        .add(&wave)?
        .sub(&classes.total()?)?
        .sub(&unreduced)?
        .sub(&reduction.gauge_part)?;

    Ok(LemmaReport {
        order,
        defect,
        reduction,
        classes,
        unreduced,
        expected_quasi_null,
        residual,
        elapsed: start.elapsed(),
    })
}
