use nalgebra::DVector;

use super::{ButcherTableau, MethodKind, TableauError};

/// A method passes at order `p` when every residual up to `p` is below this.
pub const ORDER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OrderResidual {
    pub order: usize,
    pub label: &'static str,
    /// Left-hand side minus right-hand side.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderConditionReport {
    pub target_order: usize,
    pub residuals: Vec<OrderResidual>,
    pub max_abs_residual: f64,
}

impl OrderConditionReport {
    pub fn passes(&self) -> bool {
        self.max_abs_residual < ORDER_TOLERANCE
    }

    pub fn residual(&self, label: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.label == label)
            .map(|r| r.residual)
    }
}

/// Evaluates the order conditions of `t` up to `target_order`
/// (1..=4 for implicit two-derivative methods, 1..=3 for IMEX methods).
pub fn check_order_conditions(
    t: &ButcherTableau,
    target_order: usize,
) -> Result<OrderConditionReport, TableauError> {
    let kind = t.kind();
    if target_order == 0 || target_order > kind.max_order() {
        return Err(TableauError::UnsupportedOrder {
            order: target_order,
            kind: kind.as_str(),
            max: kind.max_order(),
        });
    }
    let all = match kind {
        MethodKind::ImplicitTwoDerivative => implicit_conditions(t),
        MethodKind::ImexMultiDerivative => imex_conditions(t),
    };
    let residuals: Vec<_> = all.into_iter().filter(|r| r.order <= target_order).collect();
    let max_abs_residual = residuals
        .iter()
        .map(|r| r.residual.abs())
        .fold(0.0, f64::max);
    Ok(OrderConditionReport {
        target_order,
        residuals,
        max_abs_residual,
    })
}

fn cond(order: usize, label: &'static str, lhs: f64, rhs: f64) -> OrderResidual {
    OrderResidual {
        order,
        label,
        residual: lhs - rhs,
    }
}

fn implicit_conditions(t: &ButcherTableau) -> Vec<OrderResidual> {
    let (a, adot) = (t.a(), t.adot());
    let (b, bd) = (t.b(), t.bdot());
    let (c, cd) = (t.c(), t.cdot());
    let e = DVector::from_element(t.stages(), 1.0);
    let c2 = c.component_mul(c);
    let c3 = c2.component_mul(c);
    let ac = a * c;
    let acd = a * cd;

    vec![
        cond(1, "b'e = 1", b.dot(&e), 1.0),
        cond(2, "b'c + ḃ'e = 1/2", b.dot(c) + bd.dot(&e), 0.5),
        cond(3, "b'c² + 2ḃ'c = 1/3", b.dot(&c2) + 2.0 * bd.dot(c), 1.0 / 3.0),
        cond(
            3,
            "b'Ac + b'ċ + ḃ'c = 1/6",
            b.dot(&ac) + b.dot(cd) + bd.dot(c),
            1.0 / 6.0,
        ),
        cond(4, "b'c³ + 3ḃ'c² = 1/4", b.dot(&c3) + 3.0 * bd.dot(&c2), 0.25),
        cond(
            4,
            "b'(c·Ac) + b'(c·ċ) + ḃ'c² + ḃ'Ac + ḃ'ċ = 1/8",
            b.dot(&c.component_mul(&ac)) + b.dot(&c.component_mul(cd)) + bd.dot(&c2) + bd.dot(&ac) + bd.dot(cd),
            0.125,
        ),
        cond(
            4,
            "b'Ac² + 2b'Ȧc + ḃ'c² = 1/12",
            b.dot(&(a * &c2)) + 2.0 * b.dot(&(adot * c)) + bd.dot(&c2),
            1.0 / 12.0,
        ),
        cond(
            4,
            "b'A²c + b'Aċ + b'Ȧc + ḃ'Ac + ḃ'ċ = 1/24",
            b.dot(&(a * &ac)) + b.dot(&acd) + b.dot(&(adot * c)) + bd.dot(&ac) + bd.dot(cd),
            1.0 / 24.0,
        ),
    ]
}

fn imex_conditions(t: &ButcherTableau) -> Vec<OrderResidual> {
    let (ah, a) = (t.ahat(), t.a());
    let (bh, b, bd) = (t.bhat(), t.b(), t.bdot());
    let (ch, c, cd) = (t.chat(), t.c(), t.cdot());
    let e = DVector::from_element(t.stages(), 1.0);
    let third = 1.0 / 3.0;
    let sixth = 1.0 / 6.0;

    vec![
        cond(1, "b'e = 1", b.dot(&e), 1.0),
        cond(1, "b̂'e = 1", bh.dot(&e), 1.0),
        cond(2, "b'c + ḃ'e = 1/2", b.dot(c) + bd.dot(&e), 0.5),
        cond(2, "b'ĉ = 1/2", b.dot(ch), 0.5),
        cond(2, "b̂'c = 1/2", bh.dot(c), 0.5),
        cond(2, "b̂'ĉ = 1/2", bh.dot(ch), 0.5),
        cond(3, "b'Ac + ḃ'c + b'ċ = 1/6", b.dot(&(a * c)) + bd.dot(c) + b.dot(cd), sixth),
        cond(3, "b'Aĉ + ḃ'ĉ = 1/6", b.dot(&(a * ch)) + bd.dot(ch), sixth),
        cond(3, "b'Âc = 1/6", b.dot(&(ah * c)), sixth),
        cond(3, "b'Âĉ = 1/6", b.dot(&(ah * ch)), sixth),
        cond(3, "b̂'Ac + b̂'ċ = 1/6", bh.dot(&(a * c)) + bh.dot(cd), sixth),
        cond(3, "b̂'Aĉ = 1/6", bh.dot(&(a * ch)), sixth),
        cond(3, "b̂'Âc = 1/6", bh.dot(&(ah * c)), sixth),
        cond(3, "b̂'Âĉ = 1/6", bh.dot(&(ah * ch)), sixth),
        cond(3, "b'(c·c) + 2ḃ'c = 1/3", b.dot(&c.component_mul(c)) + 2.0 * bd.dot(c), third),
        cond(3, "b'(c·ĉ) + ḃ'ĉ = 1/3", b.dot(&c.component_mul(ch)) + bd.dot(ch), third),
        cond(3, "b'(ĉ·ĉ) = 1/3", b.dot(&ch.component_mul(ch)), third),
        cond(3, "b̂'(c·c) = 1/3", bh.dot(&c.component_mul(c)), third),
        cond(3, "b̂'(c·ĉ) = 1/3", bh.dot(&c.component_mul(ch)), third),
        cond(3, "b̂'(ĉ·ĉ) = 1/3", bh.dot(&ch.component_mul(ch)), third),
    ]
}
