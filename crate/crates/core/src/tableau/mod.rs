//! Method coefficients.
//!
//! A method is stored in the Shu-Osher form
//!
//! ```text
//! U = R e u^n + P U + W (U + dt/r F(U)) + dt D G(U) + dt^2 Ddot Gdot(U)
//! ```
//!
//! with `P`, `W` strictly lower triangular, `D`, `Ddot` diagonal and
//! `R = I - P - W`. The Butcher form used for order conditions is always
//! derived from it by [`ShuOsherTableau::to_butcher`]. Comparator methods
//! that have no Shu-Osher form with a diagonal implicit part are stored
//! directly as a [`ButcherTableau`] (see [`Method`]).

mod builtin;
mod conditions;
mod io;

pub use builtin::{builtin_methods, lookup_builtin, published_butcher, BuiltinMethod, PublishedButcher};
pub use conditions::{check_order_conditions, OrderConditionReport, OrderResidual, ORDER_TOLERANCE};
pub use io::{parse_tableau_toml, tableau_to_toml, MethodSection, TableauFile, TableauParseError};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking the stored `Re` against `1 - rowsum(P + W)`.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    ImplicitTwoDerivative,
    ImexMultiDerivative,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::ImplicitTwoDerivative => "implicit-two-derivative",
            MethodKind::ImexMultiDerivative => "imex-multi-derivative",
        }
    }

    /// Highest order for which conditions are tabulated.
    pub fn max_order(self) -> usize {
        match self {
            MethodKind::ImplicitTwoDerivative => 4,
            MethodKind::ImexMultiDerivative => 3,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TableauError {
    #[error("{what}: expected {expected} entries, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{matrix}[{row}][{col}] = {value} must be zero (matrix is strictly lower triangular)")]
    NotStrictlyLower {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("{matrix}[{row}][{col}] = {value} must be zero (matrix is lower triangular)")]
    NotLower {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("implicit-two-derivative method has nonzero W[{row}][{col}] = {value}")]
    ExplicitWeightsInImplicit { row: usize, col: usize, value: f64 },
    #[error("SSP coefficient r = {0} must be positive and finite")]
    BadCoefficient(f64),
    #[error("Re[{row}] = {stored} disagrees with 1 - rowsum(P + W) = {expected}")]
    RowSum {
        row: usize,
        stored: f64,
        expected: f64,
    },
    #[error("stage count must be at least 1")]
    NoStages,
    #[error("order {order} conditions are not available for {kind} methods (maximum {max})")]
    UnsupportedOrder {
        order: usize,
        kind: &'static str,
        max: usize,
    },
    #[error("obstruction bound requires {0}")]
    ObstructionHypothesis(String),
}

/// Shu-Osher coefficients of an implicit two-derivative or IMEX
/// multi-derivative method. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuOsherTableau {
    name: String,
    kind: MethodKind,
    p: DMatrix<f64>,
    w: DMatrix<f64>,
    d: DVector<f64>,
    ddot: DVector<f64>,
    r: f64,
    re: DVector<f64>,
}

impl ShuOsherTableau {
    /// Builds a tableau from its coefficients, checking shapes, triangularity
    /// and the row-sum identity `Re = 1 - rowsum(P + W)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        kind: MethodKind,
        p: DMatrix<f64>,
        w: DMatrix<f64>,
        d: DVector<f64>,
        ddot: DVector<f64>,
        r: f64,
        re: DVector<f64>,
    ) -> Result<Self, TableauError> {
        let s = d.len();
        if s == 0 {
            return Err(TableauError::NoStages);
        }
        check_square("P", &p, s)?;
        check_square("W", &w, s)?;
        check_len("diag_Ddot", ddot.len(), s)?;
        check_len("Re", re.len(), s)?;
        strictly_lower("P", &p)?;
        strictly_lower("W", &w)?;
        if kind == MethodKind::ImplicitTwoDerivative {
            if let Some((row, col, value)) = first_nonzero(&w) {
                return Err(TableauError::ExplicitWeightsInImplicit { row, col, value });
            }
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(TableauError::BadCoefficient(r));
        }
        for i in 0..s {
            let expected = 1.0 - (p.row(i).sum() + w.row(i).sum());
            if (expected - re[i]).abs() > ROW_SUM_TOLERANCE {
                return Err(TableauError::RowSum {
                    row: i + 1,
                    stored: re[i],
                    expected,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            kind,
            p,
            w,
            d,
            ddot,
            r,
            re,
        })
    }

    /// Implicit two-derivative method (`W = 0`, `r = 1`) with `Re` computed
    /// from `P`.
    pub fn implicit(
        name: impl Into<String>,
        p: DMatrix<f64>,
        d: DVector<f64>,
        ddot: DVector<f64>,
    ) -> Result<Self, TableauError> {
        let s = d.len();
        let re = DVector::from_fn(s, |i, _| {
            if i < p.nrows() {
                1.0 - p.row(i).sum()
            } else {
                1.0
            }
        });
        Self::new(name, MethodKind::ImplicitTwoDerivative, p, DMatrix::zeros(s, s), d, ddot, 1.0, re)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn kind(&self) -> MethodKind {
        self.kind
    }
    pub fn stages(&self) -> usize {
        self.d.len()
    }
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }
    pub fn ddot(&self) -> &DVector<f64> {
        &self.ddot
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn re(&self) -> &DVector<f64> {
        &self.re
    }

    /// `R = I - P - W`.
    pub fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::identity(self.stages(), self.stages()) - &self.p - &self.w
    }

    /// Converts to Butcher form: `Ahat = R^-1 W / r`, `A = R^-1 D`,
    /// `Adot = R^-1 Ddot`.
    pub fn to_butcher(&self) -> ButcherTableau {
        let s = self.stages();
        let rm = self.r_matrix();
        let ahat = solve_unit_lower(&rm, &self.w) / self.r;
        let a = solve_unit_lower(&rm, &DMatrix::from_diagonal(&self.d));
        let adot = solve_unit_lower(&rm, &DMatrix::from_diagonal(&self.ddot));
        debug_assert_eq!(a.nrows(), s);
        ButcherTableau::from_parts(self.name.clone(), self.kind, ahat, a, adot)
    }

    /// Checks the componentwise sign conditions `Re >= 0`, `P >= 0`,
    /// `W >= 0`, `D >= 0`, `Ddot <= 0` on the stored values, without slack.
    pub fn validate_ssp_signs(&self) -> SspValidationReport {
        let s = self.stages();
        let mut violations = Vec::new();
        for i in 0..s {
            if !(self.re[i] >= 0.0) {
                violations.push(SignViolation::new("Re", i, 0, self.re[i]));
            }
        }
        for (name, m) in [("P", &self.p), ("W", &self.w)] {
            for i in 0..s {
                for j in 0..s {
                    if !(m[(i, j)] >= 0.0) {
                        violations.push(SignViolation::new(name, i, j, m[(i, j)]));
                    }
                }
            }
        }
        for i in 0..s {
            if !(self.d[i] >= 0.0) {
                violations.push(SignViolation::new("D", i, i, self.d[i]));
            }
        }
        for i in 0..s {
            if !(self.ddot[i] <= 0.0) {
                violations.push(SignViolation::new("Ddot", i, i, self.ddot[i]));
            }
        }
        SspValidationReport::from_violations(violations)
    }

    /// `true` when every stage carries an implicit `G` or `Gdot` term,
    /// i.e. `d_ii + |ddot_ii| > 0` for all stages.
    pub fn every_stage_implicit(&self) -> bool {
        self.d
            .iter()
            .zip(self.ddot.iter())
            .all(|(d, dd)| d + dd.abs() > 0.0)
    }

    /// Appendix-style diagnostic for methods with nonnegative `P` and `D`:
    /// returns `b'e - b'c` and the bound `k_s` from the recursion
    /// `k_1 = 1/4`, `k_i = 1/(4(1 - k_{i-1}))`.
    pub fn obstruction_bound(&self) -> Result<ObstructionBound, TableauError> {
        if first_nonzero(&self.w).is_some() {
            return Err(TableauError::ObstructionHypothesis("W = 0".into()));
        }
        if self.p.iter().any(|&x| x < 0.0) {
            return Err(TableauError::ObstructionHypothesis("P >= 0".into()));
        }
        if self.d.iter().any(|&x| x < 0.0) {
            return Err(TableauError::ObstructionHypothesis("D >= 0".into()));
        }
        if self.re.iter().any(|&x| x < 0.0) {
            return Err(TableauError::ObstructionHypothesis("Re >= 0".into()));
        }
        let bt = self.to_butcher();
        let b = bt.b();
        let bte_minus_btc = b.sum() - b.dot(bt.c());
        Ok(ObstructionBound {
            bte_minus_btc,
            ks: obstruction_k(self.stages()),
        })
    }
}

/// `k_s` of the recursion `k_1 = 1/4`, `k_i = 1/(4(1 - k_{i-1}))`.
pub fn obstruction_k(s: usize) -> f64 {
    let mut k = 0.25;
    for _ in 1..s {
        k = 1.0 / (4.0 * (1.0 - k));
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstructionBound {
    pub bte_minus_btc: f64,
    pub ks: f64,
}

impl ObstructionBound {
    pub fn holds(&self) -> bool {
        self.bte_minus_btc <= self.ks && self.ks < 0.5
    }
}

/// A sign-condition failure. Indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SignViolation {
    pub matrix: &'static str,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl SignViolation {
    fn new(matrix: &'static str, i: usize, j: usize, value: f64) -> Self {
        Self {
            matrix,
            row: i + 1,
            col: j + 1,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SspValidationReport {
    pub passes: bool,
    pub violations: Vec<SignViolation>,
}

impl SspValidationReport {
    pub fn from_violations(violations: Vec<SignViolation>) -> Self {
        Self {
            passes: violations.is_empty(),
            violations,
        }
    }
}

/// Butcher coefficients: `U = e u^n + dt Ahat F(U) + dt A G(U) + dt^2 Adot Gdot(U)`,
/// `u^{n+1} = u^{(s)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    name: String,
    kind: MethodKind,
    ahat: DMatrix<f64>,
    a: DMatrix<f64>,
    adot: DMatrix<f64>,
    bhat: DVector<f64>,
    b: DVector<f64>,
    bdot: DVector<f64>,
    chat: DVector<f64>,
    c: DVector<f64>,
    cdot: DVector<f64>,
}

impl ButcherTableau {
    /// Validated constructor: `Ahat` strictly lower, `A` and `Adot` lower
    /// triangular, all `s x s`.
    pub fn new(
        name: impl Into<String>,
        kind: MethodKind,
        ahat: DMatrix<f64>,
        a: DMatrix<f64>,
        adot: DMatrix<f64>,
    ) -> Result<Self, TableauError> {
        let s = a.nrows();
        if s == 0 {
            return Err(TableauError::NoStages);
        }
        check_square("A", &a, s)?;
        check_square("Ahat", &ahat, s)?;
        check_square("Adot", &adot, s)?;
        strictly_lower("Ahat", &ahat)?;
        lower("A", &a)?;
        lower("Adot", &adot)?;
        Ok(Self::from_parts(name.into(), kind, ahat, a, adot))
    }

    fn from_parts(
        name: String,
        kind: MethodKind,
        ahat: DMatrix<f64>,
        a: DMatrix<f64>,
        adot: DMatrix<f64>,
    ) -> Self {
        let s = a.nrows();
        let last = |m: &DMatrix<f64>| m.row(s - 1).transpose();
        let sums = |m: &DMatrix<f64>| DVector::from_fn(s, |i, _| m.row(i).sum());
        Self {
            bhat: last(&ahat),
            b: last(&a),
            bdot: last(&adot),
            chat: sums(&ahat),
            c: sums(&a),
            cdot: sums(&adot),
            name,
            kind,
            ahat,
            a,
            adot,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn kind(&self) -> MethodKind {
        self.kind
    }
    pub fn stages(&self) -> usize {
        self.a.nrows()
    }
    pub fn ahat(&self) -> &DMatrix<f64> {
        &self.ahat
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn adot(&self) -> &DMatrix<f64> {
        &self.adot
    }
    pub fn bhat(&self) -> &DVector<f64> {
        &self.bhat
    }
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
    pub fn bdot(&self) -> &DVector<f64> {
        &self.bdot
    }
    pub fn chat(&self) -> &DVector<f64> {
        &self.chat
    }
    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }
    pub fn cdot(&self) -> &DVector<f64> {
        &self.cdot
    }
}

/// A time-stepping method: either an SSP-revealing Shu-Osher tableau or a
/// Butcher-only comparator.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    ShuOsher(ShuOsherTableau),
    Butcher(ButcherTableau),
}

impl Method {
    pub fn name(&self) -> &str {
        match self {
            Method::ShuOsher(t) => t.name(),
            Method::Butcher(t) => t.name(),
        }
    }

    pub fn kind(&self) -> MethodKind {
        match self {
            Method::ShuOsher(t) => t.kind(),
            Method::Butcher(t) => t.kind(),
        }
    }

    pub fn stages(&self) -> usize {
        match self {
            Method::ShuOsher(t) => t.stages(),
            Method::Butcher(t) => t.stages(),
        }
    }

    pub fn butcher(&self) -> ButcherTableau {
        match self {
            Method::ShuOsher(t) => t.to_butcher(),
            Method::Butcher(t) => t.clone(),
        }
    }

    pub fn shu_osher(&self) -> Option<&ShuOsherTableau> {
        match self {
            Method::ShuOsher(t) => Some(t),
            Method::Butcher(_) => None,
        }
    }

    /// SSP coefficient of the explicit part; `None` for Butcher-only methods.
    pub fn ssp_coefficient(&self) -> Option<f64> {
        self.shu_osher().map(ShuOsherTableau::r)
    }
}

/// Solves `L X = B` for unit lower-triangular `L` by forward substitution.
fn solve_unit_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for col in 0..b.ncols() {
        for i in 0..n {
            let mut acc = b[(i, col)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc;
        }
    }
    x
}

fn check_len(what: &str, found: usize, expected: usize) -> Result<(), TableauError> {
    if found == expected {
        Ok(())
    } else {
        Err(TableauError::Dimension {
            what: what.to_string(),
            expected,
            found,
        })
    }
}

fn check_square(what: &str, m: &DMatrix<f64>, s: usize) -> Result<(), TableauError> {
    check_len(&format!("{what} rows"), m.nrows(), s)?;
    check_len(&format!("{what} columns"), m.ncols(), s)
}

fn strictly_lower(name: &'static str, m: &DMatrix<f64>) -> Result<(), TableauError> {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if m[(i, j)] != 0.0 {
                return Err(TableauError::NotStrictlyLower {
                    matrix: name,
                    row: i + 1,
                    col: j + 1,
                    value: m[(i, j)],
                });
            }
        }
    }
    Ok(())
}

fn lower(name: &'static str, m: &DMatrix<f64>) -> Result<(), TableauError> {
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if m[(i, j)] != 0.0 {
                return Err(TableauError::NotLower {
                    matrix: name,
                    row: i + 1,
                    col: j + 1,
                    value: m[(i, j)],
                });
            }
        }
    }
    Ok(())
}

fn first_nonzero(m: &DMatrix<f64>) -> Option<(usize, usize, f64)> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                return Some((i + 1, j + 1, m[(i, j)]));
            }
        }
    }
    None
}
