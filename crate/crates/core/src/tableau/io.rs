//! Plain-text tableau files.
//!
//! ```toml
//! [method]
//! name = "ssp-imdrk-3"
//! kind = "implicit-two-derivative"
//! r = 1.0
//! P = [[0.0, 0.0], [1.0, 0.0]]
//! diag_D = [0.0, 1.0]
//! diag_Ddot = [-0.16666666666666666, -0.3333333333333333]
//! Re = [1.0, 0.0]
//! ```
//!
//! `W` defaults to zero, `r` to 1 and `Re` to `1 - rowsum(P + W)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{MethodKind, ShuOsherTableau, TableauError};

#[derive(Debug, Error)]
pub enum TableauParseError {
    #[error("{0}")]
    Syntax(String),
    #[error("matrix {name}: row {row} has {found} entries, expected {expected}")]
    Ragged {
        name: &'static str,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error(transparent)]
    Tableau(#[from] TableauError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableauFile {
    pub method: MethodSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub name: String,
    pub kind: MethodKind,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(rename = "diag_D")]
    pub diag_d: Vec<f64>,
    #[serde(rename = "diag_Ddot")]
    pub diag_ddot: Vec<f64>,
    #[serde(rename = "Re", default, skip_serializing_if = "Option::is_none")]
    pub re: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

pub fn parse_tableau_toml(text: &str) -> Result<ShuOsherTableau, TableauParseError> {
    let file: TableauFile =
        toml::from_str(text).map_err(|e| TableauParseError::Syntax(e.to_string()))?;
    let m = file.method;
    let s = m.diag_d.len();
    let p = to_matrix("P", &m.p, s)?;
    let w = match &m.w {
        Some(rows) => to_matrix("W", rows, s)?,
        None => DMatrix::zeros(s, s),
    };
    let re = match m.re {
        Some(v) => DVector::from_vec(v),
        None => DVector::from_fn(s, |i, _| 1.0 - p.row(i).sum() - w.row(i).sum()),
    };
    Ok(ShuOsherTableau::new(
        m.name,
        m.kind,
        p,
        w,
        DVector::from_vec(m.diag_d),
        DVector::from_vec(m.diag_ddot),
        m.r,
        re,
    )?)
}

pub fn tableau_to_toml(t: &ShuOsherTableau) -> String {
    let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    };
    let file = TableauFile {
        method: MethodSection {
            name: t.name().to_string(),
            kind: t.kind(),
            r: t.r(),
            p: rows(t.p()),
            w: (t.kind() == MethodKind::ImexMultiDerivative).then(|| rows(t.w())),
            diag_d: t.d().iter().copied().collect(),
            diag_ddot: t.ddot().iter().copied().collect(),
            re: Some(t.re().iter().copied().collect()),
        },
    };
    toml::to_string(&file).expect("tableau serializes")
}

fn to_matrix(name: &'static str, rows: &[Vec<f64>], s: usize) -> Result<DMatrix<f64>, TableauParseError> {
    if rows.len() != s {
        return Err(TableauError::Dimension {
            what: format!("{name} rows"),
            expected: s,
            found: rows.len(),
        }
        .into());
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != s {
            return Err(TableauParseError::Ragged {
                name,
                row: i + 1,
                found: row.len(),
                expected: s,
            });
        }
    }
    Ok(DMatrix::from_fn(s, s, |i, j| rows[i][j]))
}
