use std::fmt::Write as _;
use std::path::Path;

use ssp_mdrk::tableau::{builtin_methods, check_order_conditions, Method, ORDER_TOLERANCE};

use crate::config::load_tableau;
use crate::error::CliError;

/// Outcome of checking one method.
pub struct MethodReport {
    pub text: String,
    /// `None` for methods without a Shu-Osher form.
    pub signs_pass: Option<bool>,
    pub satisfied_order: usize,
}

/// Sign report and order-condition residuals. The text depends only on the
/// coefficients and the name, so a tableau read back from a file reproduces
/// the report of the method it was written from.
pub fn report(method: &Method) -> Result<MethodReport, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "[method {}]", method.name());
    let _ = writeln!(s, "kind: {}", method.kind().as_str());
    let _ = writeln!(s, "stages: {}", method.stages());
    let signs_pass = match method.shu_osher() {
        Some(t) => {
            let _ = writeln!(s, "ssp coefficient r: {}", t.r());
            let v = t.validate_ssp_signs();
            if v.passes {
                let _ = writeln!(s, "sign check: pass");
            } else {
                let _ = writeln!(s, "sign check: FAIL ({} violations)", v.violations.len());
                for x in &v.violations {
                    let _ = writeln!(s, "  violation {}[{},{}] = {:e}", x.matrix, x.row, x.col, x.value);
                }
            }
            Some(v.passes)
        }
        None => {
            let _ = writeln!(s, "sign check: not SSP (Butcher form only)");
            None
        }
    };
    let bt = method.butcher();
    let max = method.kind().max_order();
    let order = check_order_conditions(&bt, max).map_err(|e| CliError::Numerical(e.to_string()))?;
    let _ = writeln!(s, "order conditions (lhs - rhs):");
    for r in &order.residuals {
        let _ = writeln!(s, "  p={} {:>10.3e}  {}", r.order, r.residual, r.label);
    }
    let satisfied_order = (1..=max)
        .take_while(|&p| {
            order
                .residuals
                .iter()
                .filter(|r| r.order == p)
                .all(|r| r.residual.abs() < ORDER_TOLERANCE)
        })
        .last()
        .unwrap_or(0);
    let _ = writeln!(s, "satisfied through order: {satisfied_order}");
    Ok(MethodReport {
        text: s,
        signs_pass,
        satisfied_order,
    })
}

/// Prints reports for every built-in and an optional user file. Built-in
/// failures and sign violations in the user file are numerical failures.
pub fn verify_tableaus(file: Option<&Path>) -> Result<(), CliError> {
    let user = file.map(load_tableau).transpose()?;
    let mut failed = Vec::new();
    for b in builtin_methods() {
        let r = report(&b.method)?;
        print!("{}", r.text);
        let order_ok = r.satisfied_order >= b.design_order;
        let signs_ok = !b.ssp || r.signs_pass == Some(true);
        let verdict = if order_ok && signs_ok { "PASS" } else { "FAIL" };
        println!("design order {}: {verdict}\n", b.design_order);
        if verdict == "FAIL" {
            failed.push(b.name.to_string());
        }
    }
    if let (Some(t), Some(path)) = (user, file) {
        println!("# user file {}", path.display());
        let r = report(&Method::ShuOsher(t))?;
        print!("{}", r.text);
        if r.signs_pass != Some(true) {
            failed.push(format!("{} (sign conditions)", path.display()));
        }
    }
    if failed.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Numerical(format!("checks failed: {}", failed.join(", "))))
    }
}
