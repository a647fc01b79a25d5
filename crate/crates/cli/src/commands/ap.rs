use std::fmt::Write as _;

use ssp_mdrk::analysis::ap_limit_check;

use super::{finish, Context};
use crate::error::CliError;
use crate::manifest::problem_line;

pub fn ap_check(ctx: &Context) -> Result<(), CliError> {
    let config = ctx.load_config("ap-check")?;
    let pcfg = config.problem()?.clone();
    let method = config.method()?;
    let cfg = config.stepper(ctx.execution)?;
    let ap = config.ap()?;
    if ap.eps.is_empty() {
        return Err(CliError::Usage("[ap] eps list is empty".into()));
    }
    let tableau = method.shu_osher().ok_or_else(|| {
        CliError::Usage(format!("{} has no Shu-Osher form and cannot be checked", method.name()))
    })?;
    let report = ap_limit_check(&pcfg, tableau, ap.dt, &ap.eps, &cfg)?;

    let mut art = ctx.artifacts("ap-check", &config);
    art.manifest.method = Some(method.name().to_string());
    art.manifest.problem = Some(problem_line(&pcfg));
    let mut summary = format!("dt {:e} steps {}\n", report.dt, report.n_steps);
    for d in &report.deviations {
        let _ = writeln!(summary, "eps {:e} deviation {:.6e}", d.eps, d.deviation);
    }
    print!("{summary}");
    art.add("ap_check.csv", report.to_csv());
    finish(art, ctx.out())
}
