use std::fmt::Write as _;

use ssp_mdrk::analysis;

use super::{finish, Context};
use crate::error::CliError;
use crate::manifest::problem_line;

pub fn mixed_regime(ctx: &Context) -> Result<(), CliError> {
    let config = ctx.load_config("mixed-regime")?;
    let setup = config.mixed();
    let cfg = config.stepper(ctx.execution)?;
    let report = analysis::mixed_regime(&setup, &cfg, ctx.execution)?;

    let mut art = ctx.artifacts("mixed-regime", &config);
    art.manifest.method = Some(setup.methods.join(" "));
    art.manifest.problem = Some(problem_line(&setup.problem()));

    let mut summary = String::from("method,dt,n_steps,positivity,distance_to_reference,status\n");
    let mut monitors = format!(
        "reference dt={:.6e} steps={} min={:.6e}\n",
        report.reference_dt, report.reference_steps, report.reference_min
    );
    let mut failures = Vec::new();
    for (i, o) in report.outcomes.iter().enumerate() {
        let dist = report
            .reference_distance(i)
            .map_or_else(String::new, |d| format!("{d:.6e}"));
        let status = o.failure.clone().unwrap_or_else(|| "ok".into());
        let _ = writeln!(
            summary,
            "{},{:.6e},{},{},{},{}",
            o.method,
            o.dt,
            o.n_steps,
            if o.positivity.passes() { "pass" } else { "fail" },
            dist,
            status.replace(',', ";")
        );
        let _ = writeln!(monitors, "[{}]", o.method);
        monitors.push_str(&o.positivity.to_text());
        if let Some(p) = &o.profiles {
            art.add(format!("profiles_{}.csv", o.method), p.to_csv());
        }
        if let Some(f) = &o.failure {
            failures.push(format!("{}: {f}", o.method));
        }
    }
    if report.outcomes.len() >= 2 {
        if let Some(d) = report.method_distance(0, 1) {
            let _ = writeln!(
                monitors,
                "distance {} vs {}: {d:.6e}",
                report.outcomes[0].method, report.outcomes[1].method
            );
        }
    }
    print!("{summary}");
    art.add("mixed_summary.csv", summary);
    art.add("profiles_reference.csv", report.reference.to_csv());
    art.add("monitors.txt", monitors);
    if !failures.is_empty() {
        art.fail(failures.join("; "));
    }
    finish(art, ctx.out())
}
