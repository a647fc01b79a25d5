use std::fmt::Write as _;

use ssp_mdrk::analysis::{run_convergence, run_grid_study};

use super::{finish, Context};
use crate::error::CliError;
use crate::manifest::problem_line;

pub fn convergence(ctx: &Context) -> Result<(), CliError> {
    let config = ctx.load_config("convergence")?;
    let pcfg = config.problem()?.clone();
    let method = config.method()?;
    let cfg = config.stepper(ctx.execution)?;
    let section = config.convergence()?;
    let window = config.window()?;
    let eps = match (&section.eps, pcfg.eps) {
        (Some(list), _) => list.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => vec![1.0],
    };
    if eps.is_empty() {
        return Err(CliError::Usage("[convergence] eps list is empty".into()));
    }

    let mut study = match (&section.dt, &section.nx) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("[convergence] takes either a dt list or an nx list, not both".into()))
        }
        (Some(dts), None) => {
            if dts.is_empty() {
                return Err(CliError::Usage("[convergence] dt list is empty".into()));
            }
            run_convergence(&pcfg, &method, &eps, dts, window, &cfg, ctx.execution)?
        }
        (None, Some(nxs)) => {
            if nxs.is_empty() {
                return Err(CliError::Usage("[convergence] nx list is empty".into()));
            }
            let cfl = section
                .cfl
                .or(pcfg.cfl)
                .ok_or_else(|| CliError::Usage("a grid study needs cfl in [convergence] or [problem]".into()))?;
            run_grid_study(&pcfg, &method, &eps, nxs, cfl, &cfg, ctx.execution)?
        }
        (None, None) => return Err(CliError::Usage("[convergence] needs a dt list or an nx list".into())),
    };
    study.refit(window);

    let mut art = ctx.artifacts("convergence", &config);
    art.manifest.method = Some(method.name().to_string());
    art.manifest.problem = Some(problem_line(&pcfg));
    art.add("convergence.csv", study.to_csv());
    art.add("convergence.gp", study.to_gnuplot("convergence.csv", "convergence.png"));

    let mut summary = format!("problem {} method {} norm {}\n", study.problem, study.method, study.norm);
    for (e, order) in study.eps_values.iter().zip(&study.estimated_orders) {
        let order = order.map_or_else(|| "n/a".to_string(), |p| format!("{p:.3}"));
        let _ = writeln!(summary, "eps {e:e} order {order}");
    }
    for n in &study.notes {
        let _ = writeln!(summary, "note {n}");
    }
    for f in &study.failures {
        let _ = writeln!(summary, "failure {f}");
    }
    print!("{summary}");
    art.add("summary.txt", summary);
    if !study.failures.is_empty() {
        art.fail(format!("{} runs failed", study.failures.len()));
    }
    finish(art, ctx.out())
}
