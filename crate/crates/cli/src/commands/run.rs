use std::fmt::Write as _;

use ssp_mdrk::analysis::{moment_profiles, ConservationMonitor, EntropyMonitor, MonitorReport, PositivityMonitor};
use ssp_mdrk::integrator::{integrate, IntegrateError, Run, Trajectory};
use ssp_mdrk::problems::{Broadwell, Problem};

use super::{finish, Context};
use crate::error::CliError;
use crate::manifest::problem_line;

/// Relative drift allowed by the conservation monitor.
const CONSERVATION_TOL: f64 = 1e-9;

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let config = ctx.load_config("run")?;
    let pcfg = config.problem()?.clone();
    let method = config.method()?;
    let cfg = config.stepper(ctx.execution)?;
    let problem = pcfg.build()?;
    let t_end = pcfg.t_end();
    let n_steps = config.run_steps(&problem, t_end)?;
    let snapshot_every = config.file.run.as_ref().and_then(|r| r.snapshot_every);

    let mut art = ctx.artifacts("run", &config);
    art.manifest.method = Some(method.name().to_string());
    art.manifest.problem = Some(problem_line(&pcfg));

    let run = Run {
        snapshot_every: snapshot_every.or(problem.grid().is_none().then_some(1)),
        ..Run::new(0.0, t_end, n_steps)
    };
    let sys = problem.system();
    let u0 = problem.initial_state();
    let (result, reports) = match &problem {
        Problem::Bgk(b) => {
            let mut pos = PositivityMonitor::kinetic(b);
            let mut ent = EntropyMonitor::new(b);
            let mut con = ConservationMonitor::new(sys, CONSERVATION_TOL);
            let r = integrate(sys, &method, &u0, &run, &cfg, &mut [&mut pos, &mut ent, &mut con]);
            (r, vec![pos.into_report(), ent.into_report(), con.into_report()])
        }
        Problem::ScalarDecay(_) | Problem::OdeRelaxation(_) => {
            let mut pos = PositivityMonitor::new();
            let r = integrate(sys, &method, &u0, &run, &cfg, &mut [&mut pos]);
            (r, vec![pos.into_report()])
        }
        _ => {
            let mut pos = PositivityMonitor::new();
            let mut con = ConservationMonitor::new(sys, CONSERVATION_TOL);
            let r = integrate(sys, &method, &u0, &run, &cfg, &mut [&mut pos, &mut con]);
            (r, vec![pos.into_report(), con.into_report()])
        }
    };

    let traj = match result {
        Ok(t) => t,
        Err(IntegrateError::Step { step, t, error, partial }) => {
            art.fail(format!("step {step} at t = {t}: {error}"));
            *partial
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };

    art.add("final_state.csv", state_csv(&problem, &traj.final_state));
    match &problem {
        Problem::Bgk(b) => match moment_profiles(b, &traj.final_state) {
            Ok(m) => art.add("moments.csv", m.to_csv()),
            Err(e) => art.fail(format!("moments: {e}")),
        },
        Problem::Broadwell(_) => art.add("moments.csv", broadwell_moments(&problem, &traj.final_state)),
        _ => {}
    }
    if !traj.snapshots.is_empty() {
        art.add("trajectory.csv", trajectory_csv(&traj));
    }
    art.add("monitors.txt", monitors_text(&traj, n_steps, &reports));
    finish(art, ctx.out())
}

fn row(s: &mut String, lead: &[f64], values: &[f64]) {
    let cells: Vec<String> = lead.iter().chain(values).map(|v| format!("{v:.12e}")).collect();
    let _ = writeln!(s, "{}", cells.join(","));
}

fn state_csv(problem: &Problem, u: &[f64]) -> String {
    let block = problem.system().block_size();
    let mut s = String::new();
    match problem.grid() {
        Some(grid) => {
            let names: Vec<String> = (1..=block).map(|j| format!("u{j}")).collect();
            let _ = writeln!(s, "x,{}", names.join(","));
            for (x, cell) in grid.centers().iter().zip(u.chunks(block)) {
                row(&mut s, &[*x], cell);
            }
        }
        None => {
            let names: Vec<String> = (1..=u.len()).map(|j| format!("u{j}")).collect();
            let _ = writeln!(s, "{}", names.join(","));
            row(&mut s, &[], u);
        }
    }
    s
}

fn broadwell_moments(problem: &Problem, f: &[f64]) -> String {
    let mut s = String::from("x,rho,m,z\n");
    if let Some(grid) = problem.grid() {
        for (x, cell) in grid.centers().iter().zip(f.chunks(3)) {
            row(&mut s, &[*x], &Broadwell::macroscopic(cell));
        }
    }
    s
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.snapshots[0].state.len();
    let names: Vec<String> = (1..=dim).map(|j| format!("u{j}")).collect();
    let mut s = format!("step,t,{}\n", names.join(","));
    for snap in &traj.snapshots {
        let _ = write!(s, "{},", snap.step);
        row(&mut s, &[snap.t], &snap.state);
    }
    s
}

fn monitors_text(traj: &Trajectory, n_steps: usize, reports: &[MonitorReport]) -> String {
    let mut s = format!(
        "steps {}/{} t_final={:.12e}\n",
        traj.steps_taken, n_steps, traj.t_final
    );
    for r in reports {
        s.push_str(&r.to_text());
    }
    s
}
