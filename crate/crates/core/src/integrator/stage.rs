use nalgebra::{DMatrix, DVector};

use super::{
    check_len, FastPath, JacobianMode, RelaxationStructure, SolveError, StepperConfig,
    TwoDerivativeSystem,
};
use crate::par::map_chunks_mut;

/// Aggregated result of one stage solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageStats {
    /// Largest Newton iteration count over all blocks (0 for closed-form or
    /// purely explicit stages).
    pub newton_iters: usize,
    /// Largest final residual `‖u - rhs - dt d G(u) - dt² ḋ Ġ(u)‖∞` over blocks.
    pub residual_norm: f64,
    pub used_fast_path: bool,
}

#[derive(Debug, Clone, Copy)]
struct BlockStats {
    iters: usize,
    residual: f64,
    fast: bool,
}

/// Solves `u = rhs + dt d G(u) + dt² ddot Gdot(u)` block by block, starting
/// Newton from `guess`.
pub fn solve_stage<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    rhs: &[f64],
    d: f64,
    ddot: f64,
    dt: f64,
    cfg: &StepperConfig,
    guess: &[f64],
) -> Result<(Vec<f64>, StageStats), SolveError> {
    check_len(sys.dim(), rhs.len())?;
    check_len(sys.dim(), guess.len())?;
    if d == 0.0 && ddot == 0.0 {
        return Ok((
            rhs.to_vec(),
            StageStats {
                newton_iters: 0,
                residual_norm: 0.0,
                used_fast_path: false,
            },
        ));
    }
    let b = sys.block_size();
    let relax = match cfg.fast_path {
        FastPath::Auto => sys.relaxation(),
        FastPath::ForceNewton => None,
    };
    let mut u = guess.to_vec();
    let results = map_chunks_mut(cfg.execution, &mut u, b, |k, ub| {
        let rb = &rhs[k * b..(k + 1) * b];
        if let Some(relax) = relax {
            if let Some(stats) = closed_form_block(sys, relax, k, rb, d, ddot, dt, ub) {
                return stats;
            }
        }
        newton_block(sys, k, rb, d, ddot, dt, cfg, ub)
    });
    let mut stats = StageStats {
        newton_iters: 0,
        residual_norm: 0.0,
        used_fast_path: true,
    };
    for r in results {
        let r = r?;
        stats.newton_iters = stats.newton_iters.max(r.iters);
        stats.residual_norm = stats.residual_norm.max(r.residual);
        stats.used_fast_path &= r.fast;
    }
    Ok((u, stats))
}

#[allow(clippy::too_many_arguments)]
fn closed_form_block<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    relax: &dyn RelaxationStructure,
    k: usize,
    rhs: &[f64],
    d: f64,
    ddot: f64,
    dt: f64,
    out: &mut [f64],
) -> Option<Result<BlockStats, SolveError>> {
    let mut omega = vec![0.0; relax.n_moments()];
    relax.moments(rhs, &mut omega);
    let eps = relax.eps(k);
    let beta = dt * d / eps - dt * dt * ddot * relax.rate(&omega) / (eps * eps);
    if !beta.is_finite() {
        return None;
    }
    let solved = relax.solve_backward_relaxation(k, rhs, beta, out)?;
    Some(
        solved
            .map_err(SolveError::from)
            .and_then(|()| {
                let mut g = vec![0.0; rhs.len()];
                let mut gd = vec![0.0; rhs.len()];
                residual(sys, k, out, rhs, dt * d, dt * dt * ddot, &mut g, &mut gd)
            })
            .map(|res| BlockStats {
                iters: 0,
                residual: res,
                fast: true,
            }),
    )
}

/// Writes `r = u - rhs - c1 G(u) - c2 Gdot(u)` into `g` and returns `‖r‖∞`.
/// On return `gd` holds `Gdot(u)` (zero when `c2 = 0`) and `g` the residual.
#[allow(clippy::too_many_arguments)]
fn residual<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    k: usize,
    u: &[f64],
    rhs: &[f64],
    c1: f64,
    c2: f64,
    g: &mut [f64],
    gd: &mut [f64],
) -> Result<f64, SolveError> {
    sys.eval_g_block(k, u, g)?;
    if c2 != 0.0 {
        sys.eval_gdot_block(k, u, gd)?;
    } else {
        gd.fill(0.0);
    }
    let mut norm = 0.0f64;
    for i in 0..u.len() {
        let r = u[i] - rhs[i] - c1 * g[i] - c2 * gd[i];
        g[i] = r;
        norm = if r.is_nan() { f64::NAN } else { norm.max(r.abs()) };
    }
    Ok(norm)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[allow(clippy::too_many_arguments)]
fn newton_block<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    k: usize,
    rhs: &[f64],
    d: f64,
    ddot: f64,
    dt: f64,
    cfg: &StepperConfig,
    u: &mut [f64],
) -> Result<BlockStats, SolveError> {
    let n = u.len();
    let (c1, c2) = (dt * d, dt * dt * ddot);
    let mut r = vec![0.0; n];
    let mut gd = vec![0.0; n];
    let mut last = f64::NAN;
    for it in 1..=cfg.newton_max_iters {
        let rn = residual(sys, k, u, rhs, c1, c2, &mut r, &mut gd)?;
        let tol = cfg.newton_abs_tol + cfg.newton_rel_tol * max_abs(u);
        last = rn;
        if rn < tol {
            return Ok(BlockStats {
                iters: it,
                residual: rn,
                fast: false,
            });
        }
        if !rn.is_finite() {
            break;
        }
        let jac = newton_matrix(sys, k, u, c1, c2, cfg.jacobian_mode)?;
        let delta = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or(SolveError::SingularJacobian {
                block: k,
                iteration: it,
            })?;
        for (ui, di) in u.iter_mut().zip(delta.iter()) {
            *ui -= di;
        }
        // Near a root the residual is floored by roundoff in dt d G(u), which
        // can exceed the tolerance when G is very stiff; a negligible Newton
        // update is then the meaningful stopping test.
        if max_abs(delta.as_slice()) <= cfg.newton_abs_tol + cfg.newton_rel_tol * max_abs(u) {
            let rn = residual(sys, k, u, rhs, c1, c2, &mut r, &mut gd)?;
            if rn.is_finite() {
                return Ok(BlockStats {
                    iters: it,
                    residual: rn,
                    fast: false,
                });
            }
        }
    }
    Err(SolveError::NonConvergence {
        block: k,
        iterations: cfg.newton_max_iters,
        residual: last,
    })
}

/// `I - c1 J_G - c2 J_Gdot` at `u`.
fn newton_matrix<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    k: usize,
    u: &[f64],
    c1: f64,
    c2: f64,
    mode: JacobianMode,
) -> Result<DMatrix<f64>, SolveError> {
    let n = u.len();
    let analytic = mode == JacobianMode::Analytic;
    let jg = match analytic.then(|| sys.jacobian_g_block(k, u)).flatten() {
        Some(j) => j,
        None => fd_jacobian(u, |x, out| sys.eval_g_block(k, x, out))?,
    };
    let mut m = DMatrix::identity(n, n) - &jg * c1;
    if c2 != 0.0 {
        let jgd = match analytic.then(|| sys.jacobian_gdot_block(k, u)).flatten() {
            Some(j) => j,
            None => match sys.relaxation() {
                Some(relax) => relaxation_gdot_jacobian(sys, relax, k, u, &jg)?,
                None => fd_jacobian(u, |x, out| sys.eval_gdot_block(k, x, out))?,
            },
        };
        m -= jgd * c2;
    }
    Ok(m)
}

/// Forward-difference Jacobian with step `1e-7 (1 + |u_j|)`.
fn fd_jacobian<F>(u: &[f64], mut f: F) -> Result<DMatrix<f64>, SolveError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), super::SystemError>,
{
    let n = u.len();
    let mut base = vec![0.0; n];
    f(u, &mut base)?;
    let mut x = u.to_vec();
    let mut col = vec![0.0; n];
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = 1e-7 * (1.0 + u[j].abs());
        x[j] = u[j] + h;
        f(&x, &mut col)?;
        x[j] = u[j];
        for i in 0..n {
            jac[(i, j)] = (col[i] - base[i]) / h;
        }
    }
    Ok(jac)
}

/// Jacobian of `Gdot = -(C(Ru)/eps) G(u)`:
/// `-(C/eps) J_G - (1/eps) G (grad C)ᵀ R`.
fn relaxation_gdot_jacobian<S: TwoDerivativeSystem + ?Sized>(
    sys: &S,
    relax: &dyn RelaxationStructure,
    k: usize,
    u: &[f64],
    jg: &DMatrix<f64>,
) -> Result<DMatrix<f64>, SolveError> {
    let n = u.len();
    let nm = relax.n_moments();
    let eps = relax.eps(k);
    let mut omega = vec![0.0; nm];
    relax.moments(u, &mut omega);
    let c = relax.rate(&omega);
    let mut jac = jg * (-c / eps);

    let mut grad = vec![0.0; nm];
    let mut w = omega.clone();
    for (q, gq) in grad.iter_mut().enumerate() {
        let h = 1e-6 * (1.0 + omega[q].abs());
        w[q] = omega[q] + h;
        let up = relax.rate(&w);
        w[q] = omega[q] - h;
        let down = relax.rate(&w);
        w[q] = omega[q];
        *gq = (up - down) / (2.0 * h);
    }
    if grad.iter().all(|&x| x == 0.0) {
        return Ok(jac);
    }
    // Row vector (grad C)ᵀ R, built column by column from unit vectors.
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; nm];
    let mut row = vec![0.0; n];
    for (j, rj) in row.iter_mut().enumerate() {
        e[j] = 1.0;
        relax.moments(&e, &mut col);
        e[j] = 0.0;
        *rj = grad.iter().zip(&col).map(|(a, b)| a * b).sum();
    }
    let mut g = vec![0.0; n];
    sys.eval_g_block(k, u, &mut g)?;
    for i in 0..n {
        for j in 0..n {
            jac[(i, j)] -= g[i] * row[j] / eps;
        }
    }
    Ok(jac)
}
