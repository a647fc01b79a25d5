use std::f64::consts::PI;

use super::grid::{advect, EpsField, SpatialGrid, Transport, VelocityGrid};
use super::ProblemError;
use crate::integrator::{check_len, RelaxationStructure, SystemError, TwoDerivativeSystem};
use crate::par::{map_indices, Execution};

/// Largest tolerated deviation of discrete Maxwellian moments from their
/// analytic values on the velocity grid.
pub const MOMENT_RESOLUTION: f64 = 1e-8;

/// One-dimensional BGK equation `f_t + v f_x = (M[f] - f) / eps(x)`
/// discretized on `nx` cells times `nv` velocities; the state is cell-major,
/// `f[k * nv + j]`.
#[derive(Debug, Clone)]
pub struct Bgk1d {
    grid: SpatialGrid,
    vgrid: VelocityGrid,
    eps: Vec<f64>,
    transport: Transport,
    execution: Execution,
}

/// Macroscopic quantities of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Macroscopic {
    pub rho: f64,
    pub u: f64,
    pub temperature: f64,
}

impl Bgk1d {
    pub fn new(
        eps: EpsField,
        grid: SpatialGrid,
        vgrid: VelocityGrid,
        transport: Transport,
    ) -> Result<Self, ProblemError> {
        let err = vgrid.moment_error(1.0, 0.0, 1.0);
        if !(err < MOMENT_RESOLUTION) {
            return Err(ProblemError::UnresolvedVelocityGrid { error: err });
        }
        Ok(Self {
            eps: eps.sample(&grid)?,
            grid,
            vgrid,
            transport,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn vgrid(&self) -> &VelocityGrid {
        &self.vgrid
    }

    pub fn eps_cells(&self) -> &[f64] {
        &self.eps
    }

    pub fn transport(&self) -> Transport {
        self.transport
    }

    /// `0.7 M[rho, u, T] + 0.3 M[rho, -u/2, T]` with `rho = 1 + 0.2 sin(2 pi x)`,
    /// `u = 1`, `T = 1 / (1 + 0.2 sin(pi x))`.
    pub fn initial_state(&self) -> Vec<f64> {
        let nv = self.vgrid.nv();
        let mut f = vec![0.0; self.grid.nx() * nv];
        let mut a = vec![0.0; nv];
        let mut b = vec![0.0; nv];
        for (k, fk) in f.chunks_mut(nv).enumerate() {
            let x = self.grid.center(k);
            let rho = 1.0 + 0.2 * (2.0 * PI * x).sin();
            let temp = 1.0 / (1.0 + 0.2 * (PI * x).sin());
            self.vgrid.maxwellian(rho, 1.0, temp, &mut a);
            self.vgrid.maxwellian(rho, -0.5, temp, &mut b);
            for j in 0..nv {
                fk[j] = 0.7 * a[j] + 0.3 * b[j];
            }
        }
        f
    }

    /// Converts `(rho, rho u, E)` into `(rho, u, T)`.
    pub fn macroscopic_from_moments(cell: usize, m: &[f64]) -> Result<Macroscopic, SystemError> {
        let rho = m[0];
        let u = m[1] / rho;
        let temperature = 2.0 * m[2] / rho - u * u;
        if !(rho > 0.0 && temperature > 0.0) {
            return Err(SystemError::NonPhysicalMoments {
                cell,
                rho,
                temperature,
            });
        }
        Ok(Macroscopic { rho, u, temperature })
    }

    pub fn macroscopic(&self, f: &[f64]) -> Result<Vec<Macroscopic>, SystemError> {
        check_len(self.dim(), f.len())?;
        f.chunks(self.vgrid.nv())
            .enumerate()
            .map(|(k, fk)| Self::macroscopic_from_moments(k, &self.vgrid.moments(fk)))
            .collect()
    }

    fn maxwellian_of(&self, cell: usize, fk: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        self.equilibrium(cell, &self.vgrid.moments(fk), out)
    }

    /// Discrete entropy `dx sum_k sum_j w f log f`; `None` if any entry is
    /// nonpositive.
    pub fn entropy(&self, f: &[f64]) -> Option<f64> {
        if f.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let s: f64 = f.iter().map(|&x| x * x.ln()).sum();
        Some(s * self.vgrid.weight() * self.grid.dx())
    }
}

impl TwoDerivativeSystem for Bgk1d {
    fn dim(&self) -> usize {
        self.grid.nx() * self.vgrid.nv()
    }

    fn block_size(&self) -> usize {
        self.vgrid.nv()
    }

    fn has_explicit(&self) -> bool {
        true
    }

    fn eval_f(&self, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(self.dim(), u.len())?;
        let nv = self.vgrid.nv();
        let dx = self.grid.dx();
        let columns = map_indices(self.execution, nv, |j| {
            let q: Vec<f64> = u.iter().skip(j).step_by(nv).copied().collect();
            let mut t = vec![0.0; q.len()];
            advect(&q, self.vgrid.points()[j], dx, self.transport, &mut t);
            t
        });
        for (j, col) in columns.into_iter().enumerate() {
            for (k, v) in col.into_iter().enumerate() {
                out[k * nv + j] = v;
            }
        }
        Ok(())
    }

    fn eval_g_block(&self, block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        self.maxwellian_of(block, u, out)?;
        let eps = self.eps[block];
        for (o, f) in out.iter_mut().zip(u) {
            *o = (*o - f) / eps;
        }
        Ok(())
    }

    fn eval_gdot_block(&self, block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        self.eval_g_block(block, u, out)?;
        let eps = self.eps[block];
        for o in out.iter_mut() {
            *o = -*o / eps;
        }
        Ok(())
    }

    fn relaxation(&self) -> Option<&dyn RelaxationStructure> {
        Some(self)
    }
}

impl RelaxationStructure for Bgk1d {
    fn n_moments(&self) -> usize {
        3
    }

    fn moments(&self, block: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.vgrid.moments(block));
    }

    fn equilibrium(&self, block: usize, omega: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        let m = Self::macroscopic_from_moments(block, omega)?;
        self.vgrid.maxwellian(m.rho, m.u, m.temperature, out);
        Ok(())
    }

    fn rate(&self, _omega: &[f64]) -> f64 {
        1.0
    }

    fn eps(&self, block: usize) -> f64 {
        self.eps[block]
    }

    fn solve_backward_relaxation(
        &self,
        block: usize,
        u_e: &[f64],
        beta: f64,
        out: &mut [f64],
    ) -> Option<Result<(), SystemError>> {
        Some(self.maxwellian_of(block, u_e, out).map(|()| {
            for (o, f) in out.iter_mut().zip(u_e) {
                *o = (f + beta * *o) / (1.0 + beta);
            }
        }))
    }
}
