use std::f64::consts::PI;

use super::grid::{advect_component, SpatialGrid, Transport};
use crate::integrator::{check_len, RelaxationStructure, SystemError, TwoDerivativeSystem};

/// Three-velocity Broadwell model. Each cell stores `(f+, f0, f-)`, the
/// densities moving with speeds `+1, 0, -1`.
///
/// Collision: `Q(f) = q (1, -1, 1)` with `q = f0^2 - f+ f-`; moments
/// `rho = f+ + 2 f0 + f-`, `m = f+ - f-`; `Q'(f) Q(f) = -rho Q(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Broadwell {
    eps: f64,
    grid: SpatialGrid,
    transport: Transport,
}

pub const SPEEDS: [f64; 3] = [1.0, 0.0, -1.0];

impl Broadwell {
    pub fn new(eps: f64, grid: SpatialGrid, transport: Transport) -> Self {
        assert!(eps > 0.0, "eps must be positive");
        Self {
            eps,
            grid,
            transport,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Point values of the standard non-equilibrium initial data.
    pub fn initial_state(&self) -> Vec<f64> {
        self.grid
            .centers()
            .iter()
            .flat_map(|&x| {
                [
                    1.0 + 0.2 * (0.3 * (PI * x).sin()).exp(),
                    1.0 / (1.0 + 0.3 * (PI * x).sin()),
                    (0.2 * (2.0 * PI * x).cos()).exp(),
                ]
            })
            .collect()
    }

    pub fn collision(f: &[f64]) -> f64 {
        f[1] * f[1] - f[0] * f[2]
    }

    /// `(rho, m, z)` with `z = f+ + f-`.
    pub fn macroscopic(f: &[f64]) -> [f64; 3] {
        [f[0] + 2.0 * f[1] + f[2], f[0] - f[2], f[0] + f[2]]
    }
}

impl TwoDerivativeSystem for Broadwell {
    fn dim(&self) -> usize {
        3 * self.grid.nx()
    }

    fn block_size(&self) -> usize {
        3
    }

    fn has_explicit(&self) -> bool {
        true
    }

    fn eval_f(&self, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(self.dim(), u.len())?;
        for (c, &a) in SPEEDS.iter().enumerate() {
            advect_component(u, 3, c, a, self.grid.dx(), self.transport, out);
        }
        Ok(())
    }

    fn eval_g_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        let q = Self::collision(u) / self.eps;
        out.copy_from_slice(&[q, -q, q]);
        Ok(())
    }

    fn eval_gdot_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        let rho = u[0] + 2.0 * u[1] + u[2];
        let q = -rho * Self::collision(u) / (self.eps * self.eps);
        out.copy_from_slice(&[q, -q, q]);
        Ok(())
    }

    fn relaxation(&self) -> Option<&dyn RelaxationStructure> {
        Some(self)
    }
}

impl RelaxationStructure for Broadwell {
    fn n_moments(&self) -> usize {
        2
    }

    fn moments(&self, block: &[f64], out: &mut [f64]) {
        out[0] = block[0] + 2.0 * block[1] + block[2];
        out[1] = block[0] - block[2];
    }

    fn equilibrium(&self, block: usize, omega: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        let (rho, m) = (omega[0], omega[1]);
        if !(rho > 0.0) {
            return Err(SystemError::NonPhysicalMoments {
                cell: block,
                rho,
                temperature: f64::NAN,
            });
        }
        out[0] = (rho + m) * (rho + m) / (4.0 * rho);
        out[1] = (rho * rho - m * m) / (4.0 * rho);
        out[2] = (rho - m) * (rho - m) / (4.0 * rho);
        Ok(())
    }

    fn rate(&self, omega: &[f64]) -> f64 {
        omega[0]
    }

    fn eps(&self, _block: usize) -> f64 {
        self.eps
    }

    /// Along the solution `q` obeys the linear equation `q = q_e - beta rho q`.
    /// The update is written with nonnegative terms only so that positive
    /// input gives positive output for any `beta >= 0`.
    fn solve_backward_relaxation(
        &self,
        _block: usize,
        u_e: &[f64],
        beta: f64,
        out: &mut [f64],
    ) -> Option<Result<(), SystemError>> {
        let (p, z, n) = (u_e[0], u_e[1], u_e[2]);
        let rho = p + 2.0 * z + n;
        let den = 1.0 + beta * rho;
        out[0] = (p + beta * p * (p + 2.0 * z) + beta * z * z) / den;
        out[1] = (z + beta * z * (p + z + n) + beta * p * n) / den;
        out[2] = (n + beta * n * (n + 2.0 * z) + beta * z * z) / den;
        Some(Ok(()))
    }
}
