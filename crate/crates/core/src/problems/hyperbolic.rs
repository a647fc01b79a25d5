use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::grid::{advect, SpatialGrid, Transport};
use crate::integrator::{check_len, RelaxationStructure, SystemError, TwoDerivativeSystem};

/// Equilibrium flux of the relaxation system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RelaxationFlux {
    /// `F(u) = u^2 / 2`
    Burgers,
    /// `F(u) = a u`
    Linear { a: f64 },
}

impl RelaxationFlux {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            RelaxationFlux::Burgers => 0.5 * u * u,
            RelaxationFlux::Linear { a } => a * u,
        }
    }
}

/// ```text
/// d_t u1 + d_x u2 = 0
/// d_t u2 + d_x u1 = (F(u1) - u2) / eps
/// ```
///
/// Transport is upwinded on the characteristic variables `u1 ± u2`, which
/// travel with speeds `±1`. The state is stored cell-major as `(u1, u2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicRelaxation {
    eps: f64,
    flux: RelaxationFlux,
    grid: SpatialGrid,
    transport: Transport,
}

impl HyperbolicRelaxation {
    pub fn new(eps: f64, flux: RelaxationFlux, grid: SpatialGrid, transport: Transport) -> Self {
        assert!(eps > 0.0, "eps must be positive");
        Self {
            eps,
            flux,
            grid,
            transport,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Smooth data on the equilibrium manifold: `u1 = 0.5 + 0.2 sin(pi x)`,
    /// `u2 = F(u1)`.
    pub fn initial_state(&self) -> Vec<f64> {
        self.grid
            .centers()
            .iter()
            .flat_map(|&x| {
                let u1 = 0.5 + 0.2 * (PI * x).sin();
                [u1, self.flux.eval(u1)]
            })
            .collect()
    }
}

impl TwoDerivativeSystem for HyperbolicRelaxation {
    fn dim(&self) -> usize {
        2 * self.grid.nx()
    }

    fn block_size(&self) -> usize {
        2
    }

    fn has_explicit(&self) -> bool {
        true
    }

    fn eval_f(&self, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(self.dim(), u.len())?;
        let n = self.grid.nx();
        let dx = self.grid.dx();
        let plus: Vec<f64> = u.chunks(2).map(|c| c[0] + c[1]).collect();
        let minus: Vec<f64> = u.chunks(2).map(|c| c[0] - c[1]).collect();
        let mut tp = vec![0.0; n];
        let mut tm = vec![0.0; n];
        advect(&plus, 1.0, dx, self.transport, &mut tp);
        advect(&minus, -1.0, dx, self.transport, &mut tm);
        for k in 0..n {
            out[2 * k] = 0.5 * (tp[k] + tm[k]);
            out[2 * k + 1] = 0.5 * (tp[k] - tm[k]);
        }
        Ok(())
    }

    fn eval_g_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = 0.0;
        out[1] = (self.flux.eval(u[0]) - u[1]) / self.eps;
        Ok(())
    }

    fn eval_gdot_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = 0.0;
        out[1] = -(self.flux.eval(u[0]) - u[1]) / (self.eps * self.eps);
        Ok(())
    }

    fn relaxation(&self) -> Option<&dyn RelaxationStructure> {
        Some(self)
    }
}

impl RelaxationStructure for HyperbolicRelaxation {
    fn n_moments(&self) -> usize {
        1
    }

    fn moments(&self, block: &[f64], out: &mut [f64]) {
        out[0] = block[0];
    }

    fn equilibrium(&self, _block: usize, omega: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = omega[0];
        out[1] = self.flux.eval(omega[0]);
        Ok(())
    }

    fn rate(&self, _omega: &[f64]) -> f64 {
        1.0
    }

    fn eps(&self, _block: usize) -> f64 {
        self.eps
    }

    fn solve_backward_relaxation(
        &self,
        _block: usize,
        u_e: &[f64],
        beta: f64,
        out: &mut [f64],
    ) -> Option<Result<(), SystemError>> {
        out[0] = u_e[0];
        out[1] = (u_e[1] + beta * self.flux.eval(u_e[0])) / (1.0 + beta);
        Some(Ok(()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(transport: Transport) -> HyperbolicRelaxation {
        HyperbolicRelaxation::new(0.1, RelaxationFlux::Burgers, SpatialGrid::new(16, 0.0, 2.0).unwrap(), transport)
    }

    #[test]
    fn equilibrium_constants_are_steady() {
        for t in [Transport::Upwind, Transport::Weno5] {
            let s = sys(t);
            let u: Vec<f64> = (0..16).flat_map(|_| [0.6, 0.18]).collect();
            let mut f = vec![1.0; 32];
            let mut g = vec![1.0; 32];
            s.eval_f(&u, &mut f).unwrap();
            s.eval_g(&u, &mut g).unwrap();
            assert!(f.iter().chain(&g).all(|&x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn characteristic_upwinding_matches_component_form() {
        // With u2 = 0 and u1 a bump, the flux of u2 is u1: d_t u2 = -d_x u1.
        let s = sys(Transport::Upwind);
        let u: Vec<f64> = (0..16).flat_map(|k| [(k as f64 * 0.4).sin(), 0.0]).collect();
        let mut f = vec![0.0; 32];
        s.eval_f(&u, &mut f).unwrap();
        let dx = s.grid().dx();
        for k in 0..16 {
            let (l, r) = ((k + 15) % 16, (k + 1) % 16);
            let central = -(u[2 * r] - u[2 * l]) / (2.0 * dx);
            assert!((f[2 * k + 1] - central).abs() < 1e-12);
        }
        assert_eq!(s.rate(&[3.0]), 1.0);
    }
}
