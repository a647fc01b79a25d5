use nalgebra::DMatrix;

use crate::integrator::{check_len, RelaxationStructure, SystemError, TwoDerivativeSystem};

/// Stiff relaxation ODE
///
/// ```text
/// u1' = u2
/// u2' = f(u1) (g(u1) - u2) / eps,    f(u1) = 1 + u1^2,  g(u1) = sin u1.
/// ```
///
/// As `eps -> 0` the solution follows `u1' = sin u1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeRelaxation {
    eps: f64,
}

impl OdeRelaxation {
    pub fn new(eps: f64) -> Self {
        assert!(eps > 0.0, "eps must be positive");
        Self { eps }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn initial_state() -> Vec<f64> {
        vec![2.0, 0.0]
    }

    fn f(u1: f64) -> f64 {
        1.0 + u1 * u1
    }

    fn g(u1: f64) -> f64 {
        u1.sin()
    }

    /// Solution of the limit equation `u1' = sin u1` from `u1(0) = 2`.
    pub fn limit_u1(t: f64) -> f64 {
        2.0 * (t.exp() * 1f64.tan()).atan()
    }
}

impl TwoDerivativeSystem for OdeRelaxation {
    fn dim(&self) -> usize {
        2
    }

    fn has_explicit(&self) -> bool {
        true
    }

    fn eval_f(&self, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(2, u.len())?;
        out[0] = u[1];
        out[1] = 0.0;
        Ok(())
    }

    fn eval_g_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(2, u.len())?;
        out[0] = 0.0;
        out[1] = Self::f(u[0]) * (Self::g(u[0]) - u[1]) / self.eps;
        Ok(())
    }

    fn eval_gdot_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(2, u.len())?;
        let f = Self::f(u[0]);
        out[0] = 0.0;
        out[1] = -f * f * (Self::g(u[0]) - u[1]) / (self.eps * self.eps);
        Ok(())
    }

    fn jacobian_g_block(&self, _block: usize, u: &[f64]) -> Option<DMatrix<f64>> {
        let (f, g) = (Self::f(u[0]), Self::g(u[0]));
        let d1 = 2.0 * u[0] * (g - u[1]) + f * u[0].cos();
        Some(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, d1 / self.eps, -f / self.eps]))
    }

    fn jacobian_gdot_block(&self, _block: usize, u: &[f64]) -> Option<DMatrix<f64>> {
        let (f, g) = (Self::f(u[0]), Self::g(u[0]));
        let e2 = self.eps * self.eps;
        let d1 = -(4.0 * f * u[0] * (g - u[1]) + f * f * u[0].cos()) / e2;
        Some(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, d1, f * f / e2]))
    }

    fn relaxation(&self) -> Option<&dyn RelaxationStructure> {
        Some(self)
    }
}

impl RelaxationStructure for OdeRelaxation {
    fn n_moments(&self) -> usize {
        1
    }

    fn moments(&self, block: &[f64], out: &mut [f64]) {
        out[0] = block[0];
    }

    fn equilibrium(&self, _block: usize, omega: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        out[0] = omega[0];
        out[1] = Self::g(omega[0]);
        Ok(())
    }

    fn rate(&self, omega: &[f64]) -> f64 {
        Self::f(omega[0])
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
        let f = Self::f(u_e[0]);
        out[0] = u_e[0];
        out[1] = (u_e[1] + beta * f * Self::g(u_e[0])) / (1.0 + beta * f);
        Some(Ok(()))
    }
}
