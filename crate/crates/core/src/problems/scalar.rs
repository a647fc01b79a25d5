use nalgebra::DMatrix;

use crate::integrator::{check_len, SystemError, TwoDerivativeSystem};

/// `u' = -10 u^2`, treated entirely implicitly. Exact solution from
/// `u(0) = 10` is `10 / (1 + 100 t)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScalarDecay;

impl ScalarDecay {
    pub fn exact(t: f64, u0: f64) -> f64 {
        u0 / (1.0 + 10.0 * u0 * t)
    }
}

impl TwoDerivativeSystem for ScalarDecay {
    fn dim(&self) -> usize {
        1
    }

    fn eval_g_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(1, u.len())?;
        out[0] = -10.0 * u[0] * u[0];
        Ok(())
    }

    fn eval_gdot_block(&self, _block: usize, u: &[f64], out: &mut [f64]) -> Result<(), SystemError> {
        check_len(1, u.len())?;
        out[0] = 200.0 * u[0].powi(3);
        Ok(())
    }

    fn jacobian_g_block(&self, _block: usize, u: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, -20.0 * u[0]))
    }

    fn jacobian_gdot_block(&self, _block: usize, u: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, 600.0 * u[0] * u[0]))
    }
}
