use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::weno::{weno5_flux, Wind};
use super::ProblemError;

/// Uniform periodic grid of `nx` cells on `[x_lo, x_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    nx: usize,
    x_lo: f64,
    x_hi: f64,
}

impl SpatialGrid {
    pub fn new(nx: usize, x_lo: f64, x_hi: f64) -> Result<Self, ProblemError> {
        if nx < 4 {
            return Err(ProblemError::InvalidGrid(format!("nx = {nx}, need at least 4 cells")));
        }
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(ProblemError::InvalidGrid(format!("bad domain [{x_lo}, {x_hi}]")));
        }
        Ok(Self { nx, x_lo, x_hi })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.nx as f64
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn center(&self, k: usize) -> f64 {
        self.x_lo + (k as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.nx).map(|k| self.center(k)).collect()
    }
}

/// Midpoint quadrature on `[-vmax, vmax]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    vmax: f64,
    points: Vec<f64>,
    weight: f64,
}

impl VelocityGrid {
    pub fn new(nv: usize, vmax: f64) -> Result<Self, ProblemError> {
        if nv < 8 {
            return Err(ProblemError::InvalidGrid(format!("nv = {nv}, need at least 8 points")));
        }
        if !(vmax > 0.0 && vmax.is_finite()) {
            return Err(ProblemError::InvalidGrid(format!("vmax = {vmax} must be positive")));
        }
        let dv = 2.0 * vmax / nv as f64;
        let mut points: Vec<f64> = (0..nv).map(|j| -vmax + (j as f64 + 0.5) * dv).collect();
        for j in 0..nv / 2 {
            points[nv - 1 - j] = -points[j];
        }
        if nv % 2 == 1 {
            points[nv / 2] = 0.0;
        }
        Ok(Self {
            vmax,
            points,
            weight: dv,
        })
    }

    pub fn nv(&self) -> usize {
        self.points.len()
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// The common quadrature weight `2 vmax / nv`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Writes the sampled Maxwellian `rho / sqrt(2 pi T) exp(-(v-u)^2 / 2T)`.
    pub fn maxwellian(&self, rho: f64, u: f64, temp: f64, out: &mut [f64]) {
        let norm = rho / (2.0 * PI * temp).sqrt();
        for (o, v) in out.iter_mut().zip(&self.points) {
            *o = norm * (-(v - u) * (v - u) / (2.0 * temp)).exp();
        }
    }

    /// Discrete `(rho, rho u, E)` with `E = sum w v^2/2 f`.
    pub fn moments(&self, f: &[f64]) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (fj, v) in f.iter().zip(&self.points) {
            m[0] += fj;
            m[1] += v * fj;
            m[2] += 0.5 * v * v * fj;
        }
        m.map(|x| x * self.weight)
    }

    /// Largest deviation of the discrete Maxwellian moments from
    /// `(rho, rho u, rho u^2/2 + rho T/2)`.
    pub fn moment_error(&self, rho: f64, u: f64, temp: f64) -> f64 {
        let mut f = vec![0.0; self.nv()];
        self.maxwellian(rho, u, temp, &mut f);
        let m = self.moments(&f);
        let exact = [rho, rho * u, 0.5 * rho * u * u + 0.5 * rho * temp];
        m.iter()
            .zip(exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Spatial discretization of the transport term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    #[default]
    Upwind,
    Weno5,
}

impl Transport {
    pub fn as_str(self) -> &'static str {
        match self {
            Transport::Upwind => "upwind",
            Transport::Weno5 => "weno5",
        }
    }
}

/// Writes `-a dq/dx` for a periodic field `q`.
pub fn advect(q: &[f64], a: f64, dx: f64, scheme: Transport, out: &mut [f64]) {
    let n = q.len();
    if a == 0.0 {
        out.fill(0.0);
        return;
    }
    match scheme {
        Transport::Upwind => {
            for k in 0..n {
                let diff = if a > 0.0 {
                    q[k] - q[(k + n - 1) % n]
                } else {
                    q[(k + 1) % n] - q[k]
                };
                out[k] = -a * diff / dx;
            }
        }
        Transport::Weno5 => {
            let wind = if a > 0.0 { Wind::Positive } else { Wind::Negative };
            let iface = weno5_flux(q, wind);
            for k in 0..n {
                out[k] = -a * (iface[k] - iface[(k + n - 1) % n]) / dx;
            }
        }
    }
}

/// Applies [`advect`] to component `comp` of a cell-major state with
/// `ncomp` components per cell, writing into the same slots of `out`.
pub fn advect_component(
    u: &[f64],
    ncomp: usize,
    comp: usize,
    a: f64,
    dx: f64,
    scheme: Transport,
    out: &mut [f64],
) {
    let q: Vec<f64> = u.iter().skip(comp).step_by(ncomp).copied().collect();
    let mut t = vec![0.0; q.len()];
    advect(&q, a, dx, scheme, &mut t);
    for (k, tk) in t.into_iter().enumerate() {
        out[k * ncomp + comp] = tk;
    }
}

/// Knudsen number as a function of position, sampled at cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsField {
    Constant(f64),
    /// `eps0 + tanh(1 - 11(x-1)) + tanh(1 + 11(x-1))`.
    Mixed { eps0: f64 },
}

impl EpsField {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            EpsField::Constant(e) => e,
            EpsField::Mixed { eps0 } => {
                eps0 + (1.0 - 11.0 * (x - 1.0)).tanh() + (1.0 + 11.0 * (x - 1.0)).tanh()
            }
        }
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Result<Vec<f64>, ProblemError> {
        let eps: Vec<f64> = grid.centers().iter().map(|&x| self.eval(x)).collect();
        match eps.iter().position(|e| !(*e > 0.0 && e.is_finite())) {
            Some(k) => Err(ProblemError::InvalidParameter(format!(
                "eps({}) = {} is not positive",
                grid.center(k),
                eps[k]
            ))),
            None => Ok(eps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_validate_and_place_points() {
        assert!(SpatialGrid::new(3, 0.0, 1.0).is_err());
        assert!(SpatialGrid::new(4, 1.0, 1.0).is_err());
        let g = SpatialGrid::new(4, 0.0, 2.0).unwrap();
        assert_eq!(g.centers(), vec![0.25, 0.75, 1.25, 1.75]);
        assert!(VelocityGrid::new(7, 1.0).is_err());
        let v = VelocityGrid::new(150, 15.0).unwrap();
        assert_eq!(v.weight(), 0.2);
        for j in 0..75 {
            assert_eq!(v.points()[j], -v.points()[149 - j]);
        }
    }

    #[test]
    fn default_velocity_grid_resolves_maxwellians() {
        let v = VelocityGrid::new(150, 15.0).unwrap();
        assert!(v.moment_error(1.0, 0.0, 1.0) < 1e-8);
        // Analytic Gaussian moments: (rho, rho u, rho u^2/2 + rho T/2).
        let mut f = vec![0.0; 150];
        v.maxwellian(1.3, 0.4, 0.8, &mut f);
        let m = v.moments(&f);
        let exact = [1.3, 0.52, 0.5 * 1.3 * 0.16 + 0.5 * 1.3 * 0.8];
        for k in 0..3 {
            assert!((m[k] - exact[k]).abs() < 1e-8, "{m:?}");
        }
        let coarse = VelocityGrid::new(8, 3.0).unwrap();
        assert!(coarse.moment_error(1.0, 0.0, 1.0) > 1e-8);
    }

    #[test]
    fn upwind_and_weno_conserve_and_kill_constants() {
        let q: Vec<f64> = (0..16).map(|k| 1.0 + (k as f64 * 0.7).sin()).collect();
        for scheme in [Transport::Upwind, Transport::Weno5] {
            for a in [1.0, -1.0, 0.0] {
                let mut out = vec![0.0; 16];
                advect(&q, a, 0.1, scheme, &mut out);
                assert!(out.iter().sum::<f64>().abs() < 1e-12);
                advect(&[3.0; 16], a, 0.1, scheme, &mut out);
                assert!(out.iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn mixed_eps_profile() {
        let e = EpsField::Mixed { eps0: 1e-5 };
        assert!((e.eval(1.0) - (1e-5 + 2.0 * 1f64.tanh())).abs() < 1e-15);
        assert!(e.eval(0.0) < 2e-5);
        assert!(e.eval(2.0) < 2e-5);
    }
}
