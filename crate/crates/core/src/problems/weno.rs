//! Fifth-order WENO (Jiang-Shu) reconstruction on periodic cell averages.

pub const WENO_EPS: f64 = 1e-6;
pub const LINEAR_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];

/// Direction of the characteristic wind, which selects the upwind stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wind {
    Positive,
    Negative,
}

/// Nonlinear weights for the stencil `v = (v[i-2], v[i-1], v[i], v[i+1], v[i+2])`
/// reconstructing at `i + 1/2` from the left.
pub fn weno5_weights(v: &[f64; 5]) -> [f64; 3] {
    let [a, b, c, d, e] = *v;
    let beta = [
        13.0 / 12.0 * (a - 2.0 * b + c).powi(2) + 0.25 * (a - 4.0 * b + 3.0 * c).powi(2),
        13.0 / 12.0 * (b - 2.0 * c + d).powi(2) + 0.25 * (b - d).powi(2),
        13.0 / 12.0 * (c - 2.0 * d + e).powi(2) + 0.25 * (3.0 * c - 4.0 * d + e).powi(2),
    ];
    let alpha: [f64; 3] = std::array::from_fn(|k| LINEAR_WEIGHTS[k] / (WENO_EPS + beta[k]).powi(2));
    let sum: f64 = alpha.iter().sum();
    alpha.map(|x| x / sum)
}

/// Left-biased value at `i + 1/2` from the five cell averages around `i`.
pub fn weno5_reconstruct(v: &[f64; 5]) -> f64 {
    let [a, b, c, d, e] = *v;
    let q = [
        (2.0 * a - 7.0 * b + 11.0 * c) / 6.0,
        (-b + 5.0 * c + 2.0 * d) / 6.0,
        (2.0 * c + 5.0 * d - e) / 6.0,
    ];
    let w = weno5_weights(v);
    w[0] * q[0] + w[1] * q[1] + w[2] * q[2]
}

/// Interface values `out[i]` at `x_{i+1/2}` for every cell `i` of a periodic
/// array, reconstructed from the upwind side of `wind`.
pub fn weno5_flux(cells: &[f64], wind: Wind) -> Vec<f64> {
    let n = cells.len();
    assert!(n >= 5, "WENO5 needs at least 5 cells, got {n}");
    let at = |k: isize| cells[k.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|i| {
            let stencil = match wind {
                Wind::Positive => [at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2)],
                Wind::Negative => [at(i + 3), at(i + 2), at(i + 1), at(i), at(i - 1)],
            };
            weno5_reconstruct(&stencil)
        })
        .collect()
}
