//! Fourier multipliers of the mild formulation: Leray projector, heat
//! semigroup, divergence contraction and the constant kappa.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{PmnsError, Result};
use crate::grid::{SpectralTensorField, SpectralVectorField};

/// Leray symbol `delta_jk - xi_j xi_k / |xi|^2`; the identity at `xi = 0`.
pub fn leray_matrix(xi: [f64; 3]) -> [[f64; 3]; 3] {
    let s = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            let delta = if j == k { 1.0 } else { 0.0 };
            m[j][k] = if s == 0.0 { delta } else { delta - xi[j] * xi[k] / s };
        }
    }
    m
}

#[inline]
pub(crate) fn project(xi: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let s = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if s == 0.0 {
        return v;
    }
    let dot = (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]) / s;
    [v[0] - dot * xi[0], v[1] - dot * xi[1], v[2] - dot * xi[2]]
}

pub fn leray_apply(f: &SpectralVectorField) -> SpectralVectorField {
    let grid = *f.grid();
    f.map_modes(|idx, v| project(grid.xi_at(idx), v))
}

pub fn heat_apply(f: &SpectralVectorField, t: f64) -> Result<SpectralVectorField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PmnsError::Parameter(format!("heat time must be >= 0, got {t}")));
    }
    let grid = *f.grid();
    Ok(f.map_modes(|idx, v| {
        let d = (-t * grid.xi_sq_at(idx)).exp();
        [v[0] * d, v[1] * d, v[2] * d]
    }))
}

/// `P(xi) (i xi . T(xi))`, with component `j` of the contraction equal to
/// `sum_k i xi_k T_jk`. The zero mode comes out as 0.
pub fn divergence_contract(t: &SpectralTensorField) -> SpectralVectorField {
    let grid = *t.grid();
    SpectralVectorField::from_fn(grid, |idx| {
        let xi = grid.xi_at(idx);
        let m = t.at(idx);
        let i = Complex64::new(0.0, 1.0);
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for j in 0..3 {
            for k in 0..3 {
                v[j] += i * xi[k] * m[j][k];
            }
        }
        project(xi, v)
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaConstant {
    pub value: f64,
    /// Largest off-diagonal `|P_jk|` seen on the sample.
    pub max_off_diagonal: f64,
    pub n_directions: usize,
}

/// Maximizes `|P_jk(xi)|` over a Fibonacci sphere. An odd point count puts one
/// sample exactly on the equator `xi_3 = 0`, where `P_33 = 1` is attained.
pub fn kappa_estimate(n_directions: usize) -> Result<KappaConstant> {
    if n_directions < 100 {
        return Err(PmnsError::Parameter(format!(
            "kappa_estimate needs at least 100 directions, got {n_directions}"
        )));
    }
    let n = n_directions | 1;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut value = 0.0_f64;
    let mut off = 0.0_f64;
    for i in 0..n {
        let z = 1.0 - (2 * i + 1) as f64 / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden * i as f64;
        let m = leray_matrix([r * phi.cos(), r * phi.sin(), z]);
        for (j, row) in m.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                value = value.max(v.abs());
                if j != k {
                    off = off.max(v.abs());
                }
            }
        }
    }
    Ok(KappaConstant {
        value,
        max_off_diagonal: off,
        n_directions: n,
    })
}

/// Contraction constants of the bilinear estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EtaConstant {
    pub kappa: f64,
    /// `kappa pi^3`, the constant without the convolution-theorem factor.
    pub eta_bare: f64,
    /// `kappa pi^3 (2 pi)^{-3/2}`, consistent with the implemented transform.
    pub eta_effective: f64,
}

impl EtaConstant {
    pub fn new(kappa: f64) -> Self {
        let eta_bare = kappa * PI.powi(3);
        Self {
            kappa,
            eta_bare,
            eta_effective: eta_bare * crate::grid::fourier_norm(),
        }
    }

    /// Kappa is exactly 1 for the Leray symbol.
    pub fn exact() -> Self {
        Self::new(1.0)
    }
}

/// Largest admissible smallness parameter `1 / (4 eta)`.
pub fn smallness_threshold(eta: f64) -> f64 {
    1.0 / (4.0 * eta)
}
