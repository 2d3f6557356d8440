//! Frequency lattice, spectral and physical vector fields, and the transform
//! pair between them.
//!
//! The continuous convention is `f^(xi) = (2 pi)^{-3/2} int exp(-i x.xi) f(x) dx`.
//! A lattice with spacing `delta_xi` is the Fourier-series dual of a periodic box
//! of side `2 pi / delta_xi`, so a coefficient `c_k` of the series relates to the
//! stored value through `u^(xi_k) = (2 pi)^{-3/2} L^3 c_k`.
//!
//! Arrays are stored in FFT order: axis index `i` carries the integer wavenumber
//! `i` for `i < n/2` and `i - n` otherwise, so the lattice covers `[-n/2, n/2)`.
//! The row `k_j = -n/2` is the Nyquist row; it has no Hermitian partner and is
//! zeroed before every inverse transform.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PmnsError, Result};
use crate::fft;

/// `(2 pi)^{-3/2}`, the normalization of the Fourier transform in three dimensions.
pub fn fourier_norm() -> f64 {
    (2.0 * PI).powf(-1.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    n_per_axis: usize,
    delta_xi: f64,
}

impl FrequencyGrid {
    pub fn new(n_per_axis: usize, delta_xi: f64) -> Result<Self> {
        if n_per_axis < 2 || n_per_axis % 2 != 0 {
            return Err(PmnsError::Parameter(format!(
                "n_per_axis must be even and >= 2, got {n_per_axis}"
            )));
        }
        if !(delta_xi.is_finite() && delta_xi > 0.0) {
            return Err(PmnsError::Parameter(format!(
                "delta_xi must be positive, got {delta_xi}"
            )));
        }
        Ok(Self {
            n_per_axis,
            delta_xi,
        })
    }

    pub fn n(&self) -> usize {
        self.n_per_axis
    }

    pub fn delta_xi(&self) -> f64 {
        self.delta_xi
    }

    /// Largest `|xi_j|` on the lattice.
    pub fn cutoff(&self) -> f64 {
        self.delta_xi * (self.n_per_axis / 2) as f64
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side of the periodic box dual to the lattice.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.delta_xi
    }

    pub fn dx(&self) -> f64 {
        self.period() / self.n_per_axis as f64
    }

    /// Integer wavenumber carried by axis index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n_per_axis;
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    #[inline]
    fn axis_index(&self, k: i64) -> Option<usize> {
        let h = (self.n_per_axis / 2) as i64;
        if k < -h || k >= h {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n_per_axis as i64) as usize)
        }
    }

    #[inline]
    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.n_per_axis;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn join(&self, i: [usize; 3]) -> usize {
        let n = self.n_per_axis;
        (i[0] * n + i[1]) * n + i[2]
    }

    pub fn k_at(&self, idx: usize) -> [i64; 3] {
        let i = self.split(idx);
        [
            self.wavenumber(i[0]),
            self.wavenumber(i[1]),
            self.wavenumber(i[2]),
        ]
    }

    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        Some(self.join([
            self.axis_index(k[0])?,
            self.axis_index(k[1])?,
            self.axis_index(k[2])?,
        ]))
    }

    pub fn xi_at(&self, idx: usize) -> [f64; 3] {
        let k = self.k_at(idx);
        [
            k[0] as f64 * self.delta_xi,
            k[1] as f64 * self.delta_xi,
            k[2] as f64 * self.delta_xi,
        ]
    }

    pub fn xi_sq_at(&self, idx: usize) -> f64 {
        let xi = self.xi_at(idx);
        xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    }

    /// `|xi|^2` for every lattice point, in storage order.
    pub fn xi_sq_table(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi_sq_at(i)).collect()
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        let h = self.n_per_axis / 2;
        self.split(idx).iter().any(|&i| i == h)
    }

    /// Storage index of `-xi`, if `-xi` lies on the lattice.
    pub fn neg_index(&self, idx: usize) -> Option<usize> {
        let k = self.k_at(idx);
        self.index_of([-k[0], -k[1], -k[2]])
    }

    /// Two-thirds rule: keep modes with `3 |k_j| < n` on every axis.
    pub fn dealias_keep(&self, idx: usize) -> bool {
        let n = self.n_per_axis as i64;
        self.k_at(idx).iter().all(|k| 3 * k.abs() < n)
    }

    /// Physical coordinate of a grid node, with the box centered on the origin.
    pub fn x_at(&self, idx: usize) -> [f64; 3] {
        let k = self.k_at(idx);
        let dx = self.dx();
        [k[0] as f64 * dx, k[1] as f64 * dx, k[2] as f64 * dx]
    }

    pub fn check_same(&self, other: &FrequencyGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(PmnsError::GridMismatch(format!(
                "{}^3 @ {} vs {}^3 @ {}",
                self.n_per_axis, self.delta_xi, other.n_per_axis, other.delta_xi
            )))
        }
    }
}

/// Fourier coefficients of a three-component vector field on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    grid: FrequencyGrid,
    comps: [Vec<Complex64>; 3],
}

/// Real samples of a vector field on the spatial grid dual to a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalVectorField {
    grid: FrequencyGrid,
    comps: [Vec<f64>; 3],
}

/// Spectral 3x3 tensor field; component `(j, k)` sits at `3 j + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensorField {
    grid: FrequencyGrid,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralVectorField {
    pub fn zeros(grid: FrequencyGrid) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_components(grid: FrequencyGrid, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(PmnsError::Input(format!(
                "component length does not match grid size {}",
                grid.len()
            )));
        }
        Ok(Self { grid, comps })
    }

    /// Builds a field mode by mode; the closure receives the storage index.
    pub fn from_fn(grid: FrequencyGrid, mut f: impl FnMut(usize) -> [Complex64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(idx);
            for (j, c) in out.comps.iter_mut().enumerate() {
                c[idx] = v[j];
            }
        }
        out
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.comps[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.comps[j]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn at(&self, idx: usize) -> [Complex64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn set(&mut self, idx: usize, v: [Complex64; 3]) {
        for j in 0..3 {
            self.comps[j][idx] = v[j];
        }
    }

    /// Largest coefficient modulus over all components and modes.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn map_modes(&self, mut f: impl FnMut(usize, [Complex64; 3]) -> [Complex64; 3]) -> Self {
        Self::from_fn(self.grid, |idx| f(idx, self.at(idx)))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_modes(|_, v| [v[0] * s, v[1] * s, v[2] * s])
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch in axpy");
        self.map_modes(|idx, v| {
            let w = other.at(idx);
            [v[0] + w[0] * s, v[1] + w[1] * s, v[2] + w[2] * s]
        })
    }

    pub fn zero_mode_pinned(mut self) -> Self {
        self.set(0, [Complex64::new(0.0, 0.0); 3]);
        self
    }

    pub fn without_nyquist(mut self) -> Self {
        for idx in 0..self.grid.len() {
            if self.grid.is_nyquist(idx) {
                self.set(idx, [Complex64::new(0.0, 0.0); 3]);
            }
        }
        self
    }

    /// Zeroes every mode removed by the two-thirds rule.
    pub fn dealiased(mut self) -> Self {
        for idx in 0..self.grid.len() {
            if !self.grid.dealias_keep(idx) {
                self.set(idx, [Complex64::new(0.0, 0.0); 3]);
            }
        }
        self
    }

    /// Largest `|u(xi) - conj(u(-xi))|` over lattice pairs (Nyquist rows skipped).
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for idx in 0..self.grid.len() {
            if let Some(neg) = self.grid.neg_index(idx) {
                if self.grid.is_nyquist(idx) {
                    continue;
                }
                for c in &self.comps {
                    worst = worst.max((c[idx] - c[neg].conj()).norm());
                }
            }
        }
        worst
    }

    /// Replaces the field by its Hermitian part `(u(xi) + conj(u(-xi))) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let grid = self.grid;
        Self::from_fn(grid, |idx| match grid.neg_index(idx) {
            Some(neg) if !grid.is_nyquist(idx) => {
                let a = self.at(idx);
                let b = self.at(neg);
                [
                    (a[0] + b[0].conj()) * 0.5,
                    (a[1] + b[1].conj()) * 0.5,
                    (a[2] + b[2].conj()) * 0.5,
                ]
            }
            _ => [Complex64::new(0.0, 0.0); 3],
        })
    }

    /// Largest `|xi . u(xi)|` over the lattice.
    pub fn divergence_max(&self) -> f64 {
        (0..self.grid.len())
            .map(|idx| {
                let xi = self.grid.xi_at(idx);
                let v = self.at(idx);
                (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }
}

impl Add for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn add(self, rhs: Self) -> SpectralVectorField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn sub(self, rhs: Self) -> SpectralVectorField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn mul(self, rhs: f64) -> SpectralVectorField {
        self.scale(rhs)
    }
}

impl PhysicalVectorField {
    pub fn zeros(grid: FrequencyGrid) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_components(grid: FrequencyGrid, comps: [Vec<f64>; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(PmnsError::Input(format!(
                "component length does not match grid size {}",
                grid.len()
            )));
        }
        Ok(Self { grid, comps })
    }

    /// Samples `f(x)` at every spatial node (box centered on the origin).
    pub fn from_fn(grid: FrequencyGrid, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.x_at(idx));
            for j in 0..3 {
                out.comps[j][idx] = v[j];
            }
        }
        out
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.comps[j]
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule `L^q` norm of the Euclidean magnitude; `q = inf` gives the max.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let mag = (0..self.grid.len()).map(|idx| {
            let v = self.at(idx);
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        });
        if q.is_infinite() {
            return mag.fold(0.0, f64::max);
        }
        let cell = self.grid.dx().powi(3);
        (mag.map(|m| m.powf(q)).sum::<f64>() * cell).powf(1.0 / q)
    }

    /// Rectangle-rule `L^q` norm of one component.
    pub fn component_lq_norm(&self, j: usize, q: f64) -> f64 {
        if q.is_infinite() {
            return self.comps[j].iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let cell = self.grid.dx().powi(3);
        (self.comps[j].iter().map(|v| v.abs().powf(q)).sum::<f64>() * cell).powf(1.0 / q)
    }
}

impl SpectralTensorField {
    pub fn zeros(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            comps: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; 9],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn component(&self, j: usize, k: usize) -> &[Complex64] {
        &self.comps[3 * j + k]
    }

    pub fn component_mut(&mut self, j: usize, k: usize) -> &mut [Complex64] {
        &mut self.comps[3 * j + k]
    }

    pub fn at(&self, idx: usize) -> [[Complex64; 3]; 3] {
        let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (j, row) in m.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = self.comps[3 * j + k][idx];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}

/// Scale applied to stored spectral values before an unnormalized inverse DFT.
fn synthesis_scale(grid: &FrequencyGrid) -> f64 {
    grid.delta_xi().powi(3) * fourier_norm()
}

/// Scale applied to an unnormalized forward DFT to obtain stored spectral values.
fn analysis_scale(grid: &FrequencyGrid) -> f64 {
    1.0 / (fourier_norm() * grid.delta_xi().powi(3) * grid.len() as f64)
}

/// Relative tolerance for the Hermitian-symmetry precondition of [`to_physical`].
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Inverse transform of one scalar lattice; returns the real part and the
/// largest imaginary residue.
pub(crate) fn synthesize_scalar(grid: &FrequencyGrid, coeffs: &[Complex64]) -> (Vec<f64>, f64) {
    let scale = synthesis_scale(grid);
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(idx, z)| if grid.is_nyquist(idx) { Complex64::new(0.0, 0.0) } else { z * scale })
        .collect();
    fft::inverse(&mut buf, grid.n());
    let resid = buf.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
    (buf.into_iter().map(|z| z.re).collect(), resid)
}

/// Forward transform of one real scalar lattice into stored spectral values,
/// keeping the zero mode.
pub(crate) fn analyze_scalar(grid: &FrequencyGrid, values: &[f64]) -> Vec<Complex64> {
    let scale = analysis_scale(grid);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut buf, grid.n());
    for z in buf.iter_mut() {
        *z *= scale;
    }
    buf
}

fn check_hermitian(f: &SpectralVectorField) -> Result<()> {
    let scale = f.max_abs();
    let dev = f.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(PmnsError::SymmetryViolation {
            max_deviation: dev,
            scale,
        });
    }
    Ok(())
}

/// Inverse transform to physical space; also returns the largest imaginary
/// residue of the complex inverse DFT.
pub fn to_physical_with_residue(f: &SpectralVectorField) -> Result<(PhysicalVectorField, f64)> {
    check_hermitian(f)?;
    let grid = *f.grid();
    let mut resid = 0.0_f64;
    let mut comps: [Vec<f64>; 3] = Default::default();
    for (j, out) in comps.iter_mut().enumerate() {
        let (re, r) = synthesize_scalar(&grid, f.component(j));
        resid = resid.max(r);
        *out = re;
    }
    Ok((PhysicalVectorField { grid, comps }, resid))
}

pub fn to_physical(f: &SpectralVectorField) -> Result<PhysicalVectorField> {
    to_physical_with_residue(f).map(|(p, _)| p)
}

/// Forward transform; the zero mode is pinned to 0 (mean-free convention).
pub fn to_spectral(g: &PhysicalVectorField) -> SpectralVectorField {
    let grid = *g.grid();
    let comps = [
        analyze_scalar(&grid, g.component(0)),
        analyze_scalar(&grid, g.component(1)),
        analyze_scalar(&grid, g.component(2)),
    ];
    SpectralVectorField { grid, comps }.zero_mode_pinned()
}

pub(crate) fn tensor_from_components(grid: FrequencyGrid, comps: Vec<Vec<Complex64>>) -> SpectralTensorField {
    debug_assert_eq!(comps.len(), 9);
    SpectralTensorField { grid, comps }
}

/// Builds a tensor field mode by mode.
pub fn tensor_from_fn(
    grid: FrequencyGrid,
    mut f: impl FnMut(usize) -> [[Complex64; 3]; 3],
) -> SpectralTensorField {
    let mut out = SpectralTensorField::zeros(grid);
    for idx in 0..grid.len() {
        let m = f(idx);
        for j in 0..3 {
            for k in 0..3 {
                out.comps[3 * j + k][idx] = m[j][k];
            }
        }
    }
    out
}

fn dyadic_factor(lambda: f64) -> Result<bool> {
    if (lambda - 2.0).abs() < 1e-12 {
        Ok(true)
    } else if (lambda - 0.5).abs() < 1e-12 {
        Ok(false)
    } else {
        Err(PmnsError::UnsupportedRescale(lambda))
    }
}

/// Whether mode `idx` receives a value under [`dyadic_rescale`] by `lambda`.
pub fn rescale_support(grid: &FrequencyGrid, lambda: f64, idx: usize) -> Result<bool> {
    let doubling = dyadic_factor(lambda)?;
    let k = grid.k_at(idx);
    let n = grid.n() as i64;
    Ok(if doubling {
        k.iter().all(|k| k % 2 == 0)
    } else {
        k.iter().all(|k| 4 * k.abs() < n)
    })
}

/// Spectral representation of `x -> lambda f(lambda x)` for `lambda` in `{2, 1/2}`:
/// `u_lambda^(xi) = lambda^{-2} u^(xi / lambda)`. Modes whose source `xi / lambda`
/// is off the lattice (or a Nyquist mode) come out as zero.
pub fn dyadic_rescale(f: &SpectralVectorField, lambda: f64) -> Result<SpectralVectorField> {
    let doubling = dyadic_factor(lambda)?;
    let grid = *f.grid();
    let zero = [Complex64::new(0.0, 0.0); 3];
    Ok(SpectralVectorField::from_fn(grid, |idx| {
        if !rescale_support(&grid, lambda, idx).unwrap_or(false) {
            return zero;
        }
        let k = grid.k_at(idx);
        let (src, factor) = if doubling {
            ([k[0] / 2, k[1] / 2, k[2] / 2], 0.25)
        } else {
            ([2 * k[0], 2 * k[1], 2 * k[2]], 4.0)
        };
        match grid.index_of(src) {
            Some(s) if !grid.is_nyquist(s) => {
                let v = f.at(s);
                [v[0] * factor, v[1] * factor, v[2] * factor]
            }
            _ => zero,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lattice_indexing_round_trips() {
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        assert_eq!(g.cutoff(), 2.0);
        for idx in 0..g.len() {
            assert_eq!(g.index_of(g.k_at(idx)), Some(idx));
        }
        assert_eq!(g.k_at(g.join([4, 0, 0])), [-4, 0, 0]);
        assert!(g.is_nyquist(g.join([4, 1, 0])));
        assert_eq!(g.neg_index(g.join([4, 0, 0])), None);
        assert!(FrequencyGrid::new(7, 1.0).is_err());
        assert!(FrequencyGrid::new(8, 0.0).is_err());
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        let p = to_physical(&SpectralVectorField::zeros(g)).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn conjugate_pair_gives_cosine() {
        // Coefficients 1/2 at +-xi0 represent cos(x.xi0) scaled by
        // (2 pi)^{-3/2} delta_xi^3, the lattice quadrature weight of the inverse transform.
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        let k0 = [1, 2, 0];
        let mut f = SpectralVectorField::zeros(g);
        let plus = g.index_of(k0).unwrap();
        let minus = g.index_of([-1, -2, 0]).unwrap();
        f.component_mut(0)[plus] = c(0.5, 0.0);
        f.component_mut(0)[minus] = c(0.5, 0.0);
        let p = to_physical(&f).unwrap();
        let amp = fourier_norm() * g.delta_xi().powi(3);
        let xi0 = [0.5, 1.0, 0.0];
        for idx in 0..g.len() {
            let x = g.x_at(idx);
            let expect = amp * (x[0] * xi0[0] + x[1] * xi0[1]).cos();
            assert!((p.component(0)[idx] - expect).abs() < 1e-14);
            assert_eq!(p.component(1)[idx], 0.0);
        }
    }

    #[test]
    fn constant_field_has_zero_spectrum() {
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        let p = PhysicalVectorField::from_fn(g, |_| [1.0, -2.0, 3.5]);
        let s = to_spectral(&p);
        assert!(s.max_abs() < 1e-12);
    }

    #[test]
    fn parseval_on_four_cube() {
        // Oracle: direct sums on both sides; l2 over x weighted by dx^3, over xi by dxi^3.
        let g = FrequencyGrid::new(4, 0.7).unwrap();
        let mut p = PhysicalVectorField::from_fn(g, |x| {
            [
                (x[0] * 0.7).sin() + 0.3 * (x[1] * 1.4).cos(),
                (x[2] * 0.7 + 0.2).cos(),
                x[0] * 0.01 - 0.5 * (x[1] * 0.7).sin() * (x[2] * 0.7).cos(),
            ]
        });
        // remove the mean so the pinned zero mode carries no energy
        for j in 0..3 {
            let mean = p.comps[j].iter().sum::<f64>() / g.len() as f64;
            p.comps[j].iter_mut().for_each(|v| *v -= mean);
        }
        let s = to_spectral(&p);
        let lhs: f64 = p.comps.iter().flat_map(|c| c.iter()).map(|v| v * v).sum::<f64>() * g.dx().powi(3);
        let rhs: f64 =
            s.comps.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum::<f64>() * g.delta_xi().powi(3);
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        let mut f = SpectralVectorField::zeros(g);
        f.component_mut(1)[g.index_of([1, 0, 0]).unwrap()] = c(1.0, 0.0);
        match to_physical(&f) {
            Err(PmnsError::SymmetryViolation { max_deviation, .. }) => assert!((max_deviation - 1.0).abs() < 1e-15),
            other => panic!("expected symmetry violation, got {other:?}"),
        }
    }

    #[test]
    fn homogeneous_degree_minus_two_is_rescale_invariant() {
        let g = FrequencyGrid::new(16, 0.25).unwrap();
        let f = SpectralVectorField::from_fn(g, |idx| {
            let s = g.xi_sq_at(idx);
            if idx == 0 {
                [c(0.0, 0.0); 3]
            } else {
                [c(1.0 / s, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
            }
        });
        let r = dyadic_rescale(&f, 2.0).unwrap();
        for idx in 1..g.len() {
            if rescale_support(&g, 2.0, idx).unwrap() && !g.is_nyquist(idx) {
                assert!((r.at(idx)[0] - f.at(idx)[0]).norm() < 1e-15 * f.at(idx)[0].norm());
            }
        }
    }

    #[test]
    fn rescale_round_trip_on_surviving_modes() {
        let g = FrequencyGrid::new(16, 0.25).unwrap();
        let f = SpectralVectorField::from_fn(g, |idx| {
            let k = g.k_at(idx);
            [c(k[0] as f64, 0.5), c(1.0, -(k[1] as f64)), c(0.1 * k[2] as f64, 0.0)]
        });
        let back = dyadic_rescale(&dyadic_rescale(&f, 2.0).unwrap(), 0.5).unwrap();
        for idx in 0..g.len() {
            if rescale_support(&g, 0.5, idx).unwrap() {
                assert_eq!(back.at(idx), f.at(idx));
            } else {
                assert_eq!(back.at(idx), [c(0.0, 0.0); 3]);
            }
        }
        assert!(matches!(dyadic_rescale(&f, 3.0), Err(PmnsError::UnsupportedRescale(_))));
    }
}
