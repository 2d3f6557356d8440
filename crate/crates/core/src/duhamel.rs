//! Pseudospectral products and the Duhamel bilinear operator
//! `B(u, v)(t) = -int_0^t S(t - tau) P div (u (x) v)(tau) dtau`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PmnsError, Result};
use crate::grid::{
    analyze_scalar, synthesize_scalar, tensor_from_components, SpectralTensorField, SpectralVectorField,
    HERMITIAN_TOL,
};
use crate::quadrature::composite;
use crate::symbols::divergence_contract;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct BilinearConfig {
    /// Two-thirds rule on the inputs and the product.
    pub dealias: bool,
    /// 1: left-endpoint constant interpolation of the integrand, 2: linear.
    pub quad_order: u8,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        Self {
            dealias: true,
            quad_order: 2,
        }
    }
}

impl BilinearConfig {
    pub fn oracle() -> Self {
        Self {
            dealias: false,
            quad_order: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quad_order == 1 || self.quad_order == 2 {
            Ok(())
        } else {
            Err(PmnsError::Parameter(format!("quad_order must be 1 or 2, got {}", self.quad_order)))
        }
    }
}

/// `phi_1(z) = (e^z - 1) / z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

/// `phi_2(z) = (e^z - 1 - z) / z^2`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // 1/2 + z/6 + z^2/24 + ...
        let mut term = 0.5;
        let mut sum = 0.5;
        for k in 3..20 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

fn physical_components(f: &SpectralVectorField, dealias: bool) -> Result<[Vec<f64>; 3]> {
    let f = if dealias { f.clone().dealiased() } else { f.clone() };
    let scale = f.max_abs();
    let dev = f.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(PmnsError::SymmetryViolation {
            max_deviation: dev,
            scale,
        });
    }
    let grid = *f.grid();
    Ok([
        synthesize_scalar(&grid, f.component(0)).0,
        synthesize_scalar(&grid, f.component(1)).0,
        synthesize_scalar(&grid, f.component(2)).0,
    ])
}

/// Spectrum of `u (x) v` by products on the spatial grid. Without dealiasing
/// this equals `(2 pi)^{-3/2} delta_xi^3` times the circular lattice convolution
/// of the (Nyquist-free) input spectra.
pub fn tensor_product_hat(
    u: &SpectralVectorField,
    v: &SpectralVectorField,
    dealias: bool,
) -> Result<SpectralTensorField> {
    u.grid().check_same(v.grid())?;
    let grid = *u.grid();
    let pu = physical_components(u, dealias)?;
    let pv = if std::ptr::eq(u, v) {
        pu.clone()
    } else {
        physical_components(v, dealias)?
    };
    let comps: Vec<Vec<Complex64>> = (0..9)
        .into_par_iter()
        .map(|jk| {
            let (j, k) = (jk / 3, jk % 3);
            let prod: Vec<f64> = pu[j].iter().zip(&pv[k]).map(|(a, b)| a * b).collect();
            let mut hat = analyze_scalar(&grid, &prod);
            if dealias {
                for (idx, z) in hat.iter_mut().enumerate() {
                    if !grid.dealias_keep(idx) {
                        *z = Complex64::new(0.0, 0.0);
                    }
                }
            }
            hat
        })
        .collect();
    Ok(tensor_from_components(grid, comps))
}

/// `P(xi) i xi . (u (x) v)^(xi)`.
pub fn nonlinear_term(u: &SpectralVectorField, v: &SpectralVectorField, dealias: bool) -> Result<SpectralVectorField> {
    Ok(divergence_contract(&tensor_product_hat(u, v, dealias)?))
}

fn nonlinear_curve(u: &Trajectory, v: &Trajectory, upto: usize, cfg: &BilinearConfig) -> Result<Vec<SpectralVectorField>> {
    let same = std::ptr::eq(u, v);
    (0..=upto)
        .into_par_iter()
        .map(|i| {
            let a = u.field(i);
            let b = if same { a } else { v.field(i) };
            nonlinear_term(a, b, cfg.dealias)
        })
        .collect()
}

/// Advances a Duhamel integral from one knot to the next:
/// `B_next = e^{-h s} B + sign int_0^h e^{-(h - sigma) s} N(sigma) dsigma`
/// with `N` interpolated between `n0` and `n1`.
pub(crate) fn exp_step(
    b: &SpectralVectorField,
    n0: &SpectralVectorField,
    n1: &SpectralVectorField,
    h: f64,
    order: u8,
    xi_sq: &[f64],
    sign: f64,
) -> SpectralVectorField {
    let grid = *b.grid();
    let mut out = SpectralVectorField::zeros(grid);
    for j in 0..3 {
        let (bj, a, c) = (b.component(j), n0.component(j), n1.component(j));
        let oj = out.component_mut(j);
        oj.par_iter_mut().enumerate().for_each(|(idx, o)| {
            let z = -h * xi_sq[idx];
            let decay = z.exp();
            let p1 = phi1(z);
            *o = if order == 1 {
                bj[idx] * decay + a[idx] * (sign * h * p1)
            } else {
                let p2 = phi2(z);
                bj[idx] * decay + a[idx] * (sign * h * (p1 - p2)) + c[idx] * (sign * h * p2)
            };
        });
    }
    out
}

fn check_pair(u: &Trajectory, v: &Trajectory, cfg: &BilinearConfig) -> Result<()> {
    cfg.validate()?;
    u.check_compatible(v)
}

/// `B(u, v)` at every knot of the shared time grid.
pub fn bilinear_trajectory(u: &Trajectory, v: &Trajectory, cfg: &BilinearConfig) -> Result<Trajectory> {
    check_pair(u, v, cfg)?;
    bilinear_upto(u, v, u.len() - 1, cfg)
}

fn bilinear_upto(u: &Trajectory, v: &Trajectory, upto: usize, cfg: &BilinearConfig) -> Result<Trajectory> {
    let grid = *u.grid();
    let nl = nonlinear_curve(u, v, upto, cfg)?;
    let xi_sq = grid.xi_sq_table();
    let knots = u.knots();
    let mut out = Vec::with_capacity(upto + 1);
    out.push(SpectralVectorField::zeros(grid));
    for i in 0..upto {
        let h = knots[i + 1] - knots[i];
        let next = exp_step(&out[i], &nl[i], &nl[i + 1], h, cfg.quad_order, &xi_sq, -1.0);
        out.push(next);
    }
    Trajectory::new(knots[..=upto].to_vec(), out)
}

/// `B(u, v)(t)` at a knot `t`.
pub fn bilinear_b(u: &Trajectory, v: &Trajectory, t: f64, cfg: &BilinearConfig) -> Result<SpectralVectorField> {
    check_pair(u, v, cfg)?;
    let i = u.knot_index(t)?;
    Ok(bilinear_upto(u, v, i, cfg)?.last().clone())
}

/// Stationary counterpart `-|xi|^{-2} P i xi . (u (x) v)^`; zero mode pinned.
pub fn bilinear_b_stationary(
    u: &SpectralVectorField,
    v: &SpectralVectorField,
    cfg: &BilinearConfig,
) -> Result<SpectralVectorField> {
    u.grid().check_same(v.grid())?;
    let grid = *u.grid();
    let n = nonlinear_term(u, v, cfg.dealias)?;
    Ok(n
        .map_modes(|idx, z| {
            if idx == 0 {
                return [Complex64::new(0.0, 0.0); 3];
            }
            let s = -1.0 / grid.xi_sq_at(idx);
            [z[0] * s, z[1] * s, z[2] * s]
        })
        .zero_mode_pinned())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszRecord {
    pub xi: [f64; 3],
    /// Quadrature of the truncated integral over `|z| < R_max`.
    pub lhs: f64,
    /// `pi^3 / |xi|`.
    pub rhs: f64,
    pub rel_err: f64,
    /// Analytic value of the discarded part `|z| > R_max`.
    pub tail: f64,
}

/// `g(s) = ln|(s + 1)/(s - 1)| / s`, the radial kernel after angular integration.
fn riesz_kernel(s: f64) -> f64 {
    if s < 1e-4 {
        // 2 (1 + s^2/3 + s^4/5)
        let s2 = s * s;
        2.0 * (1.0 + s2 / 3.0 + s2 * s2 / 5.0)
    } else {
        ((s + 1.0) / (s - 1.0)).abs().ln() / s
    }
}

/// `int_S^inf g(s) ds = 2 sum_{m odd} 1 / (m^2 S^m)` for `S > 1`.
fn riesz_tail(big_s: f64) -> f64 {
    let mut sum = 0.0;
    let mut m = 1;
    loop {
        let term = 1.0 / ((m * m) as f64 * big_s.powi(m));
        sum += term;
        if term < 1e-18 * sum || m > 2001 {
            break;
        }
        m += 2;
    }
    2.0 * sum
}

/// Quadrature check of `|xi|^{-2} * |xi|^{-2} = pi^3 |xi|^{-1}`. After the angular
/// integration `int_{|z|<R} dz / (|xi - z|^2 |z|^2) = (2 pi / rho) int_0^{R/rho} g(s) ds`;
/// the logarithmic singularity at `s = 1` is removed by `s = 1 -+ w^4`.
pub fn riesz_convolution_check(xi_samples: &[[f64; 3]], r_max: f64, n_quad: usize) -> Result<Vec<RieszRecord>> {
    const ORDER: usize = 16;
    let panels = (n_quad / (3 * ORDER)).max(1);
    xi_samples
        .iter()
        .map(|&xi| {
            let rho = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            if !(rho > 0.0) {
                return Err(PmnsError::Parameter("riesz check needs xi != 0".into()));
            }
            let big_s = r_max / rho;
            if !(big_s > 2.0) {
                return Err(PmnsError::Parameter(format!("R_max = {r_max} too small for |xi| = {rho}")));
            }
            // with d = w^4: g(1 -+ d) = ln((2 -+ d) / d) / (1 -+ d)
            let inner = composite(0.0, 1.0, panels, ORDER, |w| {
                let w3 = w * w * w;
                let d = w3 * w;
                if d > 1.0 - 1e-4 {
                    4.0 * w3 * riesz_kernel(1.0 - d)
                } else {
                    4.0 * w3 * ((2.0 - d) / d).ln() / (1.0 - d)
                }
            });
            let near = composite(0.0, 1.0, panels, ORDER, |w| {
                let w3 = w * w * w;
                let d = w3 * w;
                4.0 * w3 * ((2.0 + d) / d).ln() / (1.0 + d)
            });
            let far = composite(2f64.ln(), big_s.ln(), panels, ORDER, |y| {
                let s = y.exp();
                s * riesz_kernel(s)
            });
            let lhs = 2.0 * PI / rho * (inner + near + far);
            let rhs = PI.powi(3) / rho;
            Ok(RieszRecord {
                xi,
                lhs,
                rhs,
                rel_err: (lhs - rhs).abs() / rhs,
                tail: 2.0 * PI / rho * riesz_tail(big_s),
            })
        })
        .collect()
}

pub fn write_riesz_csv<W: Write>(mut w: W, records: &[RieszRecord]) -> Result<()> {
    writeln!(w, "xi_1,xi_2,xi_3,lhs,rhs,rel_err,tail")?;
    for r in records {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.xi[0], r.xi[1], r.xi[2], r.lhs, r.rhs, r.rel_err, r.tail
        )?;
    }
    Ok(())
}
