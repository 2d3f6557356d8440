//! Landau jets: the explicit one-parameter family of stationary solutions that
//! are smooth away from the origin and forced by a Dirac mass `b(c) delta_0 e_1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PmnsError, Result};
use crate::grid::{to_spectral, FrequencyGrid, PhysicalVectorField, SpectralVectorField};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauParams {
    c: f64,
}

impl LandauParams {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.abs() > 1.0 && c.is_finite()) {
            return Err(PmnsError::Domain(format!("Landau parameter needs |c| > 1, got {c}")));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn b(&self) -> f64 {
        b_closed(self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauValue {
    pub u: [f64; 3],
    pub p: f64,
}

/// Closed forms at a complex point, so derivatives can be taken by complex step.
fn eval_complex(c: f64, x: [Complex64; 3]) -> ([Complex64; 3], Complex64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let d = r * c - x[0];
    let den = r * d * d;
    let s = x[0] * c - r;
    let u1 = (r * r * c - x[0] * r * 2.0 + x[0] * x[0] * c) * 2.0 / den;
    let u2 = x[1] * s * 2.0 / den;
    let u3 = x[2] * s * 2.0 / den;
    let p = s * 4.0 / den;
    ([u1, u2, u3], p)
}

fn eval_real(c: f64, x: [f64; 3]) -> ([f64; 3], f64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let d = c * r - x[0];
    let den = r * d * d;
    let s = c * x[0] - r;
    (
        [
            2.0 * (c * r * r - 2.0 * x[0] * r + c * x[0] * x[0]) / den,
            2.0 * x[1] * s / den,
            2.0 * x[2] * s / den,
        ],
        4.0 * s / den,
    )
}

fn check_point(x: [f64; 3]) -> Result<()> {
    if x == [0.0; 3] {
        return Err(PmnsError::SingularPoint(x));
    }
    Ok(())
}

/// Velocity and pressure at `x != 0`.
pub fn landau_eval(params: &LandauParams, x: [f64; 3]) -> Result<LandauValue> {
    check_point(x)?;
    let (u, p) = eval_real(params.c, x);
    Ok(LandauValue { u, p })
}

const CSTEP: f64 = 1e-30;

/// `(du_k / dx_j)[k][j]` and `dp / dx_j` by complex-step differentiation.
fn gradients(c: f64, x: [f64; 3]) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut du = [[0.0; 3]; 3];
    let mut dp = [0.0; 3];
    for j in 0..3 {
        let mut z = [Complex64::new(x[0], 0.0), Complex64::new(x[1], 0.0), Complex64::new(x[2], 0.0)];
        z[j].im = CSTEP;
        let (u, p) = eval_complex(c, z);
        for k in 0..3 {
            du[k][j] = u[k].im / CSTEP;
        }
        dp[j] = p.im / CSTEP;
    }
    (du, dp)
}

/// Exact gradient `du[k][j] = d u_k / d x_j` at `x != 0`.
pub fn landau_gradient(params: &LandauParams, x: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    check_point(x)?;
    Ok(gradients(params.c, x).0)
}

fn b_closed(c: f64) -> f64 {
    let a = c.abs();
    let core = if a >= 4.0 {
        // 4a - 4a^2 atanh(1/a) = -4 sum_{m>=1} a^{1-2m} / (2m + 1)
        let inv2 = 1.0 / (a * a);
        let mut pow = 1.0 / a;
        let mut sum = 0.0;
        for m in 1..60 {
            let term = pow / (2 * m + 1) as f64;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            pow *= inv2;
        }
        -4.0 * sum
    } else {
        4.0 * a + 2.0 * a * a * ((a - 1.0) / (a + 1.0)).ln()
    };
    let b = 4.0 * PI * (core + 16.0 / 3.0 * a / (a * a - 1.0));
    b.copysign(c)
}

/// Forcing amplitude `b(c) = 4 pi (4c + 2c^2 log((c-1)/(c+1)) + 16c / (3(c^2-1)))`.
pub fn b_of_c(c: f64) -> Result<f64> {
    LandauParams::new(c).map(|p| p.b())
}

/// Gauss-Legendre evaluation of the surface integral that produces `b(c)`.
pub fn b_surface_quadrature(c: f64, n_quad: usize) -> Result<f64> {
    LandauParams::new(c)?;
    if n_quad < 64 {
        return Err(PmnsError::Parameter(format!("n_quad must be at least 64, got {n_quad}")));
    }
    let (x, w) = gauss_legendre(n_quad);
    let k = c * c - 1.0;
    let sum: f64 = x
        .iter()
        .zip(&w)
        .map(|(&x1, &wi)| {
            let d = c - x1;
            let u1 = c + k * (c / (d * d) - 2.0 / d);
            wi * 2.0 * (u1 * (1.0 + 2.0 * k / (d * d)) - 2.0 / d)
        })
        .sum();
    Ok(2.0 * PI * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `c > 1`, where `b > 0`.
    Positive,
    /// `c < -1`, where `b < 0`.
    Negative,
}

/// Inverts `b` on the chosen branch by bisection in `log(|c| - 1)`.
pub fn c_of_b(b_target: f64, branch: Branch) -> Result<f64> {
    let sign = match branch {
        Branch::Positive => 1.0,
        Branch::Negative => -1.0,
    };
    if !(b_target * sign > 0.0) || !b_target.is_finite() {
        return Err(PmnsError::Domain(format!("b = {b_target} is not attained on the {branch:?} branch")));
    }
    let target = b_target.abs();
    let f = |y: f64| b_closed(1.0 + y.exp());
    let (mut lo, mut hi) = (-30.0_f64, 40.0_f64);
    if !(f(lo) >= target && f(hi) <= target) {
        return Err(PmnsError::Domain(format!(
            "b = {b_target} outside the representable range [{:e}, {:e}]",
            f(hi),
            f(lo)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    let c = 1.0 + (0.5 * (lo + hi)).exp();
    let resid = (b_closed(c) - target).abs() / target;
    if resid >= 1e-10 {
        return Err(PmnsError::Domain(format!("bisection stalled with relative residual {resid:e}")));
    }
    Ok(sign * c)
}

/// Smooth bump `phi(x) = exp(1 - 1 / (1 - q))`, `q = |x - center|^2 / radius^2`, with `phi(center) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Bump {
    pub fn standard() -> Self {
        Self {
            center: [0.0; 3],
            radius: 1.0,
        }
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let q = self.q(x);
        if q >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - q)).exp()
        }
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let q = self.q(x);
        if q >= 1.0 {
            return [0.0; 3];
        }
        let one = 1.0 - q;
        let f = -(1.0 - 1.0 / one).exp() / (one * one) * 2.0 / (self.radius * self.radius);
        [
            f * (x[0] - self.center[0]),
            f * (x[1] - self.center[1]),
            f * (x[2] - self.center[2]),
        ]
    }

    fn q(&self, x: [f64; 3]) -> f64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (self.radius * self.radius)
    }

    pub fn contains_origin(&self) -> bool {
        self.q([0.0; 3]) < 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakQuadrature {
    pub r_panels: usize,
    pub r_order: usize,
    pub n_mu: usize,
    pub n_phi: usize,
    /// Largest excision radius; the sequence is `rho, rho/2, rho/4`.
    pub rho: f64,
}

impl Default for WeakQuadrature {
    fn default() -> Self {
        Self {
            r_panels: 8,
            r_order: 16,
            n_mu: 48,
            n_phi: 32,
            rho: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakFormReport {
    pub c: f64,
    pub b: f64,
    pub phi_at_origin: f64,
    /// `int (grad u_k . grad phi - u_k u . grad phi - p d_k phi) dx`, extrapolated in rho.
    pub momentum: [f64; 3],
    /// `int u . grad phi dx`, extrapolated in rho.
    pub divergence: f64,
    /// Raw values `[rho, m_1, m_2, m_3, div]` before extrapolation.
    pub levels: Vec<[f64; 5]>,
}

/// Integrand of the momentum and divergence pairings at `x`.
fn weak_integrand(c: f64, bump: &Bump, x: [f64; 3]) -> [f64; 4] {
    let g = bump.gradient(x);
    if g == [0.0; 3] {
        return [0.0; 4];
    }
    let (u, p) = eval_real(c, x);
    let (du, _) = gradients(c, x);
    let u_dot_g = u[0] * g[0] + u[1] * g[1] + u[2] * g[2];
    let mut out = [0.0; 4];
    for k in 0..3 {
        let grad_dot = du[k][0] * g[0] + du[k][1] * g[1] + du[k][2] * g[2];
        out[k] = grad_dot - u[k] * u_dot_g - p * g[k];
    }
    out[3] = u_dot_g;
    out
}

/// Spherical-shell quadrature of the pairings over `rho < |x - o| < r_out`.
fn shell_integral(c: f64, bump: &Bump, origin: [f64; 3], rho: f64, r_out: f64, q: &WeakQuadrature) -> [f64; 4] {
    let (xr, wr) = gauss_legendre(q.r_order);
    let (xm, wm) = gauss_legendre(q.n_mu);
    let h = (r_out - rho) / q.r_panels as f64;
    let dphi = 2.0 * PI / q.n_phi as f64;
    let nodes: Vec<(f64, f64)> = (0..q.r_panels)
        .flat_map(|p| {
            let mid = rho + (p as f64 + 0.5) * h;
            xr.iter()
                .zip(&wr)
                .map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
                .collect::<Vec<_>>()
        })
        .collect();
    let partial: Vec<[f64; 4]> = nodes
        .par_iter()
        .map(|&(r, w_r)| {
            let mut acc = [0.0; 4];
            for (mu, w_mu) in xm.iter().zip(&wm) {
                let s = (1.0 - mu * mu).max(0.0).sqrt();
                for k in 0..q.n_phi {
                    let ph = dphi * k as f64;
                    let x = [
                        origin[0] + r * mu,
                        origin[1] + r * s * ph.cos(),
                        origin[2] + r * s * ph.sin(),
                    ];
                    let f = weak_integrand(c, bump, x);
                    let w = w_r * w_mu * dphi * r * r;
                    for i in 0..4 {
                        acc[i] += w * f[i];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; 4];
    for a in partial {
        for i in 0..4 {
            total[i] += a[i];
        }
    }
    total
}

/// Pairs the Landau field with the bump in the weak momentum and continuity
/// equations. When the support contains the origin a ball of radius `rho` is
/// excised and the results are Richardson-extrapolated over `rho, rho/2, rho/4`.
pub fn weak_form_residual(c: f64, bump: &Bump, quad: &WeakQuadrature) -> Result<WeakFormReport> {
    let params = LandauParams::new(c)?;
    if !(bump.radius > 0.0) {
        return Err(PmnsError::Parameter("bump radius must be positive".into()));
    }
    if quad.r_panels == 0 || quad.r_order == 0 || quad.n_mu == 0 || quad.n_phi == 0 || !(quad.rho > 0.0) {
        return Err(PmnsError::Parameter("weak-form quadrature sizes must be positive".into()));
    }
    let (momentum, divergence, levels) = if bump.contains_origin() {
        let cn = bump.center;
        let r_out = (cn[0] * cn[0] + cn[1] * cn[1] + cn[2] * cn[2]).sqrt() + bump.radius;
        let rhos = [quad.rho, quad.rho / 2.0, quad.rho / 4.0];
        let vals: Vec<[f64; 4]> = rhos
            .iter()
            .map(|&rho| shell_integral(c, bump, [0.0; 3], rho, r_out, quad))
            .collect();
        let mut out = [0.0; 4];
        for i in 0..4 {
            let r1a = 2.0 * vals[1][i] - vals[0][i];
            let r1b = 2.0 * vals[2][i] - vals[1][i];
            out[i] = (4.0 * r1b - r1a) / 3.0;
        }
        let levels = rhos
            .iter()
            .zip(&vals)
            .map(|(rho, v)| [*rho, v[0], v[1], v[2], v[3]])
            .collect();
        ([out[0], out[1], out[2]], out[3], levels)
    } else {
        let v = shell_integral(c, bump, bump.center, 0.0, bump.radius, quad);
        ([v[0], v[1], v[2]], v[3], vec![[0.0, v[0], v[1], v[2], v[3]]])
    };
    Ok(WeakFormReport {
        c,
        b: params.b(),
        phi_at_origin: bump.value([0.0; 3]),
        momentum,
        divergence,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseResidual {
    pub momentum: [f64; 3],
    pub divergence: f64,
}

/// `-Laplace u + (u . grad) u + grad p` and `div u` at `x` by central differences with step `h`.
pub fn pointwise_residual(c: f64, x: [f64; 3], h: f64) -> Result<PointwiseResidual> {
    LandauParams::new(c)?;
    check_point(x)?;
    let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if !(h > 0.0 && h < 0.5 * norm) {
        return Err(PmnsError::Parameter(format!("step h = {h} must satisfy 0 < h < |x|/2")));
    }
    let at = |dx: [f64; 3]| eval_real(c, [x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]]);
    let (u0, _) = at([0.0; 3]);
    let mut du = [[0.0; 3]; 3];
    let mut dp = [0.0; 3];
    let mut lap = [0.0; 3];
    for j in 0..3 {
        let mut e = [0.0; 3];
        e[j] = h;
        let (up, pp) = at(e);
        e[j] = -h;
        let (um, pm) = at(e);
        for k in 0..3 {
            du[k][j] = (up[k] - um[k]) / (2.0 * h);
            lap[k] += (up[k] - 2.0 * u0[k] + um[k]) / (h * h);
        }
        dp[j] = (pp - pm) / (2.0 * h);
    }
    let mut momentum = [0.0; 3];
    for k in 0..3 {
        let adv = u0[0] * du[k][0] + u0[1] * du[k][1] + u0[2] * du[k][2];
        momentum[k] = -lap[k] + adv + dp[k];
    }
    Ok(PointwiseResidual {
        momentum,
        divergence: du[0][0] + du[1][1] + du[2][2],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualConvergence {
    pub x: [f64; 3],
    pub steps: Vec<f64>,
    pub momentum_norms: Vec<f64>,
    pub divergence_abs: Vec<f64>,
    /// Least-squares slope of `log |momentum|` against `log h`.
    pub order: f64,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Measured order of [`pointwise_residual`] under step refinement.
pub fn residual_convergence(c: f64, x: [f64; 3], steps: &[f64]) -> Result<ResidualConvergence> {
    if steps.len() < 2 {
        return Err(PmnsError::Parameter("need at least two steps".into()));
    }
    let mut mom = Vec::new();
    let mut div = Vec::new();
    for &h in steps {
        let r = pointwise_residual(c, x, h)?;
        mom.push((r.momentum[0].powi(2) + r.momentum[1].powi(2) + r.momentum[2].powi(2)).sqrt());
        div.push(r.divergence.abs());
    }
    let lx: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = mom.iter().map(|m| m.ln()).collect();
    Ok(ResidualConvergence {
        x,
        steps: steps.to_vec(),
        momentum_norms: mom,
        divergence_abs: div,
        order: ls_slope(&lx, &ly),
    })
}

/// Generic sample points used by the verification report.
pub const GENERIC_POINTS: [[f64; 3]; 5] = [
    [1.0, 0.5, -0.3],
    [-0.7, 0.9, 0.4],
    [0.2, -1.1, 0.8],
    [1.3, 0.1, 0.6],
    [-0.4, -0.5, -1.2],
];

/// Default refinement sequence for the residual convergence study.
pub const RESIDUAL_STEPS: [f64; 4] = [0.04, 0.02, 0.01, 0.005];

/// Samples the velocity on the spatial grid and transforms it. The node at the
/// origin takes the mean over the eight points `(+-dx/4, +-dx/4, +-dx/4)`, so
/// the result is a band-limited approximation, not Leray-projected.
pub fn landau_sample_spectral(params: &LandauParams, grid: FrequencyGrid) -> SpectralVectorField {
    let c = params.c;
    let q = 0.25 * grid.dx();
    let phys = PhysicalVectorField::from_fn(grid, |x| {
        if x == [0.0; 3] {
            let mut acc = [0.0; 3];
            for s in 0..8 {
                let d = [
                    if s & 1 == 0 { q } else { -q },
                    if s & 2 == 0 { q } else { -q },
                    if s & 4 == 0 { q } else { -q },
                ];
                let (u, _) = eval_real(c, d);
                for j in 0..3 {
                    acc[j] += u[j] / 8.0;
                }
            }
            acc
        } else {
            eval_real(c, x).0
        }
    });
    to_spectral(&phys)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauReport {
    pub c: f64,
    pub b_closed_form: f64,
    pub b_quadrature: f64,
    pub weak_residuals: WeakFormReport,
    pub pointwise_residual_summary: Vec<ResidualConvergence>,
}

/// Closed form, surface oracle, weak pairings with the standard bump and the
/// pointwise residual study at the generic points.
pub fn landau_report(c: f64, n_quad: usize) -> Result<LandauReport> {
    let b_closed_form = b_of_c(c)?;
    let b_quadrature = b_surface_quadrature(c, n_quad)?;
    let weak_residuals = weak_form_residual(c, &Bump::standard(), &WeakQuadrature::default())?;
    let pointwise_residual_summary = GENERIC_POINTS
        .iter()
        .map(|&x| residual_convergence(c, x, &RESIDUAL_STEPS))
        .collect::<Result<Vec<_>>>()?;
    Ok(LandauReport {
        c,
        b_closed_form,
        b_quadrature,
        weak_residuals,
        pointwise_residual_summary,
    })
}
