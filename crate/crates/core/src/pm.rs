//! PM^a norms, the weighted trajectory seminorms, and the diagnostics that tie
//! PM^2 to heat-characterized Besov norms and to L^q interpolation.
//!
//! On the lattice the essential supremum becomes a maximum over `xi != 0`. For
//! vector fields the norm is the maximum over components.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{PmnsError, Result};
use crate::grid::{to_physical, SpectralVectorField};
use crate::symbols::heat_apply;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub n_per_axis: usize,
    pub delta_xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmNormReport {
    pub a: f64,
    pub value: f64,
    pub argmax_xi: [f64; 3],
    #[serde(skip)]
    pub argmax_index: usize,
    pub grid: GridInfo,
}

fn check_exponent(a: f64) -> Result<()> {
    if !(0.0..3.0).contains(&a) {
        return Err(PmnsError::Parameter(format!("PM exponent a must lie in [0, 3), got {a}")));
    }
    Ok(())
}

/// PM^a norm restricted to the modes accepted by `keep` (the zero mode is always excluded).
pub fn pm_norm_where(f: &SpectralVectorField, a: f64, keep: impl Fn(usize) -> bool) -> Result<PmNormReport> {
    check_exponent(a)?;
    let grid = *f.grid();
    let half = 0.5 * a;
    let mut best = 0.0_f64;
    let mut arg = 1.min(grid.len() - 1);
    for idx in 1..grid.len() {
        if !keep(idx) {
            continue;
        }
        let v = f.at(idx);
        let m = v[0].norm().max(v[1].norm()).max(v[2].norm());
        if m == 0.0 {
            continue;
        }
        let w = if a == 0.0 { m } else { grid.xi_sq_at(idx).powf(half) * m };
        if w > best {
            best = w;
            arg = idx;
        }
    }
    Ok(PmNormReport {
        a,
        value: best,
        argmax_xi: grid.xi_at(arg),
        argmax_index: arg,
        grid: GridInfo {
            n_per_axis: grid.n(),
            delta_xi: grid.delta_xi(),
        },
    })
}

pub fn pm_norm(f: &SpectralVectorField, a: f64) -> Result<PmNormReport> {
    pm_norm_where(f, a, |_| true)
}

/// Norm value only; panics on an invalid exponent (internal use with constants).
pub(crate) fn pm_norm_value(f: &SpectralVectorField, a: f64) -> f64 {
    pm_norm(f, a).expect("valid PM exponent").value
}

/// PM^a norm of one component.
pub fn component_pm_norm(f: &SpectralVectorField, j: usize, a: f64) -> Result<f64> {
    check_exponent(a)?;
    let grid = *f.grid();
    let c = f.component(j);
    Ok((1..grid.len())
        .map(|idx| grid.xi_sq_at(idx).powf(0.5 * a) * c[idx].norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySeminorm {
    pub a: f64,
    pub value: f64,
    pub argmax_t: f64,
}

/// `sup_{t > 0} t^{a/2 - 1} ||u(t)||_{PM^a}` over the stored knots.
pub fn trajectory_seminorm(traj: &Trajectory, a: f64) -> Result<TrajectorySeminorm> {
    if !(2.0..3.0).contains(&a) {
        return Err(PmnsError::Parameter(format!("seminorm exponent must lie in [2, 3), got {a}")));
    }
    let mut best = TrajectorySeminorm {
        a,
        value: 0.0,
        argmax_t: f64::NAN,
    };
    let mut any = false;
    for (t, f) in traj.knots().iter().zip(traj.fields()) {
        if *t <= 0.0 {
            continue;
        }
        any = true;
        let w = t.powf(0.5 * a - 1.0) * pm_norm(f, a)?.value;
        if best.argmax_t.is_nan() || w > best.value {
            best.value = w;
            best.argmax_t = *t;
        }
    }
    if !any {
        return Err(PmnsError::Input("trajectory has no samples with t > 0".into()));
    }
    Ok(best)
}

/// `sup_{w > 0} w^{a-2} exp(-w^2)`: the PM^2 -> weighted PM^a constant of the heat flow.
pub fn heat_weight_constant(a: f64) -> f64 {
    let m = a - 2.0;
    if m <= 0.0 {
        return 1.0;
    }
    let w2 = 0.5 * m;
    w2.powf(0.5 * m) * (-w2).exp()
}

/// Hausdorff-Young constant `||v||_{L^q} <= C ||v^||_{L^{q'}}` for the
/// `(2 pi)^{-3/2}` convention, `q >= 2`.
pub fn hausdorff_young_constant(q: f64) -> f64 {
    let theta = if q.is_infinite() { 0.0 } else { 2.0 / q };
    (2.0 * PI).powf(-1.5 * (1.0 - theta))
}

fn conjugate(q: f64) -> f64 {
    if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

/// `beta = (1 - 3/q) / (a - 2)`.
pub fn interpolation_beta(a: f64, q: f64) -> f64 {
    (1.0 - 3.0 / q) / (a - 2.0)
}

fn check_wedge(a: f64, q: f64) -> Result<()> {
    let upper = 3.0 / (3.0 - a);
    if !(a > 2.0 && a < 3.0 && q > 3.0 && q < upper) {
        return Err(PmnsError::Parameter(format!(
            "(a, q) = ({a}, {q}) outside the admissible wedge 2 < a < 3, 3 < q < 3/(3-a)"
        )));
    }
    Ok(())
}

/// Constant of the scalar interpolation bound obtained from Hausdorff-Young and
/// the two-piece split of `||v^||_{p}` at the optimal radius.
pub fn interpolation_constant(a: f64, q: f64) -> Result<f64> {
    check_wedge(a, q)?;
    let p = conjugate(q);
    let k = 1.0 / (3.0 - 2.0 * p) + 1.0 / (a * p - 3.0);
    Ok(hausdorff_young_constant(q) * (4.0 * PI * k).powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationCheck {
    pub lhs_lq: f64,
    pub rhs_bound: f64,
    pub beta: f64,
    pub constant: f64,
}

/// Compares the discrete `L^q` norm of `f` with the interpolation bound
/// `C ||f||_{PM^2}^{1-beta} ||f||_{PM^a}^{beta}`, applied per component and summed.
pub fn interpolation_check(f: &SpectralVectorField, a: f64, q: f64) -> Result<InterpolationCheck> {
    let constant = interpolation_constant(a, q)?;
    let beta = interpolation_beta(a, q);
    let lhs_lq = to_physical(f)?.lq_norm(q);
    let mut rhs_bound = 0.0;
    for j in 0..3 {
        let n2 = component_pm_norm(f, j, 2.0)?;
        let na = component_pm_norm(f, j, a)?;
        if n2 > 0.0 && na > 0.0 {
            rhs_bound += constant * n2.powf(1.0 - beta) * na.powf(beta);
        }
    }
    Ok(InterpolationCheck {
        lhs_lq,
        rhs_bound,
        beta,
        constant,
    })
}

/// `int_{R^3} exp(-s |w|^2) |w|^{-2s} dw = 2 pi s^{s - 3/2} Gamma(3/2 - s)` for `s < 3/2`.
pub fn gaussian_moment(s: f64) -> f64 {
    2.0 * PI * s.powf(s - 1.5) * gamma(1.5 - s)
}

/// Constant `C(p)` in `sup_t t^{(1-3/p)/2} ||S(t) v||_{L^p} <= C(p) ||v||_{PM^2}` (scalar).
pub fn besov_constant(p: f64) -> Result<f64> {
    if !(p > 3.0) {
        return Err(PmnsError::Parameter(format!("Besov exponent p must exceed 3, got {p}")));
    }
    let s = conjugate(p);
    Ok(hausdorff_young_constant(p) * gaussian_moment(s).powf(1.0 / s))
}

/// Upper bound on [`besov_heat_norm`] from the component PM^2 norms.
pub fn besov_heat_bound(f: &SpectralVectorField, p: f64) -> Result<f64> {
    let c = besov_constant(p)?;
    let mut total = 0.0;
    for j in 0..3 {
        total += c * component_pm_norm(f, j, 2.0)?;
    }
    Ok(total)
}

/// `max_t t^{(1 - 3/p)/2} ||S(t) f||_{L^p}` over the given sample times.
pub fn besov_heat_norm(f: &SpectralVectorField, p: f64, t_samples: &[f64]) -> Result<f64> {
    if !(p > 3.0) {
        return Err(PmnsError::Parameter(format!("Besov exponent p must exceed 3, got {p}")));
    }
    if t_samples.is_empty() {
        return Err(PmnsError::Input("no sample times".into()));
    }
    let alpha = if p.is_infinite() { 1.0 } else { 1.0 - 3.0 / p };
    let mut best = 0.0_f64;
    for &t in t_samples {
        if !(t > 0.0) {
            return Err(PmnsError::Parameter(format!("sample times must be positive, got {t}")));
        }
        let v = to_physical(&heat_apply(f, t)?)?.lq_norm(p);
        best = best.max(t.powf(0.5 * alpha) * v);
    }
    Ok(best)
}
