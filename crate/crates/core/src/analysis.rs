//! Experiment drivers: asymptotic stability, weighted regularization norms
//! and L^q decay, and the loss-of-smoothness scan over Landau data.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PmnsError, Result};
use crate::grid::{to_physical, FrequencyGrid, SpectralVectorField};
use crate::landau::{landau_sample_spectral, LandauParams};
use crate::pm::{interpolation_check, interpolation_constant, pm_norm, trajectory_seminorm};
use crate::solver::{picard_solve, ForceSpec, PicardReport, SolverConfig};
use crate::symbols::leray_apply;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `||u(t) - v(t)||_{PM^2}`
    pub diff_pm2: Vec<f64>,
    /// `||S(t)(u0 - v0) + int S(t - tau) P(F - G)||_{PM^2}`
    pub linear_part: Vec<f64>,
    /// `diff_pm2` is non-increasing over the last decade of knots.
    pub eventually_decreasing: bool,
    /// Last over first nonzero-time value of `diff_pm2`.
    pub decay_ratio: f64,
    /// `decay_ratio < 0.1`.
    pub decays: bool,
    /// Half the larger ball radius: the smallness actually realized by the two runs.
    pub epsilon_eff: f64,
    /// Knots where `diff_pm2 > linear_part / (1 - 4 eta epsilon_eff) + tol`.
    pub bound_violations: Vec<f64>,
    /// `4 epsilon eta (e^{-1} log(1/(1 - delta)) + 1)` at `delta = 1/2`; below 1 when the split argument closes.
    pub split_constant: f64,
    pub report_u: PicardReport,
    pub report_v: PicardReport,
}

/// Solves for `(u0, F)` and `(v0, G)` on the same knots and measures how the
/// difference evolves against its linear part.
pub fn stability_experiment(
    u0: &SpectralVectorField,
    v0: &SpectralVectorField,
    f: &ForceSpec,
    g: &ForceSpec,
    knots: &[f64],
    cfg: &SolverConfig,
) -> Result<StabilityReport> {
    u0.grid().check_same(v0.grid())?;
    let (a, b) = rayon::join(|| picard_solve(u0, f, knots, cfg), || picard_solve(v0, g, knots, cfg));
    let (a, b) = (a?, b?);
    let norm = |x: &SpectralVectorField, y: &SpectralVectorField| pm_norm(&(x - y), 2.0).map(|r| r.value);
    let diff_pm2 = a
        .solution
        .fields()
        .iter()
        .zip(b.solution.fields())
        .map(|(x, y)| norm(x, y))
        .collect::<Result<Vec<_>>>()?;
    // assemble_y is linear, so the difference of the two linear parts is the linear part of the difference.
    let linear_part = a
        .linear_part
        .fields()
        .iter()
        .zip(b.linear_part.fields())
        .map(|(x, y)| norm(x, y))
        .collect::<Result<Vec<_>>>()?;

    let t_last = *knots.last().expect("validated");
    let tail: Vec<f64> = knots
        .iter()
        .zip(&diff_pm2)
        .filter(|(t, _)| **t >= 0.1 * t_last)
        .map(|(_, d)| *d)
        .collect();
    let eventually_decreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + cfg.tol);
    let first = knots
        .iter()
        .position(|&t| t > 0.0)
        .map(|i| diff_pm2[i])
        .unwrap_or(diff_pm2[0]);
    let last = *diff_pm2.last().expect("non-empty");
    let decay_ratio = if first > 0.0 { last / first } else { 0.0 };

    let epsilon_eff = 0.5 * a.report.ball_radius.max(b.report.ball_radius);
    let factor = 1.0 - 4.0 * cfg.eta * epsilon_eff;
    let bound_violations = if factor > 0.0 {
        knots
            .iter()
            .zip(diff_pm2.iter().zip(&linear_part))
            .filter(|(_, (d, l))| **d > **l / factor + cfg.tol)
            .map(|(t, _)| *t)
            .collect()
    } else {
        knots.to_vec()
    };
    let delta: f64 = 0.5;
    let split_constant = 4.0 * cfg.epsilon * cfg.eta * ((1.0 / (1.0 - delta)).ln() / std::f64::consts::E + 1.0);

    Ok(StabilityReport {
        times: knots.to_vec(),
        diff_pm2,
        linear_part,
        eventually_decreasing,
        decay_ratio,
        decays: decay_ratio < 0.1,
        epsilon_eff,
        bound_violations,
        split_constant,
        report_u: a.report,
        report_v: b.report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizationReport {
    pub a: f64,
    pub q: Option<f64>,
    pub times: Vec<f64>,
    /// `t^{a/2 - 1} ||u(t)||_{PM^a}` at every knot with `t > 0`.
    pub weighted_norm_curve: Vec<f64>,
    pub sup_value: f64,
    pub bound: f64,
    /// `sup_value <= bound` within 5%.
    pub within_bound: bool,
    /// `t^{(1 - 3/q)/2} ||u(t)||_{L^q}`; empty for `a = 2`.
    pub lq_curve: Vec<f64>,
    /// Weighted interpolation bound at each knot.
    pub lq_bound_curve: Vec<f64>,
    /// Global bound `3 C(a, q) sup ||u||_{PM^2}^{1-beta} |||u|||_a^beta`.
    pub lq_global_bound: f64,
    /// Largest `lhs / rhs` of the interpolation inequality over the knots.
    pub interpolation_worst_ratio: f64,
    pub force_weighted_norm: f64,
    pub report: PicardReport,
}

/// `sup_t t^{a/2 - 1} ||F(t)||_{PM^{a-2}}`; infinite for nonzero time-independent forces when `a > 2`.
pub fn force_weighted_norm(force: &ForceSpec, a: f64) -> Result<f64> {
    let w = 0.5 * a - 1.0;
    match force {
        ForceSpec::Zero => Ok(0.0),
        ForceSpec::Sampled(traj) => {
            let mut m = 0.0_f64;
            for (t, f) in traj.knots().iter().zip(traj.fields()) {
                if *t > 0.0 {
                    m = m.max(t.powf(w) * pm_norm(f, a - 2.0)?.value);
                }
            }
            Ok(m)
        }
        _ if a == 2.0 => force.pm_norm(0.0),
        _ => {
            if force.pm_norm(0.0)? == 0.0 {
                Ok(0.0)
            } else {
                Ok(f64::INFINITY)
            }
        }
    }
}

fn check_exponents(a: f64, q: Option<f64>) -> Result<()> {
    if !(2.0..3.0).contains(&a) {
        return Err(PmnsError::Parameter(format!("a must lie in [2, 3), got {a}")));
    }
    if let Some(q) = q {
        interpolation_constant(a, q)?;
    }
    Ok(())
}

/// Solves, then evaluates the weighted PM^a seminorm and, when `q` is given,
/// the weighted L^q decay curve with its interpolation bound.
pub fn regularization_experiment(
    u0: &SpectralVectorField,
    force: &ForceSpec,
    a: f64,
    q: Option<f64>,
    knots: &[f64],
    cfg: &SolverConfig,
) -> Result<RegularizationReport> {
    check_exponents(a, q)?;
    let fw = force_weighted_norm(force, a)?;
    if !fw.is_finite() {
        return Err(PmnsError::Parameter(format!(
            "force has unbounded weighted norm sup t^(a/2-1) ||F||_(PM^(a-2)) for a = {a}"
        )));
    }
    let out = picard_solve(u0, force, knots, cfg)?;
    regularization_of(&out.solution, a, q, cfg.epsilon, fw, out.report)
}

/// Weighted norms of an already computed solution.
pub fn regularization_of(
    solution: &Trajectory,
    a: f64,
    q: Option<f64>,
    epsilon: f64,
    force_weighted_norm: f64,
    report: PicardReport,
) -> Result<RegularizationReport> {
    check_exponents(a, q)?;
    let samples: Vec<(f64, &SpectralVectorField)> = solution
        .knots()
        .iter()
        .copied()
        .zip(solution.fields())
        .filter(|(t, _)| *t > 0.0)
        .collect();
    let weighted_norm_curve = samples
        .par_iter()
        .map(|(t, f)| pm_norm(f, a).map(|r| t.powf(0.5 * a - 1.0) * r.value))
        .collect::<Result<Vec<_>>>()?;
    let sup_value = trajectory_seminorm(solution, a)?.value;
    let bound = 2.0 * epsilon;

    let (mut lq_curve, mut lq_bound_curve, mut lq_global_bound, mut worst) = (Vec::new(), Vec::new(), 0.0, 0.0_f64);
    if let Some(q) = q {
        let w = 0.5 * (1.0 - 3.0 / q);
        let checks = samples
            .par_iter()
            .map(|(_, f)| interpolation_check(f, a, q))
            .collect::<Result<Vec<_>>>()?;
        for ((t, _), c) in samples.iter().zip(&checks) {
            let s = t.powf(w);
            lq_curve.push(s * c.lhs_lq);
            lq_bound_curve.push(s * c.rhs_bound);
            if c.rhs_bound > 0.0 {
                worst = worst.max(c.lhs_lq / c.rhs_bound);
            } else if c.lhs_lq > 0.0 {
                worst = f64::INFINITY;
            }
        }
        let beta = checks.first().map(|c| c.beta).unwrap_or(0.0);
        let c = interpolation_constant(a, q)?;
        lq_global_bound = 3.0 * c * solution.sup_pm2().powf(1.0 - beta) * sup_value.powf(beta);
    }
    Ok(RegularizationReport {
        a,
        q,
        times: samples.iter().map(|(t, _)| *t).collect(),
        weighted_norm_curve,
        sup_value,
        bound,
        within_bound: sup_value <= 1.05 * bound,
        lq_curve,
        lq_bound_curve,
        lq_global_bound,
        interpolation_worst_ratio: worst,
        force_weighted_norm,
        report,
    })
}

/// Physical L^q norm of every knot; exposed for plotting.
pub fn lq_curve(traj: &Trajectory, q: f64) -> Result<Vec<f64>> {
    traj.fields()
        .par_iter()
        .map(|f| to_physical(f).map(|p| p.lq_norm(q)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub epsilon: f64,
    pub converged: bool,
    pub data_norm: f64,
    /// Sup PM^2 norm of the returned (or last) iterate.
    pub ball_radius: f64,
    /// Last successive-iterate distance.
    pub residual: f64,
    pub iterates: usize,
    pub contraction_ratios: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub c: f64,
    pub b: f64,
    /// PM^2 norm of the projected lattice sample of the Landau field.
    pub lattice_norm: f64,
    /// `1 / (4 eta lattice_norm)`: largest epsilon covered by the contraction theorem.
    pub predicted_threshold: f64,
    pub records: Vec<ScanRecord>,
    /// Monotonicity violations: a larger epsilon converged after a smaller one failed.
    pub anomalies: Vec<String>,
}

/// Picard runs from `epsilon * P(landau sample)` with zero force for each epsilon.
/// Failures are recorded, not returned as errors.
pub fn loss_of_smoothness_scan(
    c: f64,
    epsilons: &[f64],
    grid: FrequencyGrid,
    knots: &[f64],
    cfg: &SolverConfig,
) -> Result<ScanReport> {
    if epsilons.windows(2).any(|w| w[1] < w[0]) || epsilons.iter().any(|e| !(*e >= 0.0)) {
        return Err(PmnsError::Parameter("epsilons must be non-negative and sorted increasing".into()));
    }
    let params = LandauParams::new(c)?;
    let base = leray_apply(&landau_sample_spectral(&params, grid))
        .without_nyquist()
        .zero_mode_pinned();
    let lattice_norm = pm_norm(&base, 2.0)?.value;
    let run_cfg = SolverConfig {
        enforce_smallness: false,
        ..*cfg
    };
    run_cfg.validate()?;
    let records: Vec<ScanRecord> = epsilons
        .par_iter()
        .map(|&eps| {
            let u0 = base.scale(eps);
            let data_norm = eps * lattice_norm;
            match picard_solve(&u0, &ForceSpec::Zero, knots, &run_cfg) {
                Ok(out) => ScanRecord {
                    epsilon: eps,
                    converged: true,
                    data_norm,
                    ball_radius: out.report.ball_radius,
                    residual: out.report.final_residual,
                    iterates: out.report.iterates,
                    contraction_ratios: out.report.contraction_ratios,
                    error: None,
                },
                Err(PmnsError::NonConvergence {
                    iterations,
                    last_increment,
                    ratios,
                    ball_radius,
                }) => ScanRecord {
                    epsilon: eps,
                    converged: false,
                    data_norm,
                    ball_radius,
                    residual: last_increment,
                    iterates: iterations,
                    contraction_ratios: ratios,
                    error: Some("non-convergence".into()),
                },
                Err(e) => ScanRecord {
                    epsilon: eps,
                    converged: false,
                    data_norm,
                    ball_radius: f64::NAN,
                    residual: f64::NAN,
                    iterates: 0,
                    contraction_ratios: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut anomalies = Vec::new();
    let mut first_failure: Option<f64> = None;
    for r in &records {
        match (r.converged, first_failure) {
            (false, None) => first_failure = Some(r.epsilon),
            (true, Some(f)) if r.epsilon > f => anomalies.push(format!(
                "epsilon = {} converged although epsilon = {} failed",
                r.epsilon, f
            )),
            _ => {}
        }
    }
    Ok(ScanReport {
        c,
        b: params.b(),
        lattice_norm,
        predicted_threshold: 1.0 / (4.0 * cfg.eta * lattice_norm),
        records,
        anomalies,
    })
}
