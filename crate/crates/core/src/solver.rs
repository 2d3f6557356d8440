//! Picard iteration for the mild equation `x = y + B(x, x)`, its stationary
//! counterpart, the self-similarity check and an exponential time-differencing
//! cross-check.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duhamel::{bilinear_b_stationary, bilinear_trajectory, exp_step, nonlinear_term, phi1, phi2, BilinearConfig};
use crate::error::{PmnsError, Result};
use crate::grid::{dyadic_rescale, fourier_norm, rescale_support, FrequencyGrid, SpectralVectorField};
use crate::pm::{pm_norm, pm_norm_where};
use crate::symbols::{heat_apply, leray_apply, smallness_threshold, EtaConstant};
use crate::trajectory::{validate_knots, Trajectory};

/// External force.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceSpec {
    Zero,
    /// `(b_1, b_2, b_3) delta_0`, spectrum `(2 pi)^{-3/2} b` at every mode.
    Dirac { amplitude: [f64; 3] },
    FixedField(SpectralVectorField),
    /// Samples on the solver's knots.
    Sampled(Trajectory),
}

/// Constant spectrum of `b delta_0` with the zero mode and Nyquist rows removed.
pub fn dirac_spectrum(grid: FrequencyGrid, b: [f64; 3]) -> SpectralVectorField {
    let s = fourier_norm();
    let v = [Complex64::new(s * b[0], 0.0), Complex64::new(s * b[1], 0.0), Complex64::new(s * b[2], 0.0)];
    SpectralVectorField::from_fn(grid, |idx| {
        if idx == 0 || grid.is_nyquist(idx) {
            [Complex64::new(0.0, 0.0); 3]
        } else {
            v
        }
    })
}

impl ForceSpec {
    pub fn is_time_independent(&self) -> bool {
        !matches!(self, ForceSpec::Sampled(_))
    }

    /// Spectrum of a time-independent force on `grid`.
    pub fn constant_spectrum(&self, grid: FrequencyGrid) -> Result<SpectralVectorField> {
        match self {
            ForceSpec::Zero => Ok(SpectralVectorField::zeros(grid)),
            ForceSpec::Dirac { amplitude } => Ok(dirac_spectrum(grid, *amplitude)),
            ForceSpec::FixedField(f) => {
                grid.check_same(f.grid())?;
                Ok(f.clone())
            }
            ForceSpec::Sampled(_) => Err(PmnsError::Parameter("force is time dependent".into())),
        }
    }

    /// `sup_t ||F(t)||_{PM^a}`; for a Dirac mass with `a = 0` this is `|b|_inf (2 pi)^{-3/2}`.
    pub fn pm_norm(&self, a: f64) -> Result<f64> {
        match self {
            ForceSpec::Zero => Ok(0.0),
            ForceSpec::Dirac { amplitude } => {
                if a != 0.0 {
                    return Err(PmnsError::Parameter(format!(
                        "a Dirac mass has infinite PM^{a} norm; only a = 0 is finite"
                    )));
                }
                Ok(amplitude.iter().fold(0.0_f64, |m, b| m.max(b.abs())) * fourier_norm())
            }
            ForceSpec::FixedField(f) => Ok(pm_norm(f, a)?.value),
            ForceSpec::Sampled(t) => {
                let mut m = 0.0_f64;
                for f in t.fields() {
                    m = m.max(pm_norm(f, a)?.value);
                }
                Ok(m)
            }
        }
    }

    fn spectrum_at(&self, grid: FrequencyGrid, t: f64) -> Result<SpectralVectorField> {
        match self {
            ForceSpec::Sampled(traj) => {
                grid.check_same(traj.grid())?;
                let k = traj.knots();
                if t >= *k.last().expect("non-empty") {
                    return Ok(traj.last().clone());
                }
                let i = k.partition_point(|&s| s <= t).max(1) - 1;
                let w = (t - k[i]) / (k[i + 1] - k[i]);
                Ok(traj.field(i).scale(1.0 - w).axpy(w, traj.field(i + 1)))
            }
            _ => self.constant_spectrum(grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eta: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub bilinear: BilinearConfig,
    /// Refuse data whose norm exceeds `epsilon`.
    pub enforce_smallness: bool,
}

impl SolverConfig {
    /// `eta_effective`, tolerance `1e-10`, at most 200 sweeps, smallness enforced.
    pub fn new(epsilon: f64) -> Self {
        Self {
            eta: EtaConstant::exact().eta_effective,
            epsilon,
            max_iter: 200,
            tol: 1e-10,
            bilinear: BilinearConfig::default(),
            enforce_smallness: true,
        }
    }

    pub fn threshold(&self) -> f64 {
        smallness_threshold(self.eta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(PmnsError::Parameter(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.threshold()) {
            return Err(PmnsError::Parameter(format!(
                "epsilon = {} must lie in (0, 1/(4 eta)) = (0, {})",
                self.epsilon,
                self.threshold()
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(PmnsError::Parameter("tol must be positive and max_iter at least 1".into()));
        }
        Ok(())
    }

    fn check_data(&self, data_norm: f64) -> Result<()> {
        if self.enforce_smallness && !(data_norm <= self.epsilon) {
            return Err(PmnsError::SmallnessViolated {
                data_norm,
                epsilon: self.epsilon,
                threshold: self.threshold(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardReport {
    pub iterates: usize,
    /// Sup-over-knots PM^2 distance between the last two iterates.
    pub final_residual: f64,
    /// `||x - y - B(x, x)||` for the returned iterate.
    pub mild_residual: f64,
    /// Sup-over-knots PM^2 norm of the solution.
    pub ball_radius: f64,
    pub contraction_ratios: Vec<f64>,
    pub increments: Vec<f64>,
    pub data_norm: f64,
    pub epsilon: f64,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub solution: Trajectory,
    pub linear_part: Trajectory,
    pub report: PicardReport,
}

fn warn_if_not_solenoidal(u0: &SpectralVectorField) -> SpectralVectorField {
    let scale = u0.max_abs() * u0.grid().cutoff() * 3f64.sqrt();
    if u0.divergence_max() > 1e-12 * scale {
        log::warn!(
            "initial data is not divergence-free (max |xi.u| = {:e}); applying the Leray projector",
            u0.divergence_max()
        );
        leray_apply(u0)
    } else {
        u0.clone()
    }
}

/// `y(t) = S(t) u0 + int_0^t S(t - tau) P F(tau) dtau` at every knot. A
/// time-independent force gives `(1 - e^{-t|xi|^2}) / |xi|^2 P F^`.
pub fn assemble_y(u0: &SpectralVectorField, force: &ForceSpec, knots: &[f64]) -> Result<Trajectory> {
    validate_knots(knots)?;
    let grid = *u0.grid();
    let u0 = warn_if_not_solenoidal(u0);
    let heat: Vec<SpectralVectorField> = knots
        .par_iter()
        .map(|&t| heat_apply(&u0, t))
        .collect::<Result<_>>()?;
    let fields = match force {
        ForceSpec::Zero => heat,
        ForceSpec::Sampled(traj) => {
            grid.check_same(traj.grid())?;
            let probe = Trajectory::zeros(grid, knots)?;
            probe.check_compatible(traj)?;
            let pf: Vec<SpectralVectorField> = traj
                .fields()
                .par_iter()
                .map(|f| leray_apply(f).zero_mode_pinned())
                .collect();
            let xi_sq = grid.xi_sq_table();
            let mut w = vec![SpectralVectorField::zeros(grid)];
            for i in 0..knots.len() - 1 {
                let h = knots[i + 1] - knots[i];
                let next = exp_step(&w[i], &pf[i], &pf[i + 1], h, 2, &xi_sq, 1.0);
                w.push(next);
            }
            heat.iter().zip(&w).map(|(a, b)| a + b).collect()
        }
        _ => {
            let pf = leray_apply(&force.constant_spectrum(grid)?).zero_mode_pinned();
            heat.par_iter()
                .zip(knots.par_iter())
                .map(|(hf, &t)| {
                    let w = pf.map_modes(|idx, z| {
                        let f = t * phi1(-t * grid.xi_sq_at(idx));
                        [z[0] * f, z[1] * f, z[2] * f]
                    });
                    hf + &w.zero_mode_pinned()
                })
                .collect()
        }
    };
    Trajectory::new(knots.to_vec(), fields)
}

/// Norm of the data `||u0||_{PM^2} + sup_t ||F(t)||_{PM}`.
pub fn data_norm(u0: &SpectralVectorField, force: &ForceSpec) -> Result<f64> {
    Ok(pm_norm(u0, 2.0)?.value + force.pm_norm(0.0)?)
}

/// Blow-up guard: iterates whose norm exceeds this multiple of the data norm are abandoned.
const BLOWUP_FACTOR: f64 = 1e6;

/// Iterates `x <- y + B(x, x)` starting from `initial` (or `y`) until the
/// sup-over-knots PM^2 increment drops below `cfg.tol`.
pub fn picard_iterate(
    y: &Trajectory,
    initial: Option<&Trajectory>,
    data_norm: f64,
    cfg: &SolverConfig,
) -> Result<(Trajectory, PicardReport)> {
    cfg.validate()?;
    let mut x = match initial {
        Some(x0) => {
            y.check_compatible(x0)?;
            x0.clone()
        }
        None => y.clone(),
    };
    let blowup = BLOWUP_FACTOR * data_norm.max(y.sup_pm2()).max(f64::MIN_POSITIVE);
    let mut increments: Vec<f64> = Vec::new();
    let mut ratios = Vec::new();
    for it in 1..=cfg.max_iter {
        let b = bilinear_trajectory(&x, &x, &cfg.bilinear)?;
        let next = Trajectory::new(
            y.knots().to_vec(),
            y.fields().par_iter().zip(b.fields().par_iter()).map(|(a, c)| a + c).collect(),
        )?;
        let incr = next.sup_pm2_distance(&x);
        if let Some(prev) = increments.last() {
            ratios.push(if *prev > 0.0 { incr / prev } else { 0.0 });
        }
        increments.push(incr);
        x = next;
        let radius = x.sup_pm2();
        if !incr.is_finite() || !radius.is_finite() || radius > blowup {
            log::debug!("Picard iteration left the ball after {it} sweeps");
            return Err(PmnsError::NonConvergence {
                iterations: it,
                last_increment: incr,
                ratios,
                ball_radius: radius,
            });
        }
        if incr < cfg.tol {
            let b = bilinear_trajectory(&x, &x, &cfg.bilinear)?;
            let mild = x
                .fields()
                .par_iter()
                .zip(y.fields().par_iter().zip(b.fields().par_iter()))
                .map(|(xf, (yf, bf))| pm_norm(&(&(xf - yf) - bf), 2.0).map(|r| r.value))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let report = PicardReport {
                iterates: it,
                final_residual: incr,
                mild_residual: mild,
                ball_radius: radius,
                contraction_ratios: ratios,
                increments,
                data_norm,
                epsilon: cfg.epsilon,
                eta: cfg.eta,
            };
            return Ok((x, report));
        }
    }
    Err(PmnsError::NonConvergence {
        iterations: cfg.max_iter,
        last_increment: *increments.last().unwrap_or(&f64::NAN),
        ratios,
        ball_radius: x.sup_pm2(),
    })
}

/// Global mild solution by Picard iteration from `x^0 = y`.
pub fn picard_solve(u0: &SpectralVectorField, force: &ForceSpec, knots: &[f64], cfg: &SolverConfig) -> Result<PicardOutcome> {
    cfg.validate()?;
    let dn = data_norm(u0, force)?;
    cfg.check_data(dn)?;
    let y = assemble_y(u0, force, knots)?;
    let (solution, report) = picard_iterate(&y, None, dn, cfg)?;
    Ok(PicardOutcome {
        solution,
        linear_part: y,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct StationaryOutcome {
    pub solution: SpectralVectorField,
    pub linear_part: SpectralVectorField,
    pub report: PicardReport,
}

/// `y_inf = |xi|^{-2} P F^` with the zero mode pinned.
pub fn stationary_linear_part(force: &ForceSpec, grid: FrequencyGrid) -> Result<SpectralVectorField> {
    let pf = leray_apply(&force.constant_spectrum(grid)?);
    Ok(pf
        .map_modes(|idx, z| {
            if idx == 0 {
                return [Complex64::new(0.0, 0.0); 3];
            }
            let s = 1.0 / grid.xi_sq_at(idx);
            [z[0] * s, z[1] * s, z[2] * s]
        })
        .zero_mode_pinned())
}

/// Fixed point of `u = y_inf + B_stat(u, u)` for a time-independent force.
pub fn stationary_solve(force: &ForceSpec, grid: FrequencyGrid, cfg: &SolverConfig) -> Result<StationaryOutcome> {
    cfg.validate()?;
    if !force.is_time_independent() {
        return Err(PmnsError::Parameter("stationary problems need a time-independent force".into()));
    }
    let dn = force.pm_norm(0.0)?;
    cfg.check_data(dn)?;
    let y = stationary_linear_part(force, grid)?;
    let blowup = BLOWUP_FACTOR * dn.max(pm_norm(&y, 2.0)?.value).max(f64::MIN_POSITIVE);
    let mut x = y.clone();
    let mut increments: Vec<f64> = Vec::new();
    let mut ratios = Vec::new();
    for it in 1..=cfg.max_iter {
        let next = &y + &bilinear_b_stationary(&x, &x, &cfg.bilinear)?;
        let incr = pm_norm(&(&next - &x), 2.0)?.value;
        if let Some(prev) = increments.last() {
            ratios.push(if *prev > 0.0 { incr / prev } else { 0.0 });
        }
        increments.push(incr);
        x = next;
        let radius = pm_norm(&x, 2.0)?.value;
        if !incr.is_finite() || !radius.is_finite() || radius > blowup {
            return Err(PmnsError::NonConvergence {
                iterations: it,
                last_increment: incr,
                ratios,
                ball_radius: radius,
            });
        }
        if incr < cfg.tol {
            let mild = pm_norm(&(&(&x - &y) - &bilinear_b_stationary(&x, &x, &cfg.bilinear)?), 2.0)?.value;
            return Ok(StationaryOutcome {
                solution: x,
                linear_part: y,
                report: PicardReport {
                    iterates: it,
                    final_residual: incr,
                    mild_residual: mild,
                    ball_radius: radius,
                    contraction_ratios: ratios,
                    increments,
                    data_norm: dn,
                    epsilon: cfg.epsilon,
                    eta: cfg.eta,
                },
            });
        }
    }
    Err(PmnsError::NonConvergence {
        iterations: cfg.max_iter,
        last_increment: *increments.last().unwrap_or(&f64::NAN),
        ratios,
        ball_radius: pm_norm(&x, 2.0)?.value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSimilarSample {
    pub t: f64,
    pub t_scaled: f64,
    /// `||rescale(u(4t), 2) - u(t)||_{PM^2} / ||u(t)||_{PM^2}` on the modes reached by the rescaling.
    pub deviation: f64,
    pub pm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfSimilarReport {
    pub max_deviation: f64,
    pub per_time: Vec<SelfSimilarSample>,
    /// `(max - min) / max` of `||u(t)||_{PM^2}` over the knots used.
    pub pm2_spread: f64,
    /// Homogeneity defect of the data, measured the same way.
    pub data_deviation: f64,
}

fn rescale_deviation(scaled: &SpectralVectorField, reference: &SpectralVectorField) -> Result<f64> {
    let grid = *reference.grid();
    let keep = |idx: usize| rescale_support(&grid, 2.0, idx).unwrap_or(false) && !grid.is_nyquist(idx);
    let diff = pm_norm_where(&(scaled - reference), 2.0, keep)?.value;
    let base = pm_norm_where(reference, 2.0, keep)?.value;
    Ok(if base > 0.0 { diff / base } else { diff })
}

/// Compares `dyadic_rescale(u(4t), 2)` with `u(t)` for every knot pair `(t, 4t)`
/// with `band.0 <= t` and `4t <= band.1`.
pub fn self_similar_check(u0: &SpectralVectorField, traj: &Trajectory, band: Option<(f64, f64)>) -> Result<SelfSimilarReport> {
    u0.grid().check_same(traj.grid())?;
    let (lo, hi) = band.unwrap_or((0.0, f64::INFINITY));
    let mut per_time = Vec::new();
    let mut norms = Vec::new();
    for (i, &t) in traj.knots().iter().enumerate() {
        if t <= 0.0 || t < lo * (1.0 - 1e-12) || 4.0 * t > hi * (1.0 + 1e-12) {
            continue;
        }
        let Ok(j) = traj.knot_index(4.0 * t) else { continue };
        let scaled = dyadic_rescale(traj.field(j), 2.0)?;
        let deviation = rescale_deviation(&scaled, traj.field(i))?;
        let pm2 = pm_norm(traj.field(i), 2.0)?.value;
        norms.push(pm2);
        norms.push(pm_norm(traj.field(j), 2.0)?.value);
        per_time.push(SelfSimilarSample {
            t,
            t_scaled: traj.knots()[j],
            deviation,
            pm2,
        });
    }
    if per_time.is_empty() {
        return Err(PmnsError::Input("no knot pairs (t, 4t) inside the requested band".into()));
    }
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SelfSimilarReport {
        max_deviation: per_time.iter().map(|s| s.deviation).fold(0.0, f64::max),
        pm2_spread: if max > 0.0 { (max - min) / max } else { 0.0 },
        per_time,
        data_deviation: rescale_deviation(&dyadic_rescale(u0, 2.0)?, u0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtdOptions {
    /// Equal substeps between consecutive knots.
    pub substeps: usize,
    /// Largest accepted PM^2 gap between the first- and second-order stages.
    pub budget: f64,
    /// Whether the bilinear term is included.
    pub nonlinear: bool,
}

impl Default for EtdOptions {
    fn default() -> Self {
        Self {
            substeps: 4,
            budget: 1e-2,
            nonlinear: true,
        }
    }
}

/// Second-order exponential time differencing (Cox-Matthews ETD2RK) of
/// `u_t = -|xi|^2 u - P i xi . (u (x) u)^ + P F^`, sampled at the knots.
pub fn etd_cross_check(
    u0: &SpectralVectorField,
    force: &ForceSpec,
    knots: &[f64],
    cfg: &SolverConfig,
    opts: &EtdOptions,
) -> Result<Trajectory> {
    cfg.validate()?;
    validate_knots(knots)?;
    if opts.substeps == 0 {
        return Err(PmnsError::Parameter("substeps must be at least 1".into()));
    }
    cfg.check_data(data_norm(u0, force)?)?;
    let grid = *u0.grid();
    let xi_sq = grid.xi_sq_table();
    let rhs = |u: &SpectralVectorField, t: f64| -> Result<SpectralVectorField> {
        let f = leray_apply(&force.spectrum_at(grid, t)?).zero_mode_pinned();
        if opts.nonlinear {
            Ok(&f - &nonlinear_term(u, u, cfg.bilinear.dealias)?)
        } else {
            Ok(f)
        }
    };
    let mut u = warn_if_not_solenoidal(u0);
    let mut out = vec![u.clone()];
    for w in knots.windows(2) {
        let h = (w[1] - w[0]) / opts.substeps as f64;
        for s in 0..opts.substeps {
            let t = w[0] + s as f64 * h;
            let g0 = rhs(&u, t)?;
            let a = u.map_modes(|idx, z| {
                let zz = -h * xi_sq[idx];
                let (d, p) = (zz.exp(), h * phi1(zz));
                let g = g0.at(idx);
                [z[0] * d + g[0] * p, z[1] * d + g[1] * p, z[2] * d + g[2] * p]
            });
            let g1 = rhs(&a, t + h)?;
            let next = a.map_modes(|idx, z| {
                let p = h * phi2(-h * xi_sq[idx]);
                let (x1, x0) = (g1.at(idx), g0.at(idx));
                [
                    z[0] + (x1[0] - x0[0]) * p,
                    z[1] + (x1[1] - x0[1]) * p,
                    z[2] + (x1[2] - x0[2]) * p,
                ]
            });
            let estimate = pm_norm(&(&next - &a), 2.0)?.value;
            if !(estimate <= opts.budget) {
                return Err(PmnsError::StepRejected {
                    t0: t,
                    t1: t + h,
                    estimate,
                    budget: opts.budget,
                });
            }
            u = next;
        }
        out.push(u.clone());
    }
    Trajectory::new(knots.to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let thr = SolverConfig::new(0.1).threshold();
        assert!((thr - 0.12698).abs() < 1e-4);
        assert!(SolverConfig::new(0.1).validate().is_ok());
        assert!(SolverConfig::new(thr).validate().is_err());
        assert!(SolverConfig::new(0.0).validate().is_err());
        let mut c = SolverConfig::new(0.1);
        c.tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dirac_force_norms() {
        let f = ForceSpec::Dirac { amplitude: [-3.0, 1.0, 0.5] };
        assert!((f.pm_norm(0.0).unwrap() - 3.0 * fourier_norm()).abs() < 1e-15);
        assert!(f.pm_norm(2.0).is_err());
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        let s = dirac_spectrum(g, [1.0, 0.0, 0.0]);
        assert!((pm_norm(&s, 0.0).unwrap().value - fourier_norm()).abs() < 1e-15);
        assert!(s.at(0)[0] == Complex64::new(0.0, 0.0));
    }

    #[test]
    fn sampled_force_interpolates_linearly() {
        let g = FrequencyGrid::new(4, 1.0).unwrap();
        let a = dirac_spectrum(g, [1.0, 0.0, 0.0]);
        let traj = Trajectory::new(vec![0.0, 2.0], vec![a.clone(), a.scale(3.0)]).unwrap();
        let f = ForceSpec::Sampled(traj).spectrum_at(g, 0.5).unwrap();
        assert!((&f - &a.scale(1.5)).max_abs() < 1e-15);
    }

    #[test]
    fn smallness_is_enforced() {
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        let u0 = crate::fields::homogeneous_field(g, [1.0, 0.0, 0.0], 0.2);
        let cfg = SolverConfig::new(0.1);
        assert!(matches!(
            picard_solve(&u0, &ForceSpec::Zero, &[0.0, 1.0], &cfg),
            Err(PmnsError::SmallnessViolated { .. })
        ));
        assert!(matches!(
            stationary_solve(&ForceSpec::Dirac { amplitude: [10.0, 0.0, 0.0] }, g, &cfg),
            Err(PmnsError::SmallnessViolated { .. })
        ));
    }
}
