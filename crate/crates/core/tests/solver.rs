use num_complex::Complex64;
use pmns_core::error::PmnsError;
use pmns_core::fields::{cosine_mode, gaussian_field, homogeneous_field, random_solenoidal, Envelope};
use pmns_core::grid::fourier_norm;
use pmns_core::pm::{pm_norm, pm_norm_where};
use pmns_core::solver::{
    assemble_y, etd_cross_check, picard_iterate, picard_solve, self_similar_check, stationary_solve, EtdOptions,
    ForceSpec, SolverConfig,
};
use pmns_core::symbols::{heat_apply, leray_matrix, EtaConstant};
use pmns_core::trajectory::geometric_knots;
use pmns_core::{to_spectral, FrequencyGrid, PhysicalVectorField, SpectralVectorField, Trajectory};

fn eta() -> f64 {
    EtaConstant::exact().eta_effective
}

fn half_threshold() -> SolverConfig {
    SolverConfig::new(0.5 / (4.0 * eta()))
}

fn geometric(t_min: f64, ratio: f64, t_max: f64) -> Vec<f64> {
    geometric_knots(t_min, ratio, t_max).unwrap()
}

fn pm0_scaled(f: SpectralVectorField, target: f64) -> SpectralVectorField {
    let n = pm_norm(&f, 0.0).unwrap().value;
    f.scale(target / n)
}

fn random(g: FrequencyGrid, seed: u64, pm2: f64) -> SpectralVectorField {
    random_solenoidal(g, seed, Envelope::Gaussian { width: 1.0 }, pm2)
}

#[test]
fn zero_force_linear_part_is_heat_flow() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let u0 = random(g, 3, 0.05);
    let knots = [0.0, 0.1, 0.5, 2.0];
    let y = assemble_y(&u0, &ForceSpec::Zero, &knots).unwrap();
    for (i, &t) in knots.iter().enumerate() {
        assert!((y.field(i) - &heat_apply(&u0, t).unwrap()).max_abs() < 1e-15);
    }
}

#[test]
fn dirac_linear_part_matches_closed_form_per_mode() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let b = [0.3, -0.2, 0.1];
    let knots = [0.0, 0.25, 1.0, 7.0];
    let y = assemble_y(&SpectralVectorField::zeros(g), &ForceSpec::Dirac { amplitude: b }, &knots).unwrap();
    for (i, &t) in knots.iter().enumerate() {
        for idx in 0..g.len() {
            let got = y.field(i).at(idx);
            if idx == 0 || g.is_nyquist(idx) {
                assert!(got.iter().all(|z| z.norm() == 0.0));
                continue;
            }
            let s = g.xi_sq_at(idx);
            let p = leray_matrix(g.xi_at(idx));
            for j in 0..3 {
                let pb: f64 = (0..3).map(|k| p[j][k] * b[k]).sum();
                let want = (1.0 - (-t * s).exp()) / s * pb * (2.0 * std::f64::consts::PI).powf(-1.5);
                assert!((got[j] - Complex64::new(want, 0.0)).norm() < 1e-15, "t={t} idx={idx}");
            }
        }
    }
}

#[test]
fn force_part_is_bounded_by_force_norm() {
    let g = FrequencyGrid::new(16, 0.25).unwrap();
    let f = ForceSpec::FixedField(random(g, 5, 0.1));
    let knots = geometric(1e-3, 2.0, 1e3);
    let y = assemble_y(&SpectralVectorField::zeros(g), &f, &knots).unwrap();
    let kappa = 1.0;
    let bound = kappa * f.pm_norm(0.0).unwrap();
    for w in y.fields() {
        assert!(pm_norm(w, 2.0).unwrap().value <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn bad_knots_are_rejected() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let u0 = SpectralVectorField::zeros(g);
    for knots in [vec![0.1, 0.2], vec![0.0, 0.2, 0.2], vec![0.0, 0.3, 0.1]] {
        assert!(matches!(assemble_y(&u0, &ForceSpec::Zero, &knots), Err(PmnsError::Input(_))));
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let out = picard_solve(&SpectralVectorField::zeros(g), &ForceSpec::Zero, &[0.0, 1.0, 2.0], &half_threshold()).unwrap();
    assert!(out.solution.fields().iter().all(|f| f.is_zero()));
    assert_eq!(out.report.ball_radius, 0.0);
}

#[test]
fn shear_mode_is_an_exact_solution() {
    // u = A e^{-t|xi|^2} cos(x_1 xi) e_2 has (u.grad)u = 0, so Picard returns heat flow.
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let u0 = cosine_mode(g, [1, 0, 0], [0.0, 1.0, 0.0], 1.0).unwrap();
    let u0 = u0.scale(0.05 / pm_norm(&u0, 2.0).unwrap().value);
    let knots = [0.0, 0.5, 1.0, 4.0];
    let out = picard_solve(&u0, &ForceSpec::Zero, &knots, &half_threshold()).unwrap();
    for (i, &t) in knots.iter().enumerate() {
        assert!((out.solution.field(i) - &heat_apply(&u0, t).unwrap()).max_abs() < 1e-14 * u0.max_abs());
    }
}

#[test]
fn first_correction_matches_the_two_mode_closed_form() {
    // u0 = A cos(d x_1) e_2 + C cos(d x_3) e_1 with d = delta_xi. Its heat flow has
    // (u.grad)u = -A C d e^{-2 t d^2} sin(d x_1) cos(d x_3) e_2, a solenoidal field whose
    // modes also decay at rate 2 d^2, so B(y, y)(t) = t e^{-2 t d^2} A C d sin(d x_1) cos(d x_3) e_2.
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let d = g.delta_xi();
    let (a, c) = (0.02, 0.015);
    let u0 = &cosine_mode(g, [1, 0, 0], [0.0, 1.0, 0.0], a).unwrap() + &cosine_mode(g, [0, 0, 1], [1.0, 0.0, 0.0], c).unwrap();
    let knots: Vec<f64> = (0..=64).map(|i| i as f64 / 32.0).collect();
    let y = assemble_y(&u0, &ForceSpec::Zero, &knots).unwrap();
    let cfg = SolverConfig {
        max_iter: 1,
        tol: 1.0,
        ..half_threshold()
    };
    let (first, report) = picard_iterate(&y, None, 0.0, &cfg).unwrap();
    assert_eq!(report.iterates, 1);
    let profile = to_spectral(&PhysicalVectorField::from_fn(g, |x| [0.0, a * c * d * (d * x[0]).sin() * (d * x[2]).cos(), 0.0]));
    let mut worst = 0.0_f64;
    for (i, &t) in knots.iter().enumerate() {
        let want = profile.scale(t * (-2.0 * t * d * d).exp());
        let got = first.field(i) - y.field(i);
        worst = worst.max((&got - &want).max_abs() / profile.max_abs());
    }
    // second-order knot quadrature: (h * 2 d^2)^2 ~ 2e-4 relative to the correction size
    assert!(worst < 1e-4, "worst {worst}");
}

#[test]
fn contraction_suite_on_random_data() {
    let g = FrequencyGrid::new(16, 0.25).unwrap();
    let cfg = half_threshold();
    let eps = cfg.epsilon;
    let knots = geometric(1e-2, 2.0, 64.0);
    for seed in [11, 12] {
        let u0 = random(g, seed, 0.6 * eps);
        let force = ForceSpec::FixedField(pm0_scaled(random(g, seed + 100, 1.0), 0.3 * eps));
        let out = picard_solve(&u0, &force, &knots, &cfg).unwrap();
        let r = &out.report;
        assert!(r.data_norm <= eps);
        assert!(r.ball_radius <= 2.0 * eps * 1.01, "radius {}", r.ball_radius);
        let bound = 4.0 * cfg.eta * eps + 0.05;
        assert!(r.contraction_ratios.iter().all(|&q| q <= bound), "{:?}", r.contraction_ratios);
        assert!(r.mild_residual < cfg.tol, "mild residual {}", r.mild_residual);
        for f in out.solution.fields() {
            assert!(f.divergence_max() <= 1e-12 * f.max_abs() * g.cutoff() * 3f64.sqrt());
        }

        // uniqueness in the ball: start from zero instead of y
        let zero = Trajectory::zeros(g, &knots).unwrap();
        let (other, _) = picard_iterate(&out.linear_part, Some(&zero), r.data_norm, &cfg).unwrap();
        assert!(other.sup_pm2_distance(&out.solution) < 2.0 * cfg.tol);

        // data continuity with the stability constant
        let delta_field = random(g, seed + 200, 0.05 * eps);
        let y2 = out.linear_part.map_fields(|_, f| f + &delta_field);
        let delta = y2.sup_pm2_distance(&out.linear_part);
        let (moved, _) = picard_iterate(&y2, None, r.data_norm + delta, &cfg).unwrap();
        let shift = moved.sup_pm2_distance(&out.solution);
        assert!(shift <= delta / (1.0 - 4.0 * cfg.eta * eps) + cfg.tol, "shift {shift} delta {delta}");
    }
}

#[test]
fn large_data_without_smallness_diverges_with_growing_ratios() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let cfg = SolverConfig {
        enforce_smallness: false,
        max_iter: 60,
        ..half_threshold()
    };
    let u0 = random(g, 9, 40.0);
    let err = picard_solve(&u0, &ForceSpec::Zero, &geometric(1e-2, 2.0, 8.0), &cfg).unwrap_err();
    match err {
        PmnsError::NonConvergence { ratios, .. } => {
            assert!(ratios.iter().any(|&q| q > 1.0), "{ratios:?}");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn stationary_zero_force_and_sampled_force() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let out = stationary_solve(&ForceSpec::Zero, g, &half_threshold()).unwrap();
    assert!(out.solution.is_zero());
    let traj = Trajectory::zeros(g, &[0.0, 1.0]).unwrap();
    assert!(matches!(
        stationary_solve(&ForceSpec::Sampled(traj), g, &half_threshold()),
        Err(PmnsError::Parameter(_))
    ));
}

#[test]
fn dirac_stationary_solution_is_symmetric_and_homogeneous() {
    let g = FrequencyGrid::new(16, 0.25).unwrap();
    let cfg = half_threshold();
    let b1 = 0.8 * cfg.epsilon / fourier_norm();
    let out = stationary_solve(&ForceSpec::Dirac { amplitude: [b1, 0.0, 0.0] }, g, &cfg).unwrap();
    let u = &out.solution;
    assert!(out.report.mild_residual < cfg.tol);
    assert!(out.report.ball_radius <= 2.0 * cfg.epsilon);
    let scale = u.max_abs();
    // mirror x2 -> -x2: u1, u3 even and u2 odd in k2; same for x3.
    for idx in 0..g.len() {
        if g.is_nyquist(idx) {
            continue;
        }
        let k = g.k_at(idx);
        for (axis, m) in [(1usize, [k[0], -k[1], k[2]]), (2, [k[0], k[1], -k[2]])] {
            let j = g.index_of(m).unwrap();
            let (a, c) = (u.at(idx), u.at(j));
            for comp in 0..3 {
                let sign = if comp == axis { -1.0 } else { 1.0 };
                assert!((a[comp] - c[comp] * sign).norm() < 1e-12 * scale);
            }
        }
    }
    let ratio = median_dyadic_ratio(u);
    assert!((ratio - 0.25).abs() < 0.05, "ratio {ratio}");
}

/// Median of `|u(2 xi)| / |u(xi)|` over in-band modes with both ends resolved.
fn median_dyadic_ratio(u: &SpectralVectorField) -> f64 {
    let g = *u.grid();
    let n = g.n() as i64;
    let mut ratios = Vec::new();
    for idx in 1..g.len() {
        let k = g.k_at(idx);
        if k.iter().any(|&c| 3 * (2 * c).abs() >= n) {
            continue;
        }
        let j = g.index_of([2 * k[0], 2 * k[1], 2 * k[2]]).unwrap();
        let mag = |v: [Complex64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let (lo, hi) = (mag(u.at(idx)), mag(u.at(j)));
        if lo > 1e-12 * u.max_abs() {
            ratios.push(hi / lo);
        }
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ratios[ratios.len() / 2]
}

#[test]
fn stationary_solution_is_the_long_time_limit() {
    let g = FrequencyGrid::new(16, 0.5).unwrap();
    let cfg = half_threshold();
    let f = gaussian_field(g, [0.0, 1.0, 0.0], 1.0, 1.0);
    let f = f.scale(0.5 * cfg.epsilon / pm_norm(&f, 0.0).unwrap().value);
    let force = ForceSpec::FixedField(f);
    let st = stationary_solve(&force, g, &cfg).unwrap();
    let knots = geometric(1e-3, 2.0, 1.1e3);
    let ev = picard_solve(&SpectralVectorField::zeros(g), &force, &knots, &cfg).unwrap();
    let dev = pm_norm(&(ev.solution.last() - &st.solution), 2.0).unwrap().value / pm_norm(&st.solution, 2.0).unwrap().value;
    eprintln!("stationary vs t = {}: {dev:e}", knots.last().unwrap());
    assert!(dev < 0.02);
}

#[test]
fn self_similarity_of_homogeneous_data() {
    let g = FrequencyGrid::new(32, 0.125).unwrap();
    let cfg = half_threshold();
    let u0 = homogeneous_field(g, [1.0, 0.0, 0.0], 1.0);
    let u0 = u0.scale(0.5 * cfg.epsilon / pm_norm(&u0, 2.0).unwrap().value);
    let knots: Vec<f64> = std::iter::once(0.0).chain((0..9).map(|k| 0.0625 * 2f64.powi(k))).collect();
    let lin = assemble_y(&u0, &ForceSpec::Zero, &knots).unwrap();
    let lin_report = self_similar_check(&u0, &lin, None).unwrap();
    eprintln!("linear {:?}", lin_report.per_time.iter().map(|s| s.deviation).collect::<Vec<_>>());
    assert!(lin_report.max_deviation < 1e-12);
    let out = picard_solve(&u0, &ForceSpec::Zero, &knots, &cfg).unwrap();
    let rep = self_similar_check(&u0, &out.solution, Some((0.0625, 2.0))).unwrap();
    eprintln!(
        "nonlinear {:?} spread {}",
        rep.per_time.iter().map(|s| (s.t, s.deviation, s.pm2)).collect::<Vec<_>>(),
        rep.pm2_spread
    );

    // negative control: a Gaussian profile is not scale invariant
    let v0 = gaussian_field(g, [1.0, 0.0, 0.0], 1.0, 0.5);
    let v0 = v0.scale(0.5 * cfg.epsilon / pm_norm(&v0, 2.0).unwrap().value);
    let other = picard_solve(&v0, &ForceSpec::Zero, &knots, &cfg).unwrap();
    let neg = self_similar_check(&v0, &other.solution, None).unwrap();
    eprintln!("negative {}", neg.max_deviation);
    assert!(neg.max_deviation > 0.2);
    assert!(neg.data_deviation > 0.2);
}

#[test]
fn self_similar_check_needs_knot_pairs() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let traj = Trajectory::zeros(g, &[0.0, 1.0, 3.0]).unwrap();
    assert!(matches!(
        self_similar_check(&SpectralVectorField::zeros(g), &traj, None),
        Err(PmnsError::Input(_))
    ));
}

#[test]
fn etd_is_exact_on_the_linear_problem() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let cfg = half_threshold();
    let u0 = random(g, 21, 0.3 * cfg.epsilon);
    let f = pm0_scaled(random(g, 22, 1.0), 0.3 * cfg.epsilon);
    let force = ForceSpec::FixedField(f);
    let knots = [0.0, 0.3, 1.0, 5.0];
    let opts = EtdOptions {
        substeps: 3,
        budget: 1.0,
        nonlinear: false,
    };
    let etd = etd_cross_check(&u0, &force, &knots, &cfg, &opts).unwrap();
    let y = assemble_y(&u0, &force, &knots).unwrap();
    assert!(etd.sup_pm2_distance(&y) < 1e-15);
}

#[test]
fn etd_and_picard_agree_at_second_order() {
    let g = FrequencyGrid::new(16, 0.25).unwrap();
    let cfg = SolverConfig {
        tol: 1e-13,
        ..half_threshold()
    };
    let u0 = random(g, 31, 0.8 * cfg.epsilon);
    let t_max = 2.0;
    let mut gaps = Vec::new();
    for m in [8usize, 16, 32] {
        let knots: Vec<f64> = (0..=m).map(|i| t_max * i as f64 / m as f64).collect();
        let pic = picard_solve(&u0, &ForceSpec::Zero, &knots, &cfg).unwrap();
        let etd = etd_cross_check(&u0, &ForceSpec::Zero, &knots, &cfg, &EtdOptions::default()).unwrap();
        gaps.push(pic.solution.sup_pm2_distance(&etd));
    }
    eprintln!("etd/picard gaps {gaps:?}");
    for w in gaps.windows(2) {
        assert!(w[0] / w[1] > 3.0, "{gaps:?}");
    }
}

#[test]
fn etd_rejects_steps_over_budget() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let cfg = half_threshold();
    let u0 = random(g, 41, 0.8 * cfg.epsilon);
    let opts = EtdOptions {
        substeps: 1,
        budget: 1e-9,
        nonlinear: true,
    };
    assert!(matches!(
        etd_cross_check(&u0, &ForceSpec::Zero, &[0.0, 1.0], &cfg, &opts),
        Err(PmnsError::StepRejected { .. })
    ));
}

#[test]
fn dirac_and_restricted_norm_agree() {
    let g = FrequencyGrid::new(8, 0.5).unwrap();
    let f = ForceSpec::Dirac { amplitude: [0.1, 0.0, 0.0] };
    let s = f.constant_spectrum(g).unwrap();
    let all = pm_norm_where(&s, 0.0, |_| true).unwrap().value;
    assert!((all - f.pm_norm(0.0).unwrap()).abs() < 1e-16);
}
