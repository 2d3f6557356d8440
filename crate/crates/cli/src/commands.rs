use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pmns_core::analysis::{loss_of_smoothness_scan, regularization_experiment, stability_experiment};
use pmns_core::config::{load_config, LoadedConfig};
use pmns_core::duhamel::riesz_convolution_check;
use pmns_core::landau::{b_of_c, b_surface_quadrature, c_of_b, landau_report, Branch};
use pmns_core::pm::pm_norm;
use pmns_core::report::{emit_report, run_id, sha256_hex, CsvTable, ReportBundle, RunManifest};
use pmns_core::solver::{picard_solve, stationary_solve, PicardReport, SolverConfig};
use pmns_core::symbols::{kappa_estimate, smallness_threshold, EtaConstant};
use pmns_core::trajectory::geometric_knots;
use pmns_core::{FrequencyGrid, PmnsError, Result, SpectralVectorField};
use serde::Serialize;

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| PmnsError::Format(e.to_string()))
}

/// Loaded config plus the manifest being assembled for it.
struct ConfigRun {
    loaded: LoadedConfig,
    grid: FrequencyGrid,
    cfg: SolverConfig,
    out_dir: PathBuf,
    manifest: RunManifest,
    start: Instant,
}

impl ConfigRun {
    /// `command` is hashed into the run id together with the config bytes, so
    /// it should carry any command-line parameters.
    fn open(command: &str, path: &Path, out: Option<PathBuf>) -> Result<Self> {
        let start = Instant::now();
        let loaded = load_config(path)?;
        let c = &loaded.config;
        let grid = c.grid.build()?;
        let cfg = c.solver.build()?;
        let out_dir = out.unwrap_or_else(|| loaded.base_dir.join(&c.output.dir));
        let mut manifest = RunManifest::new(command, to_value(c)?, run_id(command, &loaded.bytes));
        manifest
            .input_hashes
            .insert(path.display().to_string(), sha256_hex(&loaded.bytes));
        Ok(Self {
            loaded,
            grid,
            cfg,
            out_dir,
            manifest,
            start,
        })
    }

    fn base(&self) -> &Path {
        &self.loaded.base_dir
    }

    fn hash_input(&mut self, path: Option<PathBuf>) -> Result<()> {
        if let Some(p) = path {
            let bytes = fs::read(&p)?;
            self.manifest.input_hashes.insert(p.display().to_string(), sha256_hex(&bytes));
        }
        Ok(())
    }

    fn finish<P: Serialize>(mut self, bundle: ReportBundle<'_, P>) -> Result<()> {
        self.manifest.wall_time_s = self.start.elapsed().as_secs_f64();
        let m = emit_report(&self.out_dir, self.manifest, &bundle)?;
        println!("run {} wrote {} files to {}", m.run_id, m.outputs.len(), self.out_dir.display());
        Ok(())
    }
}

fn print_picard(r: &PicardReport) {
    println!(
        "converged in {} iterates: residual {:.3e}, ball radius {:.6e}, data norm {:.6e}, epsilon {:.6e}",
        r.iterates, r.final_residual, r.ball_radius, r.data_norm, r.epsilon
    );
}

pub fn landau_verify(c: f64, quad: usize, out: Option<PathBuf>) -> Result<()> {
    let start = Instant::now();
    let rep = landau_report(c, quad)?;
    let w = &rep.weak_residuals;
    println!("c = {c}");
    println!("b closed form = {:.16e}", rep.b_closed_form);
    println!(
        "b quadrature  = {:.16e} (rel diff {:.2e})",
        rep.b_quadrature,
        (rep.b_quadrature - rep.b_closed_form).abs() / rep.b_closed_form.abs()
    );
    println!(
        "weak pairings: momentum [{:.6e}, {:.6e}, {:.6e}], b phi(0) = {:.6e}, divergence {:.3e}",
        w.momentum[0],
        w.momentum[1],
        w.momentum[2],
        w.b * w.phi_at_origin,
        w.divergence
    );
    for r in &rep.pointwise_residual_summary {
        println!("pointwise residual order at {:?}: {:.4}", r.x, r.order);
    }
    if let Some(dir) = out {
        let args = serde_json::json!({ "c": c, "quad": quad });
        let mut manifest = RunManifest::new("landau-verify", args.clone(), run_id("landau-verify", args.to_string().as_bytes()));
        manifest.wall_time_s = start.elapsed().as_secs_f64();
        let bundle = ReportBundle {
            payload: &rep,
            tables: Vec::new(),
            fields: Vec::new(),
        };
        let m = emit_report(&dir, manifest, &bundle)?;
        println!("run {} wrote {} files to {}", m.run_id, m.outputs.len(), dir.display());
    }
    Ok(())
}

pub fn bofc(c: f64) -> Result<()> {
    let b = b_of_c(c)?;
    let q = b_surface_quadrature(c, 1024)?;
    println!("b({c}) = {b:.16e}");
    println!("surface quadrature = {q:.16e} (rel diff {:.2e})", (q - b).abs() / b.abs());
    Ok(())
}

pub fn cofb(b: f64, branch: Branch) -> Result<()> {
    let c = c_of_b(b, branch)?;
    println!("c = {c:.16e} (b(c) = {:.16e})", b_of_c(c)?);
    Ok(())
}

#[derive(Serialize)]
struct SolvePayload<'a> {
    knots: &'a [f64],
    pm2: Vec<f64>,
    linear_pm2: Vec<f64>,
    report: &'a PicardReport,
}

pub fn solve(path: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut run = ConfigRun::open("solve", path, out)?;
    let c = run.loaded.config.clone();
    let knots = c.knots()?;
    let u0 = c.data.build(run.grid, run.base())?;
    let force = c.force.build(run.grid, run.base())?;
    run.hash_input(c.data.input_path(run.base()))?;
    run.hash_input(c.force.input_path(run.base()))?;
    let o = picard_solve(&u0, &force, &knots, &run.cfg)?;
    print_picard(&o.report);
    let payload = SolvePayload {
        knots: &knots,
        pm2: o.solution.pm2_curve(),
        linear_pm2: o.linear_part.pm2_curve(),
        report: &o.report,
    };
    let table = CsvTable::new("pm2_curve")
        .column("t", knots.clone())
        .column("pm2", payload.pm2.clone())
        .column("linear_pm2", payload.linear_pm2.clone());
    let fields = if c.output.fields {
        o.solution
            .fields()
            .iter()
            .enumerate()
            .map(|(i, f)| (format!("u_k{i:03}"), f))
            .collect()
    } else {
        Vec::new()
    };
    run.finish(ReportBundle {
        payload: &payload,
        tables: vec![table],
        fields,
    })
}

#[derive(Serialize)]
struct StationaryPayload<'a> {
    pm2: f64,
    linear_pm2: f64,
    report: &'a PicardReport,
}

pub fn stationary(path: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut run = ConfigRun::open("stationary", path, out)?;
    let c = run.loaded.config.clone();
    let force = c.force.build(run.grid, run.base())?;
    run.hash_input(c.force.input_path(run.base()))?;
    let o = stationary_solve(&force, run.grid, &run.cfg)?;
    print_picard(&o.report);
    let payload = StationaryPayload {
        pm2: pm_norm(&o.solution, 2.0)?.value,
        linear_pm2: pm_norm(&o.linear_part, 2.0)?.value,
        report: &o.report,
    };
    let fields: Vec<(String, &SpectralVectorField)> = if c.output.fields {
        vec![("u_stationary".into(), &o.solution), ("linear_part".into(), &o.linear_part)]
    } else {
        Vec::new()
    };
    run.finish(ReportBundle {
        payload: &payload,
        tables: Vec::new(),
        fields,
    })
}

pub fn stability(path: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut run = ConfigRun::open("stability", path, out)?;
    let c = run.loaded.config.clone();
    let section = c
        .stability
        .as_ref()
        .ok_or_else(|| PmnsError::Parameter("stability runs need a [stability] section".into()))?;
    let knots = c.knots()?;
    let u0 = c.data.build(run.grid, run.base())?;
    let v0 = &u0 + &section.perturbation.build(run.grid, run.base())?;
    let f = c.force.build(run.grid, run.base())?;
    let g = match &section.force {
        Some(fc) => fc.build(run.grid, run.base())?,
        None => f.clone(),
    };
    run.hash_input(c.data.input_path(run.base()))?;
    run.hash_input(c.force.input_path(run.base()))?;
    run.hash_input(section.perturbation.input_path(run.base()))?;
    run.hash_input(section.force.as_ref().and_then(|fc| fc.input_path(run.base())))?;
    let rep = stability_experiment(&u0, &v0, &f, &g, &knots, &run.cfg)?;
    println!(
        "difference ratio {:.4e} ({}), eventually decreasing: {}, bound violations: {}",
        rep.decay_ratio,
        if rep.decays { "decays" } else { "does not decay" },
        rep.eventually_decreasing,
        rep.bound_violations.len()
    );
    let tables = vec![
        CsvTable::new("diff_pm2")
            .column("t", rep.times.clone())
            .column("diff_pm2", rep.diff_pm2.clone()),
        CsvTable::new("linear_part")
            .column("t", rep.times.clone())
            .column("linear_part", rep.linear_part.clone()),
    ];
    run.finish(ReportBundle {
        payload: &rep,
        tables,
        fields: Vec::new(),
    })
}

pub fn regularize(path: &Path, a: f64, q: Option<f64>, out: Option<PathBuf>) -> Result<()> {
    let command = match q {
        Some(q) => format!("regularize --a {a} --q {q}"),
        None => format!("regularize --a {a}"),
    };
    let mut run = ConfigRun::open(&command, path, out)?;
    let c = run.loaded.config.clone();
    let knots = c.knots()?;
    let u0 = c.data.build(run.grid, run.base())?;
    let force = c.force.build(run.grid, run.base())?;
    run.hash_input(c.data.input_path(run.base()))?;
    run.hash_input(c.force.input_path(run.base()))?;
    let rep = regularization_experiment(&u0, &force, a, q, &knots, &run.cfg)?;
    println!(
        "sup t^(a/2-1) ||u||_PM^{a} = {:.6e} (bound {:.6e}, within: {})",
        rep.sup_value, rep.bound, rep.within_bound
    );
    let mut tables = vec![CsvTable::new("weighted_norm")
        .column("t", rep.times.clone())
        .column("weighted_norm", rep.weighted_norm_curve.clone())];
    if q.is_some() {
        println!(
            "weighted L^q max {:.6e}, global bound {:.6e}, worst interpolation ratio {:.4}",
            rep.lq_curve.iter().cloned().fold(0.0, f64::max),
            rep.lq_global_bound,
            rep.interpolation_worst_ratio
        );
        tables.push(
            CsvTable::new("lq_curve")
                .column("t", rep.times.clone())
                .column("lq", rep.lq_curve.clone())
                .column("bound", rep.lq_bound_curve.clone()),
        );
    }
    run.finish(ReportBundle {
        payload: &rep,
        tables,
        fields: Vec::new(),
    })
}

pub fn scan(c: f64, eps: &[f64], config: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let command = format!(
        "scan --c {c} --eps {}",
        eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
    );
    let start = Instant::now();
    let (grid, knots, cfg, run) = match &config {
        Some(p) => {
            let run = ConfigRun::open(&command, p, out.clone())?;
            let knots = run.loaded.config.knots()?;
            (run.grid, knots, run.cfg, Some(run))
        }
        None => {
            let cfg = SolverConfig {
                max_iter: 80,
                ..SolverConfig::new(0.5 / (4.0 * EtaConstant::exact().eta_effective))
            };
            (FrequencyGrid::new(8, 0.5)?, geometric_knots(1e-2, 2.0, 4.0)?, cfg, None)
        }
    };
    let rep = loss_of_smoothness_scan(c, eps, grid, &knots, &cfg)?;
    println!(
        "c = {c}, b = {:.6e}, lattice PM^2 norm {:.6e}, predicted threshold {:.6e}",
        rep.b, rep.lattice_norm, rep.predicted_threshold
    );
    for r in &rep.records {
        println!(
            "epsilon {:.6e}: {} after {} iterates, radius {:.4e}",
            r.epsilon,
            if r.converged { "converged" } else { "failed" },
            r.iterates,
            r.ball_radius
        );
    }
    for a in &rep.anomalies {
        println!("anomaly: {a}");
    }
    let table = CsvTable::new("scan")
        .column("epsilon", rep.records.iter().map(|r| r.epsilon).collect())
        .column("converged", rep.records.iter().map(|r| f64::from(u8::from(r.converged))).collect())
        .column("ball_radius", rep.records.iter().map(|r| r.ball_radius).collect())
        .column("residual", rep.records.iter().map(|r| r.residual).collect())
        .column("iterates", rep.records.iter().map(|r| r.iterates as f64).collect());
    let bundle = ReportBundle {
        payload: &rep,
        tables: vec![table],
        fields: Vec::new(),
    };
    match (run, out) {
        (Some(run), _) => run.finish(bundle)?,
        (None, Some(dir)) => {
            let args = serde_json::json!({ "c": c, "eps": eps });
            let mut manifest = RunManifest::new(command.clone(), args, run_id(&command, b""));
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            let m = emit_report(&dir, manifest, &bundle)?;
            println!("run {} wrote {} files to {}", m.run_id, m.outputs.len(), dir.display());
        }
        (None, None) => {}
    }
    Ok(())
}

pub fn constants() -> Result<()> {
    let kappa = kappa_estimate(4097)?;
    let eta = EtaConstant::exact();
    println!(
        "kappa = {:.16e} (sup over {} directions, max off-diagonal {:.3e})",
        kappa.value, kappa.n_directions, kappa.max_off_diagonal
    );
    println!("pi^3 = {:.16e}", std::f64::consts::PI.powi(3));
    println!("eta_bare = kappa pi^3 = {:.16e}", eta.eta_bare);
    println!("eta_effective = kappa pi^3 (2 pi)^(-3/2) = {:.16e}", eta.eta_effective);
    println!("1/(4 eta_bare) = {:.16e}", smallness_threshold(eta.eta_bare));
    println!("1/(4 eta_effective) = {:.16e}", smallness_threshold(eta.eta_effective));
    let samples = [[0.5, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [1.0, 1.0, 1.0]];
    let rows = riesz_convolution_check(&samples, 1e3, 960)?;
    println!("riesz convolution check (R_max = 1e3):");
    println!("{:>10} {:>14} {:>14} {:>10} {:>10}", "|xi|", "lhs", "pi^3/|xi|", "rel_err", "tail");
    for r in rows {
        let n = r.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        println!("{n:>10.4} {:>14.8} {:>14.8} {:>10.2e} {:>10.2e}", r.lhs, r.rhs, r.rel_err, r.tail);
    }
    Ok(())
}
