//! Python bindings: grids, spectral fields, forces, the Picard and stationary
//! solvers, the Landau family and the analysis experiments. Reports come back
//! as plain dicts.

use pmns_core::analysis::{loss_of_smoothness_scan, regularization_experiment, stability_experiment};
use pmns_core::fields::{cosine_mode, gaussian_field, homogeneous_field, normalize_pm2, random_solenoidal, Envelope};
use pmns_core::io::{load_field, save_field};
use pmns_core::landau::{
    b_of_c as core_b_of_c, b_surface_quadrature as core_b_quad, c_of_b as core_c_of_b, landau_report,
    landau_sample_spectral, Branch, LandauParams,
};
use pmns_core::pm::pm_norm;
use pmns_core::report::to_json_line;
use pmns_core::solver::{picard_solve as core_picard, self_similar_check, stationary_solve as core_stationary, ForceSpec, SolverConfig};
use pmns_core::symbols::{kappa_estimate as core_kappa, leray_apply, EtaConstant};
use pmns_core::trajectory::geometric_knots as core_geometric_knots;
use pmns_core::{to_physical, PmnsError};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(pmns, NonConvergenceError, PyException);

fn err(e: PmnsError) -> PyErr {
    match e {
        PmnsError::NonConvergence { .. } | PmnsError::StepRejected { .. } => NonConvergenceError::new_err(e.to_string()),
        PmnsError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = to_json_line(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (s,))
}

fn solver_config(epsilon: Option<f64>, tol: f64, max_iter: usize) -> PyResult<SolverConfig> {
    let eta = EtaConstant::exact().eta_effective;
    let cfg = SolverConfig {
        tol,
        max_iter,
        ..SolverConfig::new(epsilon.unwrap_or(0.5 / (4.0 * eta)))
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

#[pyclass(name = "FrequencyGrid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(pmns_core::FrequencyGrid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize, delta_xi: f64) -> PyResult<Self> {
        pmns_core::FrequencyGrid::new(n, delta_xi).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn delta_xi(&self) -> f64 {
        self.0.delta_xi()
    }

    #[getter]
    fn cutoff(&self) -> f64 {
        self.0.cutoff()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("FrequencyGrid(n={}, delta_xi={})", self.0.n(), self.0.delta_xi())
    }
}

/// Divergence-free vector field sampled on a frequency lattice.
#[pyclass(name = "SpectralField", frozen, from_py_object)]
#[derive(Clone)]
struct PyField(pmns_core::SpectralVectorField);

#[pymethods]
impl PyField {
    #[staticmethod]
    fn zeros(grid: PyGrid) -> Self {
        Self(pmns_core::SpectralVectorField::zeros(grid.0))
    }

    /// Random solenoidal field with a Gaussian envelope, scaled to PM^2 norm `pm2`.
    #[staticmethod]
    #[pyo3(signature = (grid, seed, pm2, width = 1.0))]
    fn random(grid: PyGrid, seed: u64, pm2: f64, width: f64) -> Self {
        Self(random_solenoidal(grid.0, seed, Envelope::Gaussian { width }, pm2))
    }

    /// `|xi|^{-2} P e`, scaled to PM^2 norm `pm2`.
    #[staticmethod]
    fn homogeneous(grid: PyGrid, direction: [f64; 3], pm2: f64) -> Self {
        Self(normalize_pm2(&homogeneous_field(grid.0, direction, 1.0), pm2))
    }

    #[staticmethod]
    fn gaussian(grid: PyGrid, direction: [f64; 3], width: f64, amplitude: f64) -> Self {
        Self(gaussian_field(grid.0, direction, amplitude, width))
    }

    #[staticmethod]
    fn cosine(grid: PyGrid, k: [i64; 3], polarization: [f64; 3], amplitude: f64) -> PyResult<Self> {
        cosine_mode(grid.0, k, polarization, amplitude).map(Self).map_err(err)
    }

    /// Leray-projected lattice sample of the Landau field with parameter `c`.
    #[staticmethod]
    fn landau(grid: PyGrid, c: f64) -> PyResult<Self> {
        let p = LandauParams::new(c).map_err(err)?;
        Ok(Self(
            leray_apply(&landau_sample_spectral(&p, grid.0))
                .without_nyquist()
                .zero_mode_pinned(),
        ))
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        load_field(path).map(Self).map_err(err)
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        save_field(path, &self.0).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    fn pm_norm(&self, a: f64) -> PyResult<f64> {
        pm_norm(&self.0, a).map(|r| r.value).map_err(err)
    }

    fn divergence_max(&self) -> f64 {
        self.0.divergence_max()
    }

    fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// Spectral values in FFT order as `[(re, im) x 3]` per mode.
    fn modes(&self) -> Vec<[(f64, f64); 3]> {
        (0..self.0.grid().len())
            .map(|i| self.0.at(i).map(|z| (z.re, z.im)))
            .collect()
    }

    /// Physical samples `u(x)` in row-major order.
    fn physical(&self) -> PyResult<Vec<[f64; 3]>> {
        let p = to_physical(&self.0).map_err(err)?;
        Ok((0..p.grid().len()).map(|i| p.at(i)).collect())
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        self.0.grid().check_same(other.0.grid()).map_err(err)?;
        Ok(Self(&self.0 + &other.0))
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.0.grid().check_same(other.0.grid()).map_err(err)?;
        Ok(Self(&self.0 - &other.0))
    }
}

#[pyclass(name = "Force", frozen, from_py_object)]
#[derive(Clone)]
struct PyForce(ForceSpec);

#[pymethods]
impl PyForce {
    #[staticmethod]
    fn zero() -> Self {
        Self(ForceSpec::Zero)
    }

    /// `b delta_0`.
    #[staticmethod]
    fn dirac(amplitude: [f64; 3]) -> Self {
        Self(ForceSpec::Dirac { amplitude })
    }

    #[staticmethod]
    fn field(f: PyField) -> Self {
        Self(ForceSpec::FixedField(f.0))
    }

    fn pm_norm(&self, a: f64) -> PyResult<f64> {
        self.0.pm_norm(a).map_err(err)
    }
}

/// Picard solution on a knot set.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    traj: pmns_core::Trajectory,
    report: pmns_core::solver::PicardReport,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn knots(&self) -> Vec<f64> {
        self.traj.knots().to_vec()
    }

    fn __len__(&self) -> usize {
        self.traj.len()
    }

    fn field(&self, i: usize) -> PyResult<PyField> {
        if i >= self.traj.len() {
            return Err(PyValueError::new_err(format!("knot index {i} out of range")));
        }
        Ok(PyField(self.traj.field(i).clone()))
    }

    fn pm2_curve(&self) -> Vec<f64> {
        self.traj.pm2_curve()
    }

    #[getter]
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.report)
    }

    /// Compares `u(4t)` rescaled by 2 against `u(t)` for `t` in `band`.
    #[pyo3(signature = (u0, band = None))]
    fn self_similarity<'py>(&self, py: Python<'py>, u0: &PyField, band: Option<(f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
        let r = self_similar_check(&u0.0, &self.traj, band).map_err(err)?;
        to_py(py, &r)
    }
}

#[pyfunction]
fn b_of_c(c: f64) -> PyResult<f64> {
    core_b_of_c(c).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (c, n_quad = 512))]
fn b_surface_quadrature(c: f64, n_quad: usize) -> PyResult<f64> {
    core_b_quad(c, n_quad).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (b, branch = "positive"))]
fn c_of_b(b: f64, branch: &str) -> PyResult<f64> {
    let br = match branch {
        "positive" => Branch::Positive,
        "negative" => Branch::Negative,
        other => return Err(PyValueError::new_err(format!("branch must be 'positive' or 'negative', got {other:?}"))),
    };
    core_c_of_b(b, br).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (c, n_quad = 512))]
fn landau_verify<'py>(py: Python<'py>, c: f64, n_quad: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = landau_report(c, n_quad).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (n_directions = 4097))]
fn kappa_estimate(n_directions: usize) -> PyResult<f64> {
    core_kappa(n_directions).map(|k| k.value).map_err(err)
}

/// `{"kappa", "eta_bare", "eta_effective"}`.
#[pyfunction]
fn eta_constants<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &EtaConstant::exact())
}

#[pyfunction]
fn geometric_knots(t_min: f64, ratio: f64, t_max: f64) -> PyResult<Vec<f64>> {
    core_geometric_knots(t_min, ratio, t_max).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (u0, knots, force = None, epsilon = None, tol = 1e-10, max_iter = 200))]
fn picard_solve(
    u0: &PyField,
    knots: Vec<f64>,
    force: Option<PyForce>,
    epsilon: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> PyResult<PySolution> {
    let cfg = solver_config(epsilon, tol, max_iter)?;
    let f = force.map(|f| f.0).unwrap_or(ForceSpec::Zero);
    let o = core_picard(&u0.0, &f, &knots, &cfg).map_err(err)?;
    Ok(PySolution {
        traj: o.solution,
        report: o.report,
    })
}

/// Returns `(field, report)`.
#[pyfunction]
#[pyo3(signature = (force, grid, epsilon = None, tol = 1e-10, max_iter = 200))]
fn stationary_solve<'py>(
    py: Python<'py>,
    force: &PyForce,
    grid: PyGrid,
    epsilon: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> PyResult<(PyField, Bound<'py, PyAny>)> {
    let cfg = solver_config(epsilon, tol, max_iter)?;
    let o = core_stationary(&force.0, grid.0, &cfg).map_err(err)?;
    Ok((PyField(o.solution), to_py(py, &o.report)?))
}

#[pyfunction]
#[pyo3(signature = (u0, v0, knots, f = None, g = None, epsilon = None))]
fn stability<'py>(
    py: Python<'py>,
    u0: &PyField,
    v0: &PyField,
    knots: Vec<f64>,
    f: Option<PyForce>,
    g: Option<PyForce>,
    epsilon: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = solver_config(epsilon, 1e-10, 200)?;
    let f = f.map(|x| x.0).unwrap_or(ForceSpec::Zero);
    let g = g.map(|x| x.0).unwrap_or(ForceSpec::Zero);
    let r = stability_experiment(&u0.0, &v0.0, &f, &g, &knots, &cfg).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (u0, a, knots, q = None, force = None, epsilon = None))]
fn regularize<'py>(
    py: Python<'py>,
    u0: &PyField,
    a: f64,
    knots: Vec<f64>,
    q: Option<f64>,
    force: Option<PyForce>,
    epsilon: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = solver_config(epsilon, 1e-10, 200)?;
    let f = force.map(|x| x.0).unwrap_or(ForceSpec::Zero);
    let r = regularization_experiment(&u0.0, &f, a, q, &knots, &cfg).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (c, epsilons, grid, knots, max_iter = 80))]
fn scan<'py>(
    py: Python<'py>,
    c: f64,
    epsilons: Vec<f64>,
    grid: PyGrid,
    knots: Vec<f64>,
    max_iter: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = solver_config(None, 1e-10, max_iter)?;
    let r = loss_of_smoothness_scan(c, &epsilons, grid.0, &knots, &cfg).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
fn pmns(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyForce>()?;
    m.add_class::<PySolution>()?;
    m.add("NonConvergenceError", m.py().get_type::<NonConvergenceError>())?;
    m.add_function(wrap_pyfunction!(b_of_c, m)?)?;
    m.add_function(wrap_pyfunction!(b_surface_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(c_of_b, m)?)?;
    m.add_function(wrap_pyfunction!(landau_verify, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(eta_constants, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_knots, m)?)?;
    m.add_function(wrap_pyfunction!(picard_solve, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_solve, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(regularize, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    Ok(())
}
