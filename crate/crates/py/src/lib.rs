//! Python module `parabolic`.
//!
//! Matrices are lists of rows of complex numbers, right-hand sides lists of
//! `(frequency, coefficients)` pairs. Solutions come back as `(t, x)` with
//! `x[c][j]` the component `c` at time `t[j]`. Library errors raise
//! `ParabolicError` whose message starts with the error kind.

use num_complex::Complex64;
use parabolic_cli::{parse_scenario, run_command, Command};
use parabolic_core::linalg::{CMat, CVec};
use parabolic_core::{build_sampled_function, GeneratorModel, SampledFunction, TimeGrid};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(parabolic, ParabolicError, PyValueError);

fn err(e: parabolic_core::Error) -> PyErr {
    ParabolicError::new_err(format!("{}: {}", e.kind(), e))
}

fn model(a: Vec<Vec<Complex64>>) -> PyResult<GeneratorModel> {
    let d = a.len();
    if d == 0 || a.iter().any(|r| r.len() != d) {
        return Err(ParabolicError::new_err(
            "ParameterError: generator must be a non-empty square matrix",
        ));
    }
    GeneratorModel::new(CMat::from_fn(d, d, |i, j| a[i][j])).map_err(err)
}

fn forcing(grid: TimeGrid, dim: usize, rhs: Vec<(f64, Vec<Complex64>)>) -> PyResult<SampledFunction> {
    let terms: Vec<(f64, CVec)> = rhs.into_iter().map(|(w, c)| (w, CVec::from_vec(c))).collect();
    build_sampled_function(grid, dim, &terms).map_err(err)
}

type Trajectory = (Vec<f64>, Vec<Vec<Complex64>>);

fn trajectory(x: &SampledFunction) -> Trajectory {
    let g = x.grid();
    ((0..g.len()).map(|j| g.time(j)).collect(), x.components().to_vec())
}

/// Bounded solution by the dichotomy Green kernel.
#[pyfunction]
#[pyo3(signature = (a, rhs, m = 16, n = 4096))]
fn solve_green(a: Vec<Vec<Complex64>>, rhs: Vec<(f64, Vec<Complex64>)>, m: u32, n: usize) -> PyResult<Trajectory> {
    let model = model(a)?;
    let grid = TimeGrid::new(m, n).map_err(err)?;
    let y = forcing(grid, model.dim(), rhs)?;
    Ok(trajectory(&parabolic_core::solve_green(&model, &y).map_err(err)?))
}

/// Bounded solution by the band series; also returns `(M, ||x||_as / ||y||_as)`.
#[pyfunction]
#[pyo3(signature = (a, rhs, m = 16, n = 4096))]
fn solve_band(
    a: Vec<Vec<Complex64>>,
    rhs: Vec<(f64, Vec<Complex64>)>,
    m: u32,
    n: usize,
) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>, f64, f64)> {
    let model = model(a)?;
    let grid = TimeGrid::new(m, n).map_err(err)?;
    let y = forcing(grid, model.dim(), rhs)?;
    let (x, report) = parabolic_core::solve_band(&model, &y).map_err(err)?;
    let (t, v) = trajectory(&x);
    Ok((t, v, report.m, report.ratio()))
}

/// Certified `sup ||R(i lambda, A)||`.
#[pyfunction]
#[pyo3(signature = (a, step = 1.0 / 64.0))]
fn resolvent_bound(a: Vec<Vec<Complex64>>, step: f64) -> PyResult<f64> {
    Ok(model(a)?.resolvent_bound(step).map_err(err)?.m)
}

/// `(band kernel bound, inverse bound)` for a given `M`.
#[pyfunction]
fn certificates(m: f64) -> PyResult<(f64, f64)> {
    Ok((
        parabolic_core::band_kernel_bound(m).map_err(err)?,
        parabolic_core::inverse_norm_certificate(m).map_err(err)?,
    ))
}

/// `||y||_as` of a trigonometric polynomial.
#[pyfunction]
#[pyo3(signature = (rhs, dim, m = 16, n = 4096))]
fn as_norm(rhs: Vec<(f64, Vec<Complex64>)>, dim: usize, m: u32, n: usize) -> PyResult<f64> {
    let grid = TimeGrid::new(m, n).map_err(err)?;
    Ok(parabolic_core::as_norm_value(&forcing(grid, dim, rhs)?))
}

/// Runs a CLI command on a scenario document; returns the report as JSON.
#[pyfunction]
fn run(command: &str, scenario: &str) -> PyResult<String> {
    let cmd = Command::parse(command).ok_or_else(|| ParabolicError::new_err(format!("unknown command {command:?}")))?;
    let sc = parse_scenario(scenario).map_err(|e| ParabolicError::new_err(format!("{}: {}", e.kind(), e)))?;
    let out = run_command(cmd, &sc).map_err(|e| ParabolicError::new_err(format!("{}: {}", e.kind(), e)))?;
    serde_json::to_string(&out.report).map_err(|e| ParabolicError::new_err(e.to_string()))
}

#[pymodule]
fn parabolic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ParabolicError", m.py().get_type::<ParabolicError>())?;
    m.add_function(wrap_pyfunction!(solve_green, m)?)?;
    m.add_function(wrap_pyfunction!(solve_band, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_bound, m)?)?;
    m.add_function(wrap_pyfunction!(certificates, m)?)?;
    m.add_function(wrap_pyfunction!(as_norm, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
