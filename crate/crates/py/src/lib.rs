//! Python bindings: compile and simulate programs, lower expressions,
//! evaluate classical functions, run the algorithm drivers and call the
//! post-processing helpers.

use std::collections::BTreeMap;

use basisc_core::drivers::{run_driver, DriverConfig};
use basisc_core::error::Error;
use basisc_core::linalg::Matrix;
use basisc_core::post::{self, BitString, Rational};
use basisc_core::sim::{run, run_to_state, Plan, SimOptions};
use basisc_core::typecheck::{compile, Bindings};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(basisc, BasiscError, PyException, "Base class of all toolchain errors; `code` names the error.");
create_exception!(basisc, BasiscParseError, BasiscError, "Lexing, parsing or I/O failure.");
create_exception!(basisc, BasiscTypeError, BasiscError, "Monomorphization or type-checking failure.");
create_exception!(basisc, BasiscRuntimeError, BasiscError, "Simulation, embedding or post-processing failure.");

fn to_py(e: Error) -> PyErr {
    let code = e.code().to_string();
    let err = match e {
        Error::Parse(_) | Error::Io(_) => BasiscParseError::new_err(e.to_string()),
        Error::Type(_) => BasiscTypeError::new_err(e.to_string()),
        Error::Runtime(_) => BasiscRuntimeError::new_err(e.to_string()),
    };
    Python::attach(|py| {
        let _ = err.value(py).setattr("code", code);
    });
    err
}

fn fail<E: Into<Error>>(e: E) -> PyErr {
    to_py(e.into())
}

fn bindings(
    dims: Option<BTreeMap<String, i64>>,
    args: Option<BTreeMap<String, String>>,
    phases: Option<Vec<f64>>,
) -> Bindings {
    let mut b = Bindings::default();
    for (k, v) in dims.unwrap_or_default() {
        b = b.dim(&k, v);
    }
    for (k, v) in args.unwrap_or_default() {
        b = b.arg(&k, &v);
    }
    if let Some(p) = phases {
        b = b.phases(p);
    }
    b
}

fn rows(m: &Matrix) -> Vec<Vec<Complex64>> {
    (0..m.dim).map(|r| (0..m.dim).map(|c| m.get(r, c)).collect()).collect()
}

/// A compiled, type-checked program ready to simulate.
#[pyclass(module = "basisc", frozen)]
struct Program {
    plan: Plan,
    entry: String,
}

#[pymethods]
impl Program {
    #[new]
    #[pyo3(signature = (source, entry=None, dims=None, args=None, phases=None, max_qubits=20, tol=1e-9))]
    fn new(
        source: &str,
        entry: Option<&str>,
        dims: Option<BTreeMap<String, i64>>,
        args: Option<BTreeMap<String, String>>,
        phases: Option<Vec<f64>>,
        max_qubits: usize,
        tol: f64,
    ) -> PyResult<Self> {
        let c = compile(source, entry, &bindings(dims, args, phases)).map_err(to_py)?;
        let plan = Plan::new(&c, SimOptions { max_qubits, tol }).map_err(fail)?;
        Ok(Program { plan, entry: c.mono.entry })
    }

    /// Name of the specialized entry kernel.
    #[getter]
    fn entry(&self) -> &str {
        &self.entry
    }

    /// Histogram of `shots` runs as `{bits: count}`.
    #[pyo3(signature = (shots=1024, seed=0))]
    fn run(&self, py: Python<'_>, shots: u64, seed: u64) -> PyResult<BTreeMap<String, u64>> {
        let r = py.detach(|| run(&self.plan, shots, seed)).map_err(fail)?;
        Ok(r.counts)
    }

    /// The run result in the command-line JSON format.
    #[pyo3(signature = (shots=1024, seed=0))]
    fn run_json(&self, py: Python<'_>, shots: u64, seed: u64) -> PyResult<String> {
        let r = py.detach(|| run(&self.plan, shots, seed)).map_err(fail)?;
        Ok(serde_json::to_string(&r).expect("serializable"))
    }

    /// Amplitudes of the qubits the entry kernel returns.
    #[pyo3(signature = (seed=0))]
    fn statevector(&self, seed: u64) -> PyResult<Vec<Complex64>> {
        run_to_state(&self.plan, seed).map_err(fail)
    }

    fn __repr__(&self) -> String {
        format!("Program(entry={:?})", self.entry)
    }
}

/// Type checks a program and returns the specialized entry name.
#[pyfunction]
#[pyo3(signature = (source, entry=None, dims=None, args=None))]
fn check(
    source: &str,
    entry: Option<&str>,
    dims: Option<BTreeMap<String, i64>>,
    args: Option<BTreeMap<String, String>>,
) -> PyResult<String> {
    Ok(compile(source, entry, &bindings(dims, args, None)).map_err(to_py)?.mono.entry)
}

/// Unitary of a reversible expression, as rows of complex numbers.
#[pyfunction]
fn lower(expr: &str) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows(&basisc_core::host::lower_expression(expr, SimOptions::default()).map_err(to_py)?))
}

/// Evaluates a classical function of `source` on a bit string.
#[pyfunction]
#[pyo3(signature = (source, function, input, dims=None))]
fn eval_classical(source: &str, function: &str, input: &str, dims: Option<BTreeMap<String, i64>>) -> PyResult<String> {
    let b = bindings(dims, None, None);
    Ok(basisc_core::host::evaluate(source, function, input, &b).map_err(to_py)?.to_string())
}

/// Runs a built-in driver; returns its report as a dict.
#[pyfunction]
#[pyo3(signature = (name, seed=0, shots=1024, dims=None, args=None, source=None))]
fn driver<'py>(
    py: Python<'py>,
    name: &str,
    seed: u64,
    shots: u64,
    dims: Option<BTreeMap<String, i64>>,
    args: Option<BTreeMap<String, String>>,
    source: Option<String>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let cfg = DriverConfig { bindings: bindings(dims, args, None), seed, shots, opts: SimOptions::default(), source };
    let r = py.detach(|| run_driver(name, &cfg)).map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("algorithm", r.algorithm)?;
    d.set_item("answer", r.answer)?;
    d.set_item("invocations", r.invocations)?;
    d.set_item("oracle_calls", r.oracle_calls)?;
    d.set_item("samples", r.samples)?;
    d.set_item("counts", r.counts)?;
    Ok(d)
}

/// Names of the example programs shipped with the toolchain.
#[pyfunction]
fn corpus() -> Vec<&'static str> {
    basisc_core::drivers::CORPUS.iter().map(|(n, _)| *n).collect()
}

/// Source text of an example program.
#[pyfunction]
fn corpus_source(name: &str) -> Option<&'static str> {
    basisc_core::drivers::corpus_source(name)
}

fn bits(s: &str) -> PyResult<BitString> {
    s.parse().map_err(fail)
}

/// `(numerator, denominator)` of the binary fraction `0.b1 b2 ...`.
#[pyfunction]
fn bin_frac(b: &str) -> PyResult<(i64, i64)> {
    let r = post::as_bin_frac(&bits(b)?);
    Ok((*r.numer(), *r.denom()))
}

/// Continued-fraction convergents of `p/q` as `(numerator, denominator)`.
#[pyfunction]
fn convergents(p: i64, q: i64) -> PyResult<Vec<(i64, i64)>> {
    if q <= 0 || p < 0 {
        return Err(pyo3::exceptions::PyValueError::new_err("need p >= 0 and q > 0"));
    }
    Ok(post::cfrac_convergents(Rational::new(p, q)).iter().map(|c| (*c.numer(), *c.denom())).collect())
}

/// Nonzero vector orthogonal to every row over GF(2).
#[pyfunction]
fn gf2_nullspace(rows: Vec<String>) -> PyResult<String> {
    let rows = rows.iter().map(|r| bits(r)).collect::<PyResult<Vec<_>>>()?;
    Ok(post::gf2_solve_nullspace(&rows).map_err(fail)?.to_string())
}

#[pyfunction]
fn grover_iterations(qubits: u32, answers: u64) -> PyResult<u64> {
    post::grover_iterations(qubits, answers).map_err(fail)
}

#[pymodule]
fn basisc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Program>()?;
    m.add("BasiscError", py.get_type::<BasiscError>())?;
    m.add("BasiscParseError", py.get_type::<BasiscParseError>())?;
    m.add("BasiscTypeError", py.get_type::<BasiscTypeError>())?;
    m.add("BasiscRuntimeError", py.get_type::<BasiscRuntimeError>())?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(lower, m)?)?;
    m.add_function(wrap_pyfunction!(eval_classical, m)?)?;
    m.add_function(wrap_pyfunction!(driver, m)?)?;
    m.add_function(wrap_pyfunction!(corpus, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_source, m)?)?;
    m.add_function(wrap_pyfunction!(bin_frac, m)?)?;
    m.add_function(wrap_pyfunction!(convergents, m)?)?;
    m.add_function(wrap_pyfunction!(gf2_nullspace, m)?)?;
    m.add_function(wrap_pyfunction!(grover_iterations, m)?)?;
    Ok(())
}
