//! Python bindings: grids, the sparse-grid solver, the dense reference
//! solver, error bounds and convergence sweeps.

use std::collections::HashMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sg::bounds::{self, BoundParams};
use sg::dense_oracle::{DenseInterpolant, DenseSystem, DEFAULT_SIZE_CAP};
use sg::experiments::level_sweep;
use sg::textio::{interpolant_from_text, interpolant_to_text};
use sg::{Error, Family, GridNode, KernelParams1D, MultiIndex, RunConfig, Smoothness};

create_exception!(matern_sg, PdFailureError, PyValueError, "Gram matrix is not positive definite.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::PdFailure(_) => PdFailureError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Accepts `1.5`, `"3/2"` or `"inf"`.
fn smoothness(ob: &Bound<'_, PyAny>) -> PyResult<Smoothness> {
    if let Ok(s) = ob.extract::<String>() {
        return s.parse().map_err(to_py);
    }
    let v: f64 = ob.extract()?;
    if v.is_infinite() {
        Ok(Smoothness::Gaussian)
    } else {
        Ok(Smoothness::Finite(v))
    }
}

fn smoothness_list(items: &Bound<'_, PyAny>) -> PyResult<Vec<Smoothness>> {
    items.try_iter()?.map(|ob| smoothness(&ob?)).collect()
}

fn node_coords(node: &GridNode) -> Vec<f64> {
    node.coords()
}

fn sample(nodes: &[GridNode], f: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
    nodes.iter().map(|n| f.call1((node_coords(n),))?.extract::<f64>()).collect()
}

#[pyclass(name = "GridSpec", module = "matern_sg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridSpec {
    inner: sg::GridSpec,
}

#[pymethods]
impl PyGridSpec {
    /// Missing `p`, `r` default to zeros and `omega` to ones.
    #[new]
    #[pyo3(signature = (family, nu, level, p=None, omega=None, r=None, sigma=None))]
    fn new(
        family: &str,
        nu: &Bound<'_, PyAny>,
        level: u32,
        p: Option<Vec<u32>>,
        omega: Option<Vec<f64>>,
        r: Option<Vec<u32>>,
        sigma: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let family: Family = family.parse().map_err(to_py)?;
        let nu = smoothness_list(nu)?;
        let d = nu.len();
        let spec = sg::GridSpec::for_family(
            family,
            nu,
            p.unwrap_or_else(|| vec![0; d]),
            omega.unwrap_or_else(|| vec![1.0; d]),
            r.unwrap_or_else(|| vec![0; d]),
            level,
        )
        .map_err(to_py)?;
        let spec = match sigma {
            Some(s) => spec.with_sigma(s).map_err(to_py)?,
            None => spec,
        };
        Ok(Self { inner: spec })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level()
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    /// Nodes as float tuples, in the solver's order.
    fn nodes(&self) -> Vec<Vec<f64>> {
        self.inner.nodes().iter().map(node_coords).collect()
    }

    /// Nodes as exact `n/2^k` strings.
    fn exact_nodes(&self) -> Vec<String> {
        self.inner.nodes().iter().map(ToString::to_string).collect()
    }

    fn index_set(&self) -> Vec<Vec<u32>> {
        self.inner.index_set().into_iter().map(|m| m.0).collect()
    }

    fn active_set(&self) -> Vec<Vec<u32>> {
        self.inner.active_set().into_iter().map(|m| m.0).collect()
    }

    fn combination_coefficient(&self, ell: Vec<u32>) -> PyResult<i64> {
        self.inner.combination_coefficient(&MultiIndex(ell)).map_err(to_py)
    }

    fn with_level(&self, level: u32) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_level(level).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "GridSpec(family={}, d={}, level={}, N={})",
            self.inner.family(),
            self.inner.dim(),
            self.inner.level(),
            self.inner.node_count()
        )
    }
}

#[pyclass(name = "SparseInterpolant", module = "matern_sg", frozen)]
struct PySparseInterpolant {
    inner: sg::SparseInterpolant,
}

#[pymethods]
impl PySparseInterpolant {
    /// Interpolates the callable `f(x: list[float]) -> float` on `spec`.
    #[staticmethod]
    fn fit(py: Python<'_>, spec: &PyGridSpec, f: &Bound<'_, PyAny>) -> PyResult<Self> {
        let values = sample(&spec.inner.nodes(), f)?;
        Self::from_values(py, spec, values)
    }

    /// Interpolates values given in the order of `spec.nodes()`.
    #[staticmethod]
    fn from_values(py: Python<'_>, spec: &PyGridSpec, values: Vec<f64>) -> PyResult<Self> {
        let spec = spec.inner.clone();
        let inner = py
            .detach(|| sg::AssemblyPlan::new(&spec, false)?.solve(&values, false))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: interpolant_from_text(text).map_err(to_py)? })
    }

    fn to_text(&self) -> String {
        interpolant_to_text(&self.inner)
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&x).map_err(to_py)
    }

    fn evaluate_many(&self, py: Python<'_>, xs: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        py.detach(|| self.inner.evaluate_many(&xs)).map_err(to_py)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec { inner: self.inner.spec().clone() }
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Direct solve with the full Gram matrix; for small grids only.
#[pyclass(name = "DenseInterpolant", module = "matern_sg", frozen)]
struct PyDenseInterpolant {
    inner: DenseInterpolant,
}

#[pymethods]
impl PyDenseInterpolant {
    #[staticmethod]
    fn fit(spec: &PyGridSpec, f: &Bound<'_, PyAny>) -> PyResult<Self> {
        let system = DenseSystem::new(&spec.inner, DEFAULT_SIZE_CAP).map_err(to_py)?;
        let values = sample(system.nodes(), f)?;
        let table: HashMap<Vec<u64>, f64> = system
            .nodes()
            .iter()
            .map(|n| n.coords().iter().map(|c| c.to_bits()).collect())
            .zip(values)
            .collect();
        let inner = system.fit(|x| table[&x.iter().map(|c| c.to_bits()).collect::<Vec<_>>()]);
        Ok(Self { inner })
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&x).map_err(to_py)
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }
}

/// One-dimensional Matérn kernel value.
#[pyfunction]
#[pyo3(signature = (nu, x, y, lam=1.0, sigma=1.0))]
fn matern(nu: &Bound<'_, PyAny>, x: f64, y: f64, lam: f64, sigma: f64) -> PyResult<f64> {
    KernelParams1D::new(smoothness(nu)?, lam, sigma)
        .and_then(|k| k.eval(x, y))
        .map_err(to_py)
}

fn bound_params(
    nu: &Bound<'_, PyAny>,
    alpha: Vec<f64>,
    p: Vec<u32>,
    level: i64,
    omega: Option<Vec<f64>>,
) -> PyResult<BoundParams> {
    let nu = smoothness_list(nu)?;
    let omega = omega.unwrap_or_else(|| BoundParams::suggested_omega(&nu, &alpha));
    Ok(BoundParams::new(nu, alpha, omega, p, level))
}

/// Error-bound value for the penalised anisotropic grid.
#[pyfunction]
#[pyo3(signature = (nu, alpha, p, level, omega=None))]
fn dasg_bound(nu: &Bound<'_, PyAny>, alpha: Vec<f64>, p: Vec<u32>, level: i64, omega: Option<Vec<f64>>) -> PyResult<f64> {
    let params = bound_params(nu, alpha, p, level, omega)?;
    Ok(bounds::dasg_bound(&params).map_err(to_py)?.value)
}

/// Error-bound value for the penalised isotropic grid.
#[pyfunction]
#[pyo3(signature = (nu, alpha, p, level))]
fn lisg_bound(nu: &Bound<'_, PyAny>, alpha: Vec<f64>, p: Vec<u32>, level: i64) -> PyResult<f64> {
    let d = p.len();
    let params = bound_params(nu, alpha, p, level, Some(vec![1.0; d]))?;
    Ok(bounds::lisg_bound(&params).map_err(to_py)?.value)
}

#[pyfunction]
fn epsilon_aniso(c: Vec<f64>, omega: Vec<f64>, level: f64) -> PyResult<f64> {
    bounds::epsilon_aniso(&c, &omega, level).map_err(to_py)
}

/// Runs a convergence sweep from `key = value` config text and returns
/// `(records, termination)` with records as `(level, N, error)`.
#[pyfunction]
#[pyo3(signature = (config, family, parallel=false))]
fn sweep(py: Python<'_>, config: &str, family: &str, parallel: bool) -> PyResult<(Vec<(u32, usize, f64)>, String)> {
    let config = RunConfig::parse(config).map_err(to_py)?;
    let family: Family = family.parse().map_err(to_py)?;
    let outcome = py
        .detach(|| level_sweep(&config.sweep(family, parallel)?))
        .map_err(to_py)?;
    let records = outcome.records.iter().map(|r| (r.level, r.n, r.error)).collect();
    Ok((records, outcome.termination.to_string()))
}

#[pymodule]
fn matern_sg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PySparseInterpolant>()?;
    m.add_class::<PyDenseInterpolant>()?;
    m.add_function(wrap_pyfunction!(matern, m)?)?;
    m.add_function(wrap_pyfunction!(dasg_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lisg_bound, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_aniso, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add("PdFailureError", m.py().get_type::<PdFailureError>())?;
    Ok(())
}
