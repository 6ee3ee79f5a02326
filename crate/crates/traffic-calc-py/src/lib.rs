//! Python bindings for `traffic-calc`.
//!
//! Graphs, polynomials and distributions cross the boundary as JSON-shaped
//! Python objects (dicts, lists, strings), using the same schema as the CLI.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyComplex;
use serde_json::Value;

use traffic_calc::graph::GraphMonomial;
use traffic_calc::io::{self, GraphInput};
use traffic_calc::matrix_lab::{run_suite, EntryLaw, McOptions, SuiteParams};
use traffic_calc::partitions;
use traffic_calc::traffic::{mixed_free_cumulant, partition_cap_from_env, StateOptions, TrafficEvaluator};

fn err(e: traffic_calc::Error) -> PyErr {
    match e {
        traffic_calc::Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts a Python object to JSON. A string holding JSON text is parsed;
/// any other string is kept as a JSON string (e.g. a distribution name).
fn to_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if let Ok(s) = obj.extract::<String>() {
        return Ok(serde_json::from_str(&s).unwrap_or(Value::String(s)));
    }
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn complex(py: Python<'_>, z: Complex64) -> Bound<'_, PyComplex> {
    PyComplex::from_doubles(py, z.re, z.im)
}

/// A test graph, or a graph monomial when `input`/`output` are given.
#[pyclass(name = "Graph", module = "traffic_calc_py", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph(GraphInput);

impl PyGraph {
    fn monomial(&self) -> PyResult<&GraphMonomial> {
        match &self.0 {
            GraphInput::Monomial(m) => Ok(m),
            GraphInput::Test(_) => Err(PyValueError::new_err("graph has no input/output vertices")),
        }
    }

    fn json(&self) -> Value {
        match &self.0 {
            GraphInput::Test(t) => io::test_graph_to_json(t),
            GraphInput::Monomial(m) => io::monomial_to_json(m),
        }
    }
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(obj: &Bound<'_, PyAny>) -> PyResult<Self> {
        io::parse_graph(&to_value(obj)?).map(PyGraph).map_err(err)
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        match &self.0 {
            GraphInput::Test(t) => t.graph().num_vertices(),
            GraphInput::Monomial(m) => m.num_vertices(),
        }
    }

    #[getter]
    fn num_edges(&self) -> usize {
        match &self.0 {
            GraphInput::Test(t) => t.graph().num_edges(),
            GraphInput::Monomial(m) => m.num_edges(),
        }
    }

    #[getter]
    fn is_monomial(&self) -> bool {
        matches!(self.0, GraphInput::Monomial(_))
    }

    /// The monomial with input and output swapped and edges reversed.
    fn transpose(&self) -> PyResult<Self> {
        Ok(PyGraph(GraphInput::Monomial(self.monomial()?.transpose())))
    }

    /// Series composition: `self` followed by `other`.
    fn __mul__(&self, other: &PyGraph) -> PyResult<Self> {
        Ok(PyGraph(GraphInput::Monomial(self.monomial()?.product(other.monomial()?))))
    }

    /// The test graph a state is evaluated on (roots merged for monomials).
    fn test_graph(&self) -> Self {
        PyGraph(GraphInput::Test(self.0.test_graph()))
    }

    fn to_json<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.json())
    }

    fn __repr__(&self) -> String {
        format!("Graph({})", self.json())
    }
}

fn graph_arg(obj: &Bound<'_, PyAny>) -> PyResult<GraphInput> {
    match obj.extract::<PyRef<'_, PyGraph>>() {
        Ok(g) => Ok(g.0.clone()),
        Err(_) => PyGraph::new(obj).map(|g| g.0),
    }
}

/// A limiting traffic distribution (`"semicircular"`, `{"type": "wigner", ...}`, ...).
#[pyclass(name = "Distribution", module = "traffic_calc_py")]
struct PyDistribution {
    dist: io::Distribution,
    cap: usize,
}

impl PyDistribution {
    fn evaluator(&self) -> PyResult<TrafficEvaluator<'_>> {
        let spec = self.dist.limit().map_err(err)?;
        Ok(TrafficEvaluator::with_options(spec, StateOptions { partition_cap: self.cap, ..StateOptions::default() }))
    }
}

#[pymethods]
impl PyDistribution {
    #[new]
    #[pyo3(signature = (spec = None, partition_cap = None))]
    fn new(spec: Option<&Bound<'_, PyAny>>, partition_cap: Option<usize>) -> PyResult<Self> {
        let v = match spec {
            Some(s) => to_value(s)?,
            None => Value::String("semicircular".into()),
        };
        let dist = io::parse_distribution(&v).map_err(err)?;
        Ok(PyDistribution { dist, cap: partition_cap.unwrap_or_else(partition_cap_from_env) })
    }

    #[getter]
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.dist.config)
    }

    /// The traffic state of a graph.
    fn state<'py>(&self, py: Python<'py>, graph: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyComplex>> {
        let t = graph_arg(graph)?.test_graph();
        Ok(complex(py, self.evaluator()?.state(&t).map_err(err)?))
    }

    /// The injective state of a graph.
    fn injective<'py>(&self, py: Python<'py>, graph: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyComplex>> {
        let t = graph_arg(graph)?.test_graph();
        Ok(complex(py, self.evaluator()?.injective(&t).map_err(err)?))
    }

    /// The normalised trace of a graph polynomial (a list of terms).
    fn trace<'py>(&self, py: Python<'py>, polynomial: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyComplex>> {
        let p = io::parse_polynomial(&to_value(polynomial)?).map_err(err)?;
        Ok(complex(py, self.evaluator()?.trace_psi(&p).map_err(err)?))
    }

    /// The mixed free cumulant of graph monomials.
    fn cumulant<'py>(&self, py: Python<'py>, monomials: Vec<Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyComplex>> {
        let ms = monomials
            .iter()
            .map(|m| match graph_arg(m)? {
                GraphInput::Monomial(m) => Ok(m),
                GraphInput::Test(_) => Err(PyValueError::new_err("cumulant arguments must be monomials")),
            })
            .collect::<PyResult<Vec<_>>>()?;
        if ms.is_empty() {
            return Err(PyValueError::new_err("cumulant of no arguments"));
        }
        Ok(complex(py, mixed_free_cumulant(&self.evaluator()?, &ms).map_err(err)?))
    }
}

/// Runs a built-in Monte Carlo suite and returns its report.
#[pyfunction]
#[pyo3(signature = (suite, n = 200, samples = 200, seed = 0, beta = 0.5, zeta = (0.0, 0.0)))]
fn verify<'py>(
    py: Python<'py>,
    suite: &str,
    n: usize,
    samples: usize,
    seed: u64,
    beta: f64,
    zeta: (f64, f64),
) -> PyResult<Bound<'py, PyAny>> {
    let params = SuiteParams { n, beta, zeta: Complex64::new(zeta.0, zeta.1), law: EntryLaw::Gaussian };
    let opts = McOptions { samples, seed, ..McOptions::default() };
    let report = py.detach(|| run_suite(suite, &params, &opts)).map_err(err)?;
    to_py(py, &serde_json::to_value(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

#[pyfunction]
fn catalan(n: usize) -> u64 {
    partitions::catalan(n)
}

#[pyfunction]
fn bell(n: usize) -> u64 {
    partitions::bell(n)
}

#[pymodule]
fn traffic_calc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(catalan, m)?)?;
    m.add_function(wrap_pyfunction!(bell, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyDict;

    #[test]
    fn values_and_graphs_round_trip() {
        Python::initialize();
        Python::attach(|py| {
            let g = PyDict::new(py);
            g.set_item("vertices", 1).unwrap();
            g.set_item("edges", py.eval(c"[{'src': 0, 'dst': 0}]", None, None).unwrap()).unwrap();
            let graph = PyGraph::new(g.as_any()).unwrap();
            assert_eq!((graph.num_vertices(), graph.num_edges(), graph.is_monomial()), (1, 1, false));
            assert_eq!(to_value(&to_py(py, &graph.json()).unwrap()).unwrap(), graph.json());

            let sc = PyDistribution::new(Some(pyo3::types::PyString::new(py, "semicircular").as_any()), None).unwrap();
            let z = sc.state(py, g.as_any()).unwrap();
            assert_eq!((z.real(), z.imag()), (0.0, 0.0));
            assert!(PyDistribution::new(Some(pyo3::types::PyString::new(py, "nope").as_any()), None).is_err());
        });
    }
}
