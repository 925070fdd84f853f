//! Python bindings: `Network`, `Dataset` and the main operations. Assignments
//! cross the boundary as `{variable: label}` dicts (floats for continuous
//! variables).

use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use spn::graph::{validate, VarKind, DEFAULT_ENUMERATION_CAP};
use spn::learning::FitConfig;
use spn::{Assignment, SpnError, Value};

fn err(e: SpnError) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

type Row = BTreeMap<String, Cell>;
type Trace = Vec<(usize, f64, f64)>;

/// A cell value on the Python side.
#[derive(Clone, Debug, PartialEq, IntoPyObject, FromPyObject)]
pub enum Cell {
    Label(String),
    Real(f64),
}

fn to_assignment(vars: &[spn::Variable], map: &BTreeMap<String, Cell>) -> PyResult<Assignment> {
    let mut out = Assignment::empty();
    for (name, cell) in map {
        let id = spn::graph::find_var(vars, name).map_err(err)?;
        let value = match (cell, vars[id.0].kind()) {
            (Cell::Label(s), _) => vars[id.0].parse_value(s).map_err(err)?,
            (Cell::Real(x), VarKind::Continuous) => Value::Real(*x),
            (Cell::Real(x), VarKind::Finite(_)) => vars[id.0].parse_value(&x.to_string()).map_err(err)?,
        };
        out.set(id, value);
    }
    Ok(out)
}

pub fn from_assignment(vars: &[spn::Variable], x: &Assignment) -> BTreeMap<String, Cell> {
    x.iter()
        .map(|(v, value)| {
            let var = &vars[v.0];
            let cell = match value {
                Value::Real(r) => Cell::Real(r),
                s => Cell::Label(var.format_value(s)),
            };
            (var.name().to_string(), cell)
        })
        .collect()
}

#[pyclass(name = "Network", module = "pyspn", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyNetwork {
    inner: spn::Network,
}

impl PyNetwork {
    fn assignment(&self, x: Option<BTreeMap<String, Cell>>) -> PyResult<Assignment> {
        to_assignment(self.inner.variables(), &x.unwrap_or_default())
    }

    fn dict(&self, x: &Assignment) -> BTreeMap<String, Cell> {
        from_assignment(self.inner.variables(), x)
    }
}

#[pymethods]
impl PyNetwork {
    /// Parses model text (the format written by `to_text`) and validates it.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyNetwork { inner: spn::io::parse_valid_model(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyNetwork { inner: spn::io::load_model(path).map_err(err)? })
    }

    /// The network of the running worked example (three binary variables).
    #[staticmethod]
    fn example() -> Self {
        PyNetwork { inner: spn::fixtures::running_example() }
    }

    fn to_text(&self) -> String {
        spn::io::render_model(&self.inner)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        spn::io::save_model(&self.inner, path).map_err(err)
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.variables().iter().map(|v| v.name().to_string()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Network({} nodes, variables {:?})", self.inner.len(), self.variables())
    }

    /// Structural properties as a dict of booleans plus a list of violations.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = validate(&self.inner);
        let d = PyDict::new(py);
        d.set_item("valid", r.is_valid())?;
        d.set_item("rooted", r.rooted)?;
        d.set_item("acyclic", r.acyclic)?;
        d.set_item("alternating", r.alternating)?;
        d.set_item("normalized", r.normalized)?;
        d.set_item("complete", r.complete)?;
        d.set_item("decomposable", r.decomposable)?;
        d.set_item("selective_structural", r.selective_structural)?;
        let v: Vec<(Option<usize>, String, String)> =
            r.violations.iter().map(|v| (v.node.map(|n| n.0), v.property.to_string(), v.detail.clone())).collect();
        d.set_item("violations", v)?;
        Ok(d)
    }

    /// P(query), or P(query | evidence) when evidence is given.
    #[pyo3(signature = (query=None, evidence=None))]
    fn evaluate(&self, query: Option<BTreeMap<String, Cell>>, evidence: Option<BTreeMap<String, Cell>>) -> PyResult<f64> {
        Ok(self.log_evaluate(query, evidence)?.exp())
    }

    #[pyo3(signature = (query=None, evidence=None))]
    fn log_evaluate(&self, query: Option<BTreeMap<String, Cell>>, evidence: Option<BTreeMap<String, Cell>>) -> PyResult<f64> {
        let q = self.assignment(query)?;
        let p = match evidence {
            Some(e) => spn::conditional(&self.inner, &q, &self.assignment(Some(e))?),
            None => spn::evaluate(&self.inner, &q),
        };
        Ok(p.map_err(err)?.log)
    }

    /// Best-tree MPE: (assignment of the non-evidence variables, value, exact).
    #[pyo3(signature = (evidence=None))]
    fn mpe(&self, evidence: Option<BTreeMap<String, Cell>>) -> PyResult<(BTreeMap<String, Cell>, f64, bool)> {
        let r = spn::inference::mpe_best_tree(&self.inner, &self.assignment(evidence)?).map_err(err)?;
        Ok((self.dict(&r.assignment), r.value(), r.exact))
    }

    /// K-best-trees MAX: (complete assignment, probability).
    #[pyo3(signature = (k=1))]
    fn max(&self, k: usize) -> PyResult<(BTreeMap<String, Cell>, f64)> {
        let r = spn::inference::max_kbt(&self.inner, k).map_err(err)?;
        Ok((self.dict(&r.assignment), r.value()))
    }

    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<BTreeMap<String, Cell>>> {
        let rows = spn::inference::sample(&self.inner, seed, n).map_err(err)?;
        Ok(rows.iter().map(|r| self.dict(r)).collect())
    }

    /// Every complete configuration with its probability.
    #[pyo3(signature = (cap=DEFAULT_ENUMERATION_CAP))]
    fn table(&self, cap: usize) -> PyResult<Vec<(BTreeMap<String, Cell>, f64)>> {
        let t = spn::io::brute_force_table(&self.inner, cap).map_err(err)?;
        Ok(t.rows.iter().map(|(v, p)| (self.dict(v), *p)).collect())
    }

    /// Selective augmentation: (augmented network, JSON record of inserted nodes).
    fn augment(&self) -> PyResult<(PyNetwork, String)> {
        let (net, record) = spn::augment::augment(&self.inner).map_err(err)?;
        let json = serde_json::to_string(&record).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((PyNetwork { inner: net }, json))
    }

    fn log_likelihood(&self, data: &PyDataset) -> PyResult<f64> {
        spn::learning::log_likelihood(&self.inner, &data.inner).map_err(err)
    }

    /// Fits the parameters; returns the new network and the trace as
    /// (epoch, log_likelihood, max_delta) tuples.
    #[pyo3(signature = (data, method="em", epochs=100, learning_rate=0.01, batch_size=None, alpha=0.0, tolerance=1e-6, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        &self,
        data: &PyDataset,
        method: &str,
        epochs: usize,
        learning_rate: f64,
        batch_size: Option<usize>,
        alpha: f64,
        tolerance: f64,
        seed: u64,
    ) -> PyResult<(PyNetwork, Trace)> {
        let method = method.parse().map_err(err)?;
        let cfg = FitConfig { method, epochs, learning_rate, batch_size, alpha, tolerance, seed, ..FitConfig::default() };
        let out = spn::learning::fit(&self.inner, &data.inner, &cfg).map_err(err)?;
        let trace = out.trace.iter().map(|t| (t.epoch, t.log_likelihood, t.max_delta)).collect();
        Ok((PyNetwork { inner: out.network }, trace))
    }

    /// Reads sum node `node` as priors over the variable it represents:
    /// (variable, {state: prior}, context).
    fn interpret(&self, node: usize) -> PyResult<(String, BTreeMap<String, f64>, Row)> {
        let i = spn::augment::interpret_sum_node(&self.inner, spn::NodeId(node)).map_err(err)?;
        let var = self.inner.variable(i.var);
        let priors = i.priors.iter().enumerate().map(|(j, p)| (var.state_label(j).unwrap_or("?").to_string(), *p)).collect();
        Ok((var.name().to_string(), priors, self.dict(&i.context)))
    }
}

#[pyclass(name = "Dataset", module = "pyspn", frozen)]
pub struct PyDataset {
    inner: spn::learning::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Reads a CSV file; with `network`, columns take that network's variables.
    #[staticmethod]
    #[pyo3(signature = (path, network=None))]
    fn load(path: &str, network: Option<&PyNetwork>) -> PyResult<Self> {
        let schema = network.map(|n| n.inner.variables());
        Ok(PyDataset { inner: spn::io::load_dataset(path, schema).map_err(err)? })
    }

    /// Rows given as dicts over the network's variables; missing keys are missing cells.
    #[staticmethod]
    fn from_rows(network: &PyNetwork, rows: Vec<BTreeMap<String, Cell>>) -> PyResult<Self> {
        let vars = network.inner.variables();
        let rows = rows.iter().map(|r| to_assignment(vars, r)).collect::<PyResult<_>>()?;
        Ok(PyDataset { inner: spn::learning::Dataset::new(vars.to_vec(), rows).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        spn::io::save_dataset(&self.inner, path).map_err(err)
    }

    fn rows(&self) -> Vec<BTreeMap<String, Cell>> {
        self.inner.rows().iter().map(|r| from_assignment(self.inner.variables(), r)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// LearnSPN on a complete dataset.
#[pyfunction]
#[pyo3(signature = (data, min_instances=10, alpha=0.1, p_value=0.05, max_clusters=4, binary_splits=false, seed=0))]
fn learn_structure(
    data: &PyDataset,
    min_instances: usize,
    alpha: f64,
    p_value: f64,
    max_clusters: usize,
    binary_splits: bool,
    seed: u64,
) -> PyResult<PyNetwork> {
    let cfg = spn::structure::LearnConfig { min_instances, alpha, p_value, max_clusters, binary_splits, seed };
    Ok(PyNetwork { inner: spn::structure::learn_spn(&data.inner, &cfg).map_err(err)? })
}

#[pymodule]
fn pyspn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(learn_structure, m)?)?;
    Ok(())
}
